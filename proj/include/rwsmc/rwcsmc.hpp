#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "rwsmc/kernel.hpp"

namespace rwsmc {

// i-RW-CSMC: random-walk scattering around the reference at every t and
// conditional multinomial resampling on joint weights
// omega_t^n = log m_t(z_{t-1}^{A_{t-1}^n}, z_t^n) + log G_t(z_t^n).
// No unconditional SMC counterpart of this scheme exists, so none is provided.
class RwcsmcKernel final : public Kernel {
 public:
  RwcsmcKernel(const ProductModel& model, const KernelConfig& cfg);
  void update(Path& path, Rng& rng) override;

  // Step 1 only (forward pass), leaving cloud, ancestors and joint weights set.
  void forward(const Path& path, Rng& rng);
  // Steps 2-3 on the current forward pass; writes the selected path.
  void select(Path& path, Rng& rng);

  // omega as T x (N+1).
  const std::vector<double>& joint_log_weights() const { return omega_; }

  // Density evaluations per update: G: T(N+1); m: T(N+1), plus (T-1)(N+1)
  // for backward or ancestor sampling.
  static std::uint64_t m_evals_per_update(int N, int T, IndexSelection s);
  static std::uint64_t g_evals_per_update(int N, int T);

 private:
  std::vector<double> omega_;
  std::vector<double> p_;
};

std::pair<Path, GenealogyRecord> rwcsmc_update(const ProductModel& model, const Path& path,
                                               const KernelConfig& cfg, Rng& rng);

// Joint log weights of a cloud for given ancestors (T-1) x (N+1).
std::vector<double> joint_log_weights(const ParticleCloud& cloud, const ProductModel& model,
                                      const std::vector<int>& ancestors);

// Exact law of K over [N]_0^T (flattened, t = 0 most significant) for a fixed
// cloud whose reference occupies indices j, with A_{t-1}^{j_t} = j_{t-1} pinned
// (or redrawn under ancestor sampling) and the remaining ancestors resampled.
// Forced move uses Rosenbluth-Teller with j_T as the reference index.
std::vector<double> index_transition_matrix(const ParticleCloud& cloud, const ProductModel& model,
                                            const KernelConfig& cfg, const std::vector<int>& j,
                                            std::uint64_t max_terms = 50'000'000);

}  // namespace rwsmc
