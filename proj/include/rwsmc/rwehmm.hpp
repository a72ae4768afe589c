#pragma once

#include <utility>
#include <vector>

#include "rwsmc/kernel.hpp"

namespace rwsmc {

// Scatter N particles around ref (D values) into out[(n-1)*D + d], n = 1..N:
// a centre c ~ N(ref, ell/(2D)) then z^n ~ N(c, ell/(2D)) per coordinate.
// Draw order: d outer, centre first, then n ascending.
void scatter_time(const double* ref, double ell, int N, int D, Rng& rng, double* out);

// Cloud with z(t, 0) = path(t) and scattered particles at every t.
ParticleCloud scatter_cloud(const Path& path, const std::vector<double>& ell, int N, Rng& rng);

// Discrete target over index vectors of a cloud, held as log tables.
struct DiscreteTarget {
  int T = 0;
  int N = 0;
  std::vector<double> log_g;   // T x (N+1)
  std::vector<double> log_m1;  // N+1
  std::vector<double> log_m;   // T x (N+1) x (N+1); [t][m][n] = log m_t(z_{t-1}^m, z_t^n), t >= 1

  double lg(int t, int n) const { return log_g[static_cast<std::size_t>(t) * (N + 1) + n]; }
  double lm(int t, int m, int n) const {
    return log_m[(static_cast<std::size_t>(t) * (N + 1) + m) * (N + 1) + n];
  }
  // Unnormalised log xi of an index vector.
  double log_density(const std::vector<int>& k) const;
};

DiscreteTarget build_discrete_target(const ParticleCloud& cloud, const ProductModel& model);

// Forward filter in the log domain: normalised log weights (T x (N+1)) and the
// log normaliser log sum_k exp(log_density(k)).
struct ForwardPass {
  std::vector<double> log_w;  // normalised, T x (N+1)
  double log_normaliser = 0.0;
};
ForwardPass forward_filter(const DiscreteTarget& target);

// Exact law of K over [N]_0^T, flattened with t = 0 most significant.
std::vector<double> ffbs_index_distribution(const DiscreteTarget& target);
// Brute-force normalised xi over [N]_0^T (same flattening).
std::vector<double> brute_force_xi(const DiscreteTarget& target);
std::vector<int> unflatten_index(std::size_t flat, int T, int N);

std::vector<int> ffbs_index_sample(const DiscreteTarget& target, const ForwardPass& fwd, Rng& rng);
std::vector<int> ffbs_index_sample(const ParticleCloud& cloud, const ProductModel& model, Rng& rng);

class RwehmmKernel final : public Kernel {
 public:
  RwehmmKernel(const ProductModel& model, const KernelConfig& cfg);
  void update(Path& path, Rng& rng) override;

  const DiscreteTarget& target() const { return target_; }

  // Density evaluations per update: G: T(N+1); m: (N+1) + (T-1)(N+1)^2.
  static std::uint64_t m_evals_per_update(int N, int T);
  static std::uint64_t g_evals_per_update(int N, int T);

 private:
  void fill_target();
  DiscreteTarget target_;
  std::vector<double> log_w_;
  std::vector<double> p_;
};

std::pair<Path, GenealogyRecord> rwehmm_update(const ProductModel& model, const Path& path,
                                               const KernelConfig& cfg, Rng& rng);

}  // namespace rwsmc
