#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rwsmc/model.hpp"
#include "rwsmc/rng.hpp"

namespace rwsmc {

enum class Algorithm { icsmc, rwehmm, rwcsmc };
enum class SelectionVariant { boltzmann, forced_move };
enum class IndexSelection { ancestral_trace, backward_sampling, ancestor_sampling };

Algorithm parse_algorithm(const std::string& s);
SelectionVariant parse_selection(const std::string& s);
IndexSelection parse_index_selection(const std::string& s);
std::string to_string(Algorithm a);
std::string to_string(SelectionVariant v);
std::string to_string(IndexSelection v);

struct KernelConfig {
  int N = 1;
  SelectionVariant selection = SelectionVariant::boltzmann;
  IndexSelection index_selection = IndexSelection::ancestral_trace;
  std::vector<double> ell;  // one per t; a single entry is broadcast

  double ell_at(int t) const { return ell.size() == 1 ? ell[0] : ell[t]; }
  void validate(int T) const;
};

// Ancestors are (T-1) x (N+1): row t holds A_t^n, the index at time t of the
// ancestor of particle n at time t+1. Empty for RW-EHMM.
struct GenealogyRecord {
  int T = 0;
  int N = 0;
  std::vector<int> ancestors;
  std::vector<int> selected;
  std::vector<char> accepted;

  int ancestor(int t, int n) const { return ancestors[static_cast<std::size_t>(t) * (N + 1) + n]; }
  int& ancestor(int t, int n) { return ancestors[static_cast<std::size_t>(t) * (N + 1) + n]; }
};

struct EvalCounter {
  std::uint64_t m = 0;  // full D-dimensional transition/initial density evaluations
  std::uint64_t g = 0;  // full D-dimensional potential evaluations
};

// T x (N+1) x D particle values; z(t, 0) is the reference.
struct ParticleCloud {
  int T = 0;
  int N = 0;
  int D = 0;
  std::vector<double> z;
  std::vector<double> ell;

  ParticleCloud() = default;
  ParticleCloud(int T_, int N_, int D_)
      : T(T_), N(N_), D(D_), z(static_cast<std::size_t>(T_) * (N_ + 1) * D_, 0.0) {}

  double* at(int t, int n) { return z.data() + (static_cast<std::size_t>(t) * (N + 1) + n) * D; }
  const double* at(int t, int n) const {
    return z.data() + (static_cast<std::size_t>(t) * (N + 1) + n) * D;
  }
};

// Per-update outputs. Weight rows are T x (N+1) self-normalised distributions:
// resample row t < T-1 is the distribution of the time-t ancestors (for
// RW-EHMM, the normalised forward weights), row T-1 the final selection;
// backward row t is the distribution K_t was drawn from, when drawn.
struct UpdateInfo {
  GenealogyRecord genealogy;
  std::vector<double> resample_weights;
  std::vector<double> backward_weights;
  bool has_backward = false;
  EvalCounter counter;  // cumulative over the kernel's lifetime
  double log_normaliser = 0.0;  // RW-EHMM: log sum over index vectors of the cloud's path density
};

class Kernel {
 public:
  Kernel(const ProductModel& model, const KernelConfig& cfg);
  virtual ~Kernel() = default;

  // In-place update of the chain state.
  virtual void update(Path& path, Rng& rng) = 0;

  const UpdateInfo& info() const { return info_; }
  const ParticleCloud& cloud() const { return cloud_; }
  const ProductModel& model() const { return model_; }
  const KernelConfig& config() const { return cfg_; }

 protected:
  void check_path(const Path& path) const;
  void write_selected(Path& path);
  double log_M(int t, const double* xp, const double* x) {
    ++info_.counter.m;
    return model_.log_M(t, xp, x);
  }
  double log_G(int t, const double* x) {
    ++info_.counter.g;
    return model_.log_G(t, x);
  }
  double* resample_row(int t) {
    return info_.resample_weights.data() + static_cast<std::size_t>(t) * (cfg_.N + 1);
  }
  double* backward_row(int t) {
    return info_.backward_weights.data() + static_cast<std::size_t>(t) * (cfg_.N + 1);
  }

  ProductModel model_;
  KernelConfig cfg_;
  ParticleCloud cloud_;
  UpdateInfo info_;
  std::vector<double> lw_, scratch_;
};

std::unique_ptr<Kernel> make_kernel(Algorithm a, const ProductModel& model, const KernelConfig& cfg);

}  // namespace rwsmc
