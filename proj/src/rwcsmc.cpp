#include "rwsmc/rwcsmc.hpp"

#include <algorithm>
#include <cmath>
#include <span>

#include "rwsmc/error.hpp"
#include "rwsmc/rwehmm.hpp"
#include "rwsmc/selection.hpp"

namespace rwsmc {

RwcsmcKernel::RwcsmcKernel(const ProductModel& model, const KernelConfig& cfg)
    : Kernel(model, cfg) {
  if (cfg_.ell.empty()) throw ConfigError("i-RW-CSMC needs ell");
  const int T = model.T(), N1 = cfg.N + 1;
  omega_.assign(static_cast<std::size_t>(T) * N1, 0.0);
  p_.resize(N1);
  info_.genealogy.ancestors.assign(static_cast<std::size_t>(T - 1) * N1, 0);
  info_.has_backward = cfg_.index_selection == IndexSelection::backward_sampling;
}

std::uint64_t RwcsmcKernel::m_evals_per_update(int N, int T, IndexSelection s) {
  const std::uint64_t n1 = N + 1;
  std::uint64_t m = static_cast<std::uint64_t>(T) * n1;
  if (s != IndexSelection::ancestral_trace) m += static_cast<std::uint64_t>(T - 1) * n1;
  return m;
}

std::uint64_t RwcsmcKernel::g_evals_per_update(int N, int T) {
  return static_cast<std::uint64_t>(T) * (N + 1);
}

void RwcsmcKernel::forward(const Path& path, Rng& rng) {
  check_path(path);
  const int T = model_.T(), D = model_.D(), N = cfg_.N, N1 = N + 1;
  auto& gen = info_.genealogy;
  auto om = [&](int t) { return std::span<double>(omega_.data() + static_cast<std::size_t>(t) * N1, N1); };
  const std::span<double> lw(lw_), sc(scratch_), p(p_);

  for (int t = 0; t < T; ++t) {
    if (t > 0) {
      std::span<double> rp(resample_row(t - 1), N1);
      boltzmann_full(om(t - 1), rp, sc);
      for (int n = 1; n <= N; ++n) gen.ancestor(t - 1, n) = sample_index(rp, rng);
      if (cfg_.index_selection == IndexSelection::ancestor_sampling) {
        for (int n = 0; n <= N; ++n)
          lw[n] = om(t - 1)[n] + log_M(t, cloud_.at(t - 1, n), path.row(t));
        boltzmann_full(lw, p, sc);
        gen.ancestor(t - 1, 0) = sample_index(p, rng);
      } else {
        gen.ancestor(t - 1, 0) = 0;
      }
    }
    std::copy_n(path.row(t), D, cloud_.at(t, 0));
    scatter_time(path.row(t), cloud_.ell[t], N, D, rng, cloud_.at(t, 1));
    for (int n = 0; n <= N; ++n) {
      const double* prev = t > 0 ? cloud_.at(t - 1, gen.ancestor(t - 1, n)) : nullptr;
      om(t)[n] = log_M(t, prev, cloud_.at(t, n)) + log_G(t, cloud_.at(t, n));
    }
    if (!std::isfinite(om(t)[0])) throw ModelError("reference path has zero density");
  }
}

void RwcsmcKernel::select(Path& path, Rng& rng) {
  const int T = model_.T(), N = cfg_.N, N1 = N + 1;
  auto& gen = info_.genealogy;
  auto om = [&](int t) { return std::span<double>(omega_.data() + static_cast<std::size_t>(t) * N1, N1); };
  const std::span<double> lw(lw_), sc(scratch_);

  std::span<double> fin(resample_row(T - 1), N1);
  if (cfg_.selection == SelectionVariant::forced_move)
    rosenbluth_teller_full(om(T - 1), fin, sc);
  else
    boltzmann_full(om(T - 1), fin, sc);
  gen.selected[T - 1] = sample_index(fin, rng);
  if (info_.has_backward) std::copy(fin.begin(), fin.end(), backward_row(T - 1));

  for (int t = T - 2; t >= 0; --t) {
    if (cfg_.index_selection == IndexSelection::backward_sampling) {
      const double* next = cloud_.at(t + 1, gen.selected[t + 1]);
      for (int n = 0; n <= N; ++n) lw[n] = om(t)[n] + log_M(t + 1, cloud_.at(t, n), next);
      std::span<double> bp(backward_row(t), N1);
      boltzmann_full(lw, bp, sc);
      gen.selected[t] = sample_index(bp, rng);
    } else {
      gen.selected[t] = gen.ancestor(t, gen.selected[t + 1]);
    }
  }
  write_selected(path);
}

void RwcsmcKernel::update(Path& path, Rng& rng) {
  forward(path, rng);
  select(path, rng);
}

std::pair<Path, GenealogyRecord> rwcsmc_update(const ProductModel& model, const Path& path,
                                               const KernelConfig& cfg, Rng& rng) {
  RwcsmcKernel k(model, cfg);
  Path out = path;
  k.update(out, rng);
  return {out, k.info().genealogy};
}

std::vector<double> joint_log_weights(const ParticleCloud& cloud, const ProductModel& model,
                                      const std::vector<int>& ancestors) {
  const int T = cloud.T, N1 = cloud.N + 1;
  std::vector<double> om(static_cast<std::size_t>(T) * N1);
  for (int t = 0; t < T; ++t)
    for (int n = 0; n < N1; ++n) {
      const double* prev =
          t > 0 ? cloud.at(t - 1, ancestors[static_cast<std::size_t>(t - 1) * N1 + n]) : nullptr;
      om[static_cast<std::size_t>(t) * N1 + n] =
          model.log_M(t, prev, cloud.at(t, n)) + model.log_G(t, cloud.at(t, n));
    }
  return om;
}

namespace {

// Rosenbluth-Teller with index j playing the reference: permute j to 0.
void rosenbluth_teller_at(std::span<const double> lw, int j, std::span<double> p,
                          std::span<double> tmp, std::span<double> sc) {
  std::copy(lw.begin(), lw.end(), tmp.begin());
  std::swap(tmp[0], tmp[j]);
  rosenbluth_teller_full(tmp, p, sc);
  std::swap(p[0], p[j]);
}

class Enumerator {
 public:
  Enumerator(const ParticleCloud& c, const ProductModel& m, const KernelConfig& cfg,
             const std::vector<int>& j)
      : cloud_(c), cfg_(cfg), j_(j), T_(c.T), N1_(c.N + 1) {
    target_ = build_discrete_target(c, m);
    anc_.assign(static_cast<std::size_t>(T_ > 1 ? T_ - 1 : 0) * N1_, 0);
    omega_.assign(static_cast<std::size_t>(T_) * N1_, 0.0);
    std::size_t s = 1;
    for (int t = 0; t < T_; ++t) s *= N1_;
    row_.assign(s, 0.0);
    for (int n = 0; n < N1_; ++n) omega_[n] = target_.log_m1[n] + target_.lg(0, n);
  }

  std::vector<double> run() {
    recurse(1, 1.0);
    return row_;
  }

 private:
  double om(int t, int n) const { return omega_[static_cast<std::size_t>(t) * N1_ + n]; }
  int anc(int t, int n) const { return anc_[static_cast<std::size_t>(t) * N1_ + n]; }

  void recurse(int t, double w) {
    if (t == T_) {
      finish(w);
      return;
    }
    std::vector<double> prev(N1_), p(N1_), q(N1_, 0.0), sc(N1_), lw(N1_);
    for (int n = 0; n < N1_; ++n) prev[n] = om(t - 1, n);
    boltzmann_full(prev, p, sc);
    const int jt = j_[t];
    if (cfg_.index_selection == IndexSelection::ancestor_sampling) {
      for (int l = 0; l < N1_; ++l) lw[l] = prev[l] + target_.lm(t, l, jt);
      boltzmann_full(lw, q, sc);
    } else {
      q[j_[t - 1]] = 1.0;
    }
    // Odometer over a in [N]_0^{N+1}.
    std::vector<int> a(N1_, 0);
    while (true) {
      double prob = 1.0;
      for (int n = 0; n < N1_ && prob > 0.0; ++n) prob *= n == jt ? q[a[n]] : p[a[n]];
      if (prob > 0.0) {
        for (int n = 0; n < N1_; ++n) {
          anc_[static_cast<std::size_t>(t - 1) * N1_ + n] = a[n];
          omega_[static_cast<std::size_t>(t) * N1_ + n] = target_.lm(t, a[n], n) + target_.lg(t, n);
        }
        recurse(t + 1, w * prob);
      }
      int pos = 0;
      while (pos < N1_ && ++a[pos] == N1_) a[pos++] = 0;
      if (pos == N1_) break;
    }
  }

  void finish(double w) {
    std::vector<double> lw(N1_), p(N1_), tmp(N1_), sc(N1_);
    for (int n = 0; n < N1_; ++n) lw[n] = om(T_ - 1, n);
    if (cfg_.selection == SelectionVariant::forced_move)
      rosenbluth_teller_at(lw, j_[T_ - 1], p, tmp, sc);
    else
      boltzmann_full(lw, p, sc);
    std::vector<int> k(T_);
    for (int kT = 0; kT < N1_; ++kT) {
      if (p[kT] == 0.0) continue;
      k[T_ - 1] = kT;
      backward(T_ - 2, k, w * p[kT]);
    }
  }

  void backward(int t, std::vector<int>& k, double w) {
    if (t < 0) {
      std::size_t flat = 0;
      for (int s = 0; s < T_; ++s) flat = flat * N1_ + k[s];
      row_[flat] += w;
      return;
    }
    if (cfg_.index_selection != IndexSelection::backward_sampling) {
      k[t] = anc(t, k[t + 1]);
      backward(t - 1, k, w);
      return;
    }
    std::vector<double> lw(N1_), p(N1_), sc(N1_);
    for (int n = 0; n < N1_; ++n) lw[n] = om(t, n) + target_.lm(t + 1, n, k[t + 1]);
    boltzmann_full(lw, p, sc);
    for (int n = 0; n < N1_; ++n) {
      if (p[n] == 0.0) continue;
      k[t] = n;
      backward(t - 1, k, w * p[n]);
    }
  }

  const ParticleCloud& cloud_;
  const KernelConfig& cfg_;
  const std::vector<int>& j_;
  int T_, N1_;
  DiscreteTarget target_;
  std::vector<int> anc_;
  std::vector<double> omega_;
  std::vector<double> row_;
};

}  // namespace

std::vector<double> index_transition_matrix(const ParticleCloud& cloud, const ProductModel& model,
                                            const KernelConfig& cfg, const std::vector<int>& j,
                                            std::uint64_t max_terms) {
  const int T = cloud.T, N1 = cloud.N + 1;
  if (static_cast<int>(j.size()) != T) throw ConfigError("index vector must have length T");
  for (int v : j)
    if (v < 0 || v >= N1) throw ConfigError("index out of range");
  // Terms: (N+1)^{(N+1)(T-1)} ancestor configurations times (N+1)^T index paths.
  long double terms = 1.0L;
  for (int t = 1; t < T; ++t)
    for (int n = 0; n < N1; ++n) terms *= N1;
  for (int t = 0; t < T; ++t) terms *= N1;
  if (terms > static_cast<long double>(max_terms))
    throw ConfigError("enumeration exceeds the configured size bound");
  return Enumerator(cloud, model, cfg, j).run();
}

}  // namespace rwsmc
