#include "rwsmc/rwehmm.hpp"

#include <algorithm>
#include <cmath>
#include <span>

#include "rwsmc/error.hpp"
#include "rwsmc/selection.hpp"

namespace rwsmc {

void scatter_time(const double* ref, double ell, int N, int D, Rng& rng, double* out) {
  const double s = std::sqrt(ell / (2.0 * D));
  for (int d = 0; d < D; ++d) {
    const double c = ref[d] + s * rng.normal();
    for (int n = 0; n < N; ++n) out[static_cast<std::size_t>(n) * D + d] = c + s * rng.normal();
  }
}

ParticleCloud scatter_cloud(const Path& path, const std::vector<double>& ell, int N, Rng& rng) {
  if (ell.size() != 1 && ell.size() != static_cast<std::size_t>(path.T))
    throw ConfigError("ell must have 1 or T entries");
  ParticleCloud c(path.T, N, path.D);
  for (int t = 0; t < path.T; ++t) {
    const double l = ell.size() == 1 ? ell[0] : ell[t];
    if (!(l > 0)) throw ConfigError("ell entries must be positive");
    c.ell.push_back(l);
    std::copy_n(path.row(t), path.D, c.at(t, 0));
    scatter_time(path.row(t), l, N, path.D, rng, c.at(t, 1));
  }
  return c;
}

double DiscreteTarget::log_density(const std::vector<int>& k) const {
  double s = log_m1[k[0]] + lg(0, k[0]);
  for (int t = 1; t < T; ++t) s += lm(t, k[t - 1], k[t]) + lg(t, k[t]);
  return s;
}

DiscreteTarget build_discrete_target(const ParticleCloud& cloud, const ProductModel& model) {
  const int T = cloud.T, N1 = cloud.N + 1;
  DiscreteTarget x;
  x.T = T;
  x.N = cloud.N;
  x.log_g.resize(static_cast<std::size_t>(T) * N1);
  x.log_m1.resize(N1);
  x.log_m.assign(static_cast<std::size_t>(T) * N1 * N1, 0.0);
  for (int n = 0; n < N1; ++n) x.log_m1[n] = model.log_M(0, nullptr, cloud.at(0, n));
  for (int t = 0; t < T; ++t) {
    for (int n = 0; n < N1; ++n) x.log_g[static_cast<std::size_t>(t) * N1 + n] = model.log_G(t, cloud.at(t, n));
    if (t == 0) continue;
    for (int m = 0; m < N1; ++m)
      for (int n = 0; n < N1; ++n)
        x.log_m[(static_cast<std::size_t>(t) * N1 + m) * N1 + n] =
            model.log_M(t, cloud.at(t - 1, m), cloud.at(t, n));
  }
  return x;
}

ForwardPass forward_filter(const DiscreteTarget& x) {
  const int T = x.T, N1 = x.N + 1;
  ForwardPass f;
  f.log_w.resize(static_cast<std::size_t>(T) * N1);
  std::vector<double> tmp(N1);
  auto row = [&](int t) { return std::span<double>(f.log_w.data() + static_cast<std::size_t>(t) * N1, N1); };
  for (int t = 0; t < T; ++t) {
    auto w = row(t);
    for (int n = 0; n < N1; ++n) {
      if (t == 0) {
        w[n] = x.log_m1[n] + x.lg(0, n);
      } else {
        auto prev = row(t - 1);
        for (int m = 0; m < N1; ++m) tmp[m] = prev[m] + x.lm(t, m, n);
        w[n] = log_sum_exp(tmp) + x.lg(t, n);
      }
    }
    const double c = log_sum_exp(w);
    if (!std::isfinite(c)) throw ModelError("forward weights vanished");
    f.log_normaliser += c;
    for (double& v : w) v -= c;
  }
  return f;
}

std::vector<int> unflatten_index(std::size_t flat, int T, int N) {
  std::vector<int> k(T);
  for (int t = T - 1; t >= 0; --t) {
    k[t] = static_cast<int>(flat % (N + 1));
    flat /= (N + 1);
  }
  return k;
}

namespace {

std::size_t space_size(int T, int N) {
  std::size_t s = 1;
  for (int t = 0; t < T; ++t) s *= static_cast<std::size_t>(N + 1);
  return s;
}

}  // namespace

std::vector<double> brute_force_xi(const DiscreteTarget& x) {
  const std::size_t S = space_size(x.T, x.N);
  std::vector<double> lp(S);
  for (std::size_t i = 0; i < S; ++i) lp[i] = x.log_density(unflatten_index(i, x.T, x.N));
  const double z = log_sum_exp(lp);
  for (double& v : lp) v = std::exp(v - z);
  return lp;
}

std::vector<double> ffbs_index_distribution(const DiscreteTarget& x) {
  const int T = x.T, N1 = x.N + 1;
  const ForwardPass f = forward_filter(x);
  const std::size_t S = space_size(T, x.N);
  std::vector<double> out(S), lw(N1), p(N1), sc(N1);
  for (std::size_t i = 0; i < S; ++i) {
    const auto k = unflatten_index(i, T, x.N);
    for (int n = 0; n < N1; ++n) lw[n] = f.log_w[static_cast<std::size_t>(T - 1) * N1 + n];
    boltzmann_full(lw, p, sc);
    double prob = p[k[T - 1]];
    for (int t = T - 2; t >= 0; --t) {
      for (int n = 0; n < N1; ++n)
        lw[n] = f.log_w[static_cast<std::size_t>(t) * N1 + n] + x.lm(t + 1, n, k[t + 1]);
      boltzmann_full(lw, p, sc);
      prob *= p[k[t]];
    }
    out[i] = prob;
  }
  return out;
}

std::vector<int> ffbs_index_sample(const DiscreteTarget& x, const ForwardPass& f, Rng& rng) {
  const int T = x.T, N1 = x.N + 1;
  std::vector<int> k(T);
  std::vector<double> lw(N1), p(N1), sc(N1);
  for (int n = 0; n < N1; ++n) lw[n] = f.log_w[static_cast<std::size_t>(T - 1) * N1 + n];
  boltzmann_full(lw, p, sc);
  k[T - 1] = sample_index(p, rng);
  for (int t = T - 2; t >= 0; --t) {
    for (int n = 0; n < N1; ++n)
      lw[n] = f.log_w[static_cast<std::size_t>(t) * N1 + n] + x.lm(t + 1, n, k[t + 1]);
    boltzmann_full(lw, p, sc);
    k[t] = sample_index(p, rng);
  }
  return k;
}

std::vector<int> ffbs_index_sample(const ParticleCloud& cloud, const ProductModel& model,
                                   Rng& rng) {
  const DiscreteTarget x = build_discrete_target(cloud, model);
  return ffbs_index_sample(x, forward_filter(x), rng);
}

RwehmmKernel::RwehmmKernel(const ProductModel& model, const KernelConfig& cfg)
    : Kernel(model, cfg) {
  if (cfg_.ell.empty()) throw ConfigError("RW-EHMM needs ell");
  const int T = model.T(), N1 = cfg.N + 1;
  target_.T = T;
  target_.N = cfg.N;
  target_.log_g.assign(static_cast<std::size_t>(T) * N1, 0.0);
  target_.log_m1.assign(N1, 0.0);
  target_.log_m.assign(static_cast<std::size_t>(T) * N1 * N1, 0.0);
  p_.resize(N1);
  info_.has_backward = true;
}

std::uint64_t RwehmmKernel::m_evals_per_update(int N, int T) {
  const std::uint64_t n1 = N + 1;
  return n1 + static_cast<std::uint64_t>(T - 1) * n1 * n1;
}

std::uint64_t RwehmmKernel::g_evals_per_update(int N, int T) {
  return static_cast<std::uint64_t>(T) * (N + 1);
}

void RwehmmKernel::fill_target() {
  const int T = model_.T(), N1 = cfg_.N + 1;
  for (int n = 0; n < N1; ++n) target_.log_m1[n] = log_M(0, nullptr, cloud_.at(0, n));
  for (int t = 0; t < T; ++t) {
    for (int n = 0; n < N1; ++n)
      target_.log_g[static_cast<std::size_t>(t) * N1 + n] = log_G(t, cloud_.at(t, n));
    if (t == 0) continue;
    for (int m = 0; m < N1; ++m)
      for (int n = 0; n < N1; ++n)
        target_.log_m[(static_cast<std::size_t>(t) * N1 + m) * N1 + n] =
            log_M(t, cloud_.at(t - 1, m), cloud_.at(t, n));
  }
}

void RwehmmKernel::update(Path& path, Rng& rng) {
  check_path(path);
  const int T = model_.T(), D = model_.D(), N = cfg_.N, N1 = N + 1;
  for (int t = 0; t < T; ++t) {
    std::copy_n(path.row(t), D, cloud_.at(t, 0));
    scatter_time(path.row(t), cloud_.ell[t], N, D, rng, cloud_.at(t, 1));
  }
  fill_target();
  const ForwardPass f = forward_filter(target_);
  info_.log_normaliser = f.log_normaliser;
  for (std::size_t i = 0; i < f.log_w.size(); ++i) info_.resample_weights[i] = std::exp(f.log_w[i]);

  auto& gen = info_.genealogy;
  const std::span<double> lw(lw_), sc(scratch_);
  for (int n = 0; n < N1; ++n) lw[n] = f.log_w[static_cast<std::size_t>(T - 1) * N1 + n];
  std::span<double> fin(backward_row(T - 1), N1);
  boltzmann_full(lw, fin, sc);
  gen.selected[T - 1] = sample_index(fin, rng);
  for (int t = T - 2; t >= 0; --t) {
    for (int n = 0; n < N1; ++n)
      lw[n] = f.log_w[static_cast<std::size_t>(t) * N1 + n] + target_.lm(t + 1, n, gen.selected[t + 1]);
    std::span<double> bp(backward_row(t), N1);
    boltzmann_full(lw, bp, sc);
    gen.selected[t] = sample_index(bp, rng);
  }
  write_selected(path);
}

std::pair<Path, GenealogyRecord> rwehmm_update(const ProductModel& model, const Path& path,
                                               const KernelConfig& cfg, Rng& rng) {
  RwehmmKernel k(model, cfg);
  Path out = path;
  k.update(out, rng);
  return {out, k.info().genealogy};
}

}  // namespace rwsmc
