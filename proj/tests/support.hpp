#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "rwsmc/kernel.hpp"
#include "rwsmc/model.hpp"
#include "rwsmc/param.hpp"
#include "rwsmc/rng.hpp"

namespace rwsmc::test {

// Three-point state space {0, 1, 2} with a time-homogeneous transition matrix.
class ThreePoint final : public UnivariateComponents {
 public:
  std::array<double, 3> p1{0.5, 0.3, 0.2};
  std::array<std::array<double, 3>, 3> P{{{0.6, 0.3, 0.1}, {0.2, 0.5, 0.3}, {0.25, 0.25, 0.5}}};
  std::vector<std::array<double, 3>> g{{1.0, 2.0, 0.5}, {0.7, 1.5, 3.0}, {2.0, 1.0, 1.0}};

  static int idx(double x) { return static_cast<int>(std::lround(x)); }
  static double draw(const std::array<double, 3>& p, Rng& rng) {
    const double u = rng.uniform();
    return u < p[0] ? 0.0 : (u < p[0] + p[1] ? 1.0 : 2.0);
  }

  double log_m1(int, double x) const override { return std::log(p1[idx(x)]); }
  double sample_m1(int, Rng& rng) const override { return draw(p1, rng); }
  double log_m(int, int, double xp, double x) const override { return std::log(P[idx(xp)][idx(x)]); }
  double sample_m(int, int, double xp, Rng& rng) const override { return draw(P[idx(xp)], rng); }
  double log_g(int t, int, double x) const override { return std::log(g[t][idx(x)]); }
};

// Kernel chain on a linear-Gaussian model, started from an exact draw, against
// the Kalman smoother: largest batch-means |z| over (t, d) for E x and E x^2.
inline double chain_moment_z(const LgssmSpec& spec, Algorithm alg, const KernelConfig& cfg,
                             std::int64_t iters, std::uint64_t seed) {
  const ProductModel model = make_lgssm_model(spec);
  const KalmanResult k = kalman_smooth(spec);
  Rng rng(seed);
  Path x = ffbs_exact_sample(spec, k, rng);
  auto kern = make_kernel(alg, model, cfg);
  const int T = spec.T, D = spec.D;
  std::vector<std::vector<double>> s1(T * D), s2(T * D);
  for (std::int64_t i = 0; i < iters; ++i) {
    kern->update(x, rng);
    for (int t = 0; t < T; ++t)
      for (int d = 0; d < D; ++d) {
        const double m = k.at(k.smoother_means, t, d);
        const double v = x(t, d);
        s1[t * D + d].push_back(v);
        s2[t * D + d].push_back((v - m) * (v - m));
      }
  }
  double worst = 0.0;
  for (int t = 0; t < T; ++t)
    for (int d = 0; d < D; ++d) {
      const auto a = batch_means(s1[t * D + d]), b = batch_means(s2[t * D + d]);
      worst = std::max(worst, std::abs(a.mean - k.at(k.smoother_means, t, d)) / a.se);
      worst = std::max(worst, std::abs(b.mean - k.at(k.smoother_variances, t, d)) / b.se);
    }
  return worst;
}

inline LgssmSpec simulated_spec(int T, int D, std::uint64_t seed) {
  LgssmSpec s = preset_spec("gauss-rw", T, D);
  Rng r(seed);
  s.y = simulate_observations(s, r);
  return s;
}

}  // namespace rwsmc::test
