#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <memory>
#include <vector>

#include "rwsmc/error.hpp"
#include "rwsmc/limit_laws.hpp"
#include "rwsmc/rwcsmc.hpp"
#include "support.hpp"

using namespace rwsmc;

namespace {

LimitMoments manual_moments(int T, double ell, double v2, double w2, double cross, double mv, double mw) {
  LimitMoments m;
  m.T = T;
  for (int t = 0; t < T; ++t) {
    m.ell.push_back(ell);
    m.I.push_back({v2 + w2 + 2 * cross, 0.0});
    m.v2.push_back({v2, 0.0});
    m.w2.push_back({t + 1 < T ? w2 : 0.0, 0.0});
    m.cross.push_back({t + 1 < T ? cross : 0.0, 0.0});
    m.mv.push_back({mv, 0.0});
    m.mw.push_back({t + 1 < T ? mw : 0.0, 0.0});
    m.curvature.push_back({-(mv + mw), 0.0});
  }
  return m;
}

// Same model, but derivatives left to finite differences.
class NoDerivatives final : public UnivariateComponents {
 public:
  explicit NoDerivatives(LgssmSpec s) : c_(std::move(s)) {}
  double log_m1(int d, double x) const override { return c_.log_m1(d, x); }
  double sample_m1(int d, Rng& r) const override { return c_.sample_m1(d, r); }
  double log_m(int t, int d, double xp, double x) const override { return c_.log_m(t, d, xp, x); }
  double sample_m(int t, int d, double xp, Rng& r) const override { return c_.sample_m(t, d, xp, r); }
  double log_g(int t, int d, double x) const override { return c_.log_g(t, d, x); }

 private:
  LinearGaussianComponents c_;
};

LimitMoments model_moments(const LgssmSpec& spec, const ProductModel& model, std::int64_t draws) {
  const KalmanResult k = kalman_smooth(spec);
  ExactSampler s = [&](int d, Rng& rng, double* out) { ffbs_sample_coordinate(spec, k, d, rng, out); };
  MomentOptions o;
  o.draws = draws;
  o.seed = 3;
  o.threads = 1;
  return estimate_limit_moments(model, s, {1.0}, o);
}

}  // namespace

TEST(LimitMoments, InformationOfTheRandomWalkModel) {
  MomentOptions o;
  o.draws = 100000;
  o.seed = 1;
  o.threads = 1;
  const LimitMoments m = gaussian_limit_moments(preset_spec("gauss-rw", 5, 1), {1.0}, 500, o);
  for (int t = 0; t < 5; ++t) {
    const double want = t < 4 ? 3.0 : 2.0;
    EXPECT_NEAR(m.I[t].mean, want, 4 * m.I[t].se) << t;
    EXPECT_NEAR(m.curvature[t].mean, want, 1e-9);
    EXPECT_NEAR(m.I[t].mean, m.curvature[t].mean, 4 * m.I[t].se);
    EXPECT_NEAR(m.I[t].mean, m.v2[t].mean + m.w2[t].mean + 2 * m.cross[t].mean, 1e-9 * m.I[t].mean);
    EXPECT_GT(m.I[t].mean, 0.0);
  }
  EXPECT_EQ(m.w2[4].mean, 0.0);
  EXPECT_EQ(m.mw[4].mean, 0.0);
}

TEST(LimitMoments, TimeFactorisedModelHasNoForwardTerms) {
  LgssmSpec spec = test::simulated_spec(4, 3, 2);
  spec.a = 0.0;
  const LimitMoments m = model_moments(spec, make_lgssm_model(spec), 20000);
  for (int t = 0; t < 4; ++t) {
    EXPECT_EQ(m.w2[t].mean, 0.0);
    EXPECT_EQ(m.cross[t].mean, 0.0);
    EXPECT_EQ(m.mw[t].mean, 0.0);
    EXPECT_NEAR(m.I[t].mean, m.curvature[t].mean, 4 * m.I[t].se);
  }
}

TEST(LimitMoments, FiniteDifferencesAgreeWithAnalytic) {
  const LgssmSpec spec = test::simulated_spec(3, 2, 4);
  const auto a = model_moments(spec, make_lgssm_model(spec), 20000);
  const ProductModel fd_model(std::make_shared<NoDerivatives>(spec), 3, 2);
  const auto b = model_moments(spec, fd_model, 20000);
  for (int t = 0; t < 3; ++t) {
    EXPECT_NEAR(a.I[t].mean, b.I[t].mean, 1e-5 * a.I[t].mean);
    EXPECT_NEAR(a.curvature[t].mean, b.curvature[t].mean, 1e-3);
  }
}

TEST(LimitMoments, MissingDerivativesCanBeRefused) {
  const LgssmSpec spec = test::simulated_spec(2, 1, 5);
  const ProductModel model(std::make_shared<NoDerivatives>(spec), 2, 1);
  const KalmanResult k = kalman_smooth(spec);
  ExactSampler s = [&](int d, Rng& rng, double* out) { ffbs_sample_coordinate(spec, k, d, rng, out); };
  MomentOptions o;
  o.draws = 100;
  o.allow_finite_differences = false;
  EXPECT_THROW(estimate_limit_moments(model, s, {1.0}, o), CapabilityError);
}

TEST(LimitDrawsTest, CovarianceStructure) {
  const double ell = 1.5;
  const LimitMoments m = manual_moments(2, ell, 2.0, 1.0, 0.5, -1.0, -0.5);
  Rng rng(6);
  const int M = 100000;
  // Moments of (V^1, V^2, W^1, W^2) at t = 0.
  std::array<double, 4> s{};
  std::array<std::array<double, 4>, 4> ss{};
  for (int i = 0; i < M; ++i) {
    const auto d = draw_limit_increments(m, 2, LimitFlags{}, rng);
    EXPECT_EQ(d.vv(0, 0), 0.0);
    EXPECT_EQ(d.ww(0, 0), 0.0);
    const std::array<double, 4> x{d.vv(0, 1), d.vv(0, 2), d.ww(0, 1), d.ww(0, 2)};
    for (int a = 0; a < 4; ++a) {
      s[a] += x[a];
      for (int b = 0; b < 4; ++b) ss[a][b] += x[a] * x[b];
    }
  }
  const double mean[4] = {0.5 * ell * -1.0, 0.5 * ell * -1.0, 0.5 * ell * -0.5, 0.5 * ell * -0.5};
  const double v = ell * 2.0, w = ell * 1.0, c = ell * 0.5;
  const double cov[4][4] = {{v, v / 2, c, c / 2}, {v / 2, v, c / 2, c}, {c, c / 2, w, w / 2}, {c / 2, c, w / 2, w}};
  for (int a = 0; a < 4; ++a) {
    EXPECT_NEAR(s[a] / M, mean[a], 4 * std::sqrt(cov[a][a] / M));
    for (int b = 0; b < 4; ++b) {
      const double emp = ss[a][b] / M - (s[a] / M) * (s[b] / M);
      // Var of a product of jointly normal centred variables: S_aa S_bb + S_ab^2.
      const double sd = std::sqrt((cov[a][a] * cov[b][b] + cov[a][b] * cov[a][b]) / M);
      EXPECT_NEAR(emp, cov[a][b], 4 * sd) << a << "," << b;
    }
  }
}

TEST(LimitGenealogy, ZeroMomentsGiveUniformSelections) {
  const LimitMoments m = manual_moments(3, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
  const int M = 60000, N = 3;
  for (auto f : {LimitFlags{}, LimitFlags{false, true, false}, LimitFlags{false, false, true}}) {
    Rng rng(7);
    std::vector<std::vector<int>> c(3, std::vector<int>(N + 1, 0));
    for (int i = 0; i < M; ++i) {
      const auto g = simulate_limit_genealogy(m, N, f, rng);
      for (int t = 0; t < 3; ++t) ++c[t][g.selected[t]];
    }
    // Under trace the last index is uniform and earlier ones follow uniform
    // ancestors, except that the reference keeps ancestor 0.
    std::vector<double> p0(3, 0.25);
    if (!f.backward_sampling && !f.ehmm)
      for (int t = 1; t >= 0; --t) p0[t] = 0.25 + 0.75 * p0[t + 1];
    for (int t = 0; t < 3; ++t)
      for (int n = 0; n <= N; ++n) {
        const double p = n == 0 ? p0[t] : (1.0 - p0[t]) / N;
        EXPECT_NEAR(c[t][n] / double(M), p, 4 * std::sqrt(p * (1 - p) / M)) << t << "," << n;
      }
  }
}

namespace {

// Hand enumeration for N = 1, T = 2 with fixed draws. Outcome index 4 A_0^1 + 2 K_0 + K_1.
std::array<double, 8> enumerate_limit(double v0, double w0, double v1, bool fm, bool bs) {
  std::array<double, 8> out{};
  const double pa1 = std::exp(v0) / (1 + std::exp(v0));
  for (int a = 0; a < 2; ++a) {
    const double pa = a ? pa1 : 1 - pa1;
    // Time-1 weights: reference 0 + w0^{A^0 = 0} = 0, particle 1: v1 + w0^{a}.
    const double h = v1 + (a ? w0 : 0.0);
    const double k1p = fm ? std::min(1.0, std::exp(h)) : std::exp(h) / (1 + std::exp(h));
    for (int k1 = 0; k1 < 2; ++k1) {
      const double pk1 = k1 ? k1p : 1 - k1p;
      if (bs) {
        const double b1 = std::exp(v0 + w0) / (1 + std::exp(v0 + w0));
        out[4 * a + 0 + k1] += pa * pk1 * (1 - b1);
        out[4 * a + 2 + k1] += pa * pk1 * b1;
      } else {
        const int k0 = k1 ? a : 0;
        out[4 * a + 2 * k0 + k1] += pa * pk1;
      }
    }
  }
  return out;
}

}  // namespace

TEST(LimitGenealogy, TwoStepHandEnumeration) {
  LimitDraws d;
  d.T = 2;
  d.N = 1;
  d.v = {0.0, 0.4, 0.0, -0.7};
  d.w = {0.0, -0.3, 0.0, 0.0};
  std::vector<double> lw;
  limit_resampling_weights(d, 0, {0, 0}, lw);
  EXPECT_NEAR(lw[1], 0.4, 1e-15);
  limit_resampling_weights(d, 1, {0, 1}, lw);
  EXPECT_NEAR(lw[0], 0.0, 1e-15);
  EXPECT_NEAR(lw[1], -1.0, 1e-12);
  limit_resampling_weights(d, 1, {0, 0}, lw);
  EXPECT_NEAR(lw[1], -0.7, 1e-12);

  const int M = 400000;
  for (bool fm : {false, true})
    for (bool bs : {false, true}) {
      const auto want = enumerate_limit(0.4, -0.3, -0.7, fm, bs);
      double tot = 0.0;
      for (double p : want) tot += p;
      EXPECT_NEAR(tot, 1.0, 1e-12);
      LimitFlags f;
      f.forced_move = fm;
      f.backward_sampling = bs;
      Rng rng(8);
      std::array<int, 8> c{};
      for (int i = 0; i < M; ++i) {
        const auto g = simulate_limit_genealogy(d, f, rng);
        ++c[4 * g.ancestor(0, 1) + 2 * g.selected[0] + g.selected[1]];
      }
      for (int k = 0; k < 8; ++k)
        EXPECT_NEAR(c[k] / double(M), want[k], 4 * std::sqrt(want[k] * (1 - want[k]) / M) + 1e-12)
            << fm << bs << k;
    }
}

TEST(LimitGenealogy, TimeFactorisedMomentsGiveIndependentIndices) {
  const LimitMoments m = manual_moments(3, 1.0, 2.0, 0.0, 0.0, -2.0, 0.0);
  LimitFlags f;
  f.backward_sampling = true;
  Rng rng(9);
  const int M = 100000;
  int a0 = 0, a1 = 0, both = 0;
  for (int i = 0; i < M; ++i) {
    const auto g = simulate_limit_genealogy(m, 3, f, rng);
    a0 += g.accepted[0];
    a1 += g.accepted[1];
    both += g.accepted[0] && g.accepted[1];
  }
  const double p0 = a0 / double(M), p1 = a1 / double(M);
  EXPECT_NEAR(both / double(M), p0 * p1, 4 * std::sqrt(p0 * p1 * (1 - p0 * p1) / M));
}

TEST(LimitRates, EhmmMatchesBackwardSamplingWithoutForwardTerms) {
  const LimitMoments m = manual_moments(4, 1.0, 2.0, 0.0, 0.0, -2.0, 0.0);
  RateOptions o;
  o.replications = 100000;
  o.threads = 1;
  LimitFlags bs, eh;
  bs.backward_sampling = true;
  eh.ehmm = true;
  const auto a = limit_acceptance_rates(m, 7, bs, o);
  o.seed = 2;
  const auto b = limit_acceptance_rates(m, 7, eh, o);
  for (int t = 0; t < 4; ++t)
    EXPECT_NEAR(a[t].mean, b[t].mean, 4 * std::hypot(a[t].se, b[t].se));
}

TEST(LimitRates, IncreaseWithN) {
  MomentOptions mo;
  mo.draws = 50000;
  mo.threads = 1;
  const LimitMoments m = gaussian_limit_moments(preset_spec("gauss-rw", 5, 1), {1.0}, 500, mo);
  RateOptions o;
  o.replications = 40000;
  o.threads = 1;
  LimitFlags f;
  f.backward_sampling = true;
  const auto r1 = limit_acceptance_rates(m, 1, f, o), r7 = limit_acceptance_rates(m, 7, f, o),
             r31 = limit_acceptance_rates(m, 31, f, o);
  for (int t = 0; t < 5; ++t) {
    EXPECT_GT(r7[t].mean, r1[t].mean);
    EXPECT_GT(r31[t].mean, r7[t].mean);
    const double bound = analytic_bounds(1.0, m.I[t].mean, 31).bs_bound;
    EXPECT_GE(r31[t].mean, bound - 3 * r31[t].se) << t;
  }
}

TEST(LimitRates, InputErrors) {
  const LimitMoments m = manual_moments(2, 1.0, 1.0, 0.0, 0.0, -1.0, 0.0);
  RateOptions o;
  EXPECT_THROW(limit_acceptance_rates(m, 0, LimitFlags{}, o), ConfigError);
  o.replications = 0;
  EXPECT_THROW(limit_acceptance_rates(m, 1, LimitFlags{}, o), ConfigError);
}

TEST(AnalyticBoundsTest, Examples) {
  const auto b = analytic_bounds(1.0, 2.0, 31);
  EXPECT_NEAR(b.bs_bound, 1.0 / (1.0 + std::exp(2.0) / 31.0), 1e-15);
  EXPECT_NEAR(b.bs_bound, 0.807521, 1e-6);
  EXPECT_NEAR(b.ehmm_bound, b.bs_bound, 1e-15);
  EXPECT_NEAR(b.rwmh_rate, 0.479500, 1e-6);
  EXPECT_FALSE(b.no_bs_bound.has_value());
  const auto c = analytic_bounds(1.0, 2.0, 31, 4.0);
  EXPECT_NEAR(*c.no_bs_bound, std::exp(-std::exp(2.0) / 4.0), 1e-15);
  const auto z = analytic_bounds(1.0, 0.0, 31);
  EXPECT_NEAR(z.bs_bound, 31.0 / 32.0, 1e-15);
  EXPECT_NEAR(z.rwmh_rate, 1.0, 1e-15);
  EXPECT_THROW(analytic_bounds(0.0, 1.0, 1), ConfigError);
  EXPECT_THROW(analytic_bounds(1.0, -1.0, 1), ConfigError);
  EXPECT_THROW(analytic_bounds(1.0, 1.0, 0), ConfigError);
  EXPECT_THROW(analytic_bounds(1.0, 1.0, 1, 0.0), ConfigError);
}

TEST(NormalCdf, KnownValues) {
  EXPECT_NEAR(normal_cdf(0.0), 0.5, 1e-16);
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-12);
  EXPECT_NEAR(normal_cdf(-1.0), 0.15865525393145707, 1e-14);
}

// Finite-D i-RW-CSMC genealogies approach the limit law (N = 1, T = 2).
TEST(LimitConvergence, TotalVariationShrinksWithD) {
  const int M = 100000;
  MomentOptions mo;
  mo.draws = 100000;
  mo.threads = 1;
  const LimitMoments m = gaussian_limit_moments(preset_spec("gauss-rw", 2, 1), {1.0}, 2000, mo);
  std::array<double, 8> lim{};
  {
    Rng rng(10);
    for (int i = 0; i < M; ++i) {
      const auto g = simulate_limit_genealogy(m, 1, LimitFlags{}, rng);
      lim[4 * g.ancestor(0, 1) + 2 * g.selected[0] + g.selected[1]] += 1.0 / M;
    }
  }
  std::vector<double> tv;
  for (int D : {4, 64, 1024}) {
    const LgssmSpec spec = test::simulated_spec(2, D, 11);
    const ProductModel model = make_lgssm_model(spec);
    KernelConfig cfg;
    cfg.ell = {1.0};
    RwcsmcKernel kern(model, cfg);
    Rng rng(12);
    Path x = ffbs_exact_sample(spec, rng);
    std::array<double, 8> emp{};
    for (int i = 0; i < M; ++i) {
      kern.update(x, rng);
      const auto& g = kern.info().genealogy;
      emp[4 * g.ancestor(0, 1) + 2 * g.selected[0] + g.selected[1]] += 1.0 / M;
    }
    double d = 0.0;
    for (int k = 0; k < 8; ++k) d += 0.5 * std::abs(emp[k] - lim[k]);
    tv.push_back(d);
  }
  EXPECT_GT(tv[0], tv[1]);
  EXPECT_GT(tv[1], tv[2]);
  EXPECT_LT(tv[2], 0.05);
}
