#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "rwsmc/error.hpp"
#include "rwsmc/rwcsmc.hpp"
#include "rwsmc/rwehmm.hpp"
#include "support.hpp"

using namespace rwsmc;

namespace {

struct Variant {
  SelectionVariant sel;
  IndexSelection idx;
};

const std::vector<Variant> kVariants = {
    {SelectionVariant::boltzmann, IndexSelection::ancestral_trace},
    {SelectionVariant::boltzmann, IndexSelection::backward_sampling},
    {SelectionVariant::boltzmann, IndexSelection::ancestor_sampling},
    {SelectionVariant::forced_move, IndexSelection::ancestral_trace},
    {SelectionVariant::forced_move, IndexSelection::backward_sampling},
    {SelectionVariant::forced_move, IndexSelection::ancestor_sampling},
};

KernelConfig config(int N, const Variant& v, double ell = 1.0) {
  KernelConfig cfg;
  cfg.N = N;
  cfg.selection = v.sel;
  cfg.index_selection = v.idx;
  cfg.ell = {ell};
  return cfg;
}

// Hand enumeration for N = 1, T = 2 with the reference at indices j. Output is
// indexed 2 k_0 + k_1.
std::vector<double> enumerate_row(const ParticleCloud& c, const ProductModel& m, const Variant& v,
                                  const int j[2]) {
  auto m1 = [&](int n) { return std::exp(m.log_M(0, nullptr, c.at(0, n))); };
  auto g0 = [&](int n) { return std::exp(m.log_G(0, c.at(0, n))); };
  auto g1 = [&](int n) { return std::exp(m.log_G(1, c.at(1, n))); };
  auto tr = [&](int a, int n) { return std::exp(m.log_M(1, c.at(0, a), c.at(1, n))); };
  const double w0[2] = {m1(0) * g0(0), m1(1) * g0(1)};
  const double p[2] = {w0[0] / (w0[0] + w0[1]), w0[1] / (w0[0] + w0[1])};
  double q[2] = {j[0] == 0 ? 1.0 : 0.0, j[0] == 1 ? 1.0 : 0.0};
  if (v.idx == IndexSelection::ancestor_sampling) {
    const double a = w0[0] * tr(0, j[1]), b = w0[1] * tr(1, j[1]);
    q[0] = a / (a + b);
    q[1] = b / (a + b);
  }
  std::vector<double> row(4, 0.0);
  for (int a0 = 0; a0 < 2; ++a0)
    for (int a1 = 0; a1 < 2; ++a1) {
      const int A[2] = {a0, a1};
      double pa = 1.0;
      for (int n = 0; n < 2; ++n) pa *= n == j[1] ? q[A[n]] : p[A[n]];
      if (pa == 0.0) continue;
      const double w1[2] = {tr(A[0], 0) * g1(0), tr(A[1], 1) * g1(1)};
      double fin[2] = {w1[0] / (w1[0] + w1[1]), w1[1] / (w1[0] + w1[1])};
      if (v.sel == SelectionVariant::forced_move) {
        const int o = 1 - j[1];
        fin[o] = std::min(1.0, w1[o] / w1[j[1]]);
        fin[j[1]] = 1.0 - fin[o];
      }
      for (int k1 = 0; k1 < 2; ++k1) {
        if (v.idx == IndexSelection::backward_sampling) {
          const double b0 = w0[0] * tr(0, k1), b1 = w0[1] * tr(1, k1);
          row[0 + k1] += pa * fin[k1] * b0 / (b0 + b1);
          row[2 + k1] += pa * fin[k1] * b1 / (b0 + b1);
        } else {
          row[2 * A[k1] + k1] += pa * fin[k1];
        }
      }
    }
  return row;
}

std::vector<double> direct_xi(const ParticleCloud& c, const ProductModel& m) {
  std::vector<double> xi(4);
  double z = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      z += xi[2 * a + b] = std::exp(m.log_M(0, nullptr, c.at(0, a)) + m.log_G(0, c.at(0, a)) +
                                    m.log_M(1, c.at(0, a), c.at(1, b)) + m.log_G(1, c.at(1, b)));
  for (auto& v : xi) v /= z;
  return xi;
}

class Flat final : public UnivariateComponents {
 public:
  double log_m1(int, double) const override { return 0.0; }
  double sample_m1(int, Rng& rng) const override { return rng.normal(); }
  double log_m(int, int, double, double) const override { return 0.0; }
  double sample_m(int, int, double xp, Rng& rng) const override { return xp + rng.normal(); }
  double log_g(int, int, double) const override { return 0.0; }
};

}  // namespace

TEST(RwcsmcEnumeration, MatchesHandEnumeration) {
  Rng rng(1);
  for (int rep = 0; rep < 10; ++rep) {
    const LgssmSpec spec = test::simulated_spec(2, 2, 20 + rep);
    const ProductModel m = make_lgssm_model(spec);
    const auto c = scatter_cloud(ffbs_exact_sample(spec, rng), {1.0}, 1, rng);
    for (const auto& v : kVariants)
      for (int jj = 0; jj < 4; ++jj) {
        const int j[2] = {jj / 2, jj % 2};
        const auto got = index_transition_matrix(c, m, config(1, v), {j[0], j[1]});
        const auto want = enumerate_row(c, m, v, j);
        for (int k = 0; k < 4; ++k) EXPECT_NEAR(got[k], want[k], 1e-12);
      }
  }
}

TEST(RwcsmcEnumeration, IndexTargetIsInvariant) {
  Rng rng(2);
  for (int rep = 0; rep < 10; ++rep) {
    const LgssmSpec spec = test::simulated_spec(2, 2, 40 + rep);
    const ProductModel m = make_lgssm_model(spec);
    const auto c = scatter_cloud(ffbs_exact_sample(spec, rng), {1.0}, 1, rng);
    const auto xi = direct_xi(c, m);
    for (const auto& v : kVariants) {
      std::vector<double> out(4, 0.0);
      for (int jj = 0; jj < 4; ++jj) {
        const int j[2] = {jj / 2, jj % 2};
        const auto row = enumerate_row(c, m, v, j);
        double s = 0.0;
        for (int k = 0; k < 4; ++k) {
          out[k] += xi[jj] * row[k];
          s += row[k];
        }
        EXPECT_NEAR(s, 1.0, 1e-14);
      }
      for (int k = 0; k < 4; ++k) EXPECT_NEAR(out[k], xi[k], 1e-12);
    }
  }
}

TEST(RwcsmcEnumeration, LargerCloudRowsSumToOneAndPreserveXi) {
  const LgssmSpec spec = test::simulated_spec(3, 1, 3);
  const ProductModel m = make_lgssm_model(spec);
  Rng rng(4);
  const auto c = scatter_cloud(ffbs_exact_sample(spec, rng), {1.0}, 1, rng);
  const auto xi = brute_force_xi(build_discrete_target(c, m));
  const Variant v{SelectionVariant::forced_move, IndexSelection::backward_sampling};
  std::vector<double> out(xi.size(), 0.0);
  for (std::size_t i = 0; i < xi.size(); ++i) {
    const auto row = index_transition_matrix(c, m, config(1, v), unflatten_index(i, 3, 1));
    double s = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) {
      s += row[k];
      out[k] += xi[i] * row[k];
    }
    EXPECT_NEAR(s, 1.0, 1e-13);
  }
  for (std::size_t k = 0; k < xi.size(); ++k) EXPECT_NEAR(out[k], xi[k], 1e-12);
}

TEST(RwcsmcEnumeration, RejectsOversizedProblems) {
  const LgssmSpec spec = test::simulated_spec(4, 1, 5);
  const ProductModel m = make_lgssm_model(spec);
  Rng rng(6);
  const auto c = scatter_cloud(ffbs_exact_sample(spec, rng), {1.0}, 3, rng);
  EXPECT_THROW(index_transition_matrix(c, m, config(3, kVariants[0]), {0, 0, 0, 0}, 1000), ConfigError);
  EXPECT_THROW(index_transition_matrix(c, m, config(3, kVariants[0]), {0, 0, 0}), ConfigError);
}

TEST(Rwcsmc, ForwardWeightsMatchJointWeights) {
  const LgssmSpec spec = test::simulated_spec(5, 3, 7);
  const ProductModel m = make_lgssm_model(spec);
  Rng rng(8);
  for (const auto& v : kVariants) {
    RwcsmcKernel kern(m, config(4, v));
    const Path x = ffbs_exact_sample(spec, rng);
    kern.forward(x, rng);
    const auto om = joint_log_weights(kern.cloud(), m, kern.info().genealogy.ancestors);
    ASSERT_EQ(om.size(), kern.joint_log_weights().size());
    for (std::size_t i = 0; i < om.size(); ++i) EXPECT_NEAR(om[i], kern.joint_log_weights()[i], 1e-12);
    for (int t = 0; t < 5; ++t)
      for (int d = 0; d < 3; ++d) EXPECT_EQ(kern.cloud().at(t, 0)[d], x(t, d));
  }
}

TEST(Rwcsmc, SelectionFrequenciesGivenForwardPass) {
  const LgssmSpec spec = test::simulated_spec(3, 1, 9);
  const ProductModel m = make_lgssm_model(spec);
  Rng rng(10);
  for (auto idx : {IndexSelection::ancestral_trace, IndexSelection::backward_sampling}) {
    RwcsmcKernel kern(m, config(2, {SelectionVariant::boltzmann, idx}));
    const Path x = ffbs_exact_sample(spec, rng);
    kern.forward(x, rng);
    const auto& om = kern.joint_log_weights();
    const auto anc = kern.info().genealogy.ancestors;
    const auto& c = kern.cloud();
    auto soft = [](std::vector<double> lw) {
      const double mx = *std::max_element(lw.begin(), lw.end());
      double z = 0.0;
      for (double& v : lw) z += v = std::exp(v - mx);
      for (double& v : lw) v /= z;
      return lw;
    };
    std::vector<double> want(27, 0.0);
    const auto fin = soft({om[6], om[7], om[8]});
    for (int k2 = 0; k2 < 3; ++k2) {
      if (idx == IndexSelection::ancestral_trace) {
        const int k1 = anc[3 + k2], k0 = anc[k1];
        want[9 * k0 + 3 * k1 + k2] += fin[k2];
        continue;
      }
      std::vector<double> l1(3);
      for (int n = 0; n < 3; ++n) l1[n] = om[3 + n] + m.log_M(2, c.at(1, n), c.at(2, k2));
      const auto b1 = soft(l1);
      for (int k1 = 0; k1 < 3; ++k1) {
        std::vector<double> l0(3);
        for (int n = 0; n < 3; ++n) l0[n] = om[n] + m.log_M(1, c.at(0, n), c.at(1, k1));
        const auto b0 = soft(l0);
        for (int k0 = 0; k0 < 3; ++k0) want[9 * k0 + 3 * k1 + k2] += fin[k2] * b1[k1] * b0[k0];
      }
    }
    const int M = 200000;
    std::vector<int> counts(27, 0);
    for (int i = 0; i < M; ++i) {
      Path y = x;
      kern.select(y, rng);
      const auto& s = kern.info().genealogy.selected;
      ++counts[9 * s[0] + 3 * s[1] + s[2]];
    }
    for (int k = 0; k < 27; ++k) {
      const double sd = std::sqrt(want[k] * (1 - want[k]) / M);
      EXPECT_NEAR(counts[k] / double(M), want[k], 4.5 * sd + 1e-12) << k;
    }
  }
}

TEST(Rwcsmc, SingleParticleBarkerAndMetropolis) {
  const LgssmSpec spec = test::simulated_spec(1, 2, 11);
  const ProductModel m = make_lgssm_model(spec);
  Rng rng(12);
  for (auto sel : {SelectionVariant::boltzmann, SelectionVariant::forced_move}) {
    RwcsmcKernel kern(m, config(1, {sel, IndexSelection::ancestral_trace}, 0.8));
    Path x(1, 2);
    for (int i = 0; i < 200; ++i) {
      kern.update(x, rng);
      auto pi = [&](int n) {
        const double* z = kern.cloud().at(0, n);
        return std::exp(m.log_M(0, nullptr, z) + m.log_G(0, z));
      };
      const double r = pi(1) / pi(0);
      const double want = sel == SelectionVariant::boltzmann ? r / (1 + r) : std::min(1.0, r);
      EXPECT_NEAR(kern.info().resample_weights[1], want, 1e-12);
    }
  }
}

TEST(Rwcsmc, ConstantDensitiesGiveUniformSelections) {
  const ProductModel m(std::make_shared<Flat>(), 3, 2);
  RwcsmcKernel kern(m, config(3, kVariants[1]));
  Rng rng(13);
  Path x(3, 2);
  kern.update(x, rng);
  for (double w : kern.info().resample_weights) EXPECT_NEAR(w, 0.25, 1e-15);
  for (double w : kern.info().backward_weights) EXPECT_NEAR(w, 0.25, 1e-15);
}

TEST(Rwcsmc, EvaluationCounts) {
  using IS = IndexSelection;
  EXPECT_EQ(RwcsmcKernel::m_evals_per_update(3, 3, IS::ancestral_trace), 12u);
  EXPECT_EQ(RwcsmcKernel::m_evals_per_update(3, 3, IS::backward_sampling), 20u);
  EXPECT_EQ(RwcsmcKernel::m_evals_per_update(3, 3, IS::ancestor_sampling), 20u);
  EXPECT_EQ(RwcsmcKernel::m_evals_per_update(7, 3, IS::ancestral_trace), 24u);
  EXPECT_EQ(RwcsmcKernel::m_evals_per_update(7, 3, IS::backward_sampling), 40u);
  EXPECT_EQ(RwcsmcKernel::m_evals_per_update(3, 1, IS::backward_sampling), 4u);
  EXPECT_EQ(RwcsmcKernel::g_evals_per_update(3, 3), 12u);
  EXPECT_EQ(RwcsmcKernel::g_evals_per_update(7, 3), 24u);

  const LgssmSpec spec = test::simulated_spec(3, 2, 14);
  const ProductModel m = make_lgssm_model(spec);
  Rng rng(15);
  for (const auto& v : kVariants) {
    RwcsmcKernel kern(m, config(3, v));
    Path x = ffbs_exact_sample(spec, rng);
    for (int i = 0; i < 5; ++i) kern.update(x, rng);
    EXPECT_EQ(kern.info().counter.m, 5 * RwcsmcKernel::m_evals_per_update(3, 3, v.idx));
    EXPECT_EQ(kern.info().counter.g, 5 * RwcsmcKernel::g_evals_per_update(3, 3));
  }
}

TEST(Rwcsmc, ChainTargetsSmoothingMoments) {
  const LgssmSpec spec = test::simulated_spec(3, 2, 16);
  for (const auto& v : kVariants) {
    const double z = test::chain_moment_z(spec, Algorithm::rwcsmc, config(2, v), 40000, 17);
    EXPECT_LT(z, 4.5) << to_string(v.sel) << " " << to_string(v.idx);
  }
}

TEST(Rwcsmc, DeterministicAndNeedsEll) {
  const LgssmSpec spec = test::simulated_spec(4, 2, 18);
  const ProductModel m = make_lgssm_model(spec);
  const KernelConfig cfg = config(5, kVariants[1], 0.5);
  Path x(4, 2);
  Rng r1(19), r2(19);
  const auto a = rwcsmc_update(m, x, cfg, r1), b = rwcsmc_update(m, x, cfg, r2);
  EXPECT_EQ(a.first.x, b.first.x);
  EXPECT_EQ(a.second.ancestors, b.second.ancestors);
  KernelConfig bad = cfg;
  bad.ell.clear();
  EXPECT_THROW(RwcsmcKernel(m, bad), ConfigError);
}
