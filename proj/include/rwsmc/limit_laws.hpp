#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "rwsmc/kernel.hpp"
#include "rwsmc/model.hpp"
#include "rwsmc/rng.hpp"

namespace rwsmc {

struct Estimate {
  double mean = 0.0;
  double se = 0.0;
};

// Per-t moments of the limiting genealogy laws, with g_t = log m_t + log G_t
// and g_{T+1} = 0:
//   v2 = E[(d_t g_t)^2], w2 = E[(d_t g_{t+1})^2], cross = E[d_t g_t d_t g_{t+1}],
//   mv = E[d_t^2 g_t], mw = E[d_t^2 g_{t+1}], I = E[(d_t g_t + d_t g_{t+1})^2],
//   curvature = -(mv + mw), which equals I by integration by parts.
struct LimitMoments {
  int T = 0;
  std::vector<double> ell;
  std::vector<Estimate> I, v2, w2, cross, mv, mw, curvature;
};

// Writes an exact draw of coordinate d of x_{1:T} into out[0..T-1].
using ExactSampler = std::function<void(int d, Rng& rng, double* out)>;

struct MomentOptions {
  std::int64_t draws = 100000;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: default_thread_count()
  bool allow_finite_differences = true;
};

// Draw i uses coordinate i mod D of the model, so a model with many
// coordinates averages the moments over their observations.
LimitMoments estimate_limit_moments(const ProductModel& model, const ExactSampler& sampler,
                                    const std::vector<double>& ell, const MomentOptions& opt);

// Moments of the Gaussian random-walk model averaged over observations drawn
// from the model, using `coords` simulated coordinates and Kalman FFBS draws.
LimitMoments gaussian_limit_moments(const LgssmSpec& base, const std::vector<double>& ell,
                                    int coords, const MomentOptions& opt);

struct LimitFlags {
  bool forced_move = false;
  bool backward_sampling = false;
  bool ehmm = false;  // RW-EHMM law: K_t ~ beta(v_t) independently over t
};

// (V_t, W_t) draws, (N+1) each with index 0 fixed at 0; t-major.
struct LimitDraws {
  int T = 0;
  int N = 0;
  std::vector<double> v, w;
  double vv(int t, int n) const { return v[static_cast<std::size_t>(t) * (N + 1) + n]; }
  double ww(int t, int n) const { return w[static_cast<std::size_t>(t) * (N + 1) + n]; }
};

LimitDraws draw_limit_increments(const LimitMoments& m, int N, const LimitFlags& f, Rng& rng);

// The limiting kernels given fixed draws. prev_anc is A_{t-1} (ignored at t = 0).
void limit_resampling_weights(const LimitDraws& d, int t, const std::vector<int>& prev_anc,
                              std::vector<double>& lw);
GenealogyRecord simulate_limit_genealogy(const LimitDraws& d, const LimitFlags& f, Rng& rng);
GenealogyRecord simulate_limit_genealogy(const LimitMoments& m, int N, const LimitFlags& f,
                                         Rng& rng);

struct RateOptions {
  std::int64_t replications = 100000;
  std::uint64_t seed = 1;
  int threads = 0;
};

// Per-t frequency of K_t != 0 under the limiting law, with standard errors.
std::vector<Estimate> limit_acceptance_rates(const LimitMoments& m, int N, const LimitFlags& f,
                                             const RateOptions& opt);

struct AnalyticBounds {
  double ehmm_bound = 0.0;   // (1 + e^{ell I}/N)^{-1}
  double bs_bound = 0.0;     // same expression, backward-sampling bound
  std::optional<double> no_bs_bound;  // exp(-e^{ell I}/C)
  double rwmh_rate = 0.0;    // 2 Phi(-sqrt(ell I)/2)
};

AnalyticBounds analytic_bounds(double ell, double I, int N, std::optional<double> C = {});
double normal_cdf(double x);

}  // namespace rwsmc
