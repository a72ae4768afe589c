#include "rwsmc/validate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>

#include <fmt/format.h>

#include "rwsmc/error.hpp"
#include "rwsmc/experiment.hpp"
#include "rwsmc/limit_laws.hpp"
#include "rwsmc/parallel.hpp"
#include "rwsmc/param.hpp"
#include "rwsmc/rwcsmc.hpp"
#include "rwsmc/rwehmm.hpp"
#include "rwsmc/selection.hpp"

namespace rwsmc {

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int threads_of(const ValidateOptions& o) { return o.threads > 0 ? o.threads : default_thread_count(); }

void note(const ValidateOptions& o, const std::string& s) {
  if (o.verbose) fmt::print(stderr, "  {}\n", s);
}

// Plain dense inverse by Gauss-Jordan with partial pivoting.
std::vector<double> invert(std::vector<double> a, int n) {
  std::vector<double> inv(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) inv[i * n + i] = 1.0;
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(a[r * n + c]) > std::abs(a[piv * n + c])) piv = r;
    for (int k = 0; k < n; ++k) {
      std::swap(a[c * n + k], a[piv * n + k]);
      std::swap(inv[c * n + k], inv[piv * n + k]);
    }
    const double d = a[c * n + c];
    for (int k = 0; k < n; ++k) {
      a[c * n + k] /= d;
      inv[c * n + k] /= d;
    }
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r * n + c];
      if (f == 0.0) continue;
      for (int k = 0; k < n; ++k) {
        a[r * n + k] -= f * a[c * n + k];
        inv[r * n + k] -= f * inv[c * n + k];
      }
    }
  }
  return inv;
}

// Posterior covariance of the zero-observation random walk with x_1 ~ N(0, v0),
// unit increments and unit observation noise, from its precision matrix.
std::vector<double> steady_covariance_dense(int T) {
  const double v0 = steady_filter_variance() + 1.0;
  std::vector<double> P(static_cast<std::size_t>(T) * T, 0.0);
  P[0] += 1.0 / v0;
  for (int t = 1; t < T; ++t) {
    P[(t - 1) * T + (t - 1)] += 1.0;
    P[t * T + t] += 1.0;
    P[(t - 1) * T + t] -= 1.0;
    P[t * T + (t - 1)] -= 1.0;
  }
  for (int t = 0; t < T; ++t) P[t * T + t] += 1.0;
  return invert(P, T);
}

// r_{T|T} = E log G_T(X_T) - E log M_T(G_T)(X_{T-1}) for the model above.
double steady_r_numeric(int T) {
  const auto C = steady_covariance_dense(T);
  const double vT = C[(T - 1) * T + (T - 1)];
  if (T == 1) return 0.5 * std::log(steady_filter_variance() + 2.0) - 0.5 * vT;
  const double vprev = C[(T - 2) * T + (T - 2)];
  return 0.5 * std::numbers::ln2 - 0.5 * vT + 0.25 * vprev;
}

LgssmSpec simulated_spec(int T, int D, std::uint64_t seed, const char* tag) {
  LgssmSpec s = preset_spec("gauss-rw", T, D);
  Rng r = Rng::substream(seed, tag);
  s.y = simulate_observations(s, r);
  return s;
}

ParticleCloud random_cloud(const LgssmSpec& spec, int N, Rng& rng) {
  Path p(spec.T, spec.D);
  for (auto& v : p.x) v = rng.normal();
  return scatter_cloud(p, {1.0}, N, rng);
}

KernelConfig kcfg(int N, SelectionVariant s, IndexSelection i, double ell = 1.0) {
  KernelConfig k;
  k.N = N;
  k.selection = s;
  k.index_selection = i;
  k.ell = {ell};
  return k;
}

// xi P for the index kernel of a fixed cloud.
double invariance_error(const ParticleCloud& cloud, const ProductModel& model,
                        const KernelConfig& cfg) {
  const DiscreteTarget tg = build_discrete_target(cloud, model);
  const auto xi = brute_force_xi(tg);
  std::vector<double> xp(xi.size(), 0.0);
  for (std::size_t j = 0; j < xi.size(); ++j) {
    const auto row = index_transition_matrix(cloud, model, cfg, unflatten_index(j, cloud.T, cloud.N));
    for (std::size_t k = 0; k < xi.size(); ++k) xp[k] += xi[j] * row[k];
  }
  double e = 0.0;
  for (std::size_t k = 0; k < xi.size(); ++k) e = std::max(e, std::abs(xp[k] - xi[k]));
  return e;
}

struct HeavyRuns {
  std::optional<std::vector<std::vector<SummaryRow>>> icsmc[2];  // [bs][D index] over {2,16,256}
  std::optional<std::vector<std::vector<SummaryRow>>> rwcsmc;    // over {64,256}
  std::optional<LimitMoments> moments;
  std::optional<std::vector<Estimate>> limit_rate;
};

std::mutex heavy_mu;
std::map<std::pair<std::uint64_t, int>, std::shared_ptr<HeavyRuns>> heavy_cache;

std::shared_ptr<HeavyRuns> heavy_for(const ValidateOptions& o) {
  std::lock_guard lock(heavy_mu);
  auto& h = heavy_cache[{o.seed, threads_of(o)}];
  if (!h) h = std::make_shared<HeavyRuns>();
  return h;
}

constexpr int kT = 25, kN = 31, kR = 20, kL = 2000;

std::vector<std::vector<SummaryRow>> study(Algorithm a, IndexSelection idx, std::vector<int> Ds,
                                           const ValidateOptions& o) {
  ExperimentConfig c;
  c.algorithm = a;
  c.selection = SelectionVariant::boltzmann;
  c.index_selection = idx;
  c.T = kT;
  c.D = std::move(Ds);
  c.N = kN;
  c.ell = {1.0};
  c.iterations = kL;
  c.replicates = kR;
  c.seed = o.seed;
  c.threads = threads_of(o);
  std::vector<std::vector<SummaryRow>> out;
  for (const auto& agg : run_study_aggregates(c)) out.push_back(agg.finalize());
  return out;
}

const std::vector<std::vector<SummaryRow>>& icsmc_runs(HeavyRuns& h, bool bs,
                                                       const ValidateOptions& o) {
  if (!h.icsmc[bs]) {
    note(o, fmt::format("i-CSMC study, backward sampling {}", bs ? "on" : "off"));
    h.icsmc[bs] = study(Algorithm::icsmc,
                        bs ? IndexSelection::backward_sampling : IndexSelection::ancestral_trace,
                        {2, 16, 256}, o);
  }
  return *h.icsmc[bs];
}

const std::vector<std::vector<SummaryRow>>& rwcsmc_runs(HeavyRuns& h, const ValidateOptions& o) {
  if (!h.rwcsmc) {
    note(o, "i-RW-CSMC study");
    h.rwcsmc = study(Algorithm::rwcsmc, IndexSelection::backward_sampling, {64, 256}, o);
  }
  return *h.rwcsmc;
}

const LimitMoments& limit_moments(HeavyRuns& h, const ValidateOptions& o) {
  if (!h.moments) {
    note(o, "limit moments");
    MomentOptions mo;
    mo.draws = 400000;
    mo.seed = stream_key(o.seed, "limit-moments", {});
    mo.threads = threads_of(o);
    h.moments = gaussian_limit_moments(preset_spec("gauss-rw", kT, 1), {1.0}, 2000, mo);
  }
  return *h.moments;
}

const std::vector<Estimate>& limit_rate(HeavyRuns& h, const ValidateOptions& o) {
  if (!h.limit_rate) {
    const LimitMoments& m = limit_moments(h, o);
    note(o, "limit acceptance rates");
    RateOptions ro;
    ro.replications = 200000;
    ro.seed = stream_key(o.seed, "limit-rates", {});
    ro.threads = threads_of(o);
    LimitFlags f;
    f.backward_sampling = true;
    h.limit_rate = limit_acceptance_rates(m, kN, f, ro);
  }
  return *h.limit_rate;
}

double mean_over_t(const std::vector<SummaryRow>& rows, std::optional<double> SummaryRow::*field) {
  double s = 0.0;
  int n = 0;
  for (const auto& r : rows)
    if (r.*field) {
      s += *(r.*field);
      ++n;
    }
  return n > 0 ? s / n : NAN;
}

// ---------------------------------------------------------------------------

CheckResult check1(const ValidateOptions& o) {
  const auto t0 = Clock::now();
  Rng rng = Rng::substream(o.seed, "c1");
  double norm_err = 0.0, red_err = 0.0;
  int violations = 0, n1 = 0;
  std::vector<double> lw(9), pb(9), pr(9), sc(9);
  for (int i = 0; i < 10000; ++i) {
    const int N = 1 + static_cast<int>(rng.bits() % 8);
    lw.resize(N + 1);
    pb.resize(N + 1);
    pr.resize(N + 1);
    sc.resize(N);
    for (auto& v : lw) v = -700.0 + 750.0 * rng.uniform();
    boltzmann_full(lw, pb, sc);
    rosenbluth_teller_full(lw, pr, sc);
    double sb = 0.0, sr = 0.0;
    for (int n = 0; n <= N; ++n) {
      sb += pb[n];
      sr += pr[n];
      if (pb[n] < 0 || pr[n] < 0) norm_err = std::max(norm_err, 1.0);
    }
    norm_err = std::max({norm_err, std::abs(sb - 1.0), std::abs(sr - 1.0)});
    violations += pb[0] < pr[0];
    if (N == 1) {
      ++n1;
      const double h = lw[1] - lw[0];
      const double barker = h > 0 ? 1.0 / (1.0 + std::exp(-h)) : std::exp(h) / (1.0 + std::exp(h));
      const double mh = h >= 0 ? 1.0 : std::exp(h);
      red_err = std::max({red_err, std::abs(pb[1] - barker), std::abs(pr[1] - mh),
                          std::abs(pb[0] - (1.0 - barker)), std::abs(pr[0] - (1.0 - mh))});
    }
  }
  CheckResult r;
  r.id = 1;
  r.description = "selection functions: normalisation, Peskun order, N=1 reductions";
  r.seconds = since(t0);
  r.measured = fmt::format("norm err {:.2e}, Peskun violations {}, N=1 err {:.2e} ({} cases), {:.2f}s",
                           norm_err, violations, red_err, n1, r.seconds);
  r.expected = "norm err <= 1e-12, 0 violations, N=1 err <= 1e-12, < 1 s";
  r.pass = norm_err <= 1e-12 && violations == 0 && red_err <= 1e-12 && n1 > 0 && r.seconds < 1.0;
  return r;
}

CheckResult check2(const ValidateOptions& o) {
  const auto t0 = Clock::now();
  const LgssmSpec spec = simulated_spec(3, 1, o.seed, "c2-obs");
  const ProductModel model = make_lgssm_model(spec);
  Rng rng = Rng::substream(o.seed, "c2");
  double err = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const ParticleCloud cloud = random_cloud(spec, 2, rng);
    const DiscreteTarget tg = build_discrete_target(cloud, model);
    const auto a = ffbs_index_distribution(tg), b = brute_force_xi(tg);
    for (std::size_t k = 0; k < a.size(); ++k) err = std::max(err, std::abs(a[k] - b[k]));
  }
  CheckResult r;
  r.id = 2;
  r.description = "FFBS law equals brute-force xi (N=2, T=3, D=1, 27 index vectors)";
  r.seconds = since(t0);
  r.measured = fmt::format("max cell deviation {:.2e} over 10 clouds, {:.3f}s", err, r.seconds);
  r.expected = "<= 1e-12, < 1 s";
  r.pass = err <= 1e-12 && r.seconds < 1.0;
  return r;
}

CheckResult check3(const ValidateOptions& o) {
  const auto t0 = Clock::now();
  const std::pair<int, int> cases[] = {{1, 2}, {2, 2}, {1, 3}};
  struct V {
    SelectionVariant s;
    IndexSelection i;
  };
  const V variants[] = {{SelectionVariant::boltzmann, IndexSelection::ancestral_trace},
                        {SelectionVariant::boltzmann, IndexSelection::backward_sampling},
                        {SelectionVariant::forced_move, IndexSelection::ancestral_trace},
                        {SelectionVariant::forced_move, IndexSelection::backward_sampling},
                        {SelectionVariant::boltzmann, IndexSelection::ancestor_sampling},
                        {SelectionVariant::forced_move, IndexSelection::ancestor_sampling}};
  double err = 0.0;
  int count = 0;
  for (const auto& [N, T] : cases) {
    const std::uint64_t nt = static_cast<std::uint64_t>(N) * 16 + T;
    const LgssmSpec spec = simulated_spec(T, 2, stream_key(o.seed, "c3-obs", {nt}), "obs");
    const ProductModel model = make_lgssm_model(spec);
    Rng rng = Rng::substream(o.seed, "c3", {nt});
    for (int rep = 0; rep < 20; ++rep) {
      const ParticleCloud cloud = random_cloud(spec, N, rng);
      for (const auto& v : variants) {
        err = std::max(err, invariance_error(cloud, model, kcfg(N, v.s, v.i)));
        ++count;
      }
    }
  }
  CheckResult r;
  r.id = 3;
  r.description = "xi-invariance of the i-RW-CSMC index kernel";
  r.seconds = since(t0);
  r.measured = fmt::format("max |xi P - xi| {:.2e} over {} (cloud, variant) pairs, {:.2f}s", err,
                           count, r.seconds);
  r.expected = "< 1e-10, < 10 s";
  r.pass = err < 1e-10 && r.seconds < 10.0;
  return r;
}

CheckResult check4(const ValidateOptions& o) {
  const auto t0 = Clock::now();
  LgssmSpec spec;
  spec.T = 2;
  spec.D = 1;
  spec.a = 0.0;
  spec.q = 1.0;
  spec.r = 1.0;
  spec.initial_variance = 1.0;
  Rng rng = Rng::substream(o.seed, "c4");
  spec.y = {rng.normal(), rng.normal()};
  const ProductModel model = make_lgssm_model(spec);
  const int N = 2;
  const ParticleCloud cloud = random_cloud(spec, N, rng);
  const auto xi = brute_force_xi(build_discrete_target(cloud, model));
  const KernelConfig cfg = kcfg(N, SelectionVariant::boltzmann, IndexSelection::backward_sampling);
  double err = 0.0;
  for (std::size_t j = 0; j < xi.size(); ++j) {
    const auto row = index_transition_matrix(cloud, model, cfg, unflatten_index(j, spec.T, N));
    for (std::size_t k = 0; k < xi.size(); ++k) err = std::max(err, std::abs(row[k] - xi[k]));
  }
  CheckResult r;
  r.id = 4;
  r.description = "time-factorised model: i-RW-CSMC with backward sampling draws K ~ xi";
  r.seconds = since(t0);
  r.measured = fmt::format("max |P(j, .) - xi| {:.2e} over all {} reference positions", err, xi.size());
  r.expected = "<= 1e-12";
  r.pass = err <= 1e-12;
  return r;
}

CheckResult check5(const ValidateOptions& o) {
  (void)o;
  const auto t0 = Clock::now();
  const double r1 = lgssm_assumption_quantities(1).r_T;
  double rT_dev = 0.0, num_dev = std::abs(r1 - steady_r_numeric(1)), rT_min = INFINITY;
  bool flags = lgssm_assumption_quantities(1).bound_ok;
  for (int T = 2; T <= 12; ++T) {
    const auto q = lgssm_assumption_quantities(T);
    rT_dev = std::max(rT_dev, std::abs(q.r_T - 0.155590));
    num_dev = std::max(num_dev, std::abs(q.r_T - steady_r_numeric(T)));
    rT_min = std::min(rT_min, q.r_T);
    flags = flags && q.bound_ok;
  }
  const int T = 5;
  const LgssmSpec spec = preset_spec("gauss-rw-steady", T, 1);
  const KalmanResult k = kalman_smooth(spec);
  const auto C = smoother_covariance_matrix(spec, k, 0);
  const double s2 = steady_filter_variance(), u = s2 / (s2 + 1.0);
  double c_err = 0.0;
  for (int s = 1; s <= T; ++s)
    for (int t = 1; t <= T; ++t) {
      const int m = std::max(s, t);
      const double sig = (m < T ? u * (1.0 - std::pow(u * u, T - m)) / (1.0 - u * u) : 0.0) +
                         std::pow(u * u, T - m) * s2;
      c_err = std::max(c_err, std::abs(C[(s - 1) * T + (t - 1)] - std::pow(u, std::abs(t - s)) * sig));
    }
  CheckResult r;
  r.id = 5;
  r.description = "linear-Gaussian assumption quantities and smoother covariance";
  r.seconds = since(t0);
  r.measured = fmt::format(
      "r_1|1 {:.6f}, r_T|T {:.6f} (max dev {:.1e}), vs numeric {:.1e}, min {:.6f}, C err {:.1e}", r1,
      lgssm_assumption_quantities(2).r_T, rT_dev, num_dev, std::min(r1, rT_min), c_err);
  r.expected = "0.172195 / 0.155590 within 1e-6, > 0.15, C err <= 1e-10";
  r.pass = std::abs(r1 - 0.172195) < 1e-6 && rT_dev < 1e-6 && num_dev < 1e-6 && r1 > 0.15 &&
           rT_min > 0.15 && flags && c_err <= 1e-10;
  return r;
}

CheckResult check6(const ValidateOptions& o) {
  const auto t0 = Clock::now();
  const int T = 5, D = 2, N = 3, L = 100000;
  const LgssmSpec spec = simulated_spec(T, D, o.seed, "c6-obs");
  const KalmanResult kal = kalman_smooth(spec);
  const ProductModel model = make_lgssm_model(spec);
  struct K {
    Algorithm a;
    SelectionVariant s;
    IndexSelection i;
  };
  std::vector<K> ks;
  for (Algorithm a : {Algorithm::icsmc, Algorithm::rwcsmc})
    for (SelectionVariant s : {SelectionVariant::boltzmann, SelectionVariant::forced_move})
      for (IndexSelection i : {IndexSelection::ancestral_trace, IndexSelection::backward_sampling,
                               IndexSelection::ancestor_sampling})
        ks.push_back({a, s, i});
  ks.push_back({Algorithm::rwehmm, SelectionVariant::boltzmann, IndexSelection::ancestral_trace});
  std::vector<double> worst(ks.size(), 0.0);
  parallel_for(ks.size(), threads_of(o), [&](std::size_t q) {
    auto kern = make_kernel(ks[q].a, model, kcfg(N, ks[q].s, ks[q].i));
    Rng rng = Rng::substream(o.seed, "c6", {q});
    Path path = ffbs_exact_sample(spec, kal, rng);
    std::vector<std::vector<double>> xs(T * D, std::vector<double>(L));
    for (int l = 0; l < L; ++l) {
      kern->update(path, rng);
      for (int c = 0; c < T * D; ++c) xs[c][l] = path.x[c];
    }
    double w = 0.0;
    for (int c = 0; c < T * D; ++c) {
      const double mu = kal.smoother_means[c], var = kal.smoother_variances[c];
      const BatchMean bm = batch_means(xs[c]);
      std::vector<double> sq(L);
      for (int l = 0; l < L; ++l) sq[l] = (xs[c][l] - mu) * (xs[c][l] - mu);
      const BatchMean bv = batch_means(sq);
      w = std::max({w, std::abs(bm.mean - mu) / bm.se, std::abs(bv.mean - var) / bv.se});
    }
    worst[q] = w;
  });
  std::size_t arg = std::max_element(worst.begin(), worst.end()) - worst.begin();
  CheckResult r;
  r.id = 6;
  r.description = "stationary runs match Kalman smoother means and variances (T=5, D=2)";
  r.seconds = since(t0);
  r.measured = fmt::format("max |z| {:.2f} ({} {}+{}) over {} kernels, {:.1f}s", worst[arg],
                           to_string(ks[arg].a), to_string(ks[arg].s), to_string(ks[arg].i),
                           ks.size(), r.seconds);
  r.expected = "|z| <= 4 for every (t, d), mean and variance; < 120 s";
  r.pass = worst[arg] <= 4.0 && r.seconds < 120.0;
  return r;
}

CheckResult check7(const ValidateOptions& o) {
  const auto t0 = Clock::now();
  const int D = 1000, L = 100000;
  const LgssmSpec spec = simulated_spec(1, D, o.seed, "c7-obs");
  const KalmanResult kal = kalman_smooth(spec);
  const ProductModel model = make_lgssm_model(spec);
  double rate[2] = {0, 0};
  parallel_for(2, threads_of(o), [&](std::size_t q) {
    const auto sel = q == 0 ? SelectionVariant::forced_move : SelectionVariant::boltzmann;
    auto kern = make_kernel(Algorithm::rwcsmc, model, kcfg(1, sel, IndexSelection::ancestral_trace));
    Rng rng = Rng::substream(o.seed, "c7", {q});
    Path path = ffbs_exact_sample(spec, kal, rng);
    std::int64_t acc = 0;
    for (int l = 0; l < L; ++l) {
      kern->update(path, rng);
      acc += kern->info().genealogy.selected[0] != 0;
    }
    rate[q] = static_cast<double>(acc) / L;
  });
  // T = 1 target per coordinate is N(y/2, 1/2): I = 2.
  LimitMoments m;
  m.T = 1;
  m.ell = {1.0};
  const std::vector<Estimate> two{Estimate{2.0, 0.0}}, zero{Estimate{0.0, 0.0}};
  m.I = m.v2 = m.curvature = two;
  m.mv = {Estimate{-2.0, 0.0}};
  m.w2 = m.cross = m.mw = zero;
  RateOptions ro;
  ro.replications = 1000000;
  ro.seed = stream_key(o.seed, "c7-limit", {});
  ro.threads = threads_of(o);
  const Estimate barker_limit = limit_acceptance_rates(m, 1, LimitFlags{}, ro)[0];
  const double mh = 2.0 * normal_cdf(-std::sqrt(2.0) / 2.0);
  CheckResult r;
  r.id = 7;
  r.description = "T=N=1 at D=1000: MH and Barker acceptance";
  r.seconds = since(t0);
  r.measured = fmt::format("forced move {:.4f} (target {:.4f}), Barker {:.4f} (limit {:.4f}), {:.1f}s",
                           rate[0], mh, rate[1], barker_limit.mean, r.seconds);
  r.expected = "both within 0.03, < 60 s";
  r.pass = std::abs(rate[0] - mh) <= 0.03 && std::abs(rate[1] - barker_limit.mean) <= 0.03 &&
           r.seconds < 60.0;
  return r;
}

CheckResult check8(const ValidateOptions& o) {
  const auto t0 = Clock::now();
  auto h = heavy_for(o);
  bool monotone = true, small = true;
  double max256 = 0.0;
  int bad_t = 0;
  for (int bs = 0; bs < 2; ++bs) {
    const auto& runs = icsmc_runs(*h, bs, o);
    for (int t = 0; t < kT; ++t) {
      const double a2 = *runs[0][t].accept_rate, a16 = *runs[1][t].accept_rate,
                   a256 = *runs[2][t].accept_rate;
      // Non-increasing in D; rates at D=16 and D=256 can both be exactly 0 at small t.
      if (!(a2 >= a16 && a16 >= a256 && a2 > a256)) {
        monotone = false;
        bad_t = t + 1;
      }
      max256 = std::max(max256, a256);
      small = small && a256 < 0.02;
    }
  }
  const auto& r0 = (*h->icsmc[0]);
  const auto& r1 = (*h->icsmc[1]);
  CheckResult r;
  r.id = 8;
  r.description = "i-CSMC acceptance decays with D (N+1=32, T=25, R=20, L=2000)";
  r.seconds = since(t0);
  r.measured = fmt::format(
      "mean accept D=2/16/256: trace {:.3f}/{:.3f}/{:.4f}, bs {:.3f}/{:.3f}/{:.4f}; max at 256 "
      "{:.4f}; monotone {}{}, {:.0f}s",
      mean_over_t(r0[0], &SummaryRow::accept_rate), mean_over_t(r0[1], &SummaryRow::accept_rate),
      mean_over_t(r0[2], &SummaryRow::accept_rate), mean_over_t(r1[0], &SummaryRow::accept_rate),
      mean_over_t(r1[1], &SummaryRow::accept_rate), mean_over_t(r1[2], &SummaryRow::accept_rate),
      max256, monotone ? "yes" : "no", monotone ? "" : fmt::format(" (fails at t={})", bad_t),
      r.seconds);
  r.expected = "non-increasing in D and D=2 > D=256 at every t, < 0.02 at D=256, < 15 min";
  r.pass = monotone && small && r.seconds < 900.0;
  return r;
}

CheckResult check9(const ValidateOptions& o) {
  const auto t0 = Clock::now();
  auto h = heavy_for(o);
  const auto& runs = rwcsmc_runs(*h, o);
  const auto& lim = limit_rate(*h, o);
  const LimitMoments& m = limit_moments(*h, o);
  double max_dev = 0.0, min_margin = INFINITY;
  int dev_t = 0, margin_t = 0;
  for (int t = 0; t < kT; ++t) {
    const double a = *runs[1][t].accept_rate;
    const double d = std::abs(a - lim[t].mean);
    if (d > max_dev) max_dev = d, dev_t = t + 1;
    const double bound = analytic_bounds(1.0, m.I[t].mean, kN).bs_bound - 0.03;
    if (a - bound < min_margin) min_margin = a - bound, margin_t = t + 1;
  }
  CheckResult r;
  r.id = 9;
  r.description = "i-RW-CSMC with backward sampling at D=256 matches the limit law";
  r.seconds = since(t0);
  r.measured = fmt::format(
      "max |accept - limit| {:.4f} (t={}), min margin over bound-0.03 {:.4f} (t={}), mean accept "
      "{:.4f}, {:.0f}s",
      max_dev, dev_t, min_margin, margin_t, mean_over_t(runs[1], &SummaryRow::accept_rate),
      r.seconds);
  r.expected = "<= 0.05 at every t; accept >= (1+e^{ell I_t}/31)^-1 - 0.03; < 15 min";
  r.pass = max_dev <= 0.05 && min_margin >= 0.0 && r.seconds < 900.0;
  return r;
}

CheckResult check10(const ValidateOptions& o) {
  const auto t0 = Clock::now();
  auto h = heavy_for(o);
  const auto& runs = rwcsmc_runs(*h, o);
  const auto& lim = limit_rate(*h, o);
  double e_meas = 0.0, e_lim = 0.0;
  for (int t = 0; t < kT; ++t) {
    const double esjd = *runs[1][t].esjd, a = *runs[1][t].accept_rate;
    e_meas = std::max(e_meas, std::abs(esjd - a) / a);
    e_lim = std::max(e_lim, std::abs(esjd - lim[t].mean) / lim[t].mean);
  }
  CheckResult r;
  r.id = 10;
  r.description = "ESJD approaches ell * acceptance at D=256";
  r.seconds = since(t0);
  r.measured = fmt::format("max rel err vs measured rate {:.4f}, vs limit rate {:.4f}", e_meas, e_lim);
  r.expected = "< 0.10 for both";
  r.pass = e_meas < 0.10 && e_lim < 0.10;
  return r;
}

CheckResult check11(const ValidateOptions& o) {
  const auto t0 = Clock::now();
  auto h = heavy_for(o);
  double icsmc_max = 0.0;
  for (int bs = 0; bs < 2; ++bs) {
    const auto& runs = icsmc_runs(*h, bs, o);
    icsmc_max = std::max(icsmc_max, mean_over_t(runs[2], &SummaryRow::ess_resample));
    if (bs) icsmc_max = std::max(icsmc_max, mean_over_t(runs[2], &SummaryRow::ess_backward));
  }
  const auto& rw = rwcsmc_runs(*h, o);
  const double res64 = mean_over_t(rw[0], &SummaryRow::ess_resample),
               res256 = mean_over_t(rw[1], &SummaryRow::ess_resample),
               bw64 = mean_over_t(rw[0], &SummaryRow::ess_backward),
               bw256 = mean_over_t(rw[1], &SummaryRow::ess_backward);
  const double drift = std::max(std::abs(res256 - res64) / res64, std::abs(bw256 - bw64) / bw64);
  CheckResult r;
  r.id = 11;
  r.description = "ESS collapses for i-CSMC and stays stable for i-RW-CSMC";
  r.seconds = since(t0);
  r.measured = fmt::format(
      "i-CSMC ESS at 256 max {:.4f}; i-RW-CSMC resample {:.3f}->{:.3f}, backward {:.3f}->{:.3f} "
      "(D=64->256), drift {:.3f}",
      icsmc_max, res64, res256, bw64, bw256, drift);
  r.expected = "i-CSMC < 1.1; i-RW-CSMC > 1.5 with drift < 0.10";
  r.pass = icsmc_max < 1.1 && std::min(res256, bw256) > 1.5 && drift < 0.10;
  return r;
}

CheckResult check12(const ValidateOptions& o) {
  const auto t0 = Clock::now();
  LgssmSpec base = preset_spec("gauss-rw", 3, 1);
  {
    Rng obs = Rng::substream(o.seed, "c12-obs");
    base.y = simulate_observations(base, obs);
  }
  const ObsScaleModel tm(base, 0.0, 0.5, 0.5);
  const ThetaPosteriorGrid grid = obs_scale_posterior_grid(tm);
  const ParamSampler samplers[] = {ParamSampler::pg, ParamSampler::ehmm_alt, ParamSampler::rwcsmc_alt};
  const std::int64_t sweeps = 200000;
  struct Out {
    double mean = 0, se = 0, ks = 0, seconds = 0;
  };
  std::vector<Out> out(3);
  parallel_for(3, threads_of(o), [&](std::size_t q) {
    const auto ts = Clock::now();
    Rng rng = Rng::substream(o.seed, "c12", {q});
    ParamConfig cfg;
    cfg.sampler = samplers[q];
    cfg.path_kernel = Algorithm::rwcsmc;
    cfg.kernel = kcfg(7, SelectionVariant::boltzmann, IndexSelection::backward_sampling);
    ParamState st;
    st.theta = {grid.sample(rng)};
    st.path = ffbs_exact_sample(tm.spec_at(st.theta[0]), rng);
    const auto trace = run_param_chain(tm, st, cfg, sweeps, rng);
    std::vector<double> th(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) th[i] = trace[i].theta[0];
    const BatchMean bm = batch_means(th);
    out[q] = {bm.mean, bm.se, ks_distance(th, [&](double x) { return grid.cdf_at(x); }), since(ts)};
  });
  bool pass = true;
  std::string meas;
  for (int q = 0; q < 3; ++q) {
    const double z = std::abs(out[q].mean - grid.mean) / out[q].se;
    pass = pass && z <= 3.0 && out[q].ks < 0.02 && out[q].seconds < 300.0;
    meas += fmt::format("{}{}: mean {:.4f} (z {:.2f}), KS {:.4f}, {:.0f}s", q ? "; " : "",
                        to_string(samplers[q]), out[q].mean, z, out[q].ks, out[q].seconds);
  }
  CheckResult r;
  r.id = 12;
  r.description = "parameter samplers reproduce the quadrature posterior (T=3, D=1)";
  r.seconds = since(t0);
  r.measured = fmt::format("posterior mean {:.4f}; {}", grid.mean, meas);
  r.expected = "|z| <= 3, KS < 0.02, < 5 min each";
  r.pass = pass;
  return r;
}

const std::map<std::string, std::vector<int>>& suites() {
  static const std::map<std::string, std::vector<int>> s = {
      {"selection", {1}},       {"ffbs", {2}},   {"invariance", {3, 4, 6}},
      {"bounds", {5}},          {"limits", {7, 8, 9, 10, 11}},
      {"params", {12}},         {"all", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}}};
  return s;
}

}  // namespace

CheckResult run_check(int id, const ValidateOptions& opt) {
  switch (id) {
    case 1: return check1(opt);
    case 2: return check2(opt);
    case 3: return check3(opt);
    case 4: return check4(opt);
    case 5: return check5(opt);
    case 6: return check6(opt);
    case 7: return check7(opt);
    case 8: return check8(opt);
    case 9: return check9(opt);
    case 10: return check10(opt);
    case 11: return check11(opt);
    case 12: return check12(opt);
    default: throw ConfigError(fmt::format("no check with id {}", id));
  }
}

std::vector<std::string> suite_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : suites()) out.push_back(k);
  return out;
}

std::vector<CheckResult> run_suite(const std::string& suite, const ValidateOptions& opt) {
  const auto it = suites().find(suite);
  if (it == suites().end()) throw ConfigError("unknown suite: " + suite);
  std::vector<CheckResult> out;
  for (int id : it->second) {
    if (opt.verbose) fmt::print(stderr, "criterion {}\n", id);
    out.push_back(run_check(id, opt));
  }
  return out;
}

std::string format_report(const std::vector<CheckResult>& results) {
  std::string s;
  for (const auto& r : results)
    s += fmt::format("[{}] {:>2}  {}\n      measured: {}\n      expected: {}\n",
                     r.pass ? "PASS" : "FAIL", r.id, r.description, r.measured, r.expected);
  return s;
}

}  // namespace rwsmc
