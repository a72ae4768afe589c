#include "rwsmc/limit_laws.hpp"

#include <cmath>
#include <numbers>

#include "rwsmc/error.hpp"
#include "rwsmc/parallel.hpp"
#include "rwsmc/selection.hpp"

namespace rwsmc {

namespace {

constexpr std::int64_t kBlock = 2048;

enum Q { qI, qV2, qW2, qCross, qMv, qMw, qCurv, qCount };

double fd1(const std::function<double(double)>& f, double x) {
  const double h = 1e-4 * (1.0 + std::abs(x));
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

double fd2(const std::function<double(double)>& f, double x) {
  const double h = 1e-4 * (1.0 + std::abs(x));
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

// First and second derivatives of g_t and g_{t+1} w.r.t. x_t for coordinate d.
struct Partials {
  double dv, dw, d2v, d2w;
};

Partials partials(const UnivariateComponents& c, bool analytic, int T, int t, int d,
                  const double* x) {
  Partials p{};
  const double xt = x[t];
  if (analytic) {
    if (t == 0) {
      p.dv = c.d1_log_m1(d, xt);
      p.d2v = c.d2_log_m1(d, xt);
    } else {
      p.dv = c.d1_log_m(t, d, x[t - 1], xt, 1);
      p.d2v = c.d2_log_m(t, d, x[t - 1], xt, 1);
    }
    p.dv += c.d1_log_g(t, d, xt);
    p.d2v += c.d2_log_g(t, d, xt);
    if (t + 1 < T) {
      p.dw = c.d1_log_m(t + 1, d, xt, x[t + 1], 0);
      p.d2w = c.d2_log_m(t + 1, d, xt, x[t + 1], 0);
    }
    return p;
  }
  std::function<double(double)> gv = [&](double u) {
    return (t == 0 ? c.log_m1(d, u) : c.log_m(t, d, x[t - 1], u)) + c.log_g(t, d, u);
  };
  p.dv = fd1(gv, xt);
  p.d2v = fd2(gv, xt);
  if (t + 1 < T) {
    std::function<double(double)> gw = [&](double u) { return c.log_m(t + 1, d, u, x[t + 1]); };
    p.dw = fd1(gw, xt);
    p.d2w = fd2(gw, xt);
  }
  return p;
}

Estimate finish(double s, double s2, std::int64_t n) {
  Estimate e;
  e.mean = s / n;
  const double var = n > 1 ? std::max(0.0, (s2 - n * e.mean * e.mean) / (n - 1)) : 0.0;
  e.se = std::sqrt(var / n);
  return e;
}

}  // namespace

LimitMoments estimate_limit_moments(const ProductModel& model, const ExactSampler& sampler,
                                    const std::vector<double>& ell, const MomentOptions& opt) {
  const auto& c = model.components();
  const bool analytic = c.has_derivatives();
  if (!analytic && !opt.allow_finite_differences)
    throw CapabilityError("model lacks derivatives and finite differences are disabled");
  if (opt.draws < 2) throw ConfigError("need at least two draws");
  const int T = model.T(), D = model.D();
  if (ell.size() != 1 && ell.size() != static_cast<std::size_t>(T))
    throw ConfigError("ell must have 1 or T entries");

  const std::int64_t blocks = (opt.draws + kBlock - 1) / kBlock;
  // Per block: T x qCount sums and sums of squares.
  std::vector<std::vector<double>> acc(blocks);
  parallel_for(blocks, opt.threads > 0 ? opt.threads : default_thread_count(), [&](std::size_t b) {
    Rng rng = Rng::substream(opt.seed, "moments", {b});
    std::vector<double> a(static_cast<std::size_t>(T) * qCount * 2, 0.0), x(T);
    const std::int64_t lo = b * kBlock, hi = std::min<std::int64_t>(opt.draws, lo + kBlock);
    for (std::int64_t i = lo; i < hi; ++i) {
      const int d = static_cast<int>(i % D);
      sampler(d, rng, x.data());
      for (int t = 0; t < T; ++t) {
        const Partials p = partials(c, analytic, T, t, d, x.data());
        const double vals[qCount] = {(p.dv + p.dw) * (p.dv + p.dw), p.dv * p.dv, p.dw * p.dw,
                                     p.dv * p.dw, p.d2v, p.d2w, -(p.d2v + p.d2w)};
        for (int q = 0; q < qCount; ++q) {
          a[(static_cast<std::size_t>(t) * qCount + q) * 2] += vals[q];
          a[(static_cast<std::size_t>(t) * qCount + q) * 2 + 1] += vals[q] * vals[q];
        }
      }
    }
    acc[b] = std::move(a);
  });

  LimitMoments m;
  m.T = T;
  for (int t = 0; t < T; ++t) m.ell.push_back(ell.size() == 1 ? ell[0] : ell[t]);
  std::vector<Estimate>* out[qCount] = {&m.I, &m.v2, &m.w2, &m.cross, &m.mv, &m.mw, &m.curvature};
  for (int t = 0; t < T; ++t)
    for (int q = 0; q < qCount; ++q) {
      double s = 0.0, s2 = 0.0;
      for (const auto& a : acc) {
        s += a[(static_cast<std::size_t>(t) * qCount + q) * 2];
        s2 += a[(static_cast<std::size_t>(t) * qCount + q) * 2 + 1];
      }
      out[q]->push_back(finish(s, s2, opt.draws));
    }
  return m;
}

LimitMoments gaussian_limit_moments(const LgssmSpec& base, const std::vector<double>& ell,
                                    int coords, const MomentOptions& opt) {
  if (coords < 1) throw ConfigError("need at least one coordinate");
  LgssmSpec spec = base;
  spec.D = coords;
  spec.y.assign(static_cast<std::size_t>(spec.T) * coords, 0.0);
  Rng obs = Rng::substream(opt.seed, "moment-obs");
  spec.y = simulate_observations(spec, obs);
  const KalmanResult k = kalman_smooth(spec);
  const ProductModel model = make_lgssm_model(spec);
  ExactSampler sampler = [&](int d, Rng& rng, double* out) {
    ffbs_sample_coordinate(spec, k, d, rng, out);
  };
  return estimate_limit_moments(model, sampler, ell, opt);
}

LimitDraws draw_limit_increments(const LimitMoments& m, int N, const LimitFlags& f, Rng& rng) {
  const int T = m.T, N1 = N + 1;
  LimitDraws d;
  d.T = T;
  d.N = N;
  d.v.assign(static_cast<std::size_t>(T) * N1, 0.0);
  d.w.assign(static_cast<std::size_t>(T) * N1, 0.0);
  for (int t = 0; t < T; ++t) {
    const double ell = m.ell[t];
    double mean_v, mean_w, l11, l21, l22;
    if (f.ehmm) {
      const double I = m.I[t].mean;
      mean_v = -0.5 * ell * I;
      mean_w = 0.0;
      l11 = std::sqrt(std::max(0.0, ell * I));
      l21 = l22 = 0.0;
    } else {
      mean_v = 0.5 * ell * m.mv[t].mean;
      mean_w = 0.5 * ell * m.mw[t].mean;
      const double a = ell * m.v2[t].mean, b = ell * m.cross[t].mean, c = ell * m.w2[t].mean;
      l11 = std::sqrt(std::max(0.0, a));
      l21 = l11 > 0.0 ? b / l11 : 0.0;
      l22 = std::sqrt(std::max(0.0, c - l21 * l21));
    }
    // Sigma = (I + 11^T)/2: shared component e0 plus idiosyncratic en, each scaled by 1/sqrt(2).
    const double e01 = rng.normal() * std::numbers::sqrt2 / 2, e02 = rng.normal() * std::numbers::sqrt2 / 2;
    for (int n = 1; n <= N; ++n) {
      const double z1 = e01 + rng.normal() * std::numbers::sqrt2 / 2;
      const double z2 = e02 + rng.normal() * std::numbers::sqrt2 / 2;
      d.v[static_cast<std::size_t>(t) * N1 + n] = mean_v + l11 * z1;
      d.w[static_cast<std::size_t>(t) * N1 + n] = mean_w + l21 * z1 + l22 * z2;
    }
  }
  return d;
}

void limit_resampling_weights(const LimitDraws& d, int t, const std::vector<int>& prev_anc,
                              std::vector<double>& lw) {
  const int N1 = d.N + 1;
  lw.resize(N1);
  for (int m = 0; m < N1; ++m)
    lw[m] = d.vv(t, m) + (t > 0 ? d.ww(t - 1, prev_anc[m]) : 0.0);
}

GenealogyRecord simulate_limit_genealogy(const LimitDraws& d, const LimitFlags& f, Rng& rng) {
  const int T = d.T, N = d.N, N1 = N + 1;
  GenealogyRecord g;
  g.T = T;
  g.N = N;
  g.selected.assign(T, 0);
  g.accepted.assign(T, 0);
  std::vector<double> lw(N1), p(N1), sc(N1);
  if (f.ehmm) {
    for (int t = 0; t < T; ++t) {
      for (int m = 0; m < N1; ++m) lw[m] = d.vv(t, m);
      boltzmann_full(lw, p, sc);
      g.selected[t] = sample_index(p, rng);
      g.accepted[t] = g.selected[t] != 0;
    }
    return g;
  }
  g.ancestors.assign(static_cast<std::size_t>(T - 1) * N1, 0);
  // Resampling log weights per t, kept for the backward pass.
  std::vector<double> lws(static_cast<std::size_t>(T) * N1);
  std::vector<int> prev(N1, 0);
  for (int t = 0; t < T; ++t) {
    limit_resampling_weights(d, t, prev, lw);
    std::copy(lw.begin(), lw.end(), lws.begin() + static_cast<std::ptrdiff_t>(t) * N1);
    if (t + 1 < T) {
      boltzmann_full(lw, p, sc);
      prev[0] = 0;
      for (int n = 1; n <= N; ++n) prev[n] = sample_index(p, rng);
      std::copy(prev.begin(), prev.end(), g.ancestors.begin() + static_cast<std::ptrdiff_t>(t) * N1);
    }
  }
  if (f.forced_move)
    rosenbluth_teller_full(lw, p, sc);
  else
    boltzmann_full(lw, p, sc);
  g.selected[T - 1] = sample_index(p, rng);
  for (int t = T - 2; t >= 0; --t) {
    if (f.backward_sampling) {
      for (int m = 0; m < N1; ++m) lw[m] = lws[static_cast<std::size_t>(t) * N1 + m] + d.ww(t, m);
      boltzmann_full(lw, p, sc);
      g.selected[t] = sample_index(p, rng);
    } else {
      g.selected[t] = g.ancestor(t, g.selected[t + 1]);
    }
  }
  for (int t = 0; t < T; ++t) g.accepted[t] = g.selected[t] != 0;
  return g;
}

GenealogyRecord simulate_limit_genealogy(const LimitMoments& m, int N, const LimitFlags& f,
                                         Rng& rng) {
  return simulate_limit_genealogy(draw_limit_increments(m, N, f, rng), f, rng);
}

std::vector<Estimate> limit_acceptance_rates(const LimitMoments& m, int N, const LimitFlags& f,
                                             const RateOptions& opt) {
  if (N < 1) throw ConfigError("N must be at least 1");
  if (opt.replications < 1) throw ConfigError("need at least one replication");
  const int T = m.T;
  const std::int64_t blocks = (opt.replications + kBlock - 1) / kBlock;
  std::vector<std::vector<std::int64_t>> counts(blocks);
  parallel_for(blocks, opt.threads > 0 ? opt.threads : default_thread_count(), [&](std::size_t b) {
    Rng rng = Rng::substream(opt.seed, "limit-rate", {b});
    std::vector<std::int64_t> c(T, 0);
    const std::int64_t lo = b * kBlock, hi = std::min<std::int64_t>(opt.replications, lo + kBlock);
    for (std::int64_t i = lo; i < hi; ++i) {
      const GenealogyRecord g = simulate_limit_genealogy(m, N, f, rng);
      for (int t = 0; t < T; ++t) c[t] += g.accepted[t];
    }
    counts[b] = std::move(c);
  });
  std::vector<Estimate> out(T);
  for (int t = 0; t < T; ++t) {
    std::int64_t s = 0;
    for (const auto& c : counts) s += c[t];
    const double p = static_cast<double>(s) / opt.replications;
    out[t] = {p, std::sqrt(std::max(p * (1.0 - p), 0.0) / opt.replications)};
  }
  return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

AnalyticBounds analytic_bounds(double ell, double I, int N, std::optional<double> C) {
  if (!(ell > 0) || !(I >= 0) || N < 1) throw ConfigError("bounds need ell > 0, I >= 0, N >= 1");
  AnalyticBounds b;
  const double e = std::exp(ell * I);
  b.ehmm_bound = 1.0 / (1.0 + e / N);
  b.bs_bound = b.ehmm_bound;
  if (C) {
    if (!(*C > 0)) throw ConfigError("C must be positive");
    b.no_bs_bound = std::exp(-e / *C);
  }
  b.rwmh_rate = 2.0 * normal_cdf(-std::sqrt(ell * I) / 2.0);
  return b;
}

}  // namespace rwsmc
