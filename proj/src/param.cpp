#include "rwsmc/param.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>

#include "rwsmc/error.hpp"
#include "rwsmc/rwcsmc.hpp"
#include "rwsmc/rwehmm.hpp"
#include "rwsmc/selection.hpp"

namespace rwsmc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kHalfLog2Pi = 0.91893853320467274178;

double row_lse(const std::vector<double>& v, int t, int N1) {
  return log_sum_exp(std::span<const double>(v.data() + static_cast<std::size_t>(t) * N1, N1));
}

}  // namespace

ObsScaleModel::ObsScaleModel(LgssmSpec base, double prior_mean, double prior_sd, double step)
    : base_(std::move(base)), prior_mean_(prior_mean), prior_sd_(prior_sd), step_(step) {
  base_.validate();
  if (!(prior_sd >= 0)) throw ConfigError("prior sd must be non-negative");
  if (!(step > 0)) throw ConfigError("proposal step must be positive");
}

double ObsScaleModel::log_prior(const Theta& th) const {
  if (th.size() != 1 || !(th[0] > 0)) return kNegInf;
  const double u = std::log(th[0]);
  if (prior_sd_ == 0.0) return u == prior_mean_ ? 0.0 : kNegInf;
  const double z = (u - prior_mean_) / prior_sd_;
  return -u - kHalfLog2Pi - std::log(prior_sd_) - 0.5 * z * z;
}

LgssmSpec ObsScaleModel::spec_at(double theta) const {
  LgssmSpec s = base_;
  s.r = theta * theta;
  return s;
}

ProductModel ObsScaleModel::build_model(const Theta& th) const {
  if (th.size() != 1 || !(th[0] > 0)) throw ModelError("theta must be a positive scalar");
  return make_lgssm_model(spec_at(th[0]));
}

ThetaProposal ObsScaleModel::propose(const Theta& th, const ProposalContext&, Rng& rng) const {
  ThetaProposal p;
  const double u = std::log(th[0]);
  const double e = step_ * rng.normal();
  const double u2 = u + e;
  p.theta = {std::exp(u2)};
  // Log-normal random walk: q(theta -> theta') = N(log theta'; log theta, step^2) / theta'.
  const double common = -kHalfLog2Pi - std::log(step_) - 0.5 * (e / step_) * (e / step_);
  p.log_q_fwd = common - u2;
  p.log_q_rev = common - u;
  return p;
}

ParamSampler parse_param_sampler(const std::string& s) {
  if (s == "pg") return ParamSampler::pg;
  if (s == "ehmm-alt") return ParamSampler::ehmm_alt;
  if (s == "rwcsmc-alt") return ParamSampler::rwcsmc_alt;
  throw ConfigError("unknown parameter sampler: " + s);
}

std::string to_string(ParamSampler s) {
  switch (s) {
    case ParamSampler::pg: return "pg";
    case ParamSampler::ehmm_alt: return "ehmm-alt";
    case ParamSampler::rwcsmc_alt: return "rwcsmc-alt";
  }
  return "?";
}

bool metropolis_theta_step(const ThetaModel& tm, Theta& theta, const Path& path, Rng& rng) {
  const ThetaProposal p = tm.propose(theta, {}, rng);
  const double lp_new = tm.log_prior(p.theta);
  const double u = rng.uniform();
  if (lp_new == kNegInf) return false;
  const double lp = tm.log_prior(theta);
  const double lr = lp_new + tm.build_model(p.theta).log_joint(path) - lp -
                    tm.build_model(theta).log_joint(path) + p.log_q_rev - p.log_q_fwd;
  if (std::log(u) < lr) {
    theta = p.theta;
    return true;
  }
  return false;
}

bool particle_gibbs_step(const ThetaModel& tm, ParamState& s, const ParamConfig& cfg,
                         const ThetaKernel& theta_kernel, Rng& rng) {
  const bool acc = theta_kernel(tm, s.theta, s.path, rng);
  auto k = make_kernel(cfg.path_kernel, tm.build_model(s.theta), cfg.kernel);
  k->update(s.path, rng);
  return acc;
}

bool rwehmm_param_step(const ThetaModel& tm, ParamState& s, const ParamConfig& cfg, Rng& rng) {
  const ProductModel m = tm.build_model(s.theta);
  const ParticleCloud cloud = scatter_cloud(s.path, cfg.kernel.ell, cfg.kernel.N, rng);
  const DiscreteTarget xi = build_discrete_target(cloud, m);
  const ForwardPass f = forward_filter(xi);

  const ThetaProposal p = tm.propose(s.theta, {&cloud, nullptr}, rng);
  const double lp_new = tm.log_prior(p.theta);
  const double u = rng.uniform();
  bool accept = false;
  DiscreteTarget xi_new;
  ForwardPass f_new;
  if (lp_new != kNegInf) {
    xi_new = build_discrete_target(cloud, tm.build_model(p.theta));
    f_new = forward_filter(xi_new);
    const double lr = lp_new - tm.log_prior(s.theta) + f_new.log_normaliser - f.log_normaliser +
                      p.log_q_rev - p.log_q_fwd;
    accept = std::log(u) < lr;
  }
  const std::vector<int> k = accept ? ffbs_index_sample(xi_new, f_new, rng)
                                    : ffbs_index_sample(xi, f, rng);
  if (accept) s.theta = p.theta;
  for (int t = 0; t < cloud.T; ++t)
    if (k[t] != 0) std::copy_n(cloud.at(t, k[t]), cloud.D, s.path.row(t));
  return accept;
}

bool rwcsmc_param_step(const ThetaModel& tm, ParamState& s, const ParamConfig& cfg, Rng& rng) {
  KernelConfig kc = cfg.kernel;
  kc.index_selection = IndexSelection::backward_sampling;
  kc.selection = SelectionVariant::boltzmann;
  const ProductModel m = tm.build_model(s.theta);
  RwcsmcKernel kern(m, kc);
  kern.forward(s.path, rng);
  const ParticleCloud& cloud = kern.cloud();
  const int T = cloud.T, N = cloud.N, N1 = N + 1;
  const std::vector<double>& om = kern.joint_log_weights();
  double log_s = 0.0;
  for (int t = 0; t < T; ++t) log_s += row_lse(om, t, N1);

  const ThetaProposal p = tm.propose(s.theta, {&cloud, &kern.info().genealogy}, rng);
  const double lp_new = tm.log_prior(p.theta);
  if (lp_new == kNegInf) {
    rng.uniform();
    kern.select(s.path, rng);
    return false;
  }
  // Fresh ancestors A' for every particle, including index 0, under theta'.
  const ProductModel m2 = tm.build_model(p.theta);
  std::vector<int> anc(static_cast<std::size_t>(T > 1 ? T - 1 : 0) * N1, 0);
  std::vector<double> om2(static_cast<std::size_t>(T) * N1), pr(N1);
  double log_s2 = 0.0;
  for (int t = 0; t < T; ++t) {
    if (t > 0) {
      const double c = row_lse(om2, t - 1, N1);
      for (int n = 0; n < N1; ++n) pr[n] = std::exp(om2[static_cast<std::size_t>(t - 1) * N1 + n] - c);
      for (int n = 0; n < N1; ++n) anc[static_cast<std::size_t>(t - 1) * N1 + n] = sample_index(pr, rng);
    }
    for (int n = 0; n < N1; ++n) {
      const double* prev =
          t > 0 ? cloud.at(t - 1, anc[static_cast<std::size_t>(t - 1) * N1 + n]) : nullptr;
      om2[static_cast<std::size_t>(t) * N1 + n] =
          m2.log_M(t, prev, cloud.at(t, n)) + m2.log_G(t, cloud.at(t, n));
    }
    log_s2 += row_lse(om2, t, N1);
  }
  const double lr =
      lp_new - tm.log_prior(s.theta) + log_s2 - log_s + p.log_q_rev - p.log_q_fwd;
  const double u = rng.uniform();
  if (!(std::log(u) < lr)) {
    kern.select(s.path, rng);
    return false;
  }
  s.theta = p.theta;
  const double c = row_lse(om2, T - 1, N1);
  for (int n = 0; n < N1; ++n) pr[n] = std::exp(om2[static_cast<std::size_t>(T - 1) * N1 + n] - c);
  int k = sample_index(pr, rng);
  for (int t = T - 1; t >= 0; --t) {
    if (k != 0) std::copy_n(cloud.at(t, k), cloud.D, s.path.row(t));
    if (t > 0) k = anc[static_cast<std::size_t>(t - 1) * N1 + k];
  }
  return true;
}

std::vector<ParamTraceRow> run_param_chain(const ThetaModel& tm, ParamState st,
                                           const ParamConfig& cfg, std::int64_t sweeps, Rng& rng) {
  std::vector<ParamTraceRow> out;
  out.reserve(sweeps);
  for (std::int64_t i = 0; i < sweeps; ++i) {
    bool acc = false;
    switch (cfg.sampler) {
      case ParamSampler::pg: acc = particle_gibbs_step(tm, st, cfg, metropolis_theta_step, rng); break;
      case ParamSampler::ehmm_alt: acc = rwehmm_param_step(tm, st, cfg, rng); break;
      case ParamSampler::rwcsmc_alt: acc = rwcsmc_param_step(tm, st, cfg, rng); break;
    }
    out.push_back({st.theta, i + 1, acc});
  }
  return out;
}

double ThetaPosteriorGrid::cdf_at(double theta) const {
  if (!(theta > 0)) return 0.0;
  const double u = std::log(theta);
  if (u <= log_theta.front()) return 0.0;
  if (u >= log_theta.back()) return 1.0;
  const double h = log_theta[1] - log_theta[0];
  const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>((u - log_theta[0]) / h),
                                              log_theta.size() - 2);
  const double du = u - log_theta[i];
  const double pu = density[i] + (density[i + 1] - density[i]) * du / h;
  return std::min(1.0, cdf[i] + 0.5 * du * (density[i] + pu));
}

double ThetaPosteriorGrid::sample(Rng& rng) const {
  const double v = rng.uniform();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), v);
  if (it == cdf.begin()) return std::exp(log_theta.front());
  if (it == cdf.end()) return std::exp(log_theta.back());
  const std::size_t i = static_cast<std::size_t>(it - cdf.begin()) - 1;
  const double f = (v - cdf[i]) / (cdf[i + 1] - cdf[i]);
  return std::exp(log_theta[i] + f * (log_theta[i + 1] - log_theta[i]));
}

ThetaPosteriorGrid obs_scale_posterior_grid(const ObsScaleModel& tm, int points, double width) {
  if (points < 3) throw ConfigError("need at least three grid points");
  if (tm.prior_sd() == 0.0) throw ConfigError("grid quadrature needs a non-degenerate prior");
  ThetaPosteriorGrid g;
  const double lo = tm.prior_mean() - width * tm.prior_sd();
  const double h = 2.0 * width * tm.prior_sd() / (points - 1);
  std::vector<double> lf(points);
  for (int i = 0; i < points; ++i) {
    const double u = lo + i * h;
    g.log_theta.push_back(u);
    const double z = (u - tm.prior_mean()) / tm.prior_sd();
    lf[i] = -0.5 * z * z + kalman_smooth(tm.spec_at(std::exp(u))).log_marginal_likelihood;
  }
  const double mx = *std::max_element(lf.begin(), lf.end());
  g.density.resize(points);
  for (int i = 0; i < points; ++i) g.density[i] = std::exp(lf[i] - mx);
  double z = 0.0;
  for (int i = 1; i < points; ++i) z += 0.5 * h * (g.density[i - 1] + g.density[i]);
  for (double& d : g.density) d /= z;
  g.cdf.assign(points, 0.0);
  double m1 = 0.0, m2 = 0.0;
  for (int i = 1; i < points; ++i) {
    g.cdf[i] = g.cdf[i - 1] + 0.5 * h * (g.density[i - 1] + g.density[i]);
    const double a = std::exp(g.log_theta[i - 1]), b = std::exp(g.log_theta[i]);
    m1 += 0.5 * h * (a * g.density[i - 1] + b * g.density[i]);
    m2 += 0.5 * h * (a * a * g.density[i - 1] + b * b * g.density[i]);
  }
  g.mean = m1;
  g.sd = std::sqrt(std::max(0.0, m2 - m1 * m1));
  return g;
}

double ks_distance(std::vector<double> x, const std::function<double(double)>& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, std::abs(f - (i + 1) / n), std::abs(f - i / n)});
  }
  return d;
}

BatchMean batch_means(const std::vector<double>& x, int batches) {
  if (batches < 2 || x.size() < static_cast<std::size_t>(batches))
    throw ConfigError("not enough samples for batch means");
  const std::size_t b = x.size() / batches;
  std::vector<double> m(batches, 0.0);
  for (int k = 0; k < batches; ++k) {
    for (std::size_t i = 0; i < b; ++i) m[k] += x[k * b + i];
    m[k] /= b;
  }
  BatchMean r;
  for (double v : m) r.mean += v;
  r.mean /= batches;
  double s = 0.0;
  for (double v : m) s += (v - r.mean) * (v - r.mean);
  r.se = std::sqrt(s / (batches - 1) / batches);
  return r;
}

}  // namespace rwsmc
