#include "rwsmc/model.hpp"

#include <cmath>
#include <numbers>

#include "rwsmc/error.hpp"

namespace rwsmc {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

[[noreturn]] void no_derivative() {
  throw CapabilityError("components do not supply analytic derivatives");
}

}  // namespace

bool Path::all_finite() const {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

double UnivariateComponents::d1_log_m1(int, double) const { no_derivative(); }
double UnivariateComponents::d2_log_m1(int, double) const { no_derivative(); }
double UnivariateComponents::d1_log_m(int, int, double, double, int) const { no_derivative(); }
double UnivariateComponents::d2_log_m(int, int, double, double, int) const { no_derivative(); }
double UnivariateComponents::d1_log_g(int, int, double) const { no_derivative(); }
double UnivariateComponents::d2_log_g(int, int, double) const { no_derivative(); }

double UnivariateComponents::log_m1_row(const double* x, int D) const {
  double s = 0.0;
  for (int d = 0; d < D; ++d) s += log_m1(d, x[d]);
  return s;
}

double UnivariateComponents::log_m_row(int t, const double* xp, const double* x, int D) const {
  double s = 0.0;
  for (int d = 0; d < D; ++d) s += log_m(t, d, xp[d], x[d]);
  return s;
}

double UnivariateComponents::log_g_row(int t, const double* x, int D) const {
  double s = 0.0;
  for (int d = 0; d < D; ++d) s += log_g(t, d, x[d]);
  return s;
}

void UnivariateComponents::sample_m1_row(double* out, int D, Rng& rng) const {
  for (int d = 0; d < D; ++d) out[d] = sample_m1(d, rng);
}

void UnivariateComponents::sample_m_row(int t, const double* xp, double* out, int D,
                                        Rng& rng) const {
  for (int d = 0; d < D; ++d) out[d] = sample_m(t, d, xp[d], rng);
}

double ProductModel::log_joint(const Path& p) const {
  double s = 0.0;
  for (int t = 0; t < T_; ++t) {
    s += log_M(t, t > 0 ? p.row(t - 1) : nullptr, p.row(t));
    s += log_G(t, p.row(t));
  }
  return s;
}

ProductModel build_product_model(std::shared_ptr<const UnivariateComponents> c, int T, int D) {
  if (T < 1) throw ConfigError("T must be at least 1");
  if (D < 1) throw ConfigError("D must be at least 1");
  if (!c) throw ConfigError("missing model components");
  return ProductModel(std::move(c), T, D);
}

void LgssmSpec::validate() const {
  if (T < 1) throw ConfigError("T must be at least 1");
  if (D < 1) throw ConfigError("D must be at least 1");
  if (y.size() != static_cast<std::size_t>(T) * D)
    throw ConfigError("observation array must have T*D entries");
  for (double v : y)
    if (!std::isfinite(v)) throw ConfigError("observations must be finite");
  if (!(initial_variance > 0) || !(q > 0) || !(r > 0))
    throw ConfigError("variances must be positive");
  if (!std::isfinite(a)) throw ConfigError("transition coefficient must be finite");
}

LinearGaussianComponents::LinearGaussianComponents(LgssmSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  sd0_ = std::sqrt(spec_.initial_variance);
  sdq_ = std::sqrt(spec_.q);
  c0_ = -kHalfLog2Pi - 0.5 * std::log(spec_.initial_variance);
  cq_ = -kHalfLog2Pi - 0.5 * std::log(spec_.q);
  cr_ = -kHalfLog2Pi - 0.5 * std::log(spec_.r);
}

double LinearGaussianComponents::log_m1(int, double x) const {
  return c0_ - 0.5 * x * x / spec_.initial_variance;
}
double LinearGaussianComponents::sample_m1(int, Rng& rng) const { return sd0_ * rng.normal(); }

double LinearGaussianComponents::log_m(int, int, double xp, double x) const {
  double e = x - spec_.a * xp;
  return cq_ - 0.5 * e * e / spec_.q;
}
double LinearGaussianComponents::sample_m(int, int, double xp, Rng& rng) const {
  return spec_.a * xp + sdq_ * rng.normal();
}

double LinearGaussianComponents::log_g(int t, int d, double x) const {
  double e = spec_.obs(t, d) - x;
  return cr_ - 0.5 * e * e / spec_.r;
}

double LinearGaussianComponents::d1_log_m1(int, double x) const {
  return -x / spec_.initial_variance;
}
double LinearGaussianComponents::d2_log_m1(int, double) const {
  return -1.0 / spec_.initial_variance;
}
double LinearGaussianComponents::d1_log_m(int, int, double xp, double x, int arg) const {
  double e = x - spec_.a * xp;
  return arg == 1 ? -e / spec_.q : spec_.a * e / spec_.q;
}
double LinearGaussianComponents::d2_log_m(int, int, double, double, int arg) const {
  return arg == 1 ? -1.0 / spec_.q : -spec_.a * spec_.a / spec_.q;
}
double LinearGaussianComponents::d1_log_g(int t, int d, double x) const {
  return (spec_.obs(t, d) - x) / spec_.r;
}
double LinearGaussianComponents::d2_log_g(int, int, double) const { return -1.0 / spec_.r; }

double LinearGaussianComponents::log_m1_row(const double* x, int D) const {
  double s = 0.0;
  for (int d = 0; d < D; ++d) s += c0_ - 0.5 * x[d] * x[d] / spec_.initial_variance;
  return s;
}

double LinearGaussianComponents::log_m_row(int, const double* xp, const double* x, int D) const {
  const double a = spec_.a, iq = 0.5 / spec_.q;
  double s = 0.0;
  for (int d = 0; d < D; ++d) {
    double e = x[d] - a * xp[d];
    s += cq_ - iq * e * e;
  }
  return s;
}

double LinearGaussianComponents::log_g_row(int t, const double* x, int D) const {
  const double* y = spec_.y.data() + static_cast<std::size_t>(t) * spec_.D;
  const double ir = 0.5 / spec_.r;
  double s = 0.0;
  for (int d = 0; d < D; ++d) {
    double e = y[d] - x[d];
    s += cr_ - ir * e * e;
  }
  return s;
}

void LinearGaussianComponents::sample_m1_row(double* out, int D, Rng& rng) const {
  for (int d = 0; d < D; ++d) out[d] = sd0_ * rng.normal();
}

void LinearGaussianComponents::sample_m_row(int, const double* xp, double* out, int D,
                                            Rng& rng) const {
  for (int d = 0; d < D; ++d) out[d] = spec_.a * xp[d] + sdq_ * rng.normal();
}

ProductModel make_lgssm_model(const LgssmSpec& spec) {
  return build_product_model(std::make_shared<LinearGaussianComponents>(spec), spec.T, spec.D);
}

KalmanResult kalman_smooth(const LgssmSpec& spec) {
  spec.validate();
  const int T = spec.T, D = spec.D;
  const std::size_t n = static_cast<std::size_t>(T) * D;
  KalmanResult k;
  k.T = T;
  k.D = D;
  k.filter_means.resize(n);
  k.filter_variances.resize(n);
  k.predicted_means.resize(n);
  k.predicted_variances.resize(n);
  k.smoother_means.resize(n);
  k.smoother_variances.resize(n);
  k.pairwise_smoother_covariances.resize(static_cast<std::size_t>(T > 1 ? T - 1 : 0) * D);
  k.log_marginal_likelihood_per_dim.assign(D, 0.0);
  auto ix = [D](int t, int d) { return static_cast<std::size_t>(t) * D + d; };

  for (int d = 0; d < D; ++d) {
    double mp = 0.0, pp = spec.initial_variance, ll = 0.0;
    for (int t = 0; t < T; ++t) {
      if (t > 0) {
        mp = spec.a * k.filter_means[ix(t - 1, d)];
        pp = spec.a * spec.a * k.filter_variances[ix(t - 1, d)] + spec.q;
      }
      k.predicted_means[ix(t, d)] = mp;
      k.predicted_variances[ix(t, d)] = pp;
      double s = pp + spec.r;
      double innov = spec.obs(t, d) - mp;
      ll += -kHalfLog2Pi - 0.5 * std::log(s) - 0.5 * innov * innov / s;
      double gain = pp / s;
      k.filter_means[ix(t, d)] = mp + gain * innov;
      k.filter_variances[ix(t, d)] = pp * (1.0 - gain);
    }
    k.log_marginal_likelihood_per_dim[d] = ll;

    k.smoother_means[ix(T - 1, d)] = k.filter_means[ix(T - 1, d)];
    k.smoother_variances[ix(T - 1, d)] = k.filter_variances[ix(T - 1, d)];
    for (int t = T - 2; t >= 0; --t) {
      double j = k.filter_variances[ix(t, d)] * spec.a / k.predicted_variances[ix(t + 1, d)];
      k.smoother_means[ix(t, d)] =
          k.filter_means[ix(t, d)] + j * (k.smoother_means[ix(t + 1, d)] - k.predicted_means[ix(t + 1, d)]);
      k.smoother_variances[ix(t, d)] =
          k.filter_variances[ix(t, d)] +
          j * j * (k.smoother_variances[ix(t + 1, d)] - k.predicted_variances[ix(t + 1, d)]);
      k.pairwise_smoother_covariances[ix(t, d)] = j * k.smoother_variances[ix(t + 1, d)];
    }
  }
  for (int d = 0; d < D; ++d) k.log_marginal_likelihood += k.log_marginal_likelihood_per_dim[d];
  return k;
}

std::vector<double> smoother_covariance_matrix(const LgssmSpec& spec, const KalmanResult& k,
                                               int d) {
  const int T = spec.T;
  std::vector<double> c(static_cast<std::size_t>(T) * T, 0.0);
  auto at = [&](int s, int t) -> double& { return c[static_cast<std::size_t>(s) * T + t]; };
  for (int t = 0; t < T; ++t) at(t, t) = k.at(k.smoother_variances, t, d);
  // Cov(x_s, x_t) = J_s Cov(x_{s+1}, x_t) for s < t.
  for (int t = 0; t < T; ++t) {
    for (int s = t - 1; s >= 0; --s) {
      double j = k.at(k.filter_variances, s, d) * spec.a / k.at(k.predicted_variances, s + 1, d);
      at(s, t) = j * at(s + 1, t);
      at(t, s) = at(s, t);
    }
  }
  return c;
}

void ffbs_sample_coordinate(const LgssmSpec& spec, const KalmanResult& k, int d, Rng& rng,
                            double* out) {
  const int T = spec.T;
  out[T - 1] = k.at(k.filter_means, T - 1, d) +
               std::sqrt(k.at(k.filter_variances, T - 1, d)) * rng.normal();
  for (int t = T - 2; t >= 0; --t) {
    double pf = k.at(k.filter_variances, t, d);
    double j = pf * spec.a / k.at(k.predicted_variances, t + 1, d);
    double mean = k.at(k.filter_means, t, d) + j * (out[t + 1] - k.at(k.predicted_means, t + 1, d));
    double var = pf - j * spec.a * pf;
    out[t] = mean + std::sqrt(var) * rng.normal();
  }
}

Path ffbs_exact_sample(const LgssmSpec& spec, const KalmanResult& k, Rng& rng) {
  Path p(spec.T, spec.D);
  std::vector<double> col(spec.T);
  for (int d = 0; d < spec.D; ++d) {
    ffbs_sample_coordinate(spec, k, d, rng, col.data());
    for (int t = 0; t < spec.T; ++t) p(t, d) = col[t];
  }
  return p;
}

Path ffbs_exact_sample(const LgssmSpec& spec, Rng& rng) {
  return ffbs_exact_sample(spec, kalman_smooth(spec), rng);
}

std::vector<double> simulate_observations(const LgssmSpec& spec, Rng& rng) {
  std::vector<double> y(static_cast<std::size_t>(spec.T) * spec.D);
  const double sd0 = std::sqrt(spec.initial_variance), sdq = std::sqrt(spec.q),
               sdr = std::sqrt(spec.r);
  for (int d = 0; d < spec.D; ++d) {
    double x = sd0 * rng.normal();
    for (int t = 0; t < spec.T; ++t) {
      if (t > 0) x = spec.a * x + sdq * rng.normal();
      y[static_cast<std::size_t>(t) * spec.D + d] = x + sdr * rng.normal();
    }
  }
  return y;
}

double steady_filter_variance() { return (std::sqrt(5.0) - 1.0) / 2.0; }

AssumptionQuantities lgssm_assumption_quantities(int T) {
  if (T < 1) throw ConfigError("T must be at least 1");
  const double s2 = steady_filter_variance();
  const double u = s2 / (s2 + 1.0);
  AssumptionQuantities q;
  if (T == 1)
    q.r_T = 0.5 * (std::log(s2 + 2.0) - s2);
  else
    q.r_T = 0.5 * (std::numbers::ln2 + (s2 * (u * u - 2.0) + u) / 2.0);
  q.bound_ok = q.r_T > 0.15;
  return q;
}

LgssmSpec preset_spec(const std::string& name, int T, int D) {
  LgssmSpec s;
  s.T = T;
  s.D = D;
  s.y.assign(static_cast<std::size_t>(T) * D, 0.0);
  if (name == "gauss-rw") {
    s.initial_variance = 1.0;
  } else if (name == "gauss-rw-steady") {
    s.initial_variance = steady_filter_variance() + 1.0;
  } else {
    throw ConfigError("unknown model preset: " + name);
  }
  return s;
}

bool preset_simulates_observations(const std::string& name) { return name == "gauss-rw"; }

}  // namespace rwsmc
