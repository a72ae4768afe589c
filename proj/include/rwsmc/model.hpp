#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rwsmc/rng.hpp"

namespace rwsmc {

// Time indices are 0-based throughout: t = 0 is the first time step, and the
// transition at t = 0 is the initial density m_1.
struct Path {
  int T = 0;
  int D = 0;
  std::vector<double> x;

  Path() = default;
  Path(int T_, int D_) : T(T_), D(D_), x(static_cast<std::size_t>(T_) * D_, 0.0) {}

  double& operator()(int t, int d) { return x[static_cast<std::size_t>(t) * D + d]; }
  double operator()(int t, int d) const { return x[static_cast<std::size_t>(t) * D + d]; }
  double* row(int t) { return x.data() + static_cast<std::size_t>(t) * D; }
  const double* row(int t) const { return x.data() + static_cast<std::size_t>(t) * D; }
  bool all_finite() const;
};

// Univariate building blocks of an A1 product model. The coordinate index d
// lets per-coordinate observations enter G_t.
class UnivariateComponents {
 public:
  virtual ~UnivariateComponents() = default;

  virtual double log_m1(int d, double x) const = 0;
  virtual double sample_m1(int d, Rng& rng) const = 0;
  virtual double log_m(int t, int d, double x_prev, double x) const = 0;
  virtual double sample_m(int t, int d, double x_prev, Rng& rng) const = 0;
  virtual double log_g(int t, int d, double x) const = 0;

  // Analytic derivatives. arg selects the variable of log m_t: 0 = x_prev, 1 = x.
  virtual bool has_derivatives() const { return false; }
  virtual double d1_log_m1(int d, double x) const;
  virtual double d2_log_m1(int d, double x) const;
  virtual double d1_log_m(int t, int d, double x_prev, double x, int arg) const;
  virtual double d2_log_m(int t, int d, double x_prev, double x, int arg) const;
  virtual double d1_log_g(int t, int d, double x) const;
  virtual double d2_log_g(int t, int d, double x) const;

  // Row forms sum over d = 0..D-1 left to right; overrides must keep that order.
  virtual double log_m1_row(const double* x, int D) const;
  virtual double log_m_row(int t, const double* x_prev, const double* x, int D) const;
  virtual double log_g_row(int t, const double* x, int D) const;
  virtual void sample_m1_row(double* out, int D, Rng& rng) const;
  virtual void sample_m_row(int t, const double* x_prev, double* out, int D, Rng& rng) const;
};

class ProductModel {
 public:
  ProductModel() = default;
  ProductModel(std::shared_ptr<const UnivariateComponents> c, int T, int D)
      : comp_(std::move(c)), T_(T), D_(D) {}

  int T() const { return T_; }
  int D() const { return D_; }
  const UnivariateComponents& components() const { return *comp_; }
  std::shared_ptr<const UnivariateComponents> components_ptr() const { return comp_; }

  double log_G(int t, const double* x) const { return comp_->log_g_row(t, x, D_); }
  // t = 0 ignores x_prev and evaluates the initial density.
  double log_M(int t, const double* x_prev, const double* x) const {
    return t == 0 ? comp_->log_m1_row(x, D_) : comp_->log_m_row(t, x_prev, x, D_);
  }
  void sample_M(int t, const double* x_prev, double* out, Rng& rng) const {
    if (t == 0)
      comp_->sample_m1_row(out, D_, rng);
    else
      comp_->sample_m_row(t, x_prev, out, D_, rng);
  }
  // log of the unnormalised path density prod_t m_t G_t.
  double log_joint(const Path& p) const;

 private:
  std::shared_ptr<const UnivariateComponents> comp_;
  int T_ = 0;
  int D_ = 0;
};

ProductModel build_product_model(std::shared_ptr<const UnivariateComponents> c, int T, int D);

// x_1 ~ N(0, v0), x_t = a x_{t-1} + N(0, q), y_t = x_t + N(0, r), per coordinate.
struct LgssmSpec {
  int T = 1;
  int D = 1;
  std::vector<double> y;  // T x D, row-major
  double initial_variance = 1.0;
  double a = 1.0;
  double q = 1.0;
  double r = 1.0;

  double obs(int t, int d) const { return y[static_cast<std::size_t>(t) * D + d]; }
  void validate() const;
};

class LinearGaussianComponents final : public UnivariateComponents {
 public:
  explicit LinearGaussianComponents(LgssmSpec spec);
  const LgssmSpec& spec() const { return spec_; }

  double log_m1(int d, double x) const override;
  double sample_m1(int d, Rng& rng) const override;
  double log_m(int t, int d, double x_prev, double x) const override;
  double sample_m(int t, int d, double x_prev, Rng& rng) const override;
  double log_g(int t, int d, double x) const override;

  bool has_derivatives() const override { return true; }
  double d1_log_m1(int d, double x) const override;
  double d2_log_m1(int d, double x) const override;
  double d1_log_m(int t, int d, double x_prev, double x, int arg) const override;
  double d2_log_m(int t, int d, double x_prev, double x, int arg) const override;
  double d1_log_g(int t, int d, double x) const override;
  double d2_log_g(int t, int d, double x) const override;

  double log_m1_row(const double* x, int D) const override;
  double log_m_row(int t, const double* x_prev, const double* x, int D) const override;
  double log_g_row(int t, const double* x, int D) const override;
  void sample_m1_row(double* out, int D, Rng& rng) const override;
  void sample_m_row(int t, const double* x_prev, double* out, int D, Rng& rng) const override;

 private:
  LgssmSpec spec_;
  double sd0_, sdq_, c0_, cq_, cr_;
};

ProductModel make_lgssm_model(const LgssmSpec& spec);

struct KalmanResult {
  int T = 0;
  int D = 0;
  std::vector<double> filter_means, filter_variances;      // T x D
  std::vector<double> predicted_means, predicted_variances;  // T x D
  std::vector<double> smoother_means, smoother_variances;  // T x D
  std::vector<double> pairwise_smoother_covariances;       // (T-1) x D, Cov(x_t, x_{t+1})
  std::vector<double> log_marginal_likelihood_per_dim;     // D
  double log_marginal_likelihood = 0.0;

  double at(const std::vector<double>& v, int t, int d) const {
    return v[static_cast<std::size_t>(t) * D + d];
  }
};

KalmanResult kalman_smooth(const LgssmSpec& spec);

// Full T x T smoother covariance of coordinate d.
std::vector<double> smoother_covariance_matrix(const LgssmSpec& spec, const KalmanResult& k, int d);

Path ffbs_exact_sample(const LgssmSpec& spec, Rng& rng);
Path ffbs_exact_sample(const LgssmSpec& spec, const KalmanResult& k, Rng& rng);
// Draw of the single coordinate d into out[0..T-1].
void ffbs_sample_coordinate(const LgssmSpec& spec, const KalmanResult& k, int d, Rng& rng,
                            double* out);

std::vector<double> simulate_observations(const LgssmSpec& spec, Rng& rng);

struct AssumptionQuantities {
  double r_T = 0.0;
  bool bound_ok = false;
};

double steady_filter_variance();  // (sqrt(5) - 1) / 2
AssumptionQuantities lgssm_assumption_quantities(int T);

// Named presets. "gauss-rw": v0 = 1, observations to be simulated.
// "gauss-rw-steady": v0 = sigma^2 + 1 and y = 0.
LgssmSpec preset_spec(const std::string& name, int T, int D);
bool preset_simulates_observations(const std::string& name);

}  // namespace rwsmc
