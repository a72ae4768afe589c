#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rwsmc/kernel.hpp"
#include "rwsmc/model.hpp"
#include "rwsmc/rng.hpp"

namespace rwsmc {

using Theta = std::vector<double>;

struct ThetaProposal {
  Theta theta;
  double log_q_fwd = 0.0;  // log q(theta -> theta')
  double log_q_rev = 0.0;  // log q(theta' -> theta)
};

// Optional information a proposal may condition on.
struct ProposalContext {
  const ParticleCloud* cloud = nullptr;
  const GenealogyRecord* genealogy = nullptr;
};

class ThetaModel {
 public:
  virtual ~ThetaModel() = default;
  virtual int theta_dim() const = 0;
  virtual double log_prior(const Theta& theta) const = 0;
  virtual ProductModel build_model(const Theta& theta) const = 0;
  virtual ThetaProposal propose(const Theta& theta, const ProposalContext& ctx, Rng& rng) const = 0;
};

// Linear-Gaussian model with unknown observation standard deviation theta,
// prior log theta ~ N(prior_mean, prior_sd^2) (prior_sd = 0: point mass at
// exp(prior_mean)) and a Gaussian random walk on log theta.
class ObsScaleModel final : public ThetaModel {
 public:
  ObsScaleModel(LgssmSpec base, double prior_mean, double prior_sd, double step);
  int theta_dim() const override { return 1; }
  double log_prior(const Theta& theta) const override;
  ProductModel build_model(const Theta& theta) const override;
  ThetaProposal propose(const Theta& theta, const ProposalContext& ctx, Rng& rng) const override;

  const LgssmSpec& base() const { return base_; }
  LgssmSpec spec_at(double theta) const;
  double prior_mean() const { return prior_mean_; }
  double prior_sd() const { return prior_sd_; }

 private:
  LgssmSpec base_;
  double prior_mean_, prior_sd_, step_;
};

enum class ParamSampler { pg, ehmm_alt, rwcsmc_alt };
ParamSampler parse_param_sampler(const std::string& s);
std::string to_string(ParamSampler s);

struct ParamConfig {
  ParamSampler sampler = ParamSampler::pg;
  Algorithm path_kernel = Algorithm::rwcsmc;  // pg only
  KernelConfig kernel;
};

struct ParamState {
  Theta theta;
  Path path;
};

// Particle Gibbs: path kernel, then theta_kernel, which must leave the
// conditional of theta given the path invariant (default metropolis_theta_step).
using ThetaKernel = std::function<bool(const ThetaModel&, Theta&, const Path&, Rng&)>;
bool metropolis_theta_step(const ThetaModel& tm, Theta& theta, const Path& path, Rng& rng);
bool particle_gibbs_step(const ThetaModel& tm, ParamState& s, const ParamConfig& cfg,
                         const ThetaKernel& theta_kernel, Rng& rng);
// Joint theta and path update through the RW-EHMM forward normaliser.
bool rwehmm_param_step(const ThetaModel& tm, ParamState& s, const ParamConfig& cfg, Rng& rng);
// Joint theta and path update for i-RW-CSMC (backward sampling, Boltzmann final selection).
bool rwcsmc_param_step(const ThetaModel& tm, ParamState& s, const ParamConfig& cfg, Rng& rng);

struct ParamTraceRow {
  Theta theta;
  std::int64_t iteration = 0;
  bool accepted = false;
};

std::vector<ParamTraceRow> run_param_chain(const ThetaModel& tm, ParamState init,
                                           const ParamConfig& cfg, std::int64_t sweeps, Rng& rng);

// Grid quadrature of the posterior of theta for ObsScaleModel from Kalman
// marginal likelihoods, on an equispaced grid in log theta.
struct ThetaPosteriorGrid {
  std::vector<double> log_theta;
  std::vector<double> density;  // normalised density of log theta at the nodes
  std::vector<double> cdf;      // cumulative trapezoid at the nodes
  double mean = 0.0;            // posterior mean of theta
  double sd = 0.0;              // posterior sd of theta

  double cdf_at(double theta) const;
  double sample(Rng& rng) const;
};

ThetaPosteriorGrid obs_scale_posterior_grid(const ObsScaleModel& tm, int points = 400,
                                            double width_sds = 8.0);

double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf);

struct BatchMean {
  double mean = 0.0;
  double se = 0.0;
};
BatchMean batch_means(const std::vector<double>& x, int batches = 100);

}  // namespace rwsmc
