// rwsmc: experiments, validation suites, plots, parameter chains and limit laws.

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "rwsmc/error.hpp"
#include "rwsmc/experiment.hpp"
#include "rwsmc/limit_laws.hpp"
#include "rwsmc/param.hpp"
#include "rwsmc/plot.hpp"
#include "rwsmc/validate.hpp"

namespace {

constexpr int kOk = 0, kValidationFailed = 1, kConfigError = 2, kRuntimeError = 3;

int cmd_run(const std::string& config, const std::vector<std::string>& overrides) {
  rwsmc::ExperimentConfig cfg = config.empty() ? rwsmc::ExperimentConfig{} : rwsmc::load_config(config);
  for (const auto& kv : overrides) rwsmc::apply_override(cfg, kv);
  cfg.validate();
  for (const auto& p : rwsmc::run_experiment(cfg)) fmt::print("{}\n", p);
  return kOk;
}

int cmd_validate(const std::string& suite, const rwsmc::ValidateOptions& opt) {
  const auto results = rwsmc::run_suite(suite, opt);
  fmt::print("{}", rwsmc::format_report(results));
  int failed = 0;
  for (const auto& r : results) failed += !r.pass;
  fmt::print("{} of {} checks passed\n", results.size() - failed, results.size());
  return failed ? kValidationFailed : kOk;
}

struct ParamArgs {
  std::string sampler = "pg", kernel = "rwcsmc", out = "param_trace.csv";
  int T = 3, N = 7;
  double ell = 1.0, prior_mean = 0.0, prior_sd = 0.5, step = 0.5, theta_true = 1.0;
  std::int64_t sweeps = 10000;
  std::uint64_t seed = 1;
};

int cmd_param(const ParamArgs& a) {
  using namespace rwsmc;
  if (a.T < 1 || a.N < 1 || a.sweeps < 1) throw ConfigError("T, N and sweeps must be positive");
  if (!(a.theta_true > 0)) throw ConfigError("theta-true must be positive");
  LgssmSpec base = preset_spec("gauss-rw", a.T, 1);
  base.r = a.theta_true * a.theta_true;
  Rng obs = Rng::substream(a.seed, "param-obs");
  base.y = simulate_observations(base, obs);
  const ObsScaleModel tm(base, a.prior_mean, a.prior_sd, a.step);
  ParamConfig cfg;
  cfg.sampler = parse_param_sampler(a.sampler);
  cfg.path_kernel = parse_algorithm(a.kernel);
  cfg.kernel.N = a.N;
  cfg.kernel.ell = {a.ell};
  cfg.kernel.index_selection = IndexSelection::backward_sampling;
  cfg.kernel.validate(a.T);
  Rng rng = Rng::substream(a.seed, "param-chain");
  ParamState st;
  st.theta = {std::exp(a.prior_mean)};
  st.path = ffbs_exact_sample(tm.spec_at(st.theta[0]), rng);
  const auto trace = run_param_chain(tm, st, cfg, a.sweeps, rng);
  std::ofstream out(a.out);
  if (!out) throw std::runtime_error("cannot write " + a.out);
  out << "theta,iteration,accepted\n";
  std::int64_t acc = 0;
  for (const auto& r : trace) {
    out << fmt::format("{:.10g},{},{}\n", r.theta[0], r.iteration, r.accepted ? 1 : 0);
    acc += r.accepted;
  }
  fmt::print("{}: {} sweeps, acceptance {:.3f}\n", a.out, trace.size(),
             static_cast<double>(acc) / trace.size());
  return kOk;
}

struct LimitArgs {
  int T = 25, N = 31, coords = 2000;
  std::vector<double> ell = {1.0};
  std::int64_t draws = 200000, reps = 100000;
  bool forced_move = false, no_backward = false;
  std::uint64_t seed = 1;
  std::string out = "limits.csv";
  int threads = 0;
};

int cmd_limits(const LimitArgs& a) {
  using namespace rwsmc;
  if (a.T < 1 || a.N < 1) throw ConfigError("T and N must be positive");
  KernelConfig kc;
  kc.ell = a.ell;
  kc.validate(a.T);
  std::vector<double> ell(a.T);
  for (int t = 0; t < a.T; ++t) ell[t] = kc.ell_at(t);
  MomentOptions mo;
  mo.draws = a.draws;
  mo.seed = a.seed;
  mo.threads = a.threads;
  const LimitMoments m = gaussian_limit_moments(preset_spec("gauss-rw", a.T, 1), ell, a.coords, mo);
  RateOptions ro;
  ro.replications = a.reps;
  ro.seed = a.seed;
  ro.threads = a.threads;
  LimitFlags f;
  f.forced_move = a.forced_move;
  f.backward_sampling = !a.no_backward;
  const auto rate = limit_acceptance_rates(m, a.N, f, ro);
  LimitFlags fe;
  fe.ehmm = true;
  const auto erate = limit_acceptance_rates(m, a.N, fe, ro);
  std::ofstream out(a.out);
  if (!out) throw std::runtime_error("cannot write " + a.out);
  out << "t,ell,I,I_se,curvature,curvature_se,limit_rate,limit_rate_se,ehmm_limit_rate,"
         "ehmm_limit_rate_se,bs_bound,rwmh_rate\n";
  for (int t = 0; t < a.T; ++t) {
    const auto b = analytic_bounds(ell[t], std::max(0.0, m.I[t].mean), a.N);
    out << fmt::format("{},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},"
                       "{:.10g},{:.10g}\n",
                       t + 1, ell[t], m.I[t].mean, m.I[t].se, m.curvature[t].mean, m.curvature[t].se,
                       rate[t].mean, rate[t].se, erate[t].mean, erate[t].se, b.bs_bound, b.rwmh_rate);
  }
  fmt::print("{}\n", a.out);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-walk conditional SMC kernels: experiments and checks"};
  app.require_subcommand(1);

  std::string config;
  std::vector<std::string> overrides;
  auto* run = app.add_subcommand("run", "run the diagnostics study and write CSV (and SVG)");
  run->add_option("--config", config, "key=value configuration file");
  run->add_option("--override", overrides, "key=value override, repeatable");

  std::string suite;
  rwsmc::ValidateOptions vopt;
  auto* val = app.add_subcommand("validate", "run acceptance checks");
  val->add_option("suite", suite, "selection|ffbs|invariance|bounds|limits|params|all")->required();
  val->add_option("--seed", vopt.seed, "root seed");
  val->add_option("--threads", vopt.threads, "worker threads (0: RWSMC_THREADS or hardware)");
  val->add_flag("--verbose", vopt.verbose, "progress on stderr");

  std::vector<std::string> csvs;
  std::string plot_dir = ".";
  auto* plot = app.add_subcommand("plot", "render SVG panels from diagnostics CSVs");
  plot->add_option("csv", csvs, "diagnostics CSV files")->required();
  plot->add_option("--out-dir", plot_dir, "output directory");

  ParamArgs pa;
  auto* param = app.add_subcommand("param", "parameter chain for the observation scale");
  param->add_option("--sampler", pa.sampler, "pg|ehmm-alt|rwcsmc-alt");
  param->add_option("--kernel", pa.kernel, "path kernel for pg: icsmc|rwehmm|rwcsmc");
  param->add_option("--T", pa.T);
  param->add_option("--N", pa.N);
  param->add_option("--ell", pa.ell);
  param->add_option("--sweeps", pa.sweeps);
  param->add_option("--prior-mean", pa.prior_mean, "prior mean of log theta");
  param->add_option("--prior-sd", pa.prior_sd, "prior sd of log theta (0: fixed)");
  param->add_option("--step", pa.step, "random-walk step on log theta");
  param->add_option("--seed", pa.seed);
  param->add_option("--theta-true", pa.theta_true, "observation sd used to simulate data");
  param->add_option("--out", pa.out);

  LimitArgs la;
  auto* lim = app.add_subcommand("limits", "limiting acceptance rates and bounds");
  lim->add_option("--T", la.T);
  lim->add_option("--N", la.N);
  lim->add_option("--ell", la.ell, "one value or one per t")->delimiter(',');
  lim->add_option("--draws", la.draws, "moment draws");
  lim->add_option("--reps", la.reps, "genealogy replications");
  lim->add_option("--coords", la.coords, "simulated observation sequences");
  lim->add_flag("--forced-move", la.forced_move);
  lim->add_flag("--no-backward-sampling", la.no_backward);
  lim->add_option("--seed", la.seed);
  lim->add_option("--threads", la.threads);
  lim->add_option("--out", la.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(config, overrides);
    if (*val) return cmd_validate(suite, vopt);
    if (*plot) {
      for (const auto& p : rwsmc::plot_csv(csvs, plot_dir)) fmt::print("{}\n", p);
      return kOk;
    }
    if (*param) return cmd_param(pa);
    if (*lim) return cmd_limits(la);
  } catch (const rwsmc::ConfigError& e) {
    fmt::print(stderr, "configuration error: {}\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kRuntimeError;
  }
  return kOk;
}
