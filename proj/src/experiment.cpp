#include "rwsmc/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "rwsmc/error.hpp"
#include "rwsmc/parallel.hpp"
#include "rwsmc/plot.hpp"

namespace rwsmc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size() || d != static_cast<long long>(d)) throw std::invalid_argument(v);
    return static_cast<long long>(d);
  } catch (const std::exception&) {
    throw ConfigError("bad integer for " + key + ": " + v);
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("bad number for " + key + ": " + v);
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("bad flag for " + key + ": " + v);
}

std::string opt(const std::optional<double>& v) {
  return v ? fmt::format("{:.10g}", *v) : std::string();
}

}  // namespace

void ExperimentConfig::validate() const {
  if (T < 1) throw ConfigError("T must be at least 1");
  if (D.empty()) throw ConfigError("D list must be nonempty");
  for (int d : D)
    if (d < 1) throw ConfigError("D values must be positive");
  if (N < 1) throw ConfigError("N must be at least 1");
  if (iterations < 1) throw ConfigError("iterations must be positive");
  if (replicates < 1) throw ConfigError("replicates must be positive");
  if (burn_in < 0) throw ConfigError("burn_in must be non-negative");
  if (lag < 0) throw ConfigError("lag must be non-negative");
  if (threads < 0) throw ConfigError("threads must be non-negative");
  kernel_config().validate(T);
  if (ell.empty()) throw ConfigError("ell must have at least one entry");
  preset_spec(model, 1, 1);
}

std::string ExperimentConfig::variant() const {
  if (algorithm == Algorithm::rwehmm) return "ffbs";
  return to_string(selection) + "+" + to_string(index_selection);
}

KernelConfig ExperimentConfig::kernel_config() const {
  KernelConfig k;
  k.N = N;
  k.selection = selection;
  k.index_selection = index_selection;
  k.ell = ell;
  return k;
}

void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& v) {
  if (key == "algorithm") c.algorithm = parse_algorithm(v);
  else if (key == "selection") c.selection = parse_selection(v);
  else if (key == "index_selection") c.index_selection = parse_index_selection(v);
  else if (key == "model") c.model = v;
  else if (key == "observations") c.observations = v;
  else if (key == "T") c.T = static_cast<int>(to_int(key, v));
  else if (key == "D") {
    c.D.clear();
    for (const auto& s : split(v, ',')) c.D.push_back(static_cast<int>(to_int(key, s)));
  } else if (key == "N") c.N = static_cast<int>(to_int(key, v));
  else if (key == "ell") {
    c.ell.clear();
    for (const auto& s : split(v, ',')) c.ell.push_back(to_double(key, s));
  } else if (key == "iterations") c.iterations = static_cast<int>(to_int(key, v));
  else if (key == "replicates") c.replicates = static_cast<int>(to_int(key, v));
  else if (key == "burn_in") c.burn_in = static_cast<int>(to_int(key, v));
  else if (key == "lag") c.lag = static_cast<int>(to_int(key, v));
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(to_int(key, v));
  else if (key == "output_dir") c.output_dir = v;
  else if (key == "output") c.output = v;
  else if (key == "threads") c.threads = static_cast<int>(to_int(key, v));
  else if (key == "plot") c.plot = to_bool(key, v);
  else throw ConfigError("unknown configuration key: " + key);
}

void apply_override(ExperimentConfig& cfg, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) throw ConfigError("override must be key=value: " + kv);
  set_config_value(cfg, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.find('=') == std::string::npos)
      throw ConfigError(fmt::format("line {}: expected key=value", lineno));
    apply_override(base, line);
  }
  return base;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<double> load_observations_csv(const std::string& path, int T, int D) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read observations: " + path);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "t,d,value")
    throw ConfigError("observations CSV must start with header t,d,value");
  std::vector<double> y(static_cast<std::size_t>(T) * D, 0.0);
  std::vector<char> seen(y.size(), 0);
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 3) throw ConfigError("malformed observation row: " + line);
    const long long t = to_int("t", f[0]), d = to_int("d", f[1]);
    const double v = to_double("value", f[2]);
    if (t < 1 || d < 1) throw ConfigError("observation indices are 1-based");
    if (t > T || d > D) continue;
    const std::size_t i = static_cast<std::size_t>(t - 1) * D + (d - 1);
    y[i] = v;
    seen[i] = 1;
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw ConfigError("observations CSV does not cover every (t, d)");
  return y;
}

std::vector<StatsAggregate> run_study_aggregates(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t nD = cfg.D.size(), R = cfg.replicates;
  std::vector<StatsAggregate> per_task(nD * R);
  const KernelConfig kc = cfg.kernel_config();
  parallel_for(nD * R, cfg.threads > 0 ? cfg.threads : default_thread_count(), [&](std::size_t i) {
    const int D = cfg.D[i / R];
    const std::uint64_t r = i % R;
    LgssmSpec spec = preset_spec(cfg.model, cfg.T, D);
    if (!cfg.observations.empty()) {
      spec.y = load_observations_csv(cfg.observations, cfg.T, D);
    } else if (preset_simulates_observations(cfg.model)) {
      Rng obs = Rng::substream(cfg.seed, "obs", {static_cast<std::uint64_t>(D), r});
      spec.y = simulate_observations(spec, obs);
    }
    const KalmanResult k = kalman_smooth(spec);
    Rng init = Rng::substream(cfg.seed, "init", {static_cast<std::uint64_t>(D), r});
    Path path = ffbs_exact_sample(spec, k, init);
    auto kernel = make_kernel(cfg.algorithm, make_lgssm_model(spec), kc);
    Rng rng = Rng::substream(cfg.seed, "chain", {static_cast<std::uint64_t>(D), r});
    for (int l = 0; l < cfg.burn_in; ++l) kernel->update(path, rng);
    ChainStats stats(cfg.T, cfg.lag > 0 ? cfg.lag : D);
    Path old = path;
    for (int l = 0; l < cfg.iterations; ++l) {
      old.x = path.x;
      kernel->update(path, rng);
      stats.record_update(kernel->info(), old, path);
    }
    per_task[i] = stats.aggregate();
  });
  std::vector<StatsAggregate> out(nD);
  for (std::size_t di = 0; di < nD; ++di)
    for (std::size_t r = 0; r < R; ++r) out[di].merge(per_task[di * R + r]);
  return out;
}

std::vector<ExperimentRow> run_study(const ExperimentConfig& cfg) {
  const auto aggs = run_study_aggregates(cfg);
  std::vector<ExperimentRow> rows;
  const KernelConfig kc = cfg.kernel_config();
  for (std::size_t di = 0; di < cfg.D.size(); ++di) {
    for (const SummaryRow& s : aggs[di].finalize()) {
      ExperimentRow r;
      r.algorithm = to_string(cfg.algorithm);
      r.variant = cfg.variant();
      r.T = cfg.T;
      r.D = cfg.D[di];
      r.N = cfg.N;
      r.ell = kc.ell_at(s.t - 1);
      r.summary = s;
      r.lag = cfg.lag > 0 ? cfg.lag : cfg.D[di];
      r.seed = cfg.seed;
      rows.push_back(r);
    }
  }
  return rows;
}

std::string diagnostics_csv_header() {
  return "algorithm,variant,T,D,N,ell,t,accept_rate,esjd,ess_resample,ess_backward,autocorr_lag,"
         "autocorr,replicates,seed";
}

std::string diagnostics_csv(const std::vector<ExperimentRow>& rows) {
  std::string out = diagnostics_csv_header() + "\n";
  for (const auto& r : rows) {
    const auto& s = r.summary;
    out += fmt::format("{},{},{},{},{},{:.10g},{},{},{},{},{},{},{},{},{}\n", r.algorithm, r.variant,
                       r.T, r.D, r.N, r.ell, s.t, opt(s.accept_rate), opt(s.esjd),
                       opt(s.ess_resample), opt(s.ess_backward), r.lag, opt(s.autocorr),
                       s.replicates, r.seed);
  }
  return out;
}

std::vector<std::string> run_experiment(const ExperimentConfig& cfg) {
  const auto rows = run_study(cfg);
  std::filesystem::create_directories(cfg.output_dir);
  const std::string path = (std::filesystem::path(cfg.output_dir) / cfg.output).string();
  {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << diagnostics_csv(rows);
  }
  std::vector<std::string> written{path};
  if (cfg.plot) {
    const auto svgs = plot_csv({path}, cfg.output_dir);
    written.insert(written.end(), svgs.begin(), svgs.end());
  }
  return written;
}

}  // namespace rwsmc
