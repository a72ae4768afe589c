#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rwsmc/diagnostics.hpp"
#include "rwsmc/kernel.hpp"
#include "rwsmc/model.hpp"

namespace rwsmc {

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::rwcsmc;
  SelectionVariant selection = SelectionVariant::boltzmann;
  IndexSelection index_selection = IndexSelection::ancestral_trace;
  std::string model = "gauss-rw";
  std::string observations;  // CSV with header t,d,value; empty: preset/simulated
  int T = 25;
  std::vector<int> D = {2, 16, 64, 256};
  int N = 31;
  std::vector<double> ell = {1.0};
  int iterations = 5000;
  int replicates = 20;
  int burn_in = 0;
  int lag = 0;  // 0: lag = D
  std::uint64_t seed = 1;
  std::string output_dir = ".";
  std::string output = "diagnostics.csv";
  int threads = 0;  // 0: default_thread_count()
  bool plot = false;

  void validate() const;
  std::string variant() const;
  KernelConfig kernel_config() const;
};

// Flat key=value text; '#' starts a comment. Keys mirror the fields above.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path);
void apply_override(ExperimentConfig& cfg, const std::string& key_value);
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

struct ExperimentRow {
  std::string algorithm, variant;
  int T = 0, D = 0, N = 0;
  double ell = 0.0;
  SummaryRow summary;
  int lag = 0;
  std::uint64_t seed = 0;
};

// Observations for coordinate count D (T x D, row-major) from a CSV file.
std::vector<double> load_observations_csv(const std::string& path, int T, int D);

std::vector<ExperimentRow> run_study(const ExperimentConfig& cfg);
// Pooled statistics per D (same order as cfg.D).
std::vector<StatsAggregate> run_study_aggregates(const ExperimentConfig& cfg);

std::string diagnostics_csv_header();
std::string diagnostics_csv(const std::vector<ExperimentRow>& rows);
// Runs the study and writes output_dir/output (plus SVG panels when cfg.plot).
std::vector<std::string> run_experiment(const ExperimentConfig& cfg);

}  // namespace rwsmc
