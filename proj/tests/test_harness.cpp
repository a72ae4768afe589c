#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "rwsmc/error.hpp"
#include "rwsmc/experiment.hpp"
#include "rwsmc/plot.hpp"
#include "rwsmc/validate.hpp"

using namespace rwsmc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rwsmc_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string l; std::getline(ss, l);) out.push_back(l);
  return out;
}

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
  return n;
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.T = 4;
  c.D = {2, 3};
  c.N = 3;
  c.iterations = 30;
  c.replicates = 3;
  c.seed = 5;
  c.threads = 1;
  return c;
}

}  // namespace

TEST(Config, ParsesKeysAndComments) {
  const auto c = parse_config(
      "# study\n"
      "algorithm = icsmc\n"
      "selection=forced-move  # trailing\n"
      "index_selection=backward-sampling\n"
      "T=7\nD=2, 16,64\nN=15\nell=0.5,1\niterations=100\nreplicates=4\nseed=42\nplot=true\n");
  EXPECT_EQ(c.algorithm, Algorithm::icsmc);
  EXPECT_EQ(c.selection, SelectionVariant::forced_move);
  EXPECT_EQ(c.index_selection, IndexSelection::backward_sampling);
  EXPECT_EQ(c.T, 7);
  EXPECT_EQ(c.D, (std::vector<int>{2, 16, 64}));
  EXPECT_EQ(c.N, 15);
  EXPECT_EQ(c.ell, (std::vector<double>{0.5, 1.0}));
  EXPECT_EQ(c.iterations, 100);
  EXPECT_EQ(c.replicates, 4);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_TRUE(c.plot);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config("colour=red\n"), ConfigError);
  EXPECT_THROW(parse_config("T=three\n"), ConfigError);
  EXPECT_THROW(parse_config("T=2.5\n"), ConfigError);
  EXPECT_THROW(parse_config("just words\n"), ConfigError);
  EXPECT_THROW(parse_config("algorithm=mcmc\n"), ConfigError);
  EXPECT_THROW(parse_config("plot=maybe\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/rwsmc.cfg"), ConfigError);
  ExperimentConfig c;
  EXPECT_THROW(apply_override(c, "N"), ConfigError);
  apply_override(c, "N=9");
  EXPECT_EQ(c.N, 9);
  c.D.clear();
  EXPECT_THROW(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.T = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.ell = {1.0, 2.0};
  EXPECT_THROW(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.model = "nope";
  EXPECT_THROW(c.validate(), std::exception);
}

TEST(Config, VariantNames) {
  ExperimentConfig c;
  EXPECT_EQ(c.variant(), "boltzmann+ancestral_trace");
  c.algorithm = Algorithm::rwehmm;
  EXPECT_EQ(c.variant(), "ffbs");
}

TEST(Study, SmokeRunHasOneRowPerDAndT) {
  ExperimentConfig c = small_config();
  c.iterations = 1;
  c.replicates = 1;
  c.output_dir = scratch("smoke").string();
  const auto written = run_experiment(c);
  ASSERT_EQ(written.size(), 1u);
  const auto ls = lines(slurp(written[0]));
  ASSERT_EQ(ls.size(), 1u + 2 * 4);
  EXPECT_EQ(ls[0], diagnostics_csv_header());
  for (std::size_t i = 1; i < ls.size(); ++i) EXPECT_EQ(count(ls[i], ","), 14u) << ls[i];
  EXPECT_EQ(ls[1].substr(0, 33), "rwcsmc,boltzmann+ancestral_trace,");
}

TEST(Study, RerunIsByteIdentical) {
  ExperimentConfig c = small_config();
  c.output_dir = scratch("rerun_a").string();
  const auto a = slurp(run_experiment(c)[0]);
  c.output_dir = scratch("rerun_b").string();
  const auto b = slurp(run_experiment(c)[0]);
  EXPECT_EQ(a, b);
}

TEST(Study, IndependentOfThreadCount) {
  ExperimentConfig c = small_config();
  c.algorithm = Algorithm::icsmc;
  c.index_selection = IndexSelection::backward_sampling;
  const auto a = diagnostics_csv(run_study(c));
  c.threads = 3;
  const auto b = diagnostics_csv(run_study(c));
  EXPECT_EQ(a, b);
}

TEST(Study, RowsCarryCountersAndLag) {
  ExperimentConfig c = small_config();
  const auto rows = run_study(c);
  ASSERT_EQ(rows.size(), 8u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.summary.update_count, 90);
    EXPECT_LE(r.summary.accept_count, r.summary.update_count);
    EXPECT_EQ(r.summary.replicates, 3);
    EXPECT_EQ(r.lag, r.D);
    EXPECT_TRUE(r.summary.ess_resample.has_value());
    EXPECT_FALSE(r.summary.ess_backward.has_value());
  }
}

TEST(Observations, LoadAndValidate) {
  const auto dir = scratch("obs");
  const auto good = dir / "y.csv";
  {
    std::ofstream o(good);
    o << "t,d,value\n";
    for (int t = 1; t <= 4; ++t)
      for (int d = 1; d <= 3; ++d) o << t << "," << d << "," << 0.1 * t - 0.01 * d << "\n";
  }
  const auto y = load_observations_csv(good.string(), 4, 2);
  ASSERT_EQ(y.size(), 8u);
  EXPECT_NEAR(y[1 * 2 + 1], 0.2 - 0.02, 1e-15);

  ExperimentConfig c = small_config();
  c.observations = good.string();
  c.replicates = 1;
  EXPECT_EQ(run_study(c).size(), 8u);

  const auto partial = dir / "partial.csv";
  {
    std::ofstream o(partial);
    o << "t,d,value\n1,1,0.5\n";
  }
  EXPECT_THROW(load_observations_csv(partial.string(), 2, 1), ConfigError);
  const auto header = dir / "header.csv";
  {
    std::ofstream o(header);
    o << "time,dim,y\n1,1,0.5\n";
  }
  EXPECT_THROW(load_observations_csv(header.string(), 1, 1), ConfigError);
  const auto zero = dir / "zero.csv";
  {
    std::ofstream o(zero);
    o << "t,d,value\n0,1,0.5\n";
  }
  EXPECT_THROW(load_observations_csv(zero.string(), 1, 1), ConfigError);
  EXPECT_THROW(load_observations_csv((dir / "missing.csv").string(), 1, 1), ConfigError);
}

TEST(Plot, EmptyBodyWritesNothing) {
  const auto dir = scratch("plot_empty");
  const auto csv = dir / "empty.csv";
  {
    std::ofstream o(csv);
    o << diagnostics_csv_header() << "\n";
  }
  const auto out = dir / "svg";
  EXPECT_THROW(plot_csv({csv.string()}, out.string()), ConfigError);
  EXPECT_FALSE(fs::exists(out) && !fs::is_empty(out));
}

TEST(Plot, MalformedInputs) {
  const auto dir = scratch("plot_bad");
  const auto a = dir / "a.csv", b = dir / "b.csv";
  {
    std::ofstream o(a);
    o << "x,y\n1,2\n";
  }
  {
    std::ofstream o(b);
    o << diagnostics_csv_header() << "\nrwcsmc,v,2,2\n";
  }
  EXPECT_THROW(plot_csv({a.string()}, dir.string()), ConfigError);
  EXPECT_THROW(plot_csv({b.string()}, dir.string()), ConfigError);
  EXPECT_THROW(plot_csv({(dir / "none.csv").string()}, dir.string()), std::exception);
}

TEST(Plot, OneCurvePerDOrderedInLegend) {
  const auto dir = scratch("plot_curves");
  ExperimentConfig c = small_config();
  c.D = {16, 2};
  c.output_dir = dir.string();
  c.plot = true;
  const auto written = run_experiment(c);
  ASSERT_GT(written.size(), 1u);
  bool saw_accept = false;
  for (std::size_t i = 1; i < written.size(); ++i) {
    const auto svg = slurp(written[i]);
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_EQ(count(svg, "<polyline"), 2u);
    const auto p2 = svg.find(">D=2<"), p16 = svg.find(">D=16<");
    ASSERT_NE(p2, std::string::npos);
    ASSERT_NE(p16, std::string::npos);
    EXPECT_LT(p2, p16);
    saw_accept = saw_accept || written[i].find("accept_rate") != std::string::npos;
  }
  EXPECT_TRUE(saw_accept);

  ExperimentConfig one = small_config();
  one.D = {3};
  one.output_dir = scratch("plot_one").string();
  one.plot = true;
  for (const auto& p : run_experiment(one))
    if (p.ends_with(".svg")) {
      EXPECT_EQ(count(slurp(p), "<polyline"), 1u);
    }
}

TEST(Plot, RenderIsPure) {
  const std::vector<PlotCurve> curves = {{"D=2", {1, 2, 3}, {0.1, 0.2, 0.3}}};
  EXPECT_EQ(render_svg("title", "rate", curves), render_svg("title", "rate", curves));
}

TEST(Validate, SuitesAndReport) {
  const auto names = suite_names();
  EXPECT_NE(std::find(names.begin(), names.end(), "all"), names.end());
  EXPECT_THROW(run_suite("nope"), ConfigError);
  const auto r = run_suite("selection");
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].id, 1);
  EXPECT_TRUE(r[0].pass);
  const auto b = run_suite("bounds");
  ASSERT_EQ(b.size(), 1u);
  EXPECT_TRUE(b[0].pass);
  const auto rep = format_report(b);
  EXPECT_NE(rep.find("0.172195"), std::string::npos);
  EXPECT_NE(rep.find("0.15"), std::string::npos);
}
