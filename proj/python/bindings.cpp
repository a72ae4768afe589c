#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rwsmc/error.hpp"
#include "rwsmc/experiment.hpp"
#include "rwsmc/limit_laws.hpp"
#include "rwsmc/model.hpp"
#include "rwsmc/selection.hpp"
#include "rwsmc/validate.hpp"

namespace py = pybind11;
using namespace rwsmc;

namespace {

py::dict row_dict(const ExperimentRow& r) {
  py::dict d;
  d["algorithm"] = r.algorithm;
  d["variant"] = r.variant;
  d["T"] = r.T;
  d["D"] = r.D;
  d["N"] = r.N;
  d["ell"] = r.ell;
  d["t"] = r.summary.t;
  d["accept_count"] = r.summary.accept_count;
  d["update_count"] = r.summary.update_count;
  d["accept_rate"] = r.summary.accept_rate;
  d["esjd"] = r.summary.esjd;
  d["ess_resample"] = r.summary.ess_resample;
  d["ess_backward"] = r.summary.ess_backward;
  d["autocorr_lag"] = r.lag;
  d["autocorr"] = r.summary.autocorr;
  d["replicates"] = r.summary.replicates;
  d["seed"] = r.seed;
  return d;
}

ValidateOptions options(std::uint64_t seed, int threads) {
  ValidateOptions o;
  o.seed = seed;
  o.threads = threads;
  return o;
}

}  // namespace

PYBIND11_MODULE(_rwsmc, m) {
  m.doc() = "Random-walk conditional SMC kernels";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ModelError>(m, "ModelError", PyExc_ValueError);
  py::register_exception<DiagnosticsError>(m, "DiagnosticsError", PyExc_RuntimeError);
  py::register_exception<CapabilityError>(m, "CapabilityError", PyExc_RuntimeError);

  using Vec = std::vector<double>;
  m.def("boltzmann", [](const Vec& h) { return boltzmann(h); }, py::arg("h"));
  m.def("rosenbluth_teller", [](const Vec& h) { return rosenbluth_teller(h); }, py::arg("h"));
  m.def("log_sum_exp", [](const Vec& v) { return log_sum_exp(v); }, py::arg("v"));
  m.def("effective_sample_size", [](const Vec& w) { return effective_sample_size(w); },
        py::arg("w"));
  m.def("normal_cdf", &normal_cdf, py::arg("x"));

  py::class_<AnalyticBounds>(m, "AnalyticBounds")
      .def_readonly("ehmm_bound", &AnalyticBounds::ehmm_bound)
      .def_readonly("bs_bound", &AnalyticBounds::bs_bound)
      .def_readonly("no_bs_bound", &AnalyticBounds::no_bs_bound)
      .def_readonly("rwmh_rate", &AnalyticBounds::rwmh_rate);
  m.def("analytic_bounds", &analytic_bounds, py::arg("ell"), py::arg("I"), py::arg("N"),
        py::arg("C") = py::none());

  py::class_<AssumptionQuantities>(m, "AssumptionQuantities")
      .def_readonly("r_T", &AssumptionQuantities::r_T)
      .def_readonly("bound_ok", &AssumptionQuantities::bound_ok);
  m.def("lgssm_assumption_quantities", &lgssm_assumption_quantities, py::arg("T"));
  m.def("steady_filter_variance", &steady_filter_variance);

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_property(
          "algorithm", [](const ExperimentConfig& c) { return to_string(c.algorithm); },
          [](ExperimentConfig& c, const std::string& s) { c.algorithm = parse_algorithm(s); })
      .def_property(
          "selection", [](const ExperimentConfig& c) { return to_string(c.selection); },
          [](ExperimentConfig& c, const std::string& s) { c.selection = parse_selection(s); })
      .def_property(
          "index_selection", [](const ExperimentConfig& c) { return to_string(c.index_selection); },
          [](ExperimentConfig& c, const std::string& s) {
            c.index_selection = parse_index_selection(s);
          })
      .def_readwrite("model", &ExperimentConfig::model)
      .def_readwrite("observations", &ExperimentConfig::observations)
      .def_readwrite("T", &ExperimentConfig::T)
      .def_readwrite("D", &ExperimentConfig::D)
      .def_readwrite("N", &ExperimentConfig::N)
      .def_readwrite("ell", &ExperimentConfig::ell)
      .def_readwrite("iterations", &ExperimentConfig::iterations)
      .def_readwrite("replicates", &ExperimentConfig::replicates)
      .def_readwrite("burn_in", &ExperimentConfig::burn_in)
      .def_readwrite("lag", &ExperimentConfig::lag)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("output_dir", &ExperimentConfig::output_dir)
      .def_readwrite("output", &ExperimentConfig::output)
      .def_readwrite("threads", &ExperimentConfig::threads)
      .def_readwrite("plot", &ExperimentConfig::plot)
      .def("validate", &ExperimentConfig::validate)
      .def("variant", &ExperimentConfig::variant)
      .def("set", [](ExperimentConfig& c, const std::string& key, const std::string& value) {
        set_config_value(c, key, value);
      });
  m.def("parse_config", [](const std::string& text) { return parse_config(text); },
        py::arg("text"));
  m.def("load_config", &load_config, py::arg("path"));

  m.def(
      "run_study",
      [](const ExperimentConfig& cfg) {
        std::vector<ExperimentRow> rows;
        {
          py::gil_scoped_release nogil;
          rows = run_study(cfg);
        }
        py::list out;
        for (const auto& r : rows) out.append(row_dict(r));
        return out;
      },
      py::arg("config"));
  m.def(
      "study_csv",
      [](const ExperimentConfig& cfg) {
        py::gil_scoped_release nogil;
        return diagnostics_csv(run_study(cfg));
      },
      py::arg("config"));
  m.def("run_experiment", &run_experiment, py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("diagnostics_csv_header", &diagnostics_csv_header);

  py::class_<CheckResult>(m, "CheckResult")
      .def_readonly("id", &CheckResult::id)
      .def_readonly("description", &CheckResult::description)
      .def_readonly("passed", &CheckResult::pass)
      .def_readonly("measured", &CheckResult::measured)
      .def_readonly("expected", &CheckResult::expected)
      .def_readonly("seconds", &CheckResult::seconds)
      .def("__repr__", [](const CheckResult& r) {
        return "<CheckResult " + std::to_string(r.id) + (r.pass ? " pass>" : " fail>");
      });
  m.def(
      "run_check",
      [](int id, std::uint64_t seed, int threads) {
        py::gil_scoped_release nogil;
        return run_check(id, options(seed, threads));
      },
      py::arg("id"), py::arg("seed") = ValidateOptions{}.seed, py::arg("threads") = 0);
  m.def(
      "run_suite",
      [](const std::string& suite, std::uint64_t seed, int threads) {
        py::gil_scoped_release nogil;
        return run_suite(suite, options(seed, threads));
      },
      py::arg("suite"), py::arg("seed") = ValidateOptions{}.seed, py::arg("threads") = 0);
  m.def("suite_names", &suite_names);
  m.def("format_report", &format_report, py::arg("results"));
}
