#pragma once

#include <string>
#include <vector>

namespace rwsmc {

// Renders one SVG per (algorithm, variant, quantity) panel found in the
// diagnostics CSVs into out_dir. Returns the written paths. Nothing is written
// if any input is malformed or carries no rows.
std::vector<std::string> plot_csv(const std::vector<std::string>& csv_paths,
                                  const std::string& out_dir);

// The SVG document for a single panel; exposed for tests.
struct PlotCurve {
  std::string label;
  std::vector<double> x, y;
};
std::string render_svg(const std::string& title, const std::string& ylabel,
                       const std::vector<PlotCurve>& curves);

}  // namespace rwsmc
