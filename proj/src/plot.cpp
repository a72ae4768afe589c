#include "rwsmc/plot.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include <fmt/format.h>

#include "rwsmc/error.hpp"
#include "rwsmc/experiment.hpp"

namespace rwsmc {

namespace {

constexpr const char* kQuantities[] = {"accept_rate", "esjd", "autocorr", "ess_resample",
                                       "ess_backward"};
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string safe_name(const std::string& s) {
  std::string out;
  for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-') ? c : '_';
  return out;
}

double parse_num(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("malformed number '" + s + "' in " + where);
  }
}

// (D, N) -> quantity -> points
using CurveKey = std::pair<int, int>;
using Points = std::vector<std::pair<double, double>>;
using Panel = std::map<CurveKey, Points>;

std::string tick(double v) { return fmt::format("{:.3g}", v); }

}  // namespace

std::string render_svg(const std::string& title, const std::string& ylabel,
                       const std::vector<PlotCurve>& curves) {
  const double W = 640, H = 420, left = 70, right = 150, top = 40, bottom = 55;
  const double pw = W - left - right, ph = H - top - bottom;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& c : curves)
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      x0 = std::min(x0, c.x[i]);
      x1 = std::max(x1, c.x[i]);
      y0 = std::min(y0, c.y[i]);
      y1 = std::max(y1, c.y[i]);
    }
  if (!(x0 <= x1)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  y0 = std::min(y0, 0.0);
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  y1 += 0.05 * (y1 - y0);
  auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return top + ph - (y - y0) / (y1 - y0) * ph; };

  std::string s = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "viewBox=\"0 0 {} {}\" font-family=\"sans-serif\" font-size=\"12\">\n",
      W, H, W, H);
  s += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", W, H);
  s += fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                   left + pw / 2, xml_escape(title));
  s += fmt::format(
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
      left, top, pw, ph);
  for (int k = 0; k <= 4; ++k) {
    const double yv = y0 + (y1 - y0) * k / 4.0, xv = x0 + (x1 - x0) * k / 4.0;
    s += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#ddd\"/>\n",
                     left, sy(yv), left + pw, sy(yv));
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{}</text>\n", left - 6,
                     sy(yv) + 4, tick(yv));
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", sx(xv),
                     top + ph + 18, tick(xv));
  }
  s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">t</text>\n",
                   left + pw / 2, H - 12);
  s += fmt::format(
      "<text x=\"18\" y=\"{:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2f})\">{}</text>\n",
      top + ph / 2, top + ph / 2, xml_escape(ylabel));
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const char* col = kPalette[c % std::size(kPalette)];
    std::string pts;
    for (std::size_t i = 0; i < curves[c].x.size(); ++i)
      pts += fmt::format("{:.2f},{:.2f} ", sx(curves[c].x[i]), sy(curves[c].y[i]));
    if (!pts.empty()) pts.pop_back();
    s += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                     col, pts);
    const double ly = top + 10 + 18 * c;
    s += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\" "
                     "stroke-width=\"2\"/>\n",
                     left + pw + 12, ly, left + pw + 36, ly, col);
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n", left + pw + 42, ly + 4,
                     xml_escape(curves[c].label));
  }
  s += "</svg>\n";
  return s;
}

std::vector<std::string> plot_csv(const std::vector<std::string>& csv_paths,
                                  const std::string& out_dir) {
  if (csv_paths.empty()) throw ConfigError("no CSV files given");
  const auto header = split_csv(diagnostics_csv_header());
  std::map<std::string, int> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = static_cast<int>(i);

  // (algorithm, variant, quantity) -> panel
  std::map<std::tuple<std::string, std::string, std::string>, Panel> panels;
  for (const auto& path : csv_paths) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path);
    std::string line;
    if (!std::getline(in, line) || split_csv(line) != header)
      throw ConfigError("unexpected CSV header in " + path);
    int lineno = 1, rows = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line == "\r") continue;
      const auto f = split_csv(line);
      const std::string where = fmt::format("{}:{}", path, lineno);
      if (f.size() != header.size()) throw ConfigError("wrong field count at " + where);
      const int D = static_cast<int>(parse_num(f[col["D"]], where));
      const int N = static_cast<int>(parse_num(f[col["N"]], where));
      const double t = parse_num(f[col["t"]], where);
      for (const char* q : kQuantities) {
        const std::string& v = f[col[q]];
        if (v.empty()) continue;
        panels[{f[col["algorithm"]], f[col["variant"]], q}][{D, N}].emplace_back(t,
                                                                               parse_num(v, where));
      }
      ++rows;
    }
    if (rows == 0) throw ConfigError("no data rows in " + path);
  }

  std::vector<std::pair<std::string, std::string>> docs;
  for (auto& [key, panel] : panels) {
    const auto& [alg, var, q] = key;
    bool multiN = false;
    for (const auto& [ck, pts] : panel) multiN |= ck.second != panel.begin()->first.second;
    std::vector<PlotCurve> curves;
    for (auto& [ck, pts] : panel) {
      std::sort(pts.begin(), pts.end());
      PlotCurve c;
      c.label = multiN ? fmt::format("D={} N={}", ck.first, ck.second) : fmt::format("D={}", ck.first);
      for (const auto& [x, y] : pts) {
        c.x.push_back(x);
        c.y.push_back(y);
      }
      curves.push_back(std::move(c));
    }
    const std::string name = safe_name(alg + "_" + var + "_" + q) + ".svg";
    docs.emplace_back((std::filesystem::path(out_dir) / name).string(),
                      render_svg(alg + " " + var, q, curves));
  }
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> written;
  for (const auto& [p, doc] : docs) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p);
    out << doc;
    written.push_back(p);
  }
  return written;
}

}  // namespace rwsmc
