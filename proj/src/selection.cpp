#include "rwsmc/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rwsmc/error.hpp"

namespace rwsmc {

namespace {

// Shared scaling: M = max(0, max h), S = sum_n exp(h^n - M).
double shift_of(std::span<const double> h) {
  double m = 0.0;
  for (double v : h) {
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
      throw ModelError("log weights must be finite or -inf");
    m = std::max(m, v);
  }
  return m;
}

void complement_into_zero(std::span<double> p) {
  double s = 0.0;
  for (std::size_t n = 1; n < p.size(); ++n) s += p[n];
  p[0] = std::clamp(1.0 - s, 0.0, 1.0);
}

}  // namespace

void boltzmann(std::span<const double> h, std::span<double> p) {
  const double m = shift_of(h);
  const double e0 = std::exp(-m);
  double s = 0.0;
  for (std::size_t n = 0; n < h.size(); ++n) {
    p[n + 1] = std::exp(h[n] - m);
    s += p[n + 1];
  }
  const double z = e0 + s;
  for (std::size_t n = 0; n < h.size(); ++n) p[n + 1] /= z;
  complement_into_zero(p.first(h.size() + 1));
}

void rosenbluth_teller(std::span<const double> h, std::span<double> p) {
  const double m = shift_of(h);
  const double e0 = std::exp(-m);
  double s = 0.0;
  for (std::size_t n = 0; n < h.size(); ++n) {
    p[n + 1] = std::exp(h[n] - m);
    s += p[n + 1];
  }
  // 1 - 1 ^ e^{h} scaled by e^{-M}; zero whenever h >= 0.
  for (std::size_t n = 0; n < h.size(); ++n) {
    double c = -std::expm1(std::min(0.0, h[n]));
    p[n + 1] /= e0 * c + s;
  }
  complement_into_zero(p.first(h.size() + 1));
}

std::vector<double> boltzmann(std::span<const double> h) {
  std::vector<double> p(h.size() + 1);
  boltzmann(h, p);
  return p;
}

std::vector<double> rosenbluth_teller(std::span<const double> h) {
  std::vector<double> p(h.size() + 1);
  rosenbluth_teller(h, p);
  return p;
}

namespace {

std::span<double> relative(std::span<const double> lw, std::span<double> scratch) {
  if (!std::isfinite(lw[0])) throw ModelError("reference log weight is not finite");
  const std::size_t n = lw.size() - 1;
  for (std::size_t i = 0; i < n; ++i) scratch[i] = lw[i + 1] - lw[0];
  return scratch.first(n);
}

}  // namespace

void boltzmann_full(std::span<const double> lw, std::span<double> p, std::span<double> scratch) {
  boltzmann(relative(lw, scratch), p);
}

void rosenbluth_teller_full(std::span<const double> lw, std::span<double> p,
                            std::span<double> scratch) {
  rosenbluth_teller(relative(lw, scratch), p);
}

int sample_index(std::span<const double> p, double u) {
  double acc = 0.0;
  int last = 0;
  for (std::size_t n = 0; n < p.size(); ++n) {
    if (p[n] > 0.0) last = static_cast<int>(n);
    acc += p[n];
    if (u < acc) return static_cast<int>(n);
  }
  return last;
}

int sample_index(std::span<const double> p, Rng& rng) { return sample_index(p, rng.uniform()); }

double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

double effective_sample_size(std::span<const double> w) {
  double s = 0.0, s2 = 0.0;
  for (double v : w) {
    s += v;
    s2 += v * v;
  }
  if (std::abs(s - 1.0) > 1e-8) throw DiagnosticsError("weights are not normalised");
  return 1.0 / s2;
}

}  // namespace rwsmc
