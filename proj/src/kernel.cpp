#include "rwsmc/kernel.hpp"

#include <algorithm>
#include <cmath>

#include "rwsmc/csmc.hpp"
#include "rwsmc/error.hpp"
#include "rwsmc/rwcsmc.hpp"
#include "rwsmc/rwehmm.hpp"

namespace rwsmc {

Algorithm parse_algorithm(const std::string& s) {
  if (s == "icsmc") return Algorithm::icsmc;
  if (s == "rwehmm") return Algorithm::rwehmm;
  if (s == "rwcsmc") return Algorithm::rwcsmc;
  throw ConfigError("unknown algorithm: " + s);
}

SelectionVariant parse_selection(const std::string& s) {
  if (s == "boltzmann") return SelectionVariant::boltzmann;
  if (s == "forced_move" || s == "forced-move") return SelectionVariant::forced_move;
  throw ConfigError("unknown selection variant: " + s);
}

IndexSelection parse_index_selection(const std::string& s) {
  if (s == "ancestral_trace" || s == "ancestral-trace" || s == "trace") return IndexSelection::ancestral_trace;
  if (s == "backward_sampling" || s == "backward-sampling" || s == "bs") return IndexSelection::backward_sampling;
  if (s == "ancestor_sampling" || s == "ancestor-sampling" || s == "as") return IndexSelection::ancestor_sampling;
  throw ConfigError("unknown index selection: " + s);
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::icsmc: return "icsmc";
    case Algorithm::rwehmm: return "rwehmm";
    case Algorithm::rwcsmc: return "rwcsmc";
  }
  return "?";
}

std::string to_string(SelectionVariant v) {
  return v == SelectionVariant::boltzmann ? "boltzmann" : "forced_move";
}

std::string to_string(IndexSelection v) {
  switch (v) {
    case IndexSelection::ancestral_trace: return "ancestral_trace";
    case IndexSelection::backward_sampling: return "backward_sampling";
    case IndexSelection::ancestor_sampling: return "ancestor_sampling";
  }
  return "?";
}

void KernelConfig::validate(int T) const {
  if (N < 1) throw ConfigError("N must be at least 1");
  if (ell.empty()) return;
  if (ell.size() != 1 && ell.size() != static_cast<std::size_t>(T))
    throw ConfigError("ell must have 1 or T entries");
  for (double v : ell)
    if (!(v > 0) || !std::isfinite(v)) throw ConfigError("ell entries must be positive");
}

Kernel::Kernel(const ProductModel& model, const KernelConfig& cfg)
    : model_(model), cfg_(cfg), cloud_(model.T(), cfg.N, model.D()) {
  cfg_.validate(model.T());
  const int T = model.T(), N1 = cfg.N + 1;
  if (!cfg_.ell.empty())
    for (int t = 0; t < T; ++t) cloud_.ell.push_back(cfg_.ell_at(t));
  auto& g = info_.genealogy;
  g.T = T;
  g.N = cfg.N;
  g.selected.assign(T, 0);
  g.accepted.assign(T, 0);
  info_.resample_weights.assign(static_cast<std::size_t>(T) * N1, 0.0);
  info_.backward_weights.assign(static_cast<std::size_t>(T) * N1, 0.0);
  lw_.resize(N1);
  scratch_.resize(N1);
}

void Kernel::check_path(const Path& path) const {
  if (path.T != model_.T() || path.D != model_.D())
    throw ConfigError("path shape does not match the model");
}

void Kernel::write_selected(Path& path) {
  auto& g = info_.genealogy;
  const int D = model_.D();
  for (int t = 0; t < model_.T(); ++t) {
    g.accepted[t] = g.selected[t] != 0;
    if (g.selected[t] != 0) std::copy_n(cloud_.at(t, g.selected[t]), D, path.row(t));
  }
}

std::unique_ptr<Kernel> make_kernel(Algorithm a, const ProductModel& model,
                                    const KernelConfig& cfg) {
  switch (a) {
    case Algorithm::icsmc: return std::make_unique<IcsmcKernel>(model, cfg);
    case Algorithm::rwehmm: return std::make_unique<RwehmmKernel>(model, cfg);
    case Algorithm::rwcsmc: return std::make_unique<RwcsmcKernel>(model, cfg);
  }
  throw ConfigError("unknown algorithm");
}

}  // namespace rwsmc
