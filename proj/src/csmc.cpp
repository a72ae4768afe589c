#include "rwsmc/csmc.hpp"

#include <algorithm>
#include <cmath>
#include <span>

#include "rwsmc/error.hpp"
#include "rwsmc/selection.hpp"

namespace rwsmc {

IcsmcKernel::IcsmcKernel(const ProductModel& model, const KernelConfig& cfg) : Kernel(model, cfg) {
  const int T = model.T(), N1 = cfg.N + 1;
  log_g_.assign(static_cast<std::size_t>(T) * N1, 0.0);
  p_.resize(N1);
  info_.genealogy.ancestors.assign(static_cast<std::size_t>(T - 1) * N1, 0);
  info_.has_backward = cfg_.index_selection == IndexSelection::backward_sampling;
}

void IcsmcKernel::update(Path& path, Rng& rng) {
  check_path(path);
  const int T = model_.T(), D = model_.D(), N = cfg_.N, N1 = N + 1;
  auto& gen = info_.genealogy;
  auto lg = [&](int t) { return std::span<double>(log_g_.data() + static_cast<std::size_t>(t) * N1, N1); };
  const std::span<double> lw(lw_), sc(scratch_), p(p_);

  for (int t = 0; t < T; ++t) {
    if (t > 0) {
      std::span<double> rp(resample_row(t - 1), N1);
      boltzmann_full(lg(t - 1), rp, sc);
      for (int n = 1; n <= N; ++n) gen.ancestor(t - 1, n) = sample_index(rp, rng);
      if (cfg_.index_selection == IndexSelection::ancestor_sampling) {
        for (int n = 0; n <= N; ++n)
          lw[n] = lg(t - 1)[n] + log_M(t, cloud_.at(t - 1, n), path.row(t));
        boltzmann_full(lw, p, sc);
        gen.ancestor(t - 1, 0) = sample_index(p, rng);
      } else {
        gen.ancestor(t - 1, 0) = 0;
      }
    }
    std::copy_n(path.row(t), D, cloud_.at(t, 0));
    for (int n = 1; n <= N; ++n)
      model_.sample_M(t, t > 0 ? cloud_.at(t - 1, gen.ancestor(t - 1, n)) : nullptr,
                      cloud_.at(t, n), rng);
    for (int n = 0; n <= N; ++n) lg(t)[n] = log_G(t, cloud_.at(t, n));
    if (!std::isfinite(lg(t)[0])) throw ModelError("reference path has zero potential");
  }

  std::span<double> fin(resample_row(T - 1), N1);
  if (cfg_.selection == SelectionVariant::forced_move)
    rosenbluth_teller_full(lg(T - 1), fin, sc);
  else
    boltzmann_full(lg(T - 1), fin, sc);
  gen.selected[T - 1] = sample_index(fin, rng);
  if (info_.has_backward) std::copy(fin.begin(), fin.end(), backward_row(T - 1));

  for (int t = T - 2; t >= 0; --t) {
    if (cfg_.index_selection == IndexSelection::backward_sampling) {
      const double* next = cloud_.at(t + 1, gen.selected[t + 1]);
      for (int n = 0; n <= N; ++n) lw[n] = lg(t)[n] + log_M(t + 1, cloud_.at(t, n), next);
      std::span<double> bp(backward_row(t), N1);
      boltzmann_full(lw, bp, sc);
      gen.selected[t] = sample_index(bp, rng);
    } else {
      gen.selected[t] = gen.ancestor(t, gen.selected[t + 1]);
    }
  }
  write_selected(path);
}

std::pair<Path, GenealogyRecord> icsmc_update(const ProductModel& model, const Path& path,
                                              const KernelConfig& cfg, Rng& rng) {
  IcsmcKernel k(model, cfg);
  Path out = path;
  k.update(out, rng);
  return {out, k.info().genealogy};
}

}  // namespace rwsmc
