#include "rwsmc/diagnostics.hpp"

#include "rwsmc/error.hpp"
#include "rwsmc/selection.hpp"

namespace rwsmc {

StatsAggregate::StatsAggregate(int T_, int lag_)
    : T(T_),
      lag(lag_),
      accept(T_, 0),
      updates(T_, 0),
      esjd_sum(T_, 0.0),
      ess_resample_sum(T_, 0.0),
      ess_backward_sum(T_, 0.0),
      ess_resample_n(T_, 0),
      ess_backward_n(T_, 0),
      autocorr_sum(T_, 0.0),
      autocorr_n(T_, 0) {}

void StatsAggregate::merge(const StatsAggregate& o) {
  if (T == 0) {
    *this = o;
    return;
  }
  if (o.T != T) throw DiagnosticsError("cannot merge statistics with different T");
  chains += o.chains;
  for (int t = 0; t < T; ++t) {
    accept[t] += o.accept[t];
    updates[t] += o.updates[t];
    esjd_sum[t] += o.esjd_sum[t];
    ess_resample_sum[t] += o.ess_resample_sum[t];
    ess_backward_sum[t] += o.ess_backward_sum[t];
    ess_resample_n[t] += o.ess_resample_n[t];
    ess_backward_n[t] += o.ess_backward_n[t];
    autocorr_sum[t] += o.autocorr_sum[t];
    autocorr_n[t] += o.autocorr_n[t];
  }
}

std::vector<SummaryRow> StatsAggregate::finalize() const {
  std::vector<SummaryRow> rows(T);
  for (int t = 0; t < T; ++t) {
    auto& r = rows[t];
    r.t = t + 1;
    r.accept_count = accept[t];
    r.update_count = updates[t];
    r.replicates = chains;
    if (updates[t] > 0) {
      r.accept_rate = static_cast<double>(accept[t]) / updates[t];
      r.esjd = esjd_sum[t] / updates[t];
    }
    if (ess_resample_n[t] > 0) r.ess_resample = ess_resample_sum[t] / ess_resample_n[t];
    if (ess_backward_n[t] > 0) r.ess_backward = ess_backward_sum[t] / ess_backward_n[t];
    if (autocorr_n[t] > 0) r.autocorr = autocorr_sum[t] / autocorr_n[t];
  }
  return rows;
}

ChainStats::ChainStats(int T, int lag) : T_(T), lag_(lag), agg_(T, lag), series_(T) {
  if (T < 1) throw ConfigError("T must be at least 1");
  if (lag < 1) throw ConfigError("autocorrelation lag must be at least 1");
  agg_.chains = 1;
  for (auto& s : series_) s.ring.assign(lag + 1, 0.0);
}

void ChainStats::push_monitored(int t, double x) {
  Series& s = series_[t];
  if (s.n == 0) s.shift = x;
  const double v = x - s.shift;
  const std::size_t R = s.ring.size();
  if (s.n >= lag_) {
    const double old = s.ring[(s.n - lag_) % R];
    s.sum_xy += old * v;
    s.sum_head += old;
    s.sum_tail += v;
  }
  s.ring[s.n % R] = v;
  ++s.n;
  s.sum += v;
  s.sumsq += v * v;
}

std::optional<double> ChainStats::autocorrelation(int t) const {
  const Series& s = series_[t];
  if (s.n <= lag_) return std::nullopt;
  const double L = static_cast<double>(s.n);
  const double mean = s.sum / L;
  const double g0 = (s.sumsq - L * mean * mean) / L;
  if (!(g0 > 0.0)) return std::nullopt;
  const double gk = (s.sum_xy - mean * (s.sum_head + s.sum_tail) + (L - lag_) * mean * mean) / L;
  return gk / g0;
}

void ChainStats::record_update(const GenealogyRecord& g, const Path& old_path,
                               const Path& new_path, std::span<const double> resample_w,
                               std::span<const double> backward_w) {
  if (g.T != T_ || old_path.T != T_ || new_path.T != T_ || old_path.D != new_path.D)
    throw DiagnosticsError("shape mismatch in record_update");
  const std::size_t N1 = static_cast<std::size_t>(g.N) + 1;
  if (!resample_w.empty() && resample_w.size() != T_ * N1)
    throw DiagnosticsError("resampling weights have the wrong shape");
  if (!backward_w.empty() && backward_w.size() != T_ * N1)
    throw DiagnosticsError("backward weights have the wrong shape");
  for (int t = 0; t < T_; ++t) {
    ++agg_.updates[t];
    agg_.accept[t] += g.selected[t] != 0;
    double j = 0.0;
    for (int d = 0; d < new_path.D; ++d) {
      const double e = new_path(t, d) - old_path(t, d);
      j += e * e;
    }
    agg_.esjd_sum[t] += j;
    if (!resample_w.empty()) {
      agg_.ess_resample_sum[t] += effective_sample_size(resample_w.subspan(t * N1, N1));
      ++agg_.ess_resample_n[t];
    }
    if (!backward_w.empty()) {
      agg_.ess_backward_sum[t] += effective_sample_size(backward_w.subspan(t * N1, N1));
      ++agg_.ess_backward_n[t];
    }
    push_monitored(t, new_path(t, 0));
  }
}

void ChainStats::record_update(const UpdateInfo& info, const Path& old_path,
                               const Path& new_path) {
  record_update(info.genealogy, old_path, new_path, info.resample_weights,
                info.has_backward ? std::span<const double>(info.backward_weights)
                                  : std::span<const double>());
}

StatsAggregate ChainStats::aggregate() const {
  StatsAggregate a = agg_;
  for (int t = 0; t < T_; ++t) {
    if (auto r = autocorrelation(t)) {
      a.autocorr_sum[t] = *r;
      a.autocorr_n[t] = 1;
    }
  }
  return a;
}

}  // namespace rwsmc
