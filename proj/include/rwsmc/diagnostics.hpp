#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rwsmc/kernel.hpp"
#include "rwsmc/model.hpp"

namespace rwsmc {

struct SummaryRow {
  int t = 0;
  std::int64_t accept_count = 0;
  std::int64_t update_count = 0;
  std::optional<double> accept_rate, esjd, ess_resample, ess_backward, autocorr;
  int replicates = 0;
};

// Merged counters of any number of chains. Autocorrelations are averaged over
// chains, everything else pooled.
struct StatsAggregate {
  int T = 0;
  int lag = 0;
  int chains = 0;
  std::vector<std::int64_t> accept, updates;
  std::vector<double> esjd_sum;
  std::vector<double> ess_resample_sum, ess_backward_sum;
  std::vector<std::int64_t> ess_resample_n, ess_backward_n;
  std::vector<double> autocorr_sum;
  std::vector<std::int64_t> autocorr_n;

  StatsAggregate() = default;
  StatsAggregate(int T, int lag);
  void merge(const StatsAggregate& o);
  std::vector<SummaryRow> finalize() const;
};

// Streaming statistics of one chain. The monitored scalar is x_{t,1}.
class ChainStats {
 public:
  ChainStats(int T, int lag);

  // Weight spans are T x (N+1) self-normalised rows, or empty when absent.
  void record_update(const GenealogyRecord& g, const Path& old_path, const Path& new_path,
                     std::span<const double> resample_w = {},
                     std::span<const double> backward_w = {});
  void record_update(const UpdateInfo& info, const Path& old_path, const Path& new_path);
  // Monitored-series only, for injected series.
  void push_monitored(int t, double x);

  std::optional<double> autocorrelation(int t) const;
  StatsAggregate aggregate() const;
  std::vector<SummaryRow> finalize() const { return aggregate().finalize(); }

 private:
  struct Series {
    std::vector<double> ring;
    std::int64_t n = 0;
    double shift = 0.0;
    double sum = 0.0, sumsq = 0.0, sum_xy = 0.0, sum_head = 0.0, sum_tail = 0.0;
  };

  int T_, lag_;
  StatsAggregate agg_;
  std::vector<Series> series_;
};

}  // namespace rwsmc
