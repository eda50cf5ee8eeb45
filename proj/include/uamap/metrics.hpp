#ifndef UAMAP_METRICS_HPP_
#define UAMAP_METRICS_HPP_

#include <span>
#include <string>

#include "uamap/predictor.hpp"
#include "uamap/types.hpp"

namespace uamap {

/// Miss threshold on the best endpoint error; comparison is strict (>).
inline constexpr double kMissThresholdMeters = 2.0;

struct MetricReport {
  double min_ade = 0.0;    // meters
  double min_fde = 0.0;    // meters
  double miss_rate = 0.0;  // fraction in [0, 1]
  long long n_agents = 0;
};

/// Min over modes of the mean per-step Euclidean distance to ground truth.
double min_ade(const PredictionSet& pred, const FutureTrack& gt);

/// Min over modes of the endpoint Euclidean distance.
double min_fde(const PredictionSet& pred, const FutureTrack& gt);

/// Fraction of agents whose best endpoint error exceeds 2 m (strict).
double miss_rate(std::span<const PredictionSet> preds,
                 std::span<const FutureTrack> gts);

/// Per-agent means of the three metrics over aligned prediction/truth sets.
MetricReport evaluate(std::span<const PredictionSet> preds,
                      std::span<const FutureTrack> gts);

/// Agent-weighted means; n_agents summed.
MetricReport aggregate(std::span<const MetricReport> reports);

std::string emit_metric_report_csv(const MetricReport& report);
std::string emit_metric_report_json(const MetricReport& report);

}  // namespace uamap

#endif  // UAMAP_METRICS_HPP_
