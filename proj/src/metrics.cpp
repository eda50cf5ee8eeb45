#include "uamap/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "uamap/scene_io.hpp"

namespace uamap {

double min_ade(const PredictionSet& pred, const FutureTrack& gt) {
  double best = 1e300;
  for (const FutureTrack& mode : pred.modes) {
    double sum = 0.0;
    for (int t = 0; t < kFutureSteps; ++t) {
      sum += (mode[t] - gt[t]).norm();
    }
    best = std::min(best, sum / kFutureSteps);
  }
  return best;
}

double min_fde(const PredictionSet& pred, const FutureTrack& gt) {
  double best = 1e300;
  for (const FutureTrack& mode : pred.modes) {
    best = std::min(best, (mode[kFutureSteps - 1] - gt[kFutureSteps - 1]).norm());
  }
  return best;
}

double miss_rate(std::span<const PredictionSet> preds,
                 std::span<const FutureTrack> gts) {
  if (preds.size() != gts.size()) {
    throw std::invalid_argument("prediction/truth count mismatch");
  }
  if (preds.empty()) {
    throw std::invalid_argument("empty agent set");
  }
  long long misses = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (min_fde(preds[i], gts[i]) > kMissThresholdMeters) ++misses;
  }
  return static_cast<double>(misses) / static_cast<double>(preds.size());
}

MetricReport evaluate(std::span<const PredictionSet> preds,
                      std::span<const FutureTrack> gts) {
  if (preds.size() != gts.size()) {
    throw std::invalid_argument("prediction/truth count mismatch");
  }
  if (preds.empty()) {
    throw std::invalid_argument("empty agent set");
  }
  MetricReport r;
  r.n_agents = static_cast<long long>(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    r.min_ade += min_ade(preds[i], gts[i]);
    r.min_fde += min_fde(preds[i], gts[i]);
  }
  r.min_ade /= static_cast<double>(preds.size());
  r.min_fde /= static_cast<double>(preds.size());
  r.miss_rate = miss_rate(preds, gts);
  return r;
}

MetricReport aggregate(std::span<const MetricReport> reports) {
  if (reports.empty()) {
    throw std::invalid_argument("no reports to aggregate");
  }
  MetricReport out;
  for (const MetricReport& r : reports) out.n_agents += r.n_agents;
  if (out.n_agents == 0) {
    throw std::invalid_argument("aggregate over zero agents");
  }
  const double total = static_cast<double>(out.n_agents);
  for (const MetricReport& r : reports) {
    const double w = static_cast<double>(r.n_agents) / total;
    out.min_ade += w * r.min_ade;
    out.min_fde += w * r.min_fde;
    out.miss_rate += w * r.miss_rate;
  }
  return out;
}

std::string emit_metric_report_csv(const MetricReport& report) {
  std::string out = "min_ade,min_fde,miss_rate,n_agents\n";
  out += format_number(report.min_ade);
  out += ',';
  out += format_number(report.min_fde);
  out += ',';
  out += format_number(report.miss_rate);
  out += ',';
  out += std::to_string(report.n_agents);
  out += '\n';
  return out;
}

std::string emit_metric_report_json(const MetricReport& report) {
  std::string out = "{\n";
  out += "  \"min_ade\": " + format_number(report.min_ade) + ",\n";
  out += "  \"min_fde\": " + format_number(report.min_fde) + ",\n";
  out += "  \"miss_rate\": " + format_number(report.miss_rate) + ",\n";
  out += "  \"n_agents\": " + std::to_string(report.n_agents) + "\n";
  out += "}\n";
  return out;
}

}  // namespace uamap
