#ifndef UAMAP_DUAL_HEAD_HPP_
#define UAMAP_DUAL_HEAD_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "uamap/noise.hpp"
#include "uamap/types.hpp"
#include "uamap/uncertainty.hpp"

namespace uamap {

/// Two-layer tanh encoder with a primary head on the deep tap and an
/// auxiliary head on the shallow tap behind dropout. Parameters live in one
/// flat buffer so gradient clipping, SGD, and finite-difference checks can
/// treat the model as a single vector.
class DualHeadModel {
 public:
  static constexpr int kInputWidth = kContextWidth;  // 10
  static constexpr int kHiddenWidth = 32;
  static constexpr int kHeadWidth = 2 + 2 + kNumClasses;  // mu, log_b, logits

  // Flat layout offsets, row-major matrices.
  static constexpr int kW1 = 0;
  static constexpr int kB1 = kW1 + kHiddenWidth * kInputWidth;
  static constexpr int kW2 = kB1 + kHiddenWidth;
  static constexpr int kB2 = kW2 + kHiddenWidth * kHiddenWidth;
  static constexpr int kWp = kB2 + kHiddenWidth;
  static constexpr int kBp = kWp + kHeadWidth * kHiddenWidth;
  static constexpr int kWa = kBp + kHeadWidth;
  static constexpr int kBa = kWa + kHeadWidth * kHiddenWidth;
  static constexpr int kParamCount = kBa + kHeadWidth;  // 1936

  DualHeadModel() : params_(kParamCount, 0.0) {}

  static DualHeadModel random_init(std::uint64_t seed);

  double* data() { return params_.data(); }
  const double* data() const { return params_.data(); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  bool finite() const;

 private:
  std::vector<double> params_;
};

enum class RunMode { kTrain, kEval };

struct HeadOutput {
  LaplacePoint point;
  ClassScores scores{};
};

struct DualHeadOutput {
  HeadOutput primary;
  HeadOutput auxiliary;
};

/// Eval mode is deterministic; train mode draws a fresh inverted-dropout mask
/// (scale 1/(1-r)) for the auxiliary tap of every sample, consuming draws
/// from `seed` in sample order.
std::vector<DualHeadOutput> forward(const DualHeadModel& model,
                                    std::span<const Observation> batch,
                                    RunMode mode, double dropout_rate,
                                    std::uint64_t seed);

/// Laplace negative log-likelihood summed over the two axes:
/// sum_axis ln(2 b) + |target - mu| / b.
double laplace_nll(const LaplacePoint& point, Vec2 target);

double cross_entropy(const ClassScores& scores, ElementClass true_class);

struct LossBreakdown {
  double total = 0.0;
  double regression = 0.0;      // weighted Laplace NLL term, both heads
  double classification = 0.0;  // cross-entropy term, both heads
};

/// Batch-mean loss: regression_weight * sum_heads NLL + sum_heads CE.
/// Targets are the observations' true positions and classes.
LossBreakdown loss(std::span<const DualHeadOutput> outputs,
                   std::span<const Observation> targets,
                   double regression_weight);

struct TrainConfig {
  double learning_rate = 1.0e-4;
  double regression_loss_weight = 0.03;
  double grad_norm_clip = 3.0;
  double dropout_rate = 0.1;
  double momentum = 0.9;
  int epochs = 200;
  int batch_size = 64;
  std::uint64_t seed = 1;
};

std::vector<std::string> validate_train_config(const TrainConfig& config);

struct TraceRow {
  int epoch = 0;
  double total = 0.0;
  double regression = 0.0;
  double classification = 0.0;
};

struct TrainResult {
  DualHeadModel model;
  std::vector<TraceRow> trace;
};

/// Mini-batch SGD with momentum and global gradient-norm clipping. Throws on
/// non-finite loss with an epoch/batch diagnostic. Bit-identical traces for
/// identical (dataset, config).
TrainResult train(std::span<const Observation> dataset,
                  const TrainConfig& config);

/// Max over parameters of the relative gap between analytic and central
/// finite-difference gradients, dropout disabled. Parameters upstream of a
/// position output whose residual sits within 10*epsilon of the L1 kink are
/// excluded (deterministic mask; see README).
double grad_check(const DualHeadModel& model, const Observation& sample,
                  double epsilon,
                  double regression_weight = TrainConfig{}.regression_loss_weight);

/// Analytic gradient of the batch loss in eval mode; used by grad_check and
/// exposed for the predictor-side tests. `grad` must hold kParamCount zeros.
LossBreakdown loss_gradient(const DualHeadModel& model,
                            std::span<const Observation> batch,
                            double regression_weight, std::span<double> grad);

struct UncertainVertex {
  Vec2 position;  // primary-head mu, normalized BEV, clamped to [0,1]
  double beta = 0.0;
  ClassScores c_bar{};
  ClassScores delta_c{};
};

struct UncertainMapElement {
  int id = 0;
  ElementClass estimated_class = ElementClass::kBoundary;
  std::vector<UncertainVertex> vertices;
  double mean_beta = 0.0;
  ClassScores mean_c_bar{};
  ClassScores mean_delta_c{};
};

/// Runs the model in eval mode over the observations, derives per-vertex
/// (beta, c_bar, delta_c), and groups results by element id in table order.
/// Observations naming an element id absent from the table are an error.
std::vector<UncertainMapElement> estimate_uncertain_map(
    const DualHeadModel& model, std::span<const Observation> observations,
    std::span<const MapElement> element_table);

// Checkpoint text format: "uamap-checkpoint dual-head v1", then per layer a
// "layer <name> <rows> <cols>" line followed by rows of %.17g values.
std::string emit_dual_head_checkpoint(const DualHeadModel& model);
DualHeadModel parse_dual_head_checkpoint(const std::string& text);
void save_dual_head_checkpoint(const std::filesystem::path& path,
                               const DualHeadModel& model);
DualHeadModel load_dual_head_checkpoint(const std::filesystem::path& path);

std::string emit_loss_trace_csv(std::span<const TraceRow> trace);

// Uncertain-map text format: "uamap-uncertain-map v1", element records with
// per-vertex position, beta, c_bar, delta_c.
std::string emit_uncertain_map(std::span<const UncertainMapElement> elements);
std::vector<UncertainMapElement> parse_uncertain_map(const std::string& text);
void save_uncertain_map(const std::filesystem::path& path,
                        std::span<const UncertainMapElement> elements);
std::vector<UncertainMapElement> load_uncertain_map(
    const std::filesystem::path& path);

}  // namespace uamap

#endif  // UAMAP_DUAL_HEAD_HPP_
