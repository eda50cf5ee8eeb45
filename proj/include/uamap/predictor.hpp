#ifndef UAMAP_PREDICTOR_HPP_
#define UAMAP_PREDICTOR_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "uamap/dual_head.hpp"
#include "uamap/types.hpp"

namespace uamap {

inline constexpr int kNumModes = 6;

/// Per-vertex uncertainty-augmented map input: concat(mu, beta, c_bar,
/// delta_c), width 2 + 1 + 4 + 4 = 11.
struct MapToken {
  static constexpr int kWidth = 2 + 1 + 2 * kNumClasses;
  Vec2 mu;                 // normalized BEV position
  double beta = 0.0;       // >= 0, nats
  ClassScores c_bar{};     // simplex
  ClassScores delta_c{};   // componentwise in [0, 1]

  std::array<double, kWidth> flatten() const {
    std::array<double, kWidth> v{};
    v[0] = mu.x;
    v[1] = mu.y;
    v[2] = beta;
    for (int i = 0; i < kNumClasses; ++i) {
      v[3 + i] = c_bar[i];
      v[3 + kNumClasses + i] = delta_c[i];
    }
    return v;
  }
};

/// Ablation axes: which uncertainty channels reach the predictor. Masked
/// channels are zeroed at the input, token width preserved.
enum class TokenMask {
  kBoth,      // beta and delta_c pass through
  kPosOnly,   // delta_c zeroed
  kSemOnly,   // beta zeroed
  kBaseline,  // both zeroed (no-uncertainty variant)
};

const char* token_mask_name(TokenMask mask);
// Accepts the four canonical names plus the aliases "with_uncertainty"
// (both) and "no_uncertainty" (baseline).
TokenMask token_mask_from_name(const std::string& name);
MapToken apply_token_mask(MapToken token, TokenMask mask);

struct PredictionSet {
  std::array<FutureTrack, kNumModes> modes;  // meters, ego frame
  std::array<double, kNumModes> scores{};    // simplex
};

using MapContext = std::array<double, 32>;

/// Small deterministic forecaster: max-pooled token encoder + affine history
/// encoder + one tanh trunk, emitting cumulative per-step offsets for six
/// modes plus score logits. The token mask is part of the model so training
/// and evaluation always agree on which channels are visible.
class PredictorModel {
 public:
  static constexpr int kMapWidth = 32;
  static constexpr int kHistoryWidth = 2 * kHistorySteps;  // 40
  static constexpr int kTrunkWidth = kMapWidth + 32;       // 64
  static constexpr int kOffsetWidth = kNumModes * kFutureSteps * 2;  // 360

  static constexpr int kWe = 0;
  static constexpr int kBe = kWe + kMapWidth * MapToken::kWidth;
  static constexpr int kWh = kBe + kMapWidth;
  static constexpr int kBh = kWh + 32 * kHistoryWidth;
  static constexpr int kWz = kBh + 32;
  static constexpr int kBz = kWz + kTrunkWidth * kTrunkWidth;
  static constexpr int kWo = kBz + kTrunkWidth;
  static constexpr int kBo = kWo + kOffsetWidth * kTrunkWidth;
  static constexpr int kWs = kBo + kOffsetWidth;
  static constexpr int kBs = kWs + kNumModes * kTrunkWidth;
  static constexpr int kParamCount = kBs + kNumModes;

  PredictorModel() : params_(kParamCount, 0.0) {}

  static PredictorModel random_init(std::uint64_t seed);

  double* data() { return params_.data(); }
  const double* data() const { return params_.data(); }
  const std::vector<double>& params() const { return params_; }
  std::vector<double>& params() { return params_; }

  TokenMask mask = TokenMask::kBoth;

  bool finite() const;

 private:
  std::vector<double> params_;
};

/// Applies the model's token mask, embeds each token (affine + tanh), and
/// max-pools componentwise. Empty input yields the all-zero context.
MapContext encode_map(const PredictorModel& model,
                      std::span<const MapToken> tokens);

PredictionSet predict(const PredictorModel& model, const HistoryTrack& history,
                      const MapContext& map_context);

/// Mode 1 extrapolates the last observed step velocity; modes 2-6 rotate the
/// heading by +10, -10, +20, -20 degrees and keep it straight at 0.8x speed.
/// Scores are uniform.
PredictionSet constant_velocity_baseline(std::span<const Vec2> history);

struct PredictorItem {
  int scene_index = 0;  // into PredictorDataset::scene_tokens
  HistoryTrack history{};
  FutureTrack future{};
};

struct PredictorDataset {
  std::vector<std::vector<MapToken>> scene_tokens;
  std::vector<PredictorItem> items;
};

struct PredictorTrainConfig {
  double learning_rate = 3.5e-4;
  double grad_norm_clip = 3.0;
  double momentum = 0.9;
  double score_loss_weight = 1.0;
  int epochs = 80;
  int batch_size = 32;
  std::uint64_t seed = 1;
};

std::vector<std::string> validate_predictor_train_config(
    const PredictorTrainConfig& config);

struct PredictorTraceRow {
  int epoch = 0;
  double total = 0.0;
  double trajectory = 0.0;
  double score = 0.0;
};

struct PredictorTrainResult {
  PredictorModel model;
  std::vector<PredictorTraceRow> trace;
};

/// Winner-takes-all training: mean squared per-step error of the best mode
/// plus cross-entropy pushing the scores toward the winner. `variant` fixes
/// the model's token mask for training and later evaluation.
PredictorTrainResult train_predictor(const PredictorDataset& dataset,
                                     TokenMask variant,
                                     const PredictorTrainConfig& config);

/// Finite-difference check mirroring the estimator contract. Near-ties in
/// the max-pool mask the affected embedding row; a near-tie in the winner
/// mode masks the whole sample (returns 0); parameter probes that flip the
/// winner and gradients below the finite-difference roundoff floor are
/// skipped (see README).
double predictor_grad_check(const PredictorModel& model,
                            std::span<const MapToken> tokens,
                            const PredictorItem& item, double epsilon,
                            double score_loss_weight = 1.0);

/// Per-vertex tokens from an estimated uncertain map, element order
/// preserved.
std::vector<MapToken> build_map_tokens(
    std::span<const UncertainMapElement> elements);

// Checkpoint text format mirrors the estimator's, kind "predictor", with an
// extra "mask <name>" line recording the trained variant.
std::string emit_predictor_checkpoint(const PredictorModel& model);
PredictorModel parse_predictor_checkpoint(const std::string& text);
void save_predictor_checkpoint(const std::filesystem::path& path,
                               const PredictorModel& model);
PredictorModel load_predictor_checkpoint(const std::filesystem::path& path);

std::string emit_predictor_trace_csv(std::span<const PredictorTraceRow> trace);

/// Prediction dump rows: scene_id, agent_id, mode, step, x, y, score.
struct PredictionDumpRow {
  int scene_id = 0;
  int agent_id = 0;
  int mode = 0;
  int step = 0;
  double x = 0.0;
  double y = 0.0;
  double score = 0.0;
};

std::string emit_prediction_dump_csv(std::span<const PredictionDumpRow> rows);

}  // namespace uamap

#endif  // UAMAP_PREDICTOR_HPP_
