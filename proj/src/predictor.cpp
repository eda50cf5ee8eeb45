#include "uamap/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "line_reader.hpp"
#include "uamap/rng.hpp"
#include "uamap/scene_io.hpp"

namespace uamap {
namespace {

constexpr int kMapW = PredictorModel::kMapWidth;       // 32
constexpr int kHistW = PredictorModel::kHistoryWidth;  // 40
constexpr int kTrunkW = PredictorModel::kTrunkWidth;   // 64
constexpr int kOffW = PredictorModel::kOffsetWidth;    // 360
constexpr int kTokW = MapToken::kWidth;                // 11

// History coordinates are divided by this before the affine encoder; keeps
// tanh pre-activations in a trainable range for the 60 m box.
constexpr double kHistoryScale = 1.0 / 30.0;

struct ForwardCache {
  std::vector<std::array<double, kMapW>> embeds;
  std::array<int, kMapW> argmax{};  // -1 when the token list is empty
  MapContext pooled{};
  std::array<double, kHistW> hist_in{};
  std::array<double, 32> hvec{};
  std::array<double, kTrunkW> u{};
  std::array<double, kTrunkW> z{};
  std::array<double, kOffW> offs{};
  std::array<double, kNumModes> slog{};
  std::array<double, kNumModes> scores{};
  std::array<FutureTrack, kNumModes> modes{};
};

void embed_tokens(const double* p, std::span<const MapToken> tokens,
                  TokenMask mask, ForwardCache& c) {
  c.embeds.clear();
  c.embeds.reserve(tokens.size());
  for (const MapToken& raw : tokens) {
    const std::array<double, kTokW> t = apply_token_mask(raw, mask).flatten();
    std::array<double, kMapW> e;
    for (int i = 0; i < kMapW; ++i) {
      double z = p[PredictorModel::kBe + i];
      const double* row = p + PredictorModel::kWe + i * kTokW;
      for (int j = 0; j < kTokW; ++j) z += row[j] * t[j];
      e[i] = std::tanh(z);
    }
    c.embeds.push_back(e);
  }
  c.argmax.fill(-1);
  c.pooled.fill(0.0);
  for (int d = 0; d < kMapW; ++d) {
    for (std::size_t j = 0; j < c.embeds.size(); ++j) {
      if (c.argmax[d] < 0 || c.embeds[j][d] > c.pooled[d]) {
        c.pooled[d] = c.embeds[j][d];
        c.argmax[d] = static_cast<int>(j);
      }
    }
  }
}

void forward_from_context(const double* p, const HistoryTrack& history,
                          const MapContext& context, ForwardCache& c) {
  for (int k = 0; k < kHistorySteps; ++k) {
    c.hist_in[2 * k] = history[k].x * kHistoryScale;
    c.hist_in[2 * k + 1] = history[k].y * kHistoryScale;
  }
  for (int i = 0; i < 32; ++i) {
    double z = p[PredictorModel::kBh + i];
    const double* row = p + PredictorModel::kWh + i * kHistW;
    for (int j = 0; j < kHistW; ++j) z += row[j] * c.hist_in[j];
    c.hvec[i] = std::tanh(z);
  }
  for (int i = 0; i < kMapW; ++i) c.u[i] = context[i];
  for (int i = 0; i < 32; ++i) c.u[kMapW + i] = c.hvec[i];
  for (int i = 0; i < kTrunkW; ++i) {
    double z = p[PredictorModel::kBz + i];
    const double* row = p + PredictorModel::kWz + i * kTrunkW;
    for (int j = 0; j < kTrunkW; ++j) z += row[j] * c.u[j];
    c.z[i] = std::tanh(z);
  }
  for (int i = 0; i < kOffW; ++i) {
    double v = p[PredictorModel::kBo + i];
    const double* row = p + PredictorModel::kWo + i * kTrunkW;
    for (int j = 0; j < kTrunkW; ++j) v += row[j] * c.z[j];
    c.offs[i] = v;
  }
  const Vec2 last = history[kHistorySteps - 1];
  for (int m = 0; m < kNumModes; ++m) {
    Vec2 pos = last;
    for (int t = 0; t < kFutureSteps; ++t) {
      pos.x += c.offs[m * kFutureSteps * 2 + t * 2];
      pos.y += c.offs[m * kFutureSteps * 2 + t * 2 + 1];
      c.modes[m][t] = pos;
    }
  }
  double mx = -1e300;
  for (int m = 0; m < kNumModes; ++m) {
    double v = p[PredictorModel::kBs + m];
    const double* row = p + PredictorModel::kWs + m * kTrunkW;
    for (int j = 0; j < kTrunkW; ++j) v += row[j] * c.z[j];
    c.slog[m] = v;
    mx = std::max(mx, v);
  }
  double sum = 0.0;
  for (int m = 0; m < kNumModes; ++m) {
    c.scores[m] = std::exp(c.slog[m] - mx);
    sum += c.scores[m];
  }
  for (int m = 0; m < kNumModes; ++m) c.scores[m] /= sum;
}

double mode_sse(const FutureTrack& mode, const FutureTrack& gt) {
  double s = 0.0;
  for (int t = 0; t < kFutureSteps; ++t) {
    const Vec2 d = mode[t] - gt[t];
    s += d.x * d.x + d.y * d.y;
  }
  return s;
}

struct ItemLoss {
  double total = 0.0;
  double trajectory = 0.0;
  double score = 0.0;
  int winner = 0;
  double runner_up_gap = 0.0;  // (second-best SSE - best SSE) / steps
};

ItemLoss item_loss(const ForwardCache& c, const FutureTrack& future,
                   double score_weight) {
  ItemLoss r;
  std::array<double, kNumModes> sse;
  for (int m = 0; m < kNumModes; ++m) sse[m] = mode_sse(c.modes[m], future);
  r.winner = 0;
  for (int m = 1; m < kNumModes; ++m) {
    if (sse[m] < sse[r.winner]) r.winner = m;
  }
  double second = 1e300;
  for (int m = 0; m < kNumModes; ++m) {
    if (m != r.winner) second = std::min(second, sse[m]);
  }
  r.runner_up_gap = (second - sse[r.winner]) / kFutureSteps;
  r.trajectory = sse[r.winner] / kFutureSteps;
  r.score = -std::log(std::max(c.scores[r.winner], 1e-300)) * score_weight;
  r.total = r.trajectory + r.score;
  return r;
}

// Backward pass for one item; gradients accumulated scaled by `scale`.
void item_backward(const double* p, std::span<const MapToken> tokens,
                   TokenMask mask, const ForwardCache& c,
                   const FutureTrack& future, int winner, double score_weight,
                   double scale, double* grad) {
  std::array<double, kOffW> doffs{};
  {
    // d(SSE_w / steps) / d position, then suffix-sum into per-step offsets.
    std::array<double, kFutureSteps * 2> dpos{};
    for (int t = 0; t < kFutureSteps; ++t) {
      const Vec2 d = c.modes[winner][t] - future[t];
      dpos[2 * t] = 2.0 * d.x / kFutureSteps * scale;
      dpos[2 * t + 1] = 2.0 * d.y / kFutureSteps * scale;
    }
    double sx = 0.0, sy = 0.0;
    for (int t = kFutureSteps - 1; t >= 0; --t) {
      sx += dpos[2 * t];
      sy += dpos[2 * t + 1];
      doffs[winner * kFutureSteps * 2 + 2 * t] = sx;
      doffs[winner * kFutureSteps * 2 + 2 * t + 1] = sy;
    }
  }
  std::array<double, kNumModes> dslog;
  for (int m = 0; m < kNumModes; ++m) {
    dslog[m] = score_weight * (c.scores[m] - (m == winner ? 1.0 : 0.0)) * scale;
  }

  std::array<double, kTrunkW> dzt{};
  {
    std::array<double, kTrunkW> dz{};
    const int base = winner * kFutureSteps * 2;
    for (int r = base; r < base + kFutureSteps * 2; ++r) {
      const double g = doffs[r];
      double* wo_row = grad + PredictorModel::kWo + r * kTrunkW;
      const double* mo_row = p + PredictorModel::kWo + r * kTrunkW;
      for (int j = 0; j < kTrunkW; ++j) {
        wo_row[j] += g * c.z[j];
        dz[j] += mo_row[j] * g;
      }
      grad[PredictorModel::kBo + r] += g;
    }
    for (int m = 0; m < kNumModes; ++m) {
      const double g = dslog[m];
      double* ws_row = grad + PredictorModel::kWs + m * kTrunkW;
      const double* ms_row = p + PredictorModel::kWs + m * kTrunkW;
      for (int j = 0; j < kTrunkW; ++j) {
        ws_row[j] += g * c.z[j];
        dz[j] += ms_row[j] * g;
      }
      grad[PredictorModel::kBs + m] += g;
    }
    for (int i = 0; i < kTrunkW; ++i) {
      dzt[i] = (1.0 - c.z[i] * c.z[i]) * dz[i];
    }
  }

  std::array<double, kTrunkW> du{};
  for (int i = 0; i < kTrunkW; ++i) {
    const double g = dzt[i];
    double* wz_row = grad + PredictorModel::kWz + i * kTrunkW;
    const double* mz_row = p + PredictorModel::kWz + i * kTrunkW;
    for (int j = 0; j < kTrunkW; ++j) {
      wz_row[j] += g * c.u[j];
      du[j] += mz_row[j] * g;
    }
    grad[PredictorModel::kBz + i] += g;
  }

  // History branch.
  for (int i = 0; i < 32; ++i) {
    const double g = (1.0 - c.hvec[i] * c.hvec[i]) * du[kMapW + i];
    double* wh_row = grad + PredictorModel::kWh + i * kHistW;
    for (int j = 0; j < kHistW; ++j) wh_row[j] += g * c.hist_in[j];
    grad[PredictorModel::kBh + i] += g;
  }

  // Map branch: gradient flows to the argmax token of each pooled dimension.
  for (int d = 0; d < kMapW; ++d) {
    const int j = c.argmax[d];
    if (j < 0) continue;
    const double e = c.embeds[static_cast<std::size_t>(j)][d];
    const double g = (1.0 - e * e) * du[d];
    const std::array<double, kTokW> t =
        apply_token_mask(tokens[static_cast<std::size_t>(j)], mask).flatten();
    double* we_row = grad + PredictorModel::kWe + d * kTokW;
    for (int i = 0; i < kTokW; ++i) we_row[i] += g * t[i];
    grad[PredictorModel::kBe + d] += g;
  }
}

}  // namespace

const char* token_mask_name(TokenMask mask) {
  switch (mask) {
    case TokenMask::kBoth:
      return "both";
    case TokenMask::kPosOnly:
      return "pos_only";
    case TokenMask::kSemOnly:
      return "sem_only";
    case TokenMask::kBaseline:
      return "baseline";
  }
  throw std::invalid_argument("invalid token mask value");
}

TokenMask token_mask_from_name(const std::string& name) {
  if (name == "both" || name == "with_uncertainty") return TokenMask::kBoth;
  if (name == "pos_only") return TokenMask::kPosOnly;
  if (name == "sem_only") return TokenMask::kSemOnly;
  if (name == "baseline" || name == "no_uncertainty") {
    return TokenMask::kBaseline;
  }
  throw std::invalid_argument("unknown token mask: " + name);
}

MapToken apply_token_mask(MapToken token, TokenMask mask) {
  if (mask == TokenMask::kSemOnly || mask == TokenMask::kBaseline) {
    token.beta = 0.0;
  }
  if (mask == TokenMask::kPosOnly || mask == TokenMask::kBaseline) {
    token.delta_c.fill(0.0);
  }
  return token;
}

PredictorModel PredictorModel::random_init(std::uint64_t seed) {
  PredictorModel m;
  Rng rng(seed);
  auto fill = [&](int offset, int rows, int cols) {
    const double s = 1.0 / std::sqrt(static_cast<double>(cols));
    for (int i = 0; i < rows * cols; ++i) {
      m.params_[offset + i] = rng.normal(0.0, s);
    }
  };
  fill(kWe, kMapWidth, kTokW);
  fill(kWh, 32, kHistoryWidth);
  fill(kWz, kTrunkWidth, kTrunkWidth);
  fill(kWo, kOffsetWidth, kTrunkWidth);
  fill(kWs, kNumModes, kTrunkWidth);
  return m;
}

bool PredictorModel::finite() const {
  return std::all_of(params_.begin(), params_.end(),
                     [](double v) { return std::isfinite(v); });
}

MapContext encode_map(const PredictorModel& model,
                      std::span<const MapToken> tokens) {
  ForwardCache c;
  embed_tokens(model.data(), tokens, model.mask, c);
  return c.pooled;
}

PredictionSet predict(const PredictorModel& model, const HistoryTrack& history,
                      const MapContext& map_context) {
  for (const Vec2& p : history) {
    if (!p.finite()) throw std::invalid_argument("non-finite history point");
  }
  if (!model.finite()) {
    throw std::invalid_argument("model has non-finite parameters");
  }
  ForwardCache c;
  forward_from_context(model.data(), history, map_context, c);
  PredictionSet out;
  out.modes = c.modes;
  out.scores = c.scores;
  return out;
}

PredictionSet constant_velocity_baseline(std::span<const Vec2> history) {
  if (history.size() < 2) {
    throw std::invalid_argument(
        "constant-velocity baseline needs >= 2 history points");
  }
  const Vec2 last = history[history.size() - 1];
  const Vec2 step = last - history[history.size() - 2];
  constexpr double kDeg = std::numbers::pi / 180.0;
  const double angles[4] = {10.0 * kDeg, -10.0 * kDeg, 20.0 * kDeg,
                            -20.0 * kDeg};
  PredictionSet out;
  std::array<Vec2, kNumModes> steps;
  steps[0] = step;
  for (int i = 0; i < 4; ++i) {
    const double ca = std::cos(angles[i]);
    const double sa = std::sin(angles[i]);
    steps[1 + i] = {step.x * ca - step.y * sa, step.x * sa + step.y * ca};
  }
  steps[5] = step * 0.8;
  for (int m = 0; m < kNumModes; ++m) {
    Vec2 pos = last;
    for (int t = 0; t < kFutureSteps; ++t) {
      pos = pos + steps[m];
      out.modes[m][t] = pos;
    }
    out.scores[m] = 1.0 / kNumModes;
  }
  return out;
}

std::vector<std::string> validate_predictor_train_config(
    const PredictorTrainConfig& config) {
  std::vector<std::string> problems;
  if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate)) {
    problems.push_back("learning_rate: must be a finite non-negative number");
  }
  if (!(config.grad_norm_clip > 0.0) || !std::isfinite(config.grad_norm_clip)) {
    problems.push_back("grad_norm_clip: must be a finite positive number");
  }
  if (!(config.momentum >= 0.0 && config.momentum < 1.0)) {
    problems.push_back("momentum: must be in [0, 1)");
  }
  if (!(config.score_loss_weight >= 0.0) ||
      !std::isfinite(config.score_loss_weight)) {
    problems.push_back("score_loss_weight: must be a finite non-negative number");
  }
  if (config.epochs <= 0) problems.push_back("epochs: must be positive");
  if (config.batch_size <= 0) problems.push_back("batch_size: must be positive");
  return problems;
}

PredictorTrainResult train_predictor(const PredictorDataset& dataset,
                                     TokenMask variant,
                                     const PredictorTrainConfig& config) {
  const std::vector<std::string> problems =
      validate_predictor_train_config(config);
  if (!problems.empty()) {
    throw std::invalid_argument("invalid predictor config: " + problems.front());
  }
  if (dataset.items.empty()) {
    throw std::invalid_argument("predictor dataset is empty");
  }
  for (const PredictorItem& item : dataset.items) {
    if (item.scene_index < 0 ||
        static_cast<std::size_t>(item.scene_index) >=
            dataset.scene_tokens.size()) {
      throw std::invalid_argument("item references unknown scene index " +
                                  std::to_string(item.scene_index));
    }
  }

  PredictorTrainResult result;
  result.model = PredictorModel::random_init(derive_seed(config.seed, 0));
  result.model.mask = variant;
  Rng stream(derive_seed(config.seed, 1));

  const std::size_t n = dataset.items.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad(PredictorModel::kParamCount, 0.0);
  std::vector<double> velocity(PredictorModel::kParamCount, 0.0);
  ForwardCache cache;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    stream.shuffle(order);
    double ep_total = 0.0, ep_traj = 0.0, ep_score = 0.0;
    for (std::size_t start = 0; start < n;
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop =
          std::min(n, start + static_cast<std::size_t>(config.batch_size));
      const double scale = 1.0 / static_cast<double>(stop - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_total = 0.0;
      for (std::size_t k = start; k < stop; ++k) {
        const PredictorItem& item = dataset.items[order[k]];
        const std::vector<MapToken>& tokens =
            dataset.scene_tokens[static_cast<std::size_t>(item.scene_index)];
        embed_tokens(result.model.data(), tokens, variant, cache);
        forward_from_context(result.model.data(), item.history, cache.pooled,
                             cache);
        const ItemLoss l = item_loss(cache, item.future, config.score_loss_weight);
        batch_total += l.total;
        ep_total += l.total;
        ep_traj += l.trajectory;
        ep_score += l.score;
        item_backward(result.model.data(), tokens, variant, cache, item.future,
                      l.winner, config.score_loss_weight, scale, grad.data());
      }
      if (!std::isfinite(batch_total)) {
        char msg[128];
        std::snprintf(msg, sizeof(msg),
                      "predictor training diverged: non-finite loss at epoch "
                      "%d, batch starting at %zu",
                      epoch, start);
        throw std::runtime_error(msg);
      }
      double norm_sq = 0.0;
      for (const double g : grad) norm_sq += g * g;
      const double norm = std::sqrt(norm_sq);
      const double clip_scale =
          norm > config.grad_norm_clip ? config.grad_norm_clip / norm : 1.0;
      double* params = result.model.data();
      for (int i = 0; i < PredictorModel::kParamCount; ++i) {
        velocity[i] = config.momentum * velocity[i] + clip_scale * grad[i];
        params[i] -= config.learning_rate * velocity[i];
      }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    result.trace.push_back(
        {epoch, ep_total * inv_n, ep_traj * inv_n, ep_score * inv_n});
  }
  return result;
}

double predictor_grad_check(const PredictorModel& model,
                            std::span<const MapToken> tokens,
                            const PredictorItem& item, double epsilon,
                            double score_loss_weight) {
  if (!(epsilon >= 1e-7 && epsilon <= 1e-3)) {
    throw std::invalid_argument("epsilon must be in [1e-7, 1e-3]");
  }
  ForwardCache c;
  embed_tokens(model.data(), tokens, model.mask, c);
  forward_from_context(model.data(), item.history, c.pooled, c);
  const ItemLoss base = item_loss(c, item.future, score_loss_weight);

  // A winner-mode near-tie makes the loss non-differentiable in every
  // parameter; the whole sample is masked.
  if (base.runner_up_gap < 10.0 * epsilon) return 0.0;

  std::vector<bool> masked(PredictorModel::kParamCount, false);
  if (c.embeds.size() > 1) {
    for (int d = 0; d < kMapW; ++d) {
      double top = -1e300, second = -1e300;
      for (const auto& e : c.embeds) {
        if (e[d] > top) {
          second = top;
          top = e[d];
        } else {
          second = std::max(second, e[d]);
        }
      }
      if (top - second < 10.0 * epsilon) {
        for (int i = 0; i < kTokW; ++i) {
          masked[PredictorModel::kWe + d * kTokW + i] = true;
        }
        masked[PredictorModel::kBe + d] = true;
      }
    }
  }

  std::vector<double> analytic(PredictorModel::kParamCount, 0.0);
  item_backward(model.data(), tokens, model.mask, c, item.future, base.winner,
                score_loss_weight, 1.0, analytic.data());

  PredictorModel probe = model;
  double* p = probe.data();
  double max_rel = 0.0;
  for (int i = 0; i < PredictorModel::kParamCount; ++i) {
    if (masked[i]) continue;
    const double saved = p[i];
    auto eval = [&]() {
      embed_tokens(p, tokens, probe.mask, c);
      forward_from_context(p, item.history, c.pooled, c);
      return item_loss(c, item.future, score_loss_weight);
    };
    p[i] = saved + epsilon;
    const ItemLoss hi = eval();
    p[i] = saved - epsilon;
    const ItemLoss lo = eval();
    p[i] = saved;
    // A probe that flips the winner straddles the WTA kink; the analytic
    // gradient is only claimed on the base winner's branch.
    if (hi.winner != base.winner || lo.winner != base.winner) continue;
    const double numeric = (hi.total - lo.total) / (2.0 * epsilon);
    // Central differences on a loss of magnitude L resolve gradients only
    // down to ~eps_mach * L / (2 eps); below 1e4x that floor the probe is
    // pure roundoff, so those parameters are excluded like the kink mask.
    const double noise_floor = std::numeric_limits<double>::epsilon() *
                               std::max(1.0, std::abs(base.total)) /
                               (2.0 * epsilon);
    if (std::abs(analytic[i]) + std::abs(numeric) < 1e4 * noise_floor) {
      continue;
    }
    const double rel = std::abs(analytic[i] - numeric) /
                       std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric));
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

std::vector<MapToken> build_map_tokens(
    std::span<const UncertainMapElement> elements) {
  std::vector<MapToken> tokens;
  for (const UncertainMapElement& e : elements) {
    for (const UncertainVertex& v : e.vertices) {
      MapToken t;
      t.mu = v.position;
      t.beta = v.beta;
      t.c_bar = v.c_bar;
      t.delta_c = v.delta_c;
      tokens.push_back(t);
    }
  }
  return tokens;
}

namespace {

struct LayerSpec {
  const char* name;
  int offset;
  int rows;
  int cols;
};

constexpr LayerSpec kPredictorLayers[] = {
    {"We", PredictorModel::kWe, PredictorModel::kMapWidth, kTokW},
    {"be", PredictorModel::kBe, 1, PredictorModel::kMapWidth},
    {"Wh", PredictorModel::kWh, 32, PredictorModel::kHistoryWidth},
    {"bh", PredictorModel::kBh, 1, 32},
    {"Wz", PredictorModel::kWz, PredictorModel::kTrunkWidth, PredictorModel::kTrunkWidth},
    {"bz", PredictorModel::kBz, 1, PredictorModel::kTrunkWidth},
    {"Wo", PredictorModel::kWo, PredictorModel::kOffsetWidth, PredictorModel::kTrunkWidth},
    {"bo", PredictorModel::kBo, 1, PredictorModel::kOffsetWidth},
    {"Ws", PredictorModel::kWs, kNumModes, PredictorModel::kTrunkWidth},
    {"bs", PredictorModel::kBs, 1, kNumModes},
};

}  // namespace

std::string emit_predictor_checkpoint(const PredictorModel& model) {
  std::string out = "uamap-checkpoint predictor v1\n";
  out += "mask ";
  out += token_mask_name(model.mask);
  out += '\n';
  const double* p = model.data();
  for (const LayerSpec& layer : kPredictorLayers) {
    out += "layer ";
    out += layer.name;
    out += ' ';
    out += std::to_string(layer.rows);
    out += ' ';
    out += std::to_string(layer.cols);
    out += '\n';
    for (int r = 0; r < layer.rows; ++r) {
      for (int c = 0; c < layer.cols; ++c) {
        if (c > 0) out += ' ';
        out += format_number(p[layer.offset + r * layer.cols + c]);
      }
      out += '\n';
    }
  }
  return out;
}

PredictorModel parse_predictor_checkpoint(const std::string& text) {
  detail::LineReader r(text);
  r.require_line("header");
  r.expect_keyword("uamap-checkpoint");
  r.expect_keyword("predictor");
  r.expect_keyword("v1");
  r.end_of_line();
  r.require_line("mask");
  r.expect_keyword("mask");
  PredictorModel model;
  try {
    model.mask = token_mask_from_name(r.token("mask name"));
  } catch (const std::invalid_argument& e) {
    throw ParseError(r.line_no(), e.what());
  }
  r.end_of_line();
  double* p = model.data();
  for (const LayerSpec& layer : kPredictorLayers) {
    r.require_line("layer");
    r.expect_keyword("layer");
    r.expect_keyword(layer.name);
    const long long rows = r.integer("rows");
    const long long cols = r.integer("cols");
    r.end_of_line();
    if (rows != layer.rows || cols != layer.cols) {
      throw ParseError(r.line_no(), std::string("layer ") + layer.name +
                                        " has unexpected shape");
    }
    for (int row = 0; row < layer.rows; ++row) {
      r.require_line("parameter row");
      for (int c = 0; c < layer.cols; ++c) {
        p[layer.offset + row * layer.cols + c] = r.number("parameter");
      }
      r.end_of_line();
    }
  }
  if (r.next_line()) {
    throw ParseError(r.line_no(), "unexpected content after checkpoint end");
  }
  return model;
}

void save_predictor_checkpoint(const std::filesystem::path& path,
                               const PredictorModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path.string());
  }
  out << emit_predictor_checkpoint(model);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

PredictorModel load_predictor_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open for reading: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_predictor_checkpoint(buf.str());
}

std::string emit_predictor_trace_csv(std::span<const PredictorTraceRow> trace) {
  std::string out = "epoch,total,trajectory,score\n";
  for (const PredictorTraceRow& row : trace) {
    out += std::to_string(row.epoch);
    out += ',';
    out += format_number(row.total);
    out += ',';
    out += format_number(row.trajectory);
    out += ',';
    out += format_number(row.score);
    out += '\n';
  }
  return out;
}

std::string emit_prediction_dump_csv(std::span<const PredictionDumpRow> rows) {
  std::string out = "scene_id,agent_id,mode,step,x,y,score\n";
  for (const PredictionDumpRow& r : rows) {
    out += std::to_string(r.scene_id);
    out += ',';
    out += std::to_string(r.agent_id);
    out += ',';
    out += std::to_string(r.mode);
    out += ',';
    out += std::to_string(r.step);
    out += ',';
    out += format_number(r.x);
    out += ',';
    out += format_number(r.y);
    out += ',';
    out += format_number(r.score);
    out += '\n';
  }
  return out;
}

}  // namespace uamap
