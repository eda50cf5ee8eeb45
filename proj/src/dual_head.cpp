#include "uamap/dual_head.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "line_reader.hpp"
#include "uamap/rng.hpp"
#include "uamap/scene_io.hpp"

namespace uamap {
namespace {

constexpr int kIn = DualHeadModel::kInputWidth;
constexpr int kHid = DualHeadModel::kHiddenWidth;
constexpr int kOut = DualHeadModel::kHeadWidth;
constexpr double kLogBClamp = 20.0;

struct SampleCache {
  std::array<double, kHid> h1{};
  std::array<double, kHid> mask_scale{};  // 1 in eval mode
  std::array<double, kHid> h1d{};
  std::array<double, kHid> h2{};
  std::array<double, kOut> raw_p{};
  std::array<double, kOut> raw_a{};
  std::array<bool, 2> clamped_p{};
  std::array<bool, 2> clamped_a{};
  DualHeadOutput out;
};

void decode_head(const std::array<double, kOut>& raw, HeadOutput& out,
                 std::array<bool, 2>& clamped) {
  for (int a = 0; a < 2; ++a) {
    const double lb = std::clamp(raw[2 + a], -kLogBClamp, kLogBClamp);
    clamped[a] = lb != raw[2 + a];
    (a == 0 ? out.point.b.x : out.point.b.y) = std::exp(lb);
  }
  out.point.mu = {raw[0], raw[1]};
  double mx = raw[4];
  for (int j = 1; j < kNumClasses; ++j) mx = std::max(mx, raw[4 + j]);
  double sum = 0.0;
  for (int j = 0; j < kNumClasses; ++j) {
    out.scores[j] = std::exp(raw[4 + j] - mx);
    sum += out.scores[j];
  }
  for (int j = 0; j < kNumClasses; ++j) out.scores[j] /= sum;
}

void forward_sample(const double* p, const Observation& obs, RunMode mode,
                    double dropout_rate, Rng* rng, SampleCache& c) {
  const double* x = obs.context.data();
  for (int i = 0; i < kHid; ++i) {
    double z = p[DualHeadModel::kB1 + i];
    const double* row = p + DualHeadModel::kW1 + i * kIn;
    for (int j = 0; j < kIn; ++j) z += row[j] * x[j];
    c.h1[i] = std::tanh(z);
  }
  if (mode == RunMode::kTrain && dropout_rate > 0.0) {
    const double keep = 1.0 - dropout_rate;
    for (int i = 0; i < kHid; ++i) {
      c.mask_scale[i] = rng->uniform01() < dropout_rate ? 0.0 : 1.0 / keep;
    }
  } else {
    c.mask_scale.fill(1.0);
  }
  for (int i = 0; i < kHid; ++i) c.h1d[i] = c.h1[i] * c.mask_scale[i];

  for (int i = 0; i < kHid; ++i) {
    double z = p[DualHeadModel::kB2 + i];
    const double* row = p + DualHeadModel::kW2 + i * kHid;
    for (int j = 0; j < kHid; ++j) z += row[j] * c.h1[j];
    c.h2[i] = std::tanh(z);
  }
  for (int i = 0; i < kOut; ++i) {
    double zp = p[DualHeadModel::kBp + i];
    double za = p[DualHeadModel::kBa + i];
    const double* rp = p + DualHeadModel::kWp + i * kHid;
    const double* ra = p + DualHeadModel::kWa + i * kHid;
    for (int j = 0; j < kHid; ++j) {
      zp += rp[j] * c.h2[j];
      za += ra[j] * c.h1d[j];
    }
    c.raw_p[i] = zp;
    c.raw_a[i] = za;
  }
  decode_head(c.raw_p, c.out.primary, c.clamped_p);
  decode_head(c.raw_a, c.out.auxiliary, c.clamped_a);
}

double head_nll(const HeadOutput& h, Vec2 target) {
  return laplace_nll(h.point, target);
}

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Gradient of the per-sample loss with respect to a head's raw outputs.
void head_raw_grad(const HeadOutput& out, const std::array<bool, 2>& clamped,
                   Vec2 target, ElementClass true_class, double w_reg,
                   double scale, std::array<double, kOut>& g) {
  const double mu[2] = {out.point.mu.x, out.point.mu.y};
  const double b[2] = {out.point.b.x, out.point.b.y};
  const double t[2] = {target.x, target.y};
  for (int a = 0; a < 2; ++a) {
    const double residual = t[a] - mu[a];
    g[a] = scale * w_reg * (-sign_of(residual) / b[a]);
    g[2 + a] =
        clamped[a] ? 0.0 : scale * w_reg * (1.0 - std::abs(residual) / b[a]);
  }
  const int tc = static_cast<int>(true_class);
  for (int j = 0; j < kNumClasses; ++j) {
    g[4 + j] = scale * (out.scores[j] - (j == tc ? 1.0 : 0.0));
  }
}

// Shared backward pass. `grad` may be null for loss-only evaluation.
LossBreakdown batch_pass(const DualHeadModel& model,
                         std::span<const Observation> batch,
                         double regression_weight, RunMode mode,
                         double dropout_rate, Rng* rng, double* grad) {
  const double* p = model.data();
  const double scale = 1.0 / static_cast<double>(batch.size());
  LossBreakdown sum;
  SampleCache c;
  std::array<double, kOut> gp{}, ga{};
  std::array<double, kHid> dh1{}, dh2{}, dh1d{}, dz{};

  for (const Observation& obs : batch) {
    if (!obs.true_pos.finite()) {
      throw std::invalid_argument("non-finite target position");
    }
    forward_sample(p, obs, mode, dropout_rate, rng, c);
    const double reg = head_nll(c.out.primary, obs.true_pos) +
                       head_nll(c.out.auxiliary, obs.true_pos);
    const double ce = cross_entropy(c.out.primary.scores, obs.true_class) +
                      cross_entropy(c.out.auxiliary.scores, obs.true_class);
    sum.regression += scale * regression_weight * reg;
    sum.classification += scale * ce;

    if (grad == nullptr) continue;
    head_raw_grad(c.out.primary, c.clamped_p, obs.true_pos, obs.true_class,
                  regression_weight, scale, gp);
    head_raw_grad(c.out.auxiliary, c.clamped_a, obs.true_pos, obs.true_class,
                  regression_weight, scale, ga);

    dh1.fill(0.0);
    dh2.fill(0.0);
    dh1d.fill(0.0);
    for (int i = 0; i < kOut; ++i) {
      double* wp_row = grad + DualHeadModel::kWp + i * kHid;
      double* wa_row = grad + DualHeadModel::kWa + i * kHid;
      const double* mp_row = p + DualHeadModel::kWp + i * kHid;
      const double* ma_row = p + DualHeadModel::kWa + i * kHid;
      for (int j = 0; j < kHid; ++j) {
        wp_row[j] += gp[i] * c.h2[j];
        wa_row[j] += ga[i] * c.h1d[j];
        dh2[j] += mp_row[j] * gp[i];
        dh1d[j] += ma_row[j] * ga[i];
      }
      grad[DualHeadModel::kBp + i] += gp[i];
      grad[DualHeadModel::kBa + i] += ga[i];
    }
    for (int i = 0; i < kHid; ++i) {
      dz[i] = (1.0 - c.h2[i] * c.h2[i]) * dh2[i];
    }
    for (int i = 0; i < kHid; ++i) {
      double* w2_row = grad + DualHeadModel::kW2 + i * kHid;
      const double* m2_row = p + DualHeadModel::kW2 + i * kHid;
      for (int j = 0; j < kHid; ++j) {
        w2_row[j] += dz[i] * c.h1[j];
        dh1[j] += m2_row[j] * dz[i];
      }
      grad[DualHeadModel::kB2 + i] += dz[i];
    }
    for (int i = 0; i < kHid; ++i) dh1[i] += c.mask_scale[i] * dh1d[i];
    for (int i = 0; i < kHid; ++i) {
      dz[i] = (1.0 - c.h1[i] * c.h1[i]) * dh1[i];
    }
    for (int i = 0; i < kHid; ++i) {
      double* w1_row = grad + DualHeadModel::kW1 + i * kIn;
      for (int j = 0; j < kIn; ++j) {
        w1_row[j] += dz[i] * obs.context[j];
      }
      grad[DualHeadModel::kB1 + i] += dz[i];
    }
  }
  sum.total = sum.regression + sum.classification;
  return sum;
}

}  // namespace

DualHeadModel DualHeadModel::random_init(std::uint64_t seed) {
  DualHeadModel m;
  Rng rng(seed);
  auto fill_layer = [&](int offset, int rows, int cols) {
    const double s = 1.0 / std::sqrt(static_cast<double>(cols));
    for (int i = 0; i < rows * cols; ++i) {
      m.params_[offset + i] = rng.normal(0.0, s);
    }
  };
  fill_layer(kW1, kHiddenWidth, kInputWidth);
  fill_layer(kW2, kHiddenWidth, kHiddenWidth);
  fill_layer(kWp, kHeadWidth, kHiddenWidth);
  fill_layer(kWa, kHeadWidth, kHiddenWidth);
  // Biases stay zero.
  return m;
}

bool DualHeadModel::finite() const {
  return std::all_of(params_.begin(), params_.end(),
                     [](double v) { return std::isfinite(v); });
}

std::vector<DualHeadOutput> forward(const DualHeadModel& model,
                                    std::span<const Observation> batch,
                                    RunMode mode, double dropout_rate,
                                    std::uint64_t seed) {
  if (!model.finite()) {
    throw std::invalid_argument("model has non-finite parameters");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw std::invalid_argument("dropout rate must be in [0, 1)");
  }
  Rng rng(seed);
  std::vector<DualHeadOutput> out;
  out.reserve(batch.size());
  SampleCache c;
  for (const Observation& obs : batch) {
    forward_sample(model.data(), obs, mode, dropout_rate, &rng, c);
    out.push_back(c.out);
  }
  return out;
}

double laplace_nll(const LaplacePoint& point, Vec2 target) {
  if (!target.finite()) {
    throw std::invalid_argument("non-finite target");
  }
  const double lx =
      std::log(2.0 * point.b.x) + std::abs(target.x - point.mu.x) / point.b.x;
  const double ly =
      std::log(2.0 * point.b.y) + std::abs(target.y - point.mu.y) / point.b.y;
  return lx + ly;
}

double cross_entropy(const ClassScores& scores, ElementClass true_class) {
  const double s = scores[static_cast<int>(true_class)];
  return -std::log(std::max(s, 1e-300));
}

LossBreakdown loss(std::span<const DualHeadOutput> outputs,
                   std::span<const Observation> targets,
                   double regression_weight) {
  if (outputs.size() != targets.size()) {
    throw std::invalid_argument("outputs/targets size mismatch");
  }
  if (outputs.empty()) {
    throw std::invalid_argument("empty batch");
  }
  const double scale = 1.0 / static_cast<double>(outputs.size());
  LossBreakdown sum;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (!targets[i].true_pos.finite()) {
      throw std::invalid_argument("non-finite target position");
    }
    const double reg = laplace_nll(outputs[i].primary.point, targets[i].true_pos) +
                       laplace_nll(outputs[i].auxiliary.point, targets[i].true_pos);
    const double ce =
        cross_entropy(outputs[i].primary.scores, targets[i].true_class) +
        cross_entropy(outputs[i].auxiliary.scores, targets[i].true_class);
    sum.regression += scale * regression_weight * reg;
    sum.classification += scale * ce;
  }
  sum.total = sum.regression + sum.classification;
  return sum;
}

std::vector<std::string> validate_train_config(const TrainConfig& config) {
  std::vector<std::string> problems;
  auto positive = [&](double v, const char* field) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      problems.push_back(std::string(field) + ": must be a finite positive number");
    }
  };
  // learning_rate = 0 is permitted so "no update" runs stay expressible.
  if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate)) {
    problems.push_back("learning_rate: must be a finite non-negative number");
  }
  positive(config.regression_loss_weight, "regression_loss_weight");
  positive(config.grad_norm_clip, "grad_norm_clip");
  if (!(config.dropout_rate >= 0.0 && config.dropout_rate < 1.0)) {
    problems.push_back("dropout_rate: must be in [0, 1)");
  }
  if (!(config.momentum >= 0.0 && config.momentum < 1.0)) {
    problems.push_back("momentum: must be in [0, 1)");
  }
  if (config.epochs <= 0) problems.push_back("epochs: must be positive");
  if (config.batch_size <= 0) problems.push_back("batch_size: must be positive");
  return problems;
}

TrainResult train(std::span<const Observation> dataset,
                  const TrainConfig& config) {
  const std::vector<std::string> problems = validate_train_config(config);
  if (!problems.empty()) {
    throw std::invalid_argument("invalid train config: " + problems.front());
  }
  if (dataset.empty()) {
    throw std::invalid_argument("training dataset is empty");
  }

  TrainResult result;
  result.model = DualHeadModel::random_init(derive_seed(config.seed, 0));
  Rng stream(derive_seed(config.seed, 1));

  const std::size_t n = dataset.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad(DualHeadModel::kParamCount, 0.0);
  std::vector<double> velocity(DualHeadModel::kParamCount, 0.0);
  std::vector<Observation> batch;
  batch.reserve(static_cast<std::size_t>(config.batch_size));

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    stream.shuffle(order);
    LossBreakdown epoch_sum;
    for (std::size_t start = 0; start < n;
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop =
          std::min(n, start + static_cast<std::size_t>(config.batch_size));
      batch.clear();
      for (std::size_t k = start; k < stop; ++k) {
        batch.push_back(dataset[order[k]]);
      }
      std::fill(grad.begin(), grad.end(), 0.0);
      const LossBreakdown b =
          batch_pass(result.model, batch, config.regression_loss_weight,
                     RunMode::kTrain, config.dropout_rate, &stream, grad.data());
      if (!std::isfinite(b.total)) {
        char msg[128];
        std::snprintf(msg, sizeof(msg),
                      "training diverged: non-finite loss at epoch %d, batch "
                      "starting at %zu",
                      epoch, start);
        throw std::runtime_error(msg);
      }
      const double w = static_cast<double>(batch.size());
      epoch_sum.total += b.total * w;
      epoch_sum.regression += b.regression * w;
      epoch_sum.classification += b.classification * w;

      double norm_sq = 0.0;
      for (const double g : grad) norm_sq += g * g;
      const double norm = std::sqrt(norm_sq);
      const double clip_scale =
          norm > config.grad_norm_clip ? config.grad_norm_clip / norm : 1.0;
      double* params = result.model.data();
      for (int i = 0; i < DualHeadModel::kParamCount; ++i) {
        velocity[i] = config.momentum * velocity[i] + clip_scale * grad[i];
        params[i] -= config.learning_rate * velocity[i];
      }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    result.trace.push_back({epoch, epoch_sum.total * inv_n,
                            epoch_sum.regression * inv_n,
                            epoch_sum.classification * inv_n});
  }
  return result;
}

LossBreakdown loss_gradient(const DualHeadModel& model,
                            std::span<const Observation> batch,
                            double regression_weight, std::span<double> grad) {
  if (grad.size() != DualHeadModel::kParamCount) {
    throw std::invalid_argument("gradient buffer size mismatch");
  }
  if (batch.empty()) {
    throw std::invalid_argument("empty batch");
  }
  std::fill(grad.begin(), grad.end(), 0.0);
  return batch_pass(model, batch, regression_weight, RunMode::kEval, 0.0,
                    nullptr, grad.data());
}

double grad_check(const DualHeadModel& model, const Observation& sample,
                  double epsilon, double regression_weight) {
  if (!(epsilon >= 1e-7 && epsilon <= 1e-3)) {
    throw std::invalid_argument("epsilon must be in [1e-7, 1e-3]");
  }
  std::vector<double> analytic(DualHeadModel::kParamCount, 0.0);
  const std::span<const Observation> batch(&sample, 1);
  loss_gradient(model, batch, regression_weight, analytic);

  // Parameters excluded near the |residual| kink: everything upstream of the
  // affected position output. The primary head reaches back through the whole
  // encoder; the auxiliary head reaches back through layer 1 only.
  std::vector<bool> masked(DualHeadModel::kParamCount, false);
  {
    const std::vector<DualHeadOutput> out =
        forward(model, batch, RunMode::kEval, 0.0, 0);
    const Vec2 rp = sample.true_pos - out[0].primary.point.mu;
    const Vec2 ra = sample.true_pos - out[0].auxiliary.point.mu;
    const double lim = 10.0 * epsilon;
    auto mask_range = [&](int offset, int count) {
      std::fill(masked.begin() + offset, masked.begin() + offset + count, true);
    };
    const double rps[2] = {rp.x, rp.y};
    const double ras[2] = {ra.x, ra.y};
    for (int a = 0; a < 2; ++a) {
      if (std::abs(rps[a]) < lim) {
        mask_range(DualHeadModel::kWp + a * DualHeadModel::kHiddenWidth,
                   DualHeadModel::kHiddenWidth);
        masked[DualHeadModel::kBp + a] = true;
        mask_range(DualHeadModel::kW1, DualHeadModel::kB1 - DualHeadModel::kW1);
        mask_range(DualHeadModel::kB1, DualHeadModel::kHiddenWidth);
        mask_range(DualHeadModel::kW2, DualHeadModel::kB2 - DualHeadModel::kW2);
        mask_range(DualHeadModel::kB2, DualHeadModel::kHiddenWidth);
      }
      if (std::abs(ras[a]) < lim) {
        mask_range(DualHeadModel::kWa + a * DualHeadModel::kHiddenWidth,
                   DualHeadModel::kHiddenWidth);
        masked[DualHeadModel::kBa + a] = true;
        mask_range(DualHeadModel::kW1, DualHeadModel::kB1 - DualHeadModel::kW1);
        mask_range(DualHeadModel::kB1, DualHeadModel::kHiddenWidth);
      }
    }
  }

  DualHeadModel probe = model;
  double* p = probe.data();
  double max_rel = 0.0;
  for (int i = 0; i < DualHeadModel::kParamCount; ++i) {
    if (masked[i]) continue;
    const double saved = p[i];
    p[i] = saved + epsilon;
    const std::vector<DualHeadOutput> hi =
        forward(probe, batch, RunMode::kEval, 0.0, 0);
    const double lhi = loss(hi, batch, regression_weight).total;
    p[i] = saved - epsilon;
    const std::vector<DualHeadOutput> lo =
        forward(probe, batch, RunMode::kEval, 0.0, 0);
    const double llo = loss(lo, batch, regression_weight).total;
    p[i] = saved;
    const double numeric = (lhi - llo) / (2.0 * epsilon);
    const double rel = std::abs(analytic[i] - numeric) /
                       std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric));
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

std::vector<UncertainMapElement> estimate_uncertain_map(
    const DualHeadModel& model, std::span<const Observation> observations,
    std::span<const MapElement> element_table) {
  std::map<int, std::size_t> table_index;
  for (std::size_t i = 0; i < element_table.size(); ++i) {
    table_index.emplace(element_table[i].id, i);
  }
  std::vector<std::vector<UncertainVertex>> buckets(element_table.size());

  const std::vector<DualHeadOutput> outputs =
      forward(model, observations, RunMode::kEval, 0.0, 0);
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const auto it = table_index.find(observations[i].element_id);
    if (it == table_index.end()) {
      throw std::invalid_argument(
          "observation references unknown element id " +
          std::to_string(observations[i].element_id));
    }
    const DualHeadOutput& o = outputs[i];
    UncertainVertex v;
    v.position = {std::clamp(o.primary.point.mu.x, 0.0, 1.0),
                  std::clamp(o.primary.point.mu.y, 0.0, 1.0)};
    v.beta = positional_uncertainty(o.primary.point, o.auxiliary.point).beta;
    const SemanticFusion fusion =
        semantic_fuse(o.primary.scores, o.auxiliary.scores);
    v.c_bar = fusion.c_bar;
    v.delta_c = fusion.delta_c;
    buckets[it->second].push_back(v);
  }

  std::vector<UncertainMapElement> result;
  for (std::size_t i = 0; i < element_table.size(); ++i) {
    if (buckets[i].empty()) continue;
    UncertainMapElement e;
    e.id = element_table[i].id;
    e.vertices = std::move(buckets[i]);
    const double inv = 1.0 / static_cast<double>(e.vertices.size());
    for (const UncertainVertex& v : e.vertices) {
      e.mean_beta += v.beta * inv;
      for (int j = 0; j < kNumClasses; ++j) {
        e.mean_c_bar[j] += v.c_bar[j] * inv;
        e.mean_delta_c[j] += v.delta_c[j] * inv;
      }
    }
    int best = 0;
    for (int j = 1; j < kNumClasses; ++j) {
      if (e.mean_c_bar[j] > e.mean_c_bar[best]) best = j;
    }
    e.estimated_class = static_cast<ElementClass>(best);
    result.push_back(std::move(e));
  }
  return result;
}

namespace {

struct LayerSpec {
  const char* name;
  int offset;
  int rows;
  int cols;
};

constexpr LayerSpec kDualHeadLayers[] = {
    {"W1", DualHeadModel::kW1, DualHeadModel::kHiddenWidth, DualHeadModel::kInputWidth},
    {"b1", DualHeadModel::kB1, 1, DualHeadModel::kHiddenWidth},
    {"W2", DualHeadModel::kW2, DualHeadModel::kHiddenWidth, DualHeadModel::kHiddenWidth},
    {"b2", DualHeadModel::kB2, 1, DualHeadModel::kHiddenWidth},
    {"Wp", DualHeadModel::kWp, DualHeadModel::kHeadWidth, DualHeadModel::kHiddenWidth},
    {"bp", DualHeadModel::kBp, 1, DualHeadModel::kHeadWidth},
    {"Wa", DualHeadModel::kWa, DualHeadModel::kHeadWidth, DualHeadModel::kHiddenWidth},
    {"ba", DualHeadModel::kBa, 1, DualHeadModel::kHeadWidth},
};

}  // namespace

std::string emit_dual_head_checkpoint(const DualHeadModel& model) {
  std::string out = "uamap-checkpoint dual-head v1\n";
  const double* p = model.data();
  for (const LayerSpec& layer : kDualHeadLayers) {
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

DualHeadModel parse_dual_head_checkpoint(const std::string& text) {
  detail::LineReader r(text);
  r.require_line("header");
  r.expect_keyword("uamap-checkpoint");
  r.expect_keyword("dual-head");
  r.expect_keyword("v1");
  r.end_of_line();
  DualHeadModel model;
  double* p = model.data();
  for (const LayerSpec& layer : kDualHeadLayers) {
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

void save_dual_head_checkpoint(const std::filesystem::path& path,
                               const DualHeadModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path.string());
  }
  out << emit_dual_head_checkpoint(model);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

DualHeadModel load_dual_head_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open for reading: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dual_head_checkpoint(buf.str());
}

std::string emit_loss_trace_csv(std::span<const TraceRow> trace) {
  std::string out = "epoch,total,regression,classification\n";
  for (const TraceRow& row : trace) {
    out += std::to_string(row.epoch);
    out += ',';
    out += format_number(row.total);
    out += ',';
    out += format_number(row.regression);
    out += ',';
    out += format_number(row.classification);
    out += '\n';
  }
  return out;
}

std::string emit_uncertain_map(std::span<const UncertainMapElement> elements) {
  std::string out = "uamap-uncertain-map v1\n";
  out += "elements ";
  out += std::to_string(elements.size());
  out += '\n';
  for (const UncertainMapElement& e : elements) {
    out += "element ";
    out += std::to_string(e.id);
    out += ' ';
    out += class_name(e.estimated_class);
    out += ' ';
    out += std::to_string(e.vertices.size());
    out += '\n';
    out += "summary ";
    out += format_number(e.mean_beta);
    for (const double v : e.mean_c_bar) {
      out += ' ';
      out += format_number(v);
    }
    for (const double v : e.mean_delta_c) {
      out += ' ';
      out += format_number(v);
    }
    out += '\n';
    for (const UncertainVertex& v : e.vertices) {
      out += "v ";
      out += format_number(v.position.x);
      out += ' ';
      out += format_number(v.position.y);
      out += ' ';
      out += format_number(v.beta);
      for (const double s : v.c_bar) {
        out += ' ';
        out += format_number(s);
      }
      for (const double s : v.delta_c) {
        out += ' ';
        out += format_number(s);
      }
      out += '\n';
    }
  }
  return out;
}

std::vector<UncertainMapElement> parse_uncertain_map(const std::string& text) {
  detail::LineReader r(text);
  r.require_line("header");
  r.expect_keyword("uamap-uncertain-map");
  r.expect_keyword("v1");
  r.end_of_line();
  r.require_line("elements");
  r.expect_keyword("elements");
  const long long n = r.integer("element count");
  r.end_of_line();
  if (n < 0) throw ParseError(r.line_no(), "negative element count");
  std::vector<UncertainMapElement> out;
  for (long long i = 0; i < n; ++i) {
    r.require_line("element");
    r.expect_keyword("element");
    UncertainMapElement e;
    e.id = static_cast<int>(r.integer("element id"));
    e.estimated_class = r.class_token("element class");
    const long long nv = r.integer("vertex count");
    r.end_of_line();
    if (nv < 0) throw ParseError(r.line_no(), "negative vertex count");
    r.require_line("summary");
    r.expect_keyword("summary");
    e.mean_beta = r.number("mean beta");
    for (double& v : e.mean_c_bar) v = r.number("mean c_bar");
    for (double& v : e.mean_delta_c) v = r.number("mean delta_c");
    r.end_of_line();
    for (long long k = 0; k < nv; ++k) {
      r.require_line("vertex");
      r.expect_keyword("v");
      UncertainVertex v;
      v.position.x = r.number("vertex x");
      v.position.y = r.number("vertex y");
      v.beta = r.number("vertex beta");
      for (double& s : v.c_bar) s = r.number("vertex c_bar");
      for (double& s : v.delta_c) s = r.number("vertex delta_c");
      r.end_of_line();
      e.vertices.push_back(v);
    }
    out.push_back(std::move(e));
  }
  if (r.next_line()) {
    throw ParseError(r.line_no(), "unexpected content after document end");
  }
  return out;
}

void save_uncertain_map(const std::filesystem::path& path,
                        std::span<const UncertainMapElement> elements) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path.string());
  }
  out << emit_uncertain_map(elements);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<UncertainMapElement> load_uncertain_map(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open for reading: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_uncertain_map(buf.str());
}

}  // namespace uamap
