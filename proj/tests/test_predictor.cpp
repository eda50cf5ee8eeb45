#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "uamap/geometry.hpp"
#include "uamap/metrics.hpp"
#include "uamap/predictor.hpp"
#include "uamap/rng.hpp"
#include "uamap/scene_gen.hpp"
#include "uamap/scene_io.hpp"

namespace {

using namespace uamap;

MapToken sample_token(Rng& rng) {
  MapToken t;
  t.mu = {rng.uniform01(), rng.uniform01()};
  t.beta = rng.uniform(0.0, 2.0);
  double sum = 0.0;
  for (int c = 0; c < kNumClasses; ++c) {
    t.c_bar[c] = std::exp(rng.normal());
    sum += t.c_bar[c];
  }
  for (int c = 0; c < kNumClasses; ++c) {
    t.c_bar[c] /= sum;
    t.delta_c[c] = rng.uniform01();
  }
  return t;
}

std::vector<MapToken> sample_tokens(Rng& rng, int n) {
  std::vector<MapToken> tokens;
  for (int i = 0; i < n; ++i) tokens.push_back(sample_token(rng));
  return tokens;
}

PredictorItem sample_item(Rng& rng, int scene_index) {
  PredictorItem item;
  item.scene_index = scene_index;
  Vec2 p{rng.uniform(-20.0, 20.0), rng.uniform(-10.0, 10.0)};
  Vec2 v{rng.uniform(-0.8, 0.8), rng.uniform(-0.3, 0.3)};
  for (int j = 0; j < kHistorySteps; ++j) {
    item.history[j] = p;
    p = p + v;
  }
  for (int j = 0; j < kFutureSteps; ++j) {
    p = p + v;
    item.future[j] = p;
  }
  return item;
}

double context_distance(const MapContext& a, const MapContext& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += (a[i] - b[i]) * (a[i] - b[i]);
  }
  return std::sqrt(sum);
}

bool prediction_sets_identical(const PredictionSet& a, const PredictionSet& b) {
  for (int m = 0; m < kNumModes; ++m) {
    if (a.scores[m] != b.scores[m]) return false;
    for (int j = 0; j < kFutureSteps; ++j) {
      if (a.modes[m][j].x != b.modes[m][j].x) return false;
      if (a.modes[m][j].y != b.modes[m][j].y) return false;
    }
  }
  return true;
}

// Idealized uncertain map built straight from the scene geometry: exact
// positions, one-hot classes, zero uncertainty channels.
std::vector<MapToken> perfect_tokens(const Scene& scene) {
  std::vector<UncertainMapElement> elements;
  for (const MapElement& e : clip_to_perception_range(scene.elements)) {
    UncertainMapElement u;
    u.id = e.id;
    u.estimated_class = e.cls;
    for (const Vec2& p : e.points) {
      UncertainVertex v;
      v.position = normalize_to_bev(p);
      v.c_bar[static_cast<int>(e.cls)] = 1.0;
      u.vertices.push_back(v);
    }
    elements.push_back(u);
  }
  return build_map_tokens(elements);
}

void add_scene(PredictorDataset& data, const Scene& scene) {
  const int idx = static_cast<int>(data.scene_tokens.size());
  data.scene_tokens.push_back(perfect_tokens(scene));
  for (const Agent& a : scene.agents) {
    PredictorItem item;
    item.scene_index = idx;
    std::copy(a.history.samples.begin(), a.history.samples.end(),
              item.history.begin());
    std::copy(a.future.samples.begin(), a.future.samples.end(),
              item.future.begin());
    data.items.push_back(item);
  }
}

}  // namespace

TEST_CASE("encode_map is permutation invariant") {
  const PredictorModel model = PredictorModel::random_init(3);
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<MapToken> tokens = sample_tokens(rng, 2 + trial);
    const MapContext base = encode_map(model, tokens);
    std::vector<std::size_t> order(tokens.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    std::vector<MapToken> shuffled;
    for (std::size_t i : order) shuffled.push_back(tokens[i]);
    const MapContext permuted = encode_map(model, shuffled);
    CHECK(context_distance(base, permuted) == 0.0);
  }
}

TEST_CASE("encode_map handles empty and single-token inputs") {
  const PredictorModel model = PredictorModel::random_init(4);
  SUBCASE("empty map yields the all-zero context") {
    const MapContext ctx = encode_map(model, {});
    for (double v : ctx) CHECK(v == 0.0);
  }
  SUBCASE("single token pools to its own embedding") {
    Rng rng(5);
    const std::vector<MapToken> one{sample_token(rng)};
    const std::vector<MapToken> repeated{one[0], one[0], one[0]};
    CHECK(context_distance(encode_map(model, one),
                           encode_map(model, repeated)) == 0.0);
  }
}

TEST_CASE("encode_map is sensitive to beta when unmasked") {
  PredictorModel model = PredictorModel::random_init(6);
  model.mask = TokenMask::kBoth;
  Rng rng(7);
  std::vector<MapToken> tokens = sample_tokens(rng, 5);
  std::vector<MapToken> doubled = tokens;
  for (MapToken& t : doubled) t.beta *= 2.0;
  CHECK(context_distance(encode_map(model, tokens),
                         encode_map(model, doubled)) > 0.0);
}

TEST_CASE("token masks zero exactly the advertised channels") {
  Rng rng(8);
  const std::vector<MapToken> tokens = sample_tokens(rng, 6);
  std::vector<MapToken> beta_bumped = tokens;
  for (MapToken& t : beta_bumped) t.beta += 0.7;
  std::vector<MapToken> delta_bumped = tokens;
  for (MapToken& t : delta_bumped) {
    for (int c = 0; c < kNumClasses; ++c) t.delta_c[c] = rng.uniform01();
  }

  const auto check_mask = [&](TokenMask mask, bool beta_visible,
                              bool delta_visible) {
    PredictorModel model = PredictorModel::random_init(9);
    model.mask = mask;
    const MapContext base = encode_map(model, tokens);
    CHECK((context_distance(base, encode_map(model, beta_bumped)) > 0.0) ==
          beta_visible);
    CHECK((context_distance(base, encode_map(model, delta_bumped)) > 0.0) ==
          delta_visible);
  };
  check_mask(TokenMask::kBoth, true, true);
  check_mask(TokenMask::kPosOnly, true, false);
  check_mask(TokenMask::kSemOnly, false, true);
  check_mask(TokenMask::kBaseline, false, false);
}

TEST_CASE("token mask names round-trip and accept the aliases") {
  for (TokenMask mask : {TokenMask::kBoth, TokenMask::kPosOnly,
                         TokenMask::kSemOnly, TokenMask::kBaseline}) {
    CHECK(token_mask_from_name(token_mask_name(mask)) == mask);
  }
  CHECK(token_mask_from_name("with_uncertainty") == TokenMask::kBoth);
  CHECK(token_mask_from_name("no_uncertainty") == TokenMask::kBaseline);
  CHECK_THROWS_AS(token_mask_from_name("half"), std::invalid_argument);
}

TEST_CASE("predict with a zero model pins every mode to the last position") {
  const PredictorModel zero;
  Rng rng(10);
  const PredictorItem item = sample_item(rng, 0);
  const MapContext ctx{};
  const PredictionSet pred = predict(zero, item.history, ctx);
  const Vec2 last = item.history.back();
  for (int m = 0; m < kNumModes; ++m) {
    CHECK(pred.scores[m] == doctest::Approx(1.0 / kNumModes).epsilon(1e-15));
    for (const Vec2& p : pred.modes[m]) {
      CHECK(p.x == last.x);
      CHECK(p.y == last.y);
    }
  }
}

TEST_CASE("predict is deterministic and emits simplex scores") {
  const PredictorModel model = PredictorModel::random_init(11);
  Rng rng(12);
  const std::vector<MapToken> tokens = sample_tokens(rng, 7);
  const MapContext ctx = encode_map(model, tokens);
  const PredictorItem item = sample_item(rng, 0);
  const PredictionSet a = predict(model, item.history, ctx);
  const PredictionSet b = predict(model, item.history, ctx);
  CHECK(prediction_sets_identical(a, b));
  double sum = 0.0;
  for (double s : a.scores) {
    CHECK(s >= 0.0);
    sum += s;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("predict rejects non-finite history") {
  const PredictorModel model = PredictorModel::random_init(13);
  Rng rng(14);
  PredictorItem item = sample_item(rng, 0);
  item.history[3].x = std::nan("");
  CHECK_THROWS_AS(predict(model, item.history, MapContext{}),
                  std::invalid_argument);
}

TEST_CASE("constant velocity baseline extrapolates the last step") {
  SUBCASE("straight +x at 1 m/s") {
    std::vector<Vec2> history;
    for (int j = 0; j < kHistorySteps; ++j) {
      history.push_back({0.1 * j, 0.0});
    }
    const PredictionSet pred = constant_velocity_baseline(history);
    const Vec2 endpoint = pred.modes[0].back();
    CHECK(endpoint.x == doctest::Approx(1.9 + 3.0).epsilon(1e-12));
    CHECK(endpoint.y == doctest::Approx(0.0).epsilon(1e-12));
    for (double s : pred.scores) {
      CHECK(s == doctest::Approx(1.0 / kNumModes).epsilon(1e-15));
    }
  }
  SUBCASE("zero velocity collapses every mode") {
    const std::vector<Vec2> history(kHistorySteps, Vec2{4.0, -2.0});
    const PredictionSet pred = constant_velocity_baseline(history);
    for (const FutureTrack& mode : pred.modes) {
      for (const Vec2& p : mode) {
        CHECK(p.x == doctest::Approx(4.0).epsilon(1e-15));
        CHECK(p.y == doctest::Approx(-2.0).epsilon(1e-15));
      }
    }
  }
  SUBCASE("fewer than two points is an error") {
    const std::vector<Vec2> one{{0.0, 0.0}};
    CHECK_THROWS_AS(constant_velocity_baseline(one), std::invalid_argument);
    CHECK_THROWS_AS(constant_velocity_baseline({}), std::invalid_argument);
  }
}

TEST_CASE("tangent extrapolation of a circular arc matches the closed form") {
  // History on a circle of radius 20 m; the tangent mode leaves the arc, and
  // its endpoint gap to the arc continuation is pure circle geometry.
  const double radius = 20.0;
  const double step_angle = 0.004;
  const double theta0 = -0.3;
  const auto at = [&](int j) {
    const double th = theta0 + step_angle * j;
    return Vec2{radius * std::cos(th), radius * std::sin(th)};
  };
  std::vector<Vec2> history;
  for (int j = 0; j < kHistorySteps; ++j) history.push_back(at(j));
  FutureTrack future{};
  for (int k = 0; k < kFutureSteps; ++k) {
    future[k] = at(kHistorySteps + k);
  }

  const Vec2 chord = at(19) - at(18);
  const Vec2 tangent_endpoint = at(19) + chord * 30.0;
  const double expected_gap = (tangent_endpoint - future.back()).norm();

  const PredictionSet pred = constant_velocity_baseline(history);
  CHECK((pred.modes[0].back() - tangent_endpoint).norm() < 1e-9);
  CHECK(min_fde(pred, future) == doctest::Approx(expected_gap).epsilon(1e-9));
}

TEST_CASE("predictions are invariant to masked channels end to end") {
  Rng rng(15);
  std::vector<MapToken> tokens = sample_tokens(rng, 8);
  std::vector<MapToken> perturbed = tokens;
  for (MapToken& t : perturbed) {
    t.beta = rng.uniform(0.0, 3.0);
    for (int c = 0; c < kNumClasses; ++c) {
      t.delta_c[c] = rng.uniform01();
    }
  }
  const PredictorItem item = sample_item(rng, 0);
  PredictorModel model = PredictorModel::random_init(16);
  model.mask = TokenMask::kBaseline;
  const PredictionSet a =
      predict(model, item.history, encode_map(model, tokens));
  const PredictionSet b =
      predict(model, item.history, encode_map(model, perturbed));
  CHECK(prediction_sets_identical(a, b));
}

TEST_CASE("predictor train config validation") {
  CHECK(validate_predictor_train_config(PredictorTrainConfig{}).empty());
  PredictorTrainConfig zero_lr;
  zero_lr.learning_rate = 0.0;
  CHECK(validate_predictor_train_config(zero_lr).empty());
  PredictorTrainConfig bad;
  bad.learning_rate = -1.0;
  bad.batch_size = 0;
  const auto problems = validate_predictor_train_config(bad);
  REQUIRE(problems.size() == 2);
  CHECK(problems[0].find("learning_rate") != std::string::npos);
  CHECK(problems[1].find("batch_size") != std::string::npos);
}

TEST_CASE("train_predictor is deterministic per seed") {
  PredictorDataset data;
  for (int s = 1; s <= 3; ++s) {
    add_scene(data, generate_scene(Layout::kStraight, s));
  }
  PredictorTrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 21;
  const PredictorTrainResult a = train_predictor(data, TokenMask::kBoth, cfg);
  const PredictorTrainResult b = train_predictor(data, TokenMask::kBoth, cfg);
  CHECK(emit_predictor_checkpoint(a.model) ==
        emit_predictor_checkpoint(b.model));
  CHECK(emit_predictor_trace_csv(a.trace) == emit_predictor_trace_csv(b.trace));
  CHECK(a.model.mask == TokenMask::kBoth);

  cfg.seed = 22;
  const PredictorTrainResult c = train_predictor(data, TokenMask::kBoth, cfg);
  CHECK(emit_predictor_checkpoint(a.model) !=
        emit_predictor_checkpoint(c.model));
}

TEST_CASE("train_predictor with zero learning rate leaves parameters alone") {
  PredictorDataset data;
  add_scene(data, generate_scene(Layout::kCurve, 2));
  PredictorTrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.batch_size = static_cast<int>(data.items.size());
  cfg.seed = 23;

  cfg.epochs = 1;
  const PredictorTrainResult one = train_predictor(data, TokenMask::kBoth, cfg);
  cfg.epochs = 6;
  const PredictorTrainResult six = train_predictor(data, TokenMask::kBoth, cfg);
  CHECK(emit_predictor_checkpoint(one.model) ==
        emit_predictor_checkpoint(six.model));
  REQUIRE(six.trace.size() == 6);
  for (const PredictorTraceRow& row : six.trace) {
    CHECK(row.total == doctest::Approx(six.trace[0].total).epsilon(1e-12));
  }
}

TEST_CASE("train_predictor rejects bad inputs") {
  PredictorDataset data;
  add_scene(data, generate_scene(Layout::kStraight, 4));
  SUBCASE("empty dataset") {
    CHECK_THROWS_AS(
        train_predictor(PredictorDataset{}, TokenMask::kBoth,
                        PredictorTrainConfig{}),
        std::invalid_argument);
  }
  SUBCASE("invalid config") {
    PredictorTrainConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(train_predictor(data, TokenMask::kBoth, cfg),
                    std::invalid_argument);
  }
  SUBCASE("scene index out of range") {
    PredictorDataset bad = data;
    bad.items[0].scene_index = 99;
    PredictorTrainConfig cfg;
    cfg.epochs = 1;
    CHECK_THROWS_AS(train_predictor(bad, TokenMask::kBoth, cfg),
                    std::invalid_argument);
  }
}

TEST_CASE("predictor analytic gradients match finite differences") {
  Rng rng(31);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    PredictorModel model = PredictorModel::random_init(seed);
    model.mask = static_cast<TokenMask>(seed % 4);
    const std::vector<MapToken> tokens = sample_tokens(rng, 4);
    const PredictorItem item = sample_item(rng, 0);
    CAPTURE(seed);
    CHECK(predictor_grad_check(model, tokens, item, 1e-5) < 1e-4);
  }
}

TEST_CASE("predictor_grad_check validates epsilon") {
  const PredictorModel model = PredictorModel::random_init(1);
  Rng rng(32);
  const std::vector<MapToken> tokens = sample_tokens(rng, 3);
  const PredictorItem item = sample_item(rng, 0);
  CHECK_THROWS_AS(predictor_grad_check(model, tokens, item, 1e-8),
                  std::invalid_argument);
  CHECK_THROWS_AS(predictor_grad_check(model, tokens, item, 1e-2),
                  std::invalid_argument);
}

TEST_CASE("trained predictor tracks straight-layout agents") {
  // Straight-road scenes with idealized map tokens; most motion is close to
  // constant velocity, so a trained model should put the best mode endpoint
  // within 2 m of ground truth for at least 90% of held-out agents.
  PredictorDataset train_data;
  for (int s = 1; s <= 24; ++s) {
    add_scene(train_data, generate_scene(Layout::kStraight, s));
  }
  PredictorDataset test_data;
  for (int s = 101; s <= 104; ++s) {
    add_scene(test_data, generate_scene(Layout::kStraight, s));
  }

  PredictorTrainConfig cfg;
  cfg.learning_rate = 2e-3;
  cfg.epochs = 400;
  cfg.seed = 1;
  const PredictorTrainResult r =
      train_predictor(train_data, TokenMask::kBoth, cfg);

  int hits = 0;
  for (const PredictorItem& item : test_data.items) {
    const MapContext ctx =
        encode_map(r.model, test_data.scene_tokens[item.scene_index]);
    const PredictionSet pred = predict(r.model, item.history, ctx);
    double best = std::numeric_limits<double>::infinity();
    for (const FutureTrack& mode : pred.modes) {
      best = std::min(best, (mode.back() - item.future.back()).norm());
    }
    if (best < 2.0) ++hits;
  }
  const double fraction =
      static_cast<double>(hits) / static_cast<double>(test_data.items.size());
  CHECK(fraction >= 0.9);
}

TEST_CASE("predictor checkpoint round-trips with its mask") {
  for (TokenMask mask : {TokenMask::kBoth, TokenMask::kPosOnly,
                         TokenMask::kSemOnly, TokenMask::kBaseline}) {
    PredictorModel model = PredictorModel::random_init(40);
    model.mask = mask;
    const std::string text = emit_predictor_checkpoint(model);
    CHECK(text.find(std::string("mask ") + token_mask_name(mask)) !=
          std::string::npos);
    const PredictorModel back = parse_predictor_checkpoint(text);
    CHECK(back.params() == model.params());
    CHECK(back.mask == mask);
    CHECK(emit_predictor_checkpoint(back) == text);
  }
}

TEST_CASE("predictor checkpoint file round-trip and errors") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "uamap_test_pred_ckpt.txt";
  PredictorModel model = PredictorModel::random_init(41);
  model.mask = TokenMask::kPosOnly;
  save_predictor_checkpoint(path, model);
  const PredictorModel back = load_predictor_checkpoint(path);
  CHECK(back.params() == model.params());
  CHECK(back.mask == TokenMask::kPosOnly);
  fs::remove(path);
  CHECK_THROWS_AS(load_predictor_checkpoint(path), std::runtime_error);

  const std::string good = emit_predictor_checkpoint(model);
  std::string bad = good;
  const std::size_t at = bad.find("mask pos_only");
  REQUIRE(at != std::string::npos);
  bad.replace(at, 13, "mask mystery!");
  CHECK_THROWS_AS(parse_predictor_checkpoint(bad), ParseError);
}

TEST_CASE("prediction dump CSV format") {
  std::vector<PredictionDumpRow> rows;
  rows.push_back({3, 1, 0, 1, 1.5, -2.25, 0.5});
  rows.push_back({3, 1, 0, 2, 2.5, -3.25, 0.5});
  const std::string csv = emit_prediction_dump_csv(rows);
  CHECK(csv.find("scene_id,agent_id,mode,step,x,y,score\n") == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.find("3,1,0,1,1.5,-2.25,0.5\n") != std::string::npos);
}
