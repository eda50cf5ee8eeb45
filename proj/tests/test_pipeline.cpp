#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "uamap/dual_head.hpp"
#include "uamap/noise.hpp"
#include "uamap/pipeline.hpp"
#include "uamap/predictor.hpp"
#include "uamap/rng.hpp"
#include "uamap/scene_gen.hpp"
#include "uamap/scene_io.hpp"

namespace fs = std::filesystem;
using namespace uamap;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "uamap_pipeline_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << text;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

bool any_problem_contains(const std::vector<std::string>& problems,
                          const std::string& needle) {
  for (const std::string& p : problems) {
    if (contains(p, needle)) return true;
  }
  return false;
}

// Small but complete experiment: enough scenes for all three splits while
// keeping training inside a few seconds.
ExperimentConfig tiny_config(const fs::path& out_dir) {
  ExperimentConfig cfg;
  cfg.layout_mix = {"straight", "curve"};
  cfg.scenes_train = 3;
  cfg.scenes_val = 1;
  cfg.scenes_test = 2;
  cfg.map_train.epochs = 6;
  cfg.map_train.batch_size = 64;
  cfg.predictor_train.epochs = 4;
  cfg.predictor_train.batch_size = 16;
  cfg.output_dir = out_dir.string();
  return cfg;
}

int count_scene_files(const fs::path& dir) {
  int n = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().filename().string().rfind("scene_", 0) == 0) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("fnv1a matches reference vectors and hex rendering pads") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
  CHECK(checksum_hex(0) == "0000000000000000");
  CHECK(checksum_hex(0xabcULL) == "0000000000000abc");
  CHECK(checksum_hex(0xcbf29ce484222325ULL) == "cbf29ce484222325");
}

TEST_CASE("config json emission round-trips and hashes canonically") {
  const ExperimentConfig defaults;
  const std::string text = emit_experiment_config_json(defaults);
  CHECK(text.back() == '\n');
  CHECK(contains(text, "\"master_seed\": 1"));
  CHECK(contains(text, "\"output_dir\": \"out\""));

  const ExperimentConfig parsed = parse_experiment_config_json(text);
  CHECK(emit_experiment_config_json(parsed) == text);
  CHECK(config_hash(parsed) == config_hash(defaults));

  // An empty object overlays nothing, so it parses to the defaults.
  CHECK(emit_experiment_config_json(parse_experiment_config_json("{}")) == text);

  ExperimentConfig changed = defaults;
  changed.scenes_train = 25;
  CHECK(config_hash(changed) != config_hash(defaults));
}

TEST_CASE("merge overlays only the fields present in the json") {
  ExperimentConfig cfg;
  cfg.output_dir = "base";
  cfg.master_seed = 7;

  merge_experiment_config_json(cfg, R"({
    "scenes_val": 9,
    "noise": {"pos_scale_b": 0.4, "confusion_eps": 0.3},
    "map_train": {"epochs": 3}
  })");

  CHECK(cfg.scenes_val == 9);
  CHECK(cfg.noise.pos_scale_b == 0.4);
  CHECK(cfg.noise.confusion[0][0] == doctest::Approx(0.7));
  CHECK(cfg.noise.confusion[0][1] == doctest::Approx(0.1));
  CHECK(cfg.map_train.epochs == 3);

  // Untouched fields keep their prior values, not the defaults.
  const ExperimentConfig defaults;
  CHECK(cfg.scenes_train == defaults.scenes_train);
  CHECK(cfg.noise.jitter == JitterKind::kLaplace);
  CHECK(cfg.map_train.learning_rate == defaults.map_train.learning_rate);
  CHECK(cfg.output_dir == "base");
  CHECK(cfg.master_seed == 7);

  // Occlusion sectors are replaced wholesale.
  cfg.noise.occlusion_sectors.push_back({0.0, 1.0, 0.5});
  merge_experiment_config_json(cfg, R"({"noise": {"occlusion_sectors": [
    {"angle_start": -1.0, "angle_end": -0.5, "drop_prob": 0.9}
  ]}})");
  REQUIRE(cfg.noise.occlusion_sectors.size() == 1);
  CHECK(cfg.noise.occlusion_sectors[0].angle_start == -1.0);
  CHECK(cfg.noise.occlusion_sectors[0].drop_prob == 0.9);

  CHECK_THROWS_WITH_AS(merge_experiment_config_json(cfg, "not json"),
                       doctest::Contains("config parse error"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      merge_experiment_config_json(cfg, R"({"scenes_train": "many"})"),
      doctest::Contains("config field error"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      merge_experiment_config_json(cfg, R"({"noise": {"jitter": "cauchy"}})"),
      doctest::Contains("unknown kind 'cauchy'"), std::invalid_argument);
  CHECK_THROWS_AS(
      merge_experiment_config_json(cfg, R"({"noise": {"confusion": [[1]]}})"),
      std::invalid_argument);
}

TEST_CASE("config validation names each offending field") {
  CHECK(validate_experiment_config(ExperimentConfig{}).empty());

  ExperimentConfig cfg;
  cfg.scenes_train = 0;
  cfg.layout_mix = {"straight", "hexagon"};
  cfg.noise.pos_scale_b = -1.0;
  cfg.map_train.epochs = 0;
  cfg.predictor_train.batch_size = 0;
  cfg.output_dir = "";

  const std::vector<std::string> problems = validate_experiment_config(cfg);
  CHECK(any_problem_contains(problems, "scenes_train"));
  CHECK(any_problem_contains(problems, "unknown layout 'hexagon'"));
  CHECK(any_problem_contains(problems, "noise.pos_scale_b"));
  CHECK(any_problem_contains(problems, "map_train.epochs"));
  CHECK(any_problem_contains(problems, "predictor_train.batch_size"));
  CHECK(any_problem_contains(problems, "output_dir"));

  // gen-data refuses to run with the aggregated message.
  ExperimentConfig bad = tiny_config(fresh_dir("gen_invalid"));
  bad.scenes_train = 0;
  CHECK_THROWS_WITH_AS(cmd_gen_data(bad),
                       doctest::Contains("invalid config:"),
                       std::invalid_argument);
  try {
    cmd_gen_data(bad);
  } catch (const std::invalid_argument& e) {
    CHECK(contains(e.what(), "scenes_train"));
  }
}

TEST_CASE("mask flags and stage seeds follow the documented scheme") {
  CHECK(mask_from_flags(false, false) == TokenMask::kBaseline);
  CHECK(mask_from_flags(true, false) == TokenMask::kPosOnly);
  CHECK(mask_from_flags(false, true) == TokenMask::kSemOnly);
  CHECK(mask_from_flags(true, true) == TokenMask::kBoth);

  CHECK(stage_seed(1, 1) == derive_seed(1, 1));
  CHECK(stage_seed(1, 4) == derive_seed(1, 4));
  CHECK(stage_seed(1, 1) != stage_seed(1, 2));
  CHECK(stage_seed(1, 2) != stage_seed(1, 4));
  CHECK(stage_seed(1, 1) != stage_seed(2, 1));
}

TEST_CASE("gen-data is deterministic and writes the manifest contract") {
  const fs::path dir = fresh_dir("gen_determinism");
  const ExperimentConfig cfg = tiny_config(dir);

  cmd_gen_data(cfg);
  const std::string manifest_first = read_file(dir / "manifest.txt");
  const std::string config_first = read_file(dir / "config.json");
  const std::string scene_first = read_file(dir / "train" / "scene_0002.txt");
  const std::uint64_t checksum_first = dataset_checksum(dir);

  fs::remove_all(dir);
  fs::create_directories(dir);
  cmd_gen_data(cfg);
  CHECK(read_file(dir / "manifest.txt") == manifest_first);
  CHECK(read_file(dir / "config.json") == config_first);
  CHECK(read_file(dir / "train" / "scene_0002.txt") == scene_first);
  CHECK(dataset_checksum(dir) == checksum_first);

  // Header plus one row per scene file plus the config.json row.
  const std::vector<std::string> lines = split_lines(manifest_first);
  REQUIRE(lines.size() == 1 + 3 + 1 + 2 + 1);
  CHECK(lines[0] == "uamap-manifest v1");
  CHECK(contains(lines[1], "train/scene_0000.txt"));
  CHECK(contains(lines[4], "val/scene_0000.txt"));
  CHECK(contains(lines[7], "config.json"));

  CHECK(count_scene_files(dir / "train") == 3);
  CHECK(count_scene_files(dir / "val") == 1);
  CHECK(count_scene_files(dir / "test") == 2);

  // The emitted config.json reproduces the generating config.
  CHECK(config_hash(load_experiment_config(dir / "config.json")) ==
        config_hash(cfg));

  const DatasetSplit train = load_split(dir, "train");
  CHECK(train.name == "train");
  REQUIRE(train.docs.size() == 3);
  CHECK(load_split(dir, "val").docs.size() == 1);
  CHECK(load_split(dir, "test").docs.size() == 2);

  std::size_t total_obs = 0;
  for (const SceneDocument& doc : train.docs) {
    CHECK(!doc.observations.empty());
    total_obs += doc.observations.size();
  }
  CHECK(split_observations(train).size() == total_obs);

  // Scene seeds advance with a global counter across splits, so the val
  // scene continues the train sequence instead of repeating it.
  CHECK(read_file(dir / "val" / "scene_0000.txt") !=
        read_file(dir / "train" / "scene_0000.txt"));

  const std::uint64_t data_seed = stage_seed(cfg.master_seed, 1);
  const DatasetSplit val = load_split(dir, "val");
  const Scene expected = generate_scene("curve", derive_seed(data_seed, 6));
  REQUIRE(val.docs[0].scene.elements.size() == expected.elements.size());
  CHECK(val.docs[0].scene.elements[0].points[0].x ==
        expected.elements[0].points[0].x);
  CHECK(val.docs[0].scene.elements[0].points[0].y ==
        expected.elements[0].points[0].y);

  NoiseConfig noise = cfg.noise;
  noise.seed = derive_seed(data_seed, 7);
  const std::vector<Observation> expected_obs =
      corrupt_observation(expected, noise);
  REQUIRE(val.docs[0].observations.size() == expected_obs.size());
  CHECK(val.docs[0].observations[0].noisy_pos.x == expected_obs[0].noisy_pos.x);
  CHECK(val.docs[0].observations[0].noisy_pos.y == expected_obs[0].noisy_pos.y);
}

TEST_CASE("load_split flags tampering, missing files, and empty splits") {
  const fs::path dir = fresh_dir("tamper");
  cmd_gen_data(tiny_config(dir));

  CHECK_THROWS_WITH_AS(load_split(dir, "holdout"),
                       doctest::Contains("split 'holdout' is empty"),
                       std::runtime_error);

  const fs::path victim = dir / "test" / "scene_0000.txt";
  write_file(victim, read_file(victim) + " ");
  CHECK_THROWS_WITH_AS(load_split(dir, "test"),
                       doctest::Contains("checksum mismatch"),
                       std::runtime_error);
  try {
    load_split(dir, "test");
  } catch (const std::runtime_error& e) {
    CHECK(contains(e.what(), "dataset modified after generation"));
  }
  // Other splits remain loadable.
  CHECK(load_split(dir, "train").docs.size() == 3);

  fs::remove(dir / "val" / "scene_0000.txt");
  CHECK_THROWS_WITH_AS(load_split(dir, "val"),
                       doctest::Contains("missing dataset file"),
                       std::runtime_error);

  write_file(dir / "manifest.txt", "something else v2\n");
  CHECK_THROWS_WITH_AS(load_split(dir, "train"),
                       doctest::Contains("unrecognized manifest header"),
                       std::runtime_error);

  const fs::path nowhere = fs::temp_directory_path() /
                           "uamap_pipeline_tests" / "never_generated";
  fs::remove_all(nowhere);
  CHECK_THROWS_WITH_AS(load_split(nowhere, "train"),
                       doctest::Contains("run gen-data first"),
                       std::runtime_error);
}

TEST_CASE("pipeline commands emit the contracted artifacts") {
  const fs::path dir = fresh_dir("end_to_end");
  ExperimentConfig cfg = tiny_config(dir);
  cmd_gen_data(cfg);

  const TrainResult map_result = cmd_train_map(cfg);
  CHECK(map_result.trace.size() == 6);
  const DualHeadModel checkpoint =
      load_dual_head_checkpoint(dir / "map_checkpoint.txt");
  CHECK(emit_dual_head_checkpoint(checkpoint) ==
        emit_dual_head_checkpoint(map_result.model));
  CHECK(split_lines(read_file(dir / "map_trace.csv"))[0] ==
        "epoch,total,regression,classification");

  cmd_estimate(cfg);
  const DatasetSplit train = load_split(dir, "train");
  for (const char* split : {"train", "val", "test"}) {
    CHECK(fs::exists(dir / split / "uncertain_0000.txt"));
  }
  CHECK(fs::exists(dir / "train" / "uncertain_0002.txt"));
  const std::vector<UncertainMapElement> estimated =
      load_uncertain_map(dir / "train" / "uncertain_0000.txt");
  std::size_t vertices = 0;
  for (const UncertainMapElement& e : estimated) vertices += e.vertices.size();
  CHECK(vertices == train.docs[0].observations.size());

  const PredictorTrainResult pred_result = cmd_train_pred(cfg);
  CHECK(pred_result.model.mask == TokenMask::kBoth);
  CHECK(pred_result.trace.size() == 4);
  const PredictorModel pred_checkpoint =
      load_predictor_checkpoint(dir / "pred_checkpoint_both.txt");
  CHECK(emit_predictor_checkpoint(pred_checkpoint) ==
        emit_predictor_checkpoint(pred_result.model));
  CHECK(fs::exists(dir / "pred_trace_both.csv"));

  const EvalResult eval_result = cmd_eval(cfg);
  CHECK(eval_result.variant == "both");
  const DatasetSplit test = load_split(dir, "test");
  std::size_t test_agents = 0;
  for (const SceneDocument& doc : test.docs) {
    test_agents += doc.scene.agents.size();
  }
  CHECK(eval_result.report.n_agents == static_cast<long long>(test_agents));
  CHECK(eval_result.dump.size() ==
        test_agents * static_cast<std::size_t>(kNumModes) * kFutureSteps);

  // eval CSV leads with the provenance block, then the metric table.
  const std::vector<std::string> eval_lines =
      split_lines(read_file(dir / "eval_both.csv"));
  REQUIRE(eval_lines.size() == 6);
  CHECK(eval_lines[0] == std::string("# toolkit_version ") + kToolkitVersion);
  CHECK(eval_lines[1] ==
        "# config_hash " + checksum_hex(config_hash(cfg)));
  CHECK(eval_lines[2] ==
        "# data_checksum " + checksum_hex(dataset_checksum(dir)));
  CHECK(eval_lines[3] == "# master_seed 1");
  CHECK(eval_lines[4] == "min_ade,min_fde,miss_rate,n_agents");

  const nlohmann::json eval_json =
      nlohmann::json::parse(read_file(dir / "eval_both.json"));
  CHECK(eval_json.at("min_ade").get<double>() ==
        doctest::Approx(eval_result.report.min_ade));
  CHECK(eval_json.at("n_agents").get<long long>() ==
        eval_result.report.n_agents);

  const std::vector<std::string> dump_lines =
      split_lines(read_file(dir / "predictions_both.csv"));
  CHECK(dump_lines[0] == "scene_id,agent_id,mode,step,x,y,score");
  CHECK(dump_lines.size() == 1 + eval_result.dump.size());

  // Asking for a variant that was never trained fails at checkpoint load.
  ExperimentConfig baseline_cfg = cfg;
  baseline_cfg.unc_pos = false;
  baseline_cfg.unc_sem = false;
  CHECK_THROWS_AS(cmd_eval(baseline_cfg), std::runtime_error);
}

TEST_CASE("ablation reruns byte-identical with ordered rows") {
  const fs::path dir = fresh_dir("ablation");
  ExperimentConfig cfg = tiny_config(dir);
  cmd_gen_data(cfg);

  const AblationResult first = cmd_run_ablation(cfg);
  const std::string file_first = read_file(dir / "ablation.csv");
  CHECK(first.csv == file_first);

  const AblationResult second = cmd_run_ablation(cfg);
  CHECK(second.csv == file_first);
  CHECK(read_file(dir / "ablation.csv") == file_first);

  REQUIRE(first.rows.size() == 4);
  CHECK(first.rows[0].variant == "baseline");
  CHECK(first.rows[1].variant == "pos_only");
  CHECK(first.rows[2].variant == "sem_only");
  CHECK(first.rows[3].variant == "both");
  for (const AblationRow& row : first.rows) {
    CHECK(row.report.n_agents == first.rows[0].report.n_agents);
    CHECK(row.report.n_agents > 0);
    CHECK(row.report.min_ade >= 0.0);
  }

  const std::vector<std::string> lines = split_lines(file_first);
  REQUIRE(lines.size() == 4 + 1 + 4);
  CHECK(lines[2] == "# data_checksum " + checksum_hex(dataset_checksum(dir)));
  CHECK(lines[4] == "variant,unc_pos,unc_sem,min_ade,min_fde,miss_rate,n_agents");
  CHECK(lines[5].rfind("baseline,0,0,", 0) == 0);
  CHECK(lines[6].rfind("pos_only,1,0,", 0) == 0);
  CHECK(lines[7].rfind("sem_only,0,1,", 0) == 0);
  CHECK(lines[8].rfind("both,1,1,", 0) == 0);
}

TEST_CASE("masked variants ignore their hidden token channels end to end") {
  const fs::path dir = fresh_dir("mask_invariance");
  ExperimentConfig cfg = tiny_config(dir);
  cmd_gen_data(cfg);

  const DualHeadModel map_model = DualHeadModel::random_init(5);
  const DatasetSplit train = load_split(dir, "train");
  const PredictorDataset clean = build_predictor_dataset(map_model, train);

  PredictorDataset perturbed = clean;
  Rng rng(99);
  for (std::vector<MapToken>& tokens : perturbed.scene_tokens) {
    for (MapToken& token : tokens) {
      for (double& d : token.delta_c) d = rng.uniform(0.0, 0.9);
    }
  }

  PredictorTrainConfig cfg_small;
  cfg_small.epochs = 2;
  cfg_small.batch_size = 16;
  cfg_small.seed = 3;

  for (const TokenMask mask : {TokenMask::kPosOnly, TokenMask::kBaseline}) {
    const PredictorTrainResult a = train_predictor(clean, mask, cfg_small);
    const PredictorTrainResult b = train_predictor(perturbed, mask, cfg_small);
    CHECK(emit_predictor_checkpoint(a.model) ==
          emit_predictor_checkpoint(b.model));
    CHECK(emit_predictor_trace_csv(a.trace) ==
          emit_predictor_trace_csv(b.trace));
  }

  // Sanity: a variant that consumes the channel does react to it.
  const PredictorTrainResult c =
      train_predictor(clean, TokenMask::kBoth, cfg_small);
  const PredictorTrainResult d =
      train_predictor(perturbed, TokenMask::kBoth, cfg_small);
  CHECK(emit_predictor_checkpoint(c.model) !=
        emit_predictor_checkpoint(d.model));
}
