#include "uamap/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "uamap/rng.hpp"
#include "uamap/scene_gen.hpp"

namespace uamap {
namespace {

using nlohmann::json;

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open for reading: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path.string());
  }
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string scene_file_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%04d.txt", index);
  return buf;
}

std::string uncertain_file_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "uncertain_%04d.txt", index);
  return buf;
}

json noise_to_json(const NoiseConfig& cfg) {
  json j;
  j["pos_scale_b"] = cfg.pos_scale_b;
  j["jitter"] = cfg.jitter == JitterKind::kLaplace ? "laplace" : "gaussian";
  j["occlusion_sectors"] = json::array();
  for (const OcclusionSector& s : cfg.occlusion_sectors) {
    j["occlusion_sectors"].push_back({{"angle_start", s.angle_start},
                                      {"angle_end", s.angle_end},
                                      {"drop_prob", s.drop_prob}});
  }
  j["confusion"] = json::array();
  for (const auto& row : cfg.confusion) {
    j["confusion"].push_back(std::vector<double>(row.begin(), row.end()));
  }
  return j;
}

void noise_merge_json(NoiseConfig& cfg, const json& j) {
  if (j.contains("pos_scale_b")) cfg.pos_scale_b = j.at("pos_scale_b").get<double>();
  if (j.contains("jitter")) {
    const std::string kind = j.at("jitter").get<std::string>();
    if (kind == "laplace") {
      cfg.jitter = JitterKind::kLaplace;
    } else if (kind == "gaussian") {
      cfg.jitter = JitterKind::kGaussian;
    } else {
      throw std::invalid_argument("noise.jitter: unknown kind '" + kind + "'");
    }
  }
  if (j.contains("occlusion_sectors")) {
    cfg.occlusion_sectors.clear();
    for (const json& s : j.at("occlusion_sectors")) {
      OcclusionSector sector;
      sector.angle_start = s.at("angle_start").get<double>();
      sector.angle_end = s.at("angle_end").get<double>();
      sector.drop_prob = s.at("drop_prob").get<double>();
      cfg.occlusion_sectors.push_back(sector);
    }
  }
  if (j.contains("confusion_eps")) {
    cfg.confusion = uniform_confusion(j.at("confusion_eps").get<double>());
  }
  if (j.contains("confusion")) {
    const json& m = j.at("confusion");
    if (m.size() != kNumClasses) {
      throw std::invalid_argument("noise.confusion: expected 4 rows");
    }
    for (int i = 0; i < kNumClasses; ++i) {
      if (m[i].size() != kNumClasses) {
        throw std::invalid_argument("noise.confusion: expected 4 columns");
      }
      for (int k = 0; k < kNumClasses; ++k) {
        cfg.confusion[i][k] = m[i][k].get<double>();
      }
    }
  }
}

json map_train_to_json(const TrainConfig& cfg) {
  return json{{"learning_rate", cfg.learning_rate},
              {"regression_loss_weight", cfg.regression_loss_weight},
              {"grad_norm_clip", cfg.grad_norm_clip},
              {"dropout_rate", cfg.dropout_rate},
              {"momentum", cfg.momentum},
              {"epochs", cfg.epochs},
              {"batch_size", cfg.batch_size}};
}

void map_train_merge_json(TrainConfig& cfg, const json& j) {
  if (j.contains("learning_rate")) cfg.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("regression_loss_weight")) {
    cfg.regression_loss_weight = j.at("regression_loss_weight").get<double>();
  }
  if (j.contains("grad_norm_clip")) cfg.grad_norm_clip = j.at("grad_norm_clip").get<double>();
  if (j.contains("dropout_rate")) cfg.dropout_rate = j.at("dropout_rate").get<double>();
  if (j.contains("momentum")) cfg.momentum = j.at("momentum").get<double>();
  if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<int>();
  if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<int>();
}

json predictor_train_to_json(const PredictorTrainConfig& cfg) {
  return json{{"learning_rate", cfg.learning_rate},
              {"grad_norm_clip", cfg.grad_norm_clip},
              {"momentum", cfg.momentum},
              {"score_loss_weight", cfg.score_loss_weight},
              {"epochs", cfg.epochs},
              {"batch_size", cfg.batch_size}};
}

void predictor_train_merge_json(PredictorTrainConfig& cfg, const json& j) {
  if (j.contains("learning_rate")) cfg.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("grad_norm_clip")) cfg.grad_norm_clip = j.at("grad_norm_clip").get<double>();
  if (j.contains("momentum")) cfg.momentum = j.at("momentum").get<double>();
  if (j.contains("score_loss_weight")) {
    cfg.score_loss_weight = j.at("score_loss_weight").get<double>();
  }
  if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<int>();
  if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<int>();
}

struct ManifestEntry {
  std::uint64_t checksum = 0;
  std::string path;
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& root) {
  const std::filesystem::path manifest = root / "manifest.txt";
  if (!std::filesystem::exists(manifest)) {
    throw std::runtime_error("missing dataset: " + manifest.string() +
                             " not found (run gen-data first)");
  }
  std::istringstream in(read_text_file(manifest));
  std::string header;
  std::getline(in, header);
  if (header != "uamap-manifest v1") {
    throw std::runtime_error("unrecognized manifest header in " +
                             manifest.string());
  }
  std::vector<ManifestEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string hex, path;
    if (!(ls >> hex >> path)) {
      throw std::runtime_error("malformed manifest line: " + line);
    }
    entries.push_back({std::stoull(hex, nullptr, 16), path});
  }
  return entries;
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t file_checksum(const std::filesystem::path& path) {
  return fnv1a(read_text_file(path));
}

std::string checksum_hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t stage_seed(std::uint64_t master_seed, int stage) {
  return derive_seed(master_seed, static_cast<std::uint64_t>(stage));
}

TokenMask mask_from_flags(bool unc_pos, bool unc_sem) {
  if (unc_pos && unc_sem) return TokenMask::kBoth;
  if (unc_pos) return TokenMask::kPosOnly;
  if (unc_sem) return TokenMask::kSemOnly;
  return TokenMask::kBaseline;
}

std::vector<std::string> validate_experiment_config(
    const ExperimentConfig& config) {
  std::vector<std::string> problems;
  if (config.layout_mix.empty()) {
    problems.push_back("layout_mix: must list at least one layout");
  }
  for (const std::string& tag : config.layout_mix) {
    try {
      layout_from_name(tag);
    } catch (const std::invalid_argument&) {
      problems.push_back("layout_mix: unknown layout '" + tag + "'");
    }
  }
  if (config.scenes_train <= 0) problems.push_back("scenes_train: must be positive");
  if (config.scenes_val <= 0) problems.push_back("scenes_val: must be positive");
  if (config.scenes_test <= 0) problems.push_back("scenes_test: must be positive");
  if (config.output_dir.empty()) problems.push_back("output_dir: must be set");
  for (const std::string& p : validate_noise_config(config.noise)) {
    problems.push_back("noise." + p);
  }
  for (const std::string& p : validate_train_config(config.map_train)) {
    problems.push_back("map_train." + p);
  }
  for (const std::string& p :
       validate_predictor_train_config(config.predictor_train)) {
    problems.push_back("predictor_train." + p);
  }
  return problems;
}

std::string emit_experiment_config_json(const ExperimentConfig& config) {
  json j;
  j["layout_mix"] = config.layout_mix;
  j["scenes_train"] = config.scenes_train;
  j["scenes_val"] = config.scenes_val;
  j["scenes_test"] = config.scenes_test;
  j["noise"] = noise_to_json(config.noise);
  j["map_train"] = map_train_to_json(config.map_train);
  j["predictor_train"] = predictor_train_to_json(config.predictor_train);
  j["unc_pos"] = config.unc_pos;
  j["unc_sem"] = config.unc_sem;
  j["output_dir"] = config.output_dir;
  j["master_seed"] = config.master_seed;
  return j.dump(2) + "\n";
}

void merge_experiment_config_json(ExperimentConfig& config,
                                  const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config parse error: ") + e.what());
  }
  try {
    if (j.contains("layout_mix")) {
      config.layout_mix = j.at("layout_mix").get<std::vector<std::string>>();
    }
    if (j.contains("scenes_train")) config.scenes_train = j.at("scenes_train").get<int>();
    if (j.contains("scenes_val")) config.scenes_val = j.at("scenes_val").get<int>();
    if (j.contains("scenes_test")) config.scenes_test = j.at("scenes_test").get<int>();
    if (j.contains("noise")) noise_merge_json(config.noise, j.at("noise"));
    if (j.contains("map_train")) {
      map_train_merge_json(config.map_train, j.at("map_train"));
    }
    if (j.contains("predictor_train")) {
      predictor_train_merge_json(config.predictor_train, j.at("predictor_train"));
    }
    if (j.contains("unc_pos")) config.unc_pos = j.at("unc_pos").get<bool>();
    if (j.contains("unc_sem")) config.unc_sem = j.at("unc_sem").get<bool>();
    if (j.contains("output_dir")) config.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("master_seed")) config.master_seed = j.at("master_seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config field error: ") + e.what());
  }
}

ExperimentConfig parse_experiment_config_json(const std::string& text) {
  ExperimentConfig config;
  merge_experiment_config_json(config, text);
  return config;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config_json(read_text_file(path));
}

void save_experiment_config(const std::filesystem::path& path,
                            const ExperimentConfig& config) {
  write_text_file(path, emit_experiment_config_json(config));
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  return fnv1a(emit_experiment_config_json(config));
}

void cmd_gen_data(const ExperimentConfig& config) {
  const std::vector<std::string> problems = validate_experiment_config(config);
  if (!problems.empty()) {
    std::string msg = "invalid config:";
    for (const std::string& p : problems) msg += "\n  " + p;
    throw std::invalid_argument(msg);
  }
  const std::filesystem::path root(config.output_dir);
  const std::uint64_t data_seed = stage_seed(config.master_seed, 1);

  struct SplitPlan {
    const char* name;
    int count;
  };
  const SplitPlan splits[] = {{"train", config.scenes_train},
                              {"val", config.scenes_val},
                              {"test", config.scenes_test}};

  std::vector<ManifestEntry> manifest;
  std::uint64_t scene_counter = 0;
  for (const SplitPlan& split : splits) {
    const std::filesystem::path dir = root / split.name;
    std::filesystem::create_directories(dir);
    for (int k = 0; k < split.count; ++k, ++scene_counter) {
      const std::string& tag =
          config.layout_mix[scene_counter % config.layout_mix.size()];
      const std::uint64_t gen_seed = derive_seed(data_seed, 2 * scene_counter);
      NoiseConfig noise = config.noise;
      noise.seed = derive_seed(data_seed, 2 * scene_counter + 1);
      const Scene scene = generate_scene(tag, gen_seed);
      const std::vector<Observation> obs = corrupt_observation(scene, noise);
      const std::filesystem::path file = dir / scene_file_name(k);
      write_scene_file(file, scene, obs);
      manifest.push_back({file_checksum(file),
                          std::string(split.name) + "/" + scene_file_name(k)});
    }
  }
  save_experiment_config(root / "config.json", config);
  manifest.push_back({file_checksum(root / "config.json"), "config.json"});

  std::string m = "uamap-manifest v1\n";
  for (const ManifestEntry& e : manifest) {
    m += checksum_hex(e.checksum);
    m += ' ';
    m += e.path;
    m += '\n';
  }
  write_text_file(root / "manifest.txt", m);
}

DatasetSplit load_split(const std::filesystem::path& root,
                        const std::string& name) {
  const std::vector<ManifestEntry> manifest = read_manifest(root);
  DatasetSplit split;
  split.name = name;
  const std::string prefix = name + "/";
  for (const ManifestEntry& e : manifest) {
    if (e.path.rfind(prefix, 0) != 0) continue;
    const std::filesystem::path file = root / e.path;
    if (!std::filesystem::exists(file)) {
      throw std::runtime_error("missing dataset file: " + file.string());
    }
    if (file_checksum(file) != e.checksum) {
      throw std::runtime_error("checksum mismatch for " + file.string() +
                               " (dataset modified after generation?)");
    }
    split.docs.push_back(read_scene_file(file));
  }
  if (split.docs.empty()) {
    throw std::runtime_error("split '" + name + "' is empty in " +
                             root.string());
  }
  return split;
}

std::vector<Observation> split_observations(const DatasetSplit& split) {
  std::vector<Observation> all;
  for (const SceneDocument& doc : split.docs) {
    all.insert(all.end(), doc.observations.begin(), doc.observations.end());
  }
  return all;
}

TrainResult cmd_train_map(const ExperimentConfig& config) {
  const std::filesystem::path root(config.output_dir);
  const DatasetSplit train_split = load_split(root, "train");
  const std::vector<Observation> observations = split_observations(train_split);
  TrainConfig cfg = config.map_train;
  cfg.seed = stage_seed(config.master_seed, 2);
  TrainResult result = train(observations, cfg);
  save_dual_head_checkpoint(root / "map_checkpoint.txt", result.model);
  write_text_file(root / "map_trace.csv", emit_loss_trace_csv(result.trace));
  return result;
}

std::vector<UncertainMapElement> estimate_for_doc(const DualHeadModel& model,
                                                  const SceneDocument& doc) {
  return estimate_uncertain_map(model, doc.observations, doc.scene.elements);
}

void cmd_estimate(const ExperimentConfig& config) {
  const std::filesystem::path root(config.output_dir);
  const DualHeadModel model =
      load_dual_head_checkpoint(root / "map_checkpoint.txt");
  for (const char* name : {"train", "val", "test"}) {
    const DatasetSplit split = load_split(root, name);
    for (std::size_t i = 0; i < split.docs.size(); ++i) {
      const std::vector<UncertainMapElement> elements =
          estimate_for_doc(model, split.docs[i]);
      save_uncertain_map(root / name / uncertain_file_name(static_cast<int>(i)),
                         elements);
    }
  }
}

PredictorDataset build_predictor_dataset(const DualHeadModel& model,
                                         const DatasetSplit& split) {
  PredictorDataset dataset;
  for (std::size_t i = 0; i < split.docs.size(); ++i) {
    const SceneDocument& doc = split.docs[i];
    dataset.scene_tokens.push_back(
        build_map_tokens(estimate_for_doc(model, doc)));
    for (const Agent& agent : doc.scene.agents) {
      PredictorItem item;
      item.scene_index = static_cast<int>(i);
      if (agent.history.samples.size() != kHistorySteps ||
          agent.future.samples.size() != kFutureSteps) {
        throw std::runtime_error("agent track with unexpected length in scene " +
                                 std::to_string(i));
      }
      std::copy(agent.history.samples.begin(), agent.history.samples.end(),
                item.history.begin());
      std::copy(agent.future.samples.begin(), agent.future.samples.end(),
                item.future.begin());
      dataset.items.push_back(item);
    }
  }
  return dataset;
}

PredictorTrainResult cmd_train_pred(const ExperimentConfig& config) {
  const std::filesystem::path root(config.output_dir);
  const DualHeadModel map_model =
      load_dual_head_checkpoint(root / "map_checkpoint.txt");
  const DatasetSplit train_split = load_split(root, "train");
  const PredictorDataset dataset = build_predictor_dataset(map_model, train_split);
  const TokenMask mask = mask_from_flags(config.unc_pos, config.unc_sem);
  PredictorTrainConfig cfg = config.predictor_train;
  cfg.seed = stage_seed(config.master_seed, 4);
  PredictorTrainResult result = train_predictor(dataset, mask, cfg);
  const std::string variant = token_mask_name(mask);
  save_predictor_checkpoint(root / ("pred_checkpoint_" + variant + ".txt"),
                            result.model);
  write_text_file(root / ("pred_trace_" + variant + ".csv"),
                  emit_predictor_trace_csv(result.trace));
  return result;
}

namespace {

EvalResult evaluate_variant(const PredictorModel& model,
                            const PredictorDataset& test_data) {
  EvalResult result;
  result.variant = token_mask_name(model.mask);
  std::vector<PredictionSet> preds;
  std::vector<FutureTrack> futures;
  std::vector<MapContext> contexts;
  contexts.reserve(test_data.scene_tokens.size());
  for (const std::vector<MapToken>& tokens : test_data.scene_tokens) {
    contexts.push_back(encode_map(model, tokens));
  }
  int prev_scene = -1;
  int agent_in_scene = 0;
  for (const PredictorItem& item : test_data.items) {
    if (item.scene_index != prev_scene) {
      prev_scene = item.scene_index;
      agent_in_scene = 0;
    }
    const PredictionSet pred =
        predict(model, item.history,
                contexts[static_cast<std::size_t>(item.scene_index)]);
    preds.push_back(pred);
    futures.push_back(item.future);
    for (int m = 0; m < kNumModes; ++m) {
      for (int t = 0; t < kFutureSteps; ++t) {
        result.dump.push_back({item.scene_index, agent_in_scene, m, t,
                               pred.modes[m][t].x, pred.modes[m][t].y,
                               pred.scores[m]});
      }
    }
    ++agent_in_scene;
  }
  result.report = evaluate(preds, futures);
  return result;
}

}  // namespace

std::string provenance_block(const ExperimentConfig& config,
                             std::uint64_t data_checksum) {
  std::string out;
  out += "# toolkit_version ";
  out += kToolkitVersion;
  out += "\n# config_hash ";
  out += checksum_hex(config_hash(config));
  out += "\n# data_checksum ";
  out += checksum_hex(data_checksum);
  out += "\n# master_seed ";
  out += std::to_string(config.master_seed);
  out += '\n';
  return out;
}

std::uint64_t dataset_checksum(const std::filesystem::path& root) {
  return file_checksum(root / "manifest.txt");
}

EvalResult cmd_eval(const ExperimentConfig& config) {
  const std::filesystem::path root(config.output_dir);
  const DualHeadModel map_model =
      load_dual_head_checkpoint(root / "map_checkpoint.txt");
  const TokenMask mask = mask_from_flags(config.unc_pos, config.unc_sem);
  const std::string variant = token_mask_name(mask);
  const PredictorModel model = load_predictor_checkpoint(
      root / ("pred_checkpoint_" + variant + ".txt"));
  const DatasetSplit test = load_split(root, "test");
  const PredictorDataset test_data = build_predictor_dataset(map_model, test);

  EvalResult result = evaluate_variant(model, test_data);
  const std::uint64_t data_sum = dataset_checksum(root);
  write_text_file(root / ("eval_" + variant + ".csv"),
                  provenance_block(config, data_sum) +
                      emit_metric_report_csv(result.report));
  write_text_file(root / ("eval_" + variant + ".json"),
                  emit_metric_report_json(result.report));
  write_text_file(root / ("predictions_" + variant + ".csv"),
                  emit_prediction_dump_csv(result.dump));
  return result;
}

AblationResult cmd_run_ablation(const ExperimentConfig& config) {
  const std::filesystem::path root(config.output_dir);
  const DatasetSplit train_split = load_split(root, "train");
  const DatasetSplit test = load_split(root, "test");

  const std::vector<Observation> observations = split_observations(train_split);
  TrainConfig map_cfg = config.map_train;
  map_cfg.seed = stage_seed(config.master_seed, 2);
  const TrainResult map_result = train(observations, map_cfg);

  const PredictorDataset train_data =
      build_predictor_dataset(map_result.model, train_split);
  const PredictorDataset test_data =
      build_predictor_dataset(map_result.model, test);

  struct VariantPlan {
    TokenMask mask;
    bool unc_pos;
    bool unc_sem;
  };
  const VariantPlan plans[] = {{TokenMask::kBaseline, false, false},
                               {TokenMask::kPosOnly, true, false},
                               {TokenMask::kSemOnly, false, true},
                               {TokenMask::kBoth, true, true}};

  AblationResult result;
  PredictorTrainConfig pred_cfg = config.predictor_train;
  pred_cfg.seed = stage_seed(config.master_seed, 4);
  for (const VariantPlan& plan : plans) {
    const PredictorTrainResult trained =
        train_predictor(train_data, plan.mask, pred_cfg);
    const EvalResult eval_result = evaluate_variant(trained.model, test_data);
    result.rows.push_back({token_mask_name(plan.mask), plan.unc_pos,
                           plan.unc_sem, eval_result.report});
  }

  std::string csv = provenance_block(config, dataset_checksum(root));
  csv += "variant,unc_pos,unc_sem,min_ade,min_fde,miss_rate,n_agents\n";
  for (const AblationRow& row : result.rows) {
    csv += row.variant;
    csv += ',';
    csv += row.unc_pos ? '1' : '0';
    csv += ',';
    csv += row.unc_sem ? '1' : '0';
    csv += ',';
    csv += format_number(row.report.min_ade);
    csv += ',';
    csv += format_number(row.report.min_fde);
    csv += ',';
    csv += format_number(row.report.miss_rate);
    csv += ',';
    csv += std::to_string(row.report.n_agents);
    csv += '\n';
  }
  result.csv = csv;
  write_text_file(root / "ablation.csv", csv);
  return result;
}

}  // namespace uamap
