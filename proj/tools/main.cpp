// uamap command-line front end. Links only the C API; everything heavier
// lives behind the shared library boundary.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "uamap.h"

namespace {

using nlohmann::json;

void check(uam_status status) {
  if (status == UAM_OK) return;
  std::fprintf(stderr, "error (%s): %s\n", uam_status_name(status),
               uam_last_error());
  std::exit(static_cast<int>(status));
}

/// Owned string from a char** producing call.
struct OwnedString {
  char* ptr = nullptr;
  ~OwnedString() { uam_string_free(ptr); }
  std::string str() const { return ptr == nullptr ? std::string() : ptr; }
};

struct ConfigFlags {
  std::vector<std::string> layout_mix;
  int scenes_train = 24;
  int scenes_val = 6;
  int scenes_test = 8;
  std::string output_dir = "out";
  std::uint64_t master_seed = 1;
  bool unc_pos = true;
  bool unc_sem = true;

  double pos_scale_b = 0.2;
  std::string jitter = "laplace";
  double confusion_eps = 0.0;
  std::vector<double> occlude;  // flattened (start, end, drop_prob) triples

  double map_lr = 1e-4;
  double map_reg_weight = 0.03;
  double map_clip = 3.0;
  double map_dropout = 0.1;
  double map_momentum = 0.9;
  int map_epochs = 200;
  int map_batch = 64;

  double pred_lr = 3.5e-4;
  double pred_clip = 3.0;
  double pred_momentum = 0.9;
  double pred_score_weight = 1.0;
  int pred_epochs = 80;
  int pred_batch = 32;

  std::string config_path;
};

void add_experiment_options(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("--layout-mix", f.layout_mix,
                  "Scene layout cycle (straight, curve, intersection, parking)")
      ->delimiter(',');
  cmd->add_option("--scenes-train", f.scenes_train, "Training scene count");
  cmd->add_option("--scenes-val", f.scenes_val, "Validation scene count");
  cmd->add_option("--scenes-test", f.scenes_test, "Test scene count");
  cmd->add_option("--out", f.output_dir, "Dataset / results directory");
  cmd->add_option("--seed", f.master_seed,
                  "Master seed; every stage seed derives from it");
  cmd->add_flag("--unc-pos,!--no-unc-pos", f.unc_pos,
                "Feed positional uncertainty to the predictor");
  cmd->add_flag("--unc-sem,!--no-unc-sem", f.unc_sem,
                "Feed semantic uncertainty to the predictor");

  cmd->add_option("--pos-scale-b", f.pos_scale_b,
                  "Position jitter scale b in meters");
  cmd->add_option("--jitter", f.jitter, "Jitter family: laplace or gaussian")
      ->check(CLI::IsMember({"laplace", "gaussian"}));
  cmd->add_option("--confusion-eps", f.confusion_eps,
                  "Uniform class confusion probability");
  cmd->add_option("--occlude", f.occlude,
                  "Occlusion sector: angle_start angle_end drop_prob "
                  "(repeatable)")
      ->type_size(3);

  cmd->add_option("--map-lr", f.map_lr, "Map estimator learning rate");
  cmd->add_option("--map-reg-weight", f.map_reg_weight,
                  "Regression loss weight in the map objective");
  cmd->add_option("--map-clip", f.map_clip, "Map gradient norm clip");
  cmd->add_option("--map-dropout", f.map_dropout,
                  "Auxiliary head dropout rate");
  cmd->add_option("--map-momentum", f.map_momentum, "Map SGD momentum");
  cmd->add_option("--map-epochs", f.map_epochs, "Map training epochs");
  cmd->add_option("--map-batch", f.map_batch, "Map training batch size");

  cmd->add_option("--pred-lr", f.pred_lr, "Predictor learning rate");
  cmd->add_option("--pred-clip", f.pred_clip, "Predictor gradient norm clip");
  cmd->add_option("--pred-momentum", f.pred_momentum, "Predictor SGD momentum");
  cmd->add_option("--pred-score-weight", f.pred_score_weight,
                  "Mode score loss weight");
  cmd->add_option("--pred-epochs", f.pred_epochs, "Predictor training epochs");
  cmd->add_option("--pred-batch", f.pred_batch, "Predictor batch size");

  cmd->add_option("--config", f.config_path,
                  "JSON config file; values in the file override flags")
      ->check(CLI::ExistingFile);
}

json flag_overlay(const CLI::App* cmd, const ConfigFlags& f) {
  json j = json::object();
  const auto passed = [&](const std::string& name) {
    return cmd->count(name) > 0;
  };
  if (passed("--layout-mix")) j["layout_mix"] = f.layout_mix;
  if (passed("--scenes-train")) j["scenes_train"] = f.scenes_train;
  if (passed("--scenes-val")) j["scenes_val"] = f.scenes_val;
  if (passed("--scenes-test")) j["scenes_test"] = f.scenes_test;
  if (passed("--out")) j["output_dir"] = f.output_dir;
  if (passed("--seed")) j["master_seed"] = f.master_seed;
  if (passed("--unc-pos") || passed("--no-unc-pos")) j["unc_pos"] = f.unc_pos;
  if (passed("--unc-sem") || passed("--no-unc-sem")) j["unc_sem"] = f.unc_sem;

  if (passed("--pos-scale-b")) j["noise"]["pos_scale_b"] = f.pos_scale_b;
  if (passed("--jitter")) j["noise"]["jitter"] = f.jitter;
  if (passed("--confusion-eps")) j["noise"]["confusion_eps"] = f.confusion_eps;
  if (passed("--occlude")) {
    json sectors = json::array();
    for (std::size_t i = 0; i + 3 <= f.occlude.size(); i += 3) {
      sectors.push_back({{"angle_start", f.occlude[i]},
                         {"angle_end", f.occlude[i + 1]},
                         {"drop_prob", f.occlude[i + 2]}});
    }
    j["noise"]["occlusion_sectors"] = sectors;
  }

  if (passed("--map-lr")) j["map_train"]["learning_rate"] = f.map_lr;
  if (passed("--map-reg-weight")) {
    j["map_train"]["regression_loss_weight"] = f.map_reg_weight;
  }
  if (passed("--map-clip")) j["map_train"]["grad_norm_clip"] = f.map_clip;
  if (passed("--map-dropout")) j["map_train"]["dropout_rate"] = f.map_dropout;
  if (passed("--map-momentum")) j["map_train"]["momentum"] = f.map_momentum;
  if (passed("--map-epochs")) j["map_train"]["epochs"] = f.map_epochs;
  if (passed("--map-batch")) j["map_train"]["batch_size"] = f.map_batch;

  if (passed("--pred-lr")) j["predictor_train"]["learning_rate"] = f.pred_lr;
  if (passed("--pred-clip")) {
    j["predictor_train"]["grad_norm_clip"] = f.pred_clip;
  }
  if (passed("--pred-momentum")) {
    j["predictor_train"]["momentum"] = f.pred_momentum;
  }
  if (passed("--pred-score-weight")) {
    j["predictor_train"]["score_loss_weight"] = f.pred_score_weight;
  }
  if (passed("--pred-epochs")) j["predictor_train"]["epochs"] = f.pred_epochs;
  if (passed("--pred-batch")) {
    j["predictor_train"]["batch_size"] = f.pred_batch;
  }
  return j;
}

/// Defaults, then flags, then the config file: the file wins.
uam_config* build_config(const CLI::App* cmd, const ConfigFlags& f) {
  uam_config* cfg = nullptr;
  check(uam_config_create(&cfg));
  const json overlay = flag_overlay(cmd, f);
  if (!overlay.empty()) {
    check(uam_config_merge_json(cfg, overlay.dump().c_str()));
  }
  if (cmd->count("--config") > 0) {
    check(uam_config_merge_file(cfg, f.config_path.c_str()));
  }
  OwnedString problems;
  check(uam_config_validate(cfg, &problems.ptr));
  if (!problems.str().empty()) {
    std::fprintf(stderr, "invalid config:\n%s\n", problems.str().c_str());
    std::exit(static_cast<int>(UAM_ERR_INVALID_ARGUMENT));
  }
  return cfg;
}

std::string effective_field(const uam_config* cfg, const char* key) {
  OwnedString text;
  check(uam_config_to_json(cfg, &text.ptr));
  const json j = json::parse(text.str());
  if (j.at(key).is_string()) return j.at(key).get<std::string>();
  return j.at(key).dump();
}

std::string variant_name(const uam_config* cfg) {
  OwnedString text;
  check(uam_config_to_json(cfg, &text.ptr));
  const json j = json::parse(text.str());
  const bool pos = j.at("unc_pos").get<bool>();
  const bool sem = j.at("unc_sem").get<bool>();
  if (pos && sem) return "both";
  if (pos) return "pos_only";
  if (sem) return "sem_only";
  return "baseline";
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::fprintf(stderr, "error (io): cannot open for writing: %s\n",
                 path.c_str());
    std::exit(static_cast<int>(UAM_ERR_IO));
  }
  out << content;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Uncertainty-aware map and trajectory-prediction toolkit"};
  app.set_version_flag("--version", uam_version());
  app.require_subcommand(1);

  ConfigFlags f;
  int exit_code = 0;

  CLI::App* gen = app.add_subcommand(
      "gen-data", "Generate train/val/test scenes with noisy observations");
  add_experiment_options(gen, f);
  gen->callback([&] {
    uam_config* cfg = build_config(gen, f);
    check(uam_gen_data(cfg));
    std::printf("dataset written under %s\n",
                effective_field(cfg, "output_dir").c_str());
    uam_config_destroy(cfg);
  });

  CLI::App* train_map =
      app.add_subcommand("train-map", "Train the dual-head map estimator");
  add_experiment_options(train_map, f);
  train_map->callback([&] {
    uam_config* cfg = build_config(train_map, f);
    check(uam_train_map(cfg));
    std::printf("map checkpoint written to %s/map_checkpoint.txt\n",
                effective_field(cfg, "output_dir").c_str());
    uam_config_destroy(cfg);
  });

  CLI::App* estimate = app.add_subcommand(
      "estimate", "Emit per-scene uncertain maps from the trained estimator");
  add_experiment_options(estimate, f);
  estimate->callback([&] {
    uam_config* cfg = build_config(estimate, f);
    check(uam_estimate(cfg));
    std::printf("uncertain maps written under %s\n",
                effective_field(cfg, "output_dir").c_str());
    uam_config_destroy(cfg);
  });

  CLI::App* train_pred = app.add_subcommand(
      "train-pred", "Train the trajectory predictor variant");
  add_experiment_options(train_pred, f);
  train_pred->callback([&] {
    uam_config* cfg = build_config(train_pred, f);
    check(uam_train_pred(cfg));
    std::printf("predictor checkpoint written to %s/pred_checkpoint_%s.txt\n",
                effective_field(cfg, "output_dir").c_str(),
                variant_name(cfg).c_str());
    uam_config_destroy(cfg);
  });

  CLI::App* eval =
      app.add_subcommand("eval", "Evaluate the trained variant on the test split");
  add_experiment_options(eval, f);
  eval->callback([&] {
    uam_config* cfg = build_config(eval, f);
    OwnedString metrics;
    check(uam_eval(cfg, &metrics.ptr));
    std::printf("%s", metrics.str().c_str());
    uam_config_destroy(cfg);
  });

  CLI::App* ablate = app.add_subcommand(
      "ablate", "Run the four-variant uncertainty masking ablation");
  add_experiment_options(ablate, f);
  ablate->callback([&] {
    uam_config* cfg = build_config(ablate, f);
    OwnedString table;
    check(uam_run_ablation(cfg, &table.ptr));
    std::printf("%s", table.str().c_str());
    uam_config_destroy(cfg);
  });

  CLI::App* render =
      app.add_subcommand("render", "Render a scene file to standalone SVG");
  std::string scene_path, uncertain_path, predictions_path, svg_path;
  int scene_id = 0;
  bool cv_baseline = false;
  render->add_option("--scene", scene_path, "Scene file to draw")
      ->required()
      ->check(CLI::ExistingFile);
  render->add_option("--uncertain", uncertain_path,
                     "Uncertain-map file for ellipse and band overlays");
  render->add_option("--predictions", predictions_path,
                     "Prediction dump CSV; rows matching --scene-id are drawn");
  render->add_option("--scene-id", scene_id,
                     "Scene id to select from the prediction dump");
  render->add_flag("--cv", cv_baseline,
                   "Draw constant-velocity baseline modes instead of a dump");
  render->add_option("--svg", svg_path, "Output SVG path ('-' for stdout)");
  render->callback([&] {
    OwnedString svg;
    check(uam_render(scene_path.c_str(),
                     uncertain_path.empty() ? nullptr : uncertain_path.c_str(),
                     predictions_path.empty() ? nullptr
                                              : predictions_path.c_str(),
                     scene_id, cv_baseline ? 1 : 0, &svg.ptr));
    write_output(svg_path, svg.str());
  });

  CLI::App* verify = app.add_subcommand(
      "verify", "Run oracle-agreement and proportionality self-checks");
  std::uint64_t verify_seed = 7;
  bool flip_kl = false;
  verify->add_option("--seed", verify_seed, "Verification seed");
  verify->add_flag("--flip-kl-sign", flip_kl)->group("");  // fault-injection hook
  verify->callback([&] {
    int passed = 0;
    OwnedString report;
    check(uam_verify(verify_seed, flip_kl ? 1 : 0, &passed, &report.ptr));
    std::printf("%s", report.str().c_str());
    if (passed == 0) exit_code = 1;
  });

  CLI11_PARSE(app, argc, argv);
  return exit_code;
}
