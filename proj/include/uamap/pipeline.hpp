#ifndef UAMAP_PIPELINE_HPP_
#define UAMAP_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "uamap/dual_head.hpp"
#include "uamap/metrics.hpp"
#include "uamap/noise.hpp"
#include "uamap/predictor.hpp"
#include "uamap/scene_io.hpp"

namespace uamap {

inline constexpr const char* kToolkitVersion = "0.1.0";

/// Experiment description shared by every subcommand. Nested seed fields are
/// ignored by the pipeline: every stage seed is derived from master_seed by
/// the counter scheme below so stages can be rerun independently.
struct ExperimentConfig {
  std::vector<std::string> layout_mix = {"straight", "curve", "intersection",
                                         "parking"};
  int scenes_train = 24;
  int scenes_val = 6;
  int scenes_test = 8;
  NoiseConfig noise;
  TrainConfig map_train;
  PredictorTrainConfig predictor_train;
  bool unc_pos = true;
  bool unc_sem = true;
  std::string output_dir = "out";
  std::uint64_t master_seed = 1;
};

std::vector<std::string> validate_experiment_config(
    const ExperimentConfig& config);

std::string emit_experiment_config_json(const ExperimentConfig& config);
ExperimentConfig parse_experiment_config_json(const std::string& text);

/// Overlays the fields present in the JSON text onto an existing config;
/// absent fields keep their current values. This is the "config file
/// overrides flags" primitive used by the CLI.
void merge_experiment_config_json(ExperimentConfig& config,
                                  const std::string& text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
void save_experiment_config(const std::filesystem::path& path,
                            const ExperimentConfig& config);

std::uint64_t fnv1a(std::string_view bytes);
std::uint64_t file_checksum(const std::filesystem::path& path);
std::string checksum_hex(std::uint64_t v);

/// Hash of the canonical JSON emission; embedded in every emitted table.
std::uint64_t config_hash(const ExperimentConfig& config);

/// Stage counters: 1 data generation, 2 map training, 3 estimation
/// (reserved), 4 predictor training. Scene i uses
/// derive_seed(stage_seed(master, 1), 2i) for generation and 2i + 1 for
/// noise, with i counting across train, then val, then test.
std::uint64_t stage_seed(std::uint64_t master_seed, int stage);

TokenMask mask_from_flags(bool unc_pos, bool unc_sem);

struct DatasetSplit {
  std::string name;  // train | val | test
  std::vector<SceneDocument> docs;
};

/// Writes scene files per split plus manifest.txt (per-file checksums) and a
/// canonical config.json into config.output_dir.
void cmd_gen_data(const ExperimentConfig& config);

/// Loads one split of a previously generated dataset; throws if the manifest
/// or any listed file is missing.
DatasetSplit load_split(const std::filesystem::path& root,
                        const std::string& name);

/// Concatenated observations of a split, in file order.
std::vector<Observation> split_observations(const DatasetSplit& split);

/// Trains the map estimator on the train split and writes
/// map_checkpoint.txt and map_trace.csv into the dataset directory.
TrainResult cmd_train_map(const ExperimentConfig& config);

/// Per-scene uncertain map via the estimator in eval mode.
std::vector<UncertainMapElement> estimate_for_doc(const DualHeadModel& model,
                                                  const SceneDocument& doc);

/// Writes uncertain_####.txt next to each scene file for every split, using
/// the checkpoint produced by cmd_train_map.
void cmd_estimate(const ExperimentConfig& config);

/// Predictor dataset over a split: tokens from the estimated uncertain maps,
/// one item per agent.
PredictorDataset build_predictor_dataset(const DualHeadModel& model,
                                         const DatasetSplit& split);

/// Trains the predictor variant implied by (unc_pos, unc_sem) and writes
/// pred_checkpoint_<variant>.txt and pred_trace_<variant>.csv.
PredictorTrainResult cmd_train_pred(const ExperimentConfig& config);

struct EvalResult {
  MetricReport report;
  std::string variant;
  std::vector<PredictionDumpRow> dump;
};

/// Evaluates a trained predictor variant on the test split; writes
/// eval_<variant>.csv / .json and predictions_<variant>.csv.
EvalResult cmd_eval(const ExperimentConfig& config);

struct AblationRow {
  std::string variant;
  bool unc_pos = false;
  bool unc_sem = false;
  MetricReport report;
};

struct AblationResult {
  std::vector<AblationRow> rows;  // baseline, pos_only, sem_only, both
  std::string csv;                // includes the provenance block
};

/// Table 2 style sweep over the four masking variants on identical data and
/// stage seeds; writes ablation.csv into the dataset directory.
AblationResult cmd_run_ablation(const ExperimentConfig& config);

/// Provenance comment block shared by all emitted tables.
std::string provenance_block(const ExperimentConfig& config,
                             std::uint64_t data_checksum);

/// Checksum of the dataset manifest payload for provenance rows.
std::uint64_t dataset_checksum(const std::filesystem::path& root);

}  // namespace uamap

#endif  // UAMAP_PIPELINE_HPP_
