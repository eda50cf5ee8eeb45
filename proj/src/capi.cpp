#include "uamap.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "uamap/pipeline.hpp"
#include "uamap/render.hpp"
#include "uamap/selfcheck.hpp"
#include "uamap/uncertainty.hpp"

struct uam_config {
  uamap::ExperimentConfig cfg;
};

namespace {

thread_local std::string t_last_error;

char* alloc_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename Fn>
uam_status wrap(Fn&& fn) noexcept {
  try {
    fn();
    t_last_error.clear();
    return UAM_OK;
  } catch (const uamap::ParseError& e) {
    t_last_error = e.what();
    return UAM_ERR_PARSE;
  } catch (const std::domain_error& e) {
    t_last_error = e.what();
    return UAM_ERR_DOMAIN;
  } catch (const std::invalid_argument& e) {
    t_last_error = e.what();
    return UAM_ERR_INVALID_ARGUMENT;
  } catch (const std::filesystem::filesystem_error& e) {
    t_last_error = e.what();
    return UAM_ERR_IO;
  } catch (const std::ios_base::failure& e) {
    t_last_error = e.what();
    return UAM_ERR_IO;
  } catch (const std::runtime_error& e) {
    t_last_error = e.what();
    const std::string_view msg(e.what());
    const bool io_like = msg.find("cannot open") != std::string_view::npos ||
                         msg.find("write failed") != std::string_view::npos ||
                         msg.find("missing dataset") != std::string_view::npos;
    return io_like ? UAM_ERR_IO : UAM_ERR_RUNTIME;
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return UAM_ERR_INTERNAL;
  } catch (...) {
    t_last_error = "unknown exception";
    return UAM_ERR_INTERNAL;
  }
}

uam_status fail_invalid(const std::string& message) noexcept {
  t_last_error = message;
  return UAM_ERR_INVALID_ARGUMENT;
}

std::string read_file_or_throw(const char* path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error(std::string("cannot open for reading: ") + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Rebuilds per-agent prediction sets for one scene from a dump CSV.
std::vector<uamap::PredictionSet> parse_prediction_dump(const std::string& text,
                                                        int scene_id) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) ||
      line != "scene_id,agent_id,mode,step,x,y,score") {
    throw std::invalid_argument("predictions CSV: unrecognized header");
  }
  std::map<int, uamap::PredictionSet> by_agent;
  std::map<int, std::vector<int>> coverage;  // agent -> per-mode step count
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    int sid = 0, aid = 0, mode = 0, step = 0;
    double x = 0.0, y = 0.0, score = 0.0;
    if (std::sscanf(line.c_str(), "%d,%d,%d,%d,%lf,%lf,%lf", &sid, &aid, &mode,
                    &step, &x, &y, &score) != 7) {
      throw std::invalid_argument("predictions CSV: malformed row at line " +
                                  std::to_string(line_no));
    }
    if (sid != scene_id) continue;
    if (mode < 0 || mode >= uamap::kNumModes || step < 0 ||
        step >= uamap::kFutureSteps) {
      throw std::invalid_argument("predictions CSV: mode/step out of range at line " +
                                  std::to_string(line_no));
    }
    uamap::PredictionSet& set = by_agent[aid];
    set.modes[mode][step] = {x, y};
    set.scores[mode] = score;
    auto& counts = coverage[aid];
    counts.resize(uamap::kNumModes, 0);
    counts[mode] += 1;
  }
  std::vector<uamap::PredictionSet> out;
  for (const auto& [aid, set] : by_agent) {
    for (int m = 0; m < uamap::kNumModes; ++m) {
      if (coverage[aid][m] != uamap::kFutureSteps) {
        throw std::invalid_argument(
            "predictions CSV: incomplete steps for agent " +
            std::to_string(aid) + " mode " + std::to_string(m));
      }
    }
    out.push_back(set);
  }
  return out;
}

}  // namespace

extern "C" {

const char* uam_status_name(uam_status status) {
  switch (status) {
    case UAM_OK:
      return "ok";
    case UAM_ERR_INVALID_ARGUMENT:
      return "invalid_argument";
    case UAM_ERR_DOMAIN:
      return "domain";
    case UAM_ERR_PARSE:
      return "parse";
    case UAM_ERR_IO:
      return "io";
    case UAM_ERR_RUNTIME:
      return "runtime";
    case UAM_ERR_INTERNAL:
      return "internal";
  }
  return "unknown";
}

const char* uam_version(void) { return uamap::kToolkitVersion; }

const char* uam_last_error(void) { return t_last_error.c_str(); }

void uam_string_free(char* s) { std::free(s); }

uam_status uam_laplace_kl(double mu1, double b1, double mu2, double b2,
                          double* out_nats) {
  if (out_nats == nullptr) return fail_invalid("out_nats is NULL");
  return wrap([&] { *out_nats = uamap::laplace_kl(mu1, b1, mu2, b2); });
}

uam_status uam_positional_uncertainty(const double primary[4],
                                      const double auxiliary[4],
                                      double* out_beta) {
  if (primary == nullptr || auxiliary == nullptr) {
    return fail_invalid("head parameters are NULL");
  }
  if (out_beta == nullptr) return fail_invalid("out_beta is NULL");
  return wrap([&] {
    const uamap::LaplacePoint p{{primary[0], primary[1]},
                                {primary[2], primary[3]}};
    const uamap::LaplacePoint a{{auxiliary[0], auxiliary[1]},
                                {auxiliary[2], auxiliary[3]}};
    *out_beta = uamap::positional_uncertainty(p, a).beta;
  });
}

uam_status uam_semantic_fuse(const double c[4], const double c_aux[4],
                             double out_c_bar[4], double out_delta_c[4]) {
  if (c == nullptr || c_aux == nullptr) {
    return fail_invalid("class scores are NULL");
  }
  return wrap([&] {
    uamap::ClassScores a{}, b{};
    for (int i = 0; i < uamap::kNumClasses; ++i) {
      a[i] = c[i];
      b[i] = c_aux[i];
    }
    const uamap::SemanticFusion fused = uamap::semantic_fuse(a, b);
    for (int i = 0; i < uamap::kNumClasses; ++i) {
      if (out_c_bar != nullptr) out_c_bar[i] = fused.c_bar[i];
      if (out_delta_c != nullptr) out_delta_c[i] = fused.delta_c[i];
    }
  });
}

uam_status uam_prediction_difference(const double* p_main, const double* p_aux,
                                     size_t len, int use_l1, double* out) {
  if (p_main == nullptr || p_aux == nullptr) {
    return fail_invalid("prediction vectors are NULL");
  }
  if (out == nullptr) return fail_invalid("out is NULL");
  return wrap([&] {
    *out = uamap::prediction_difference(
        std::span<const double>(p_main, len),
        std::span<const double>(p_aux, len),
        use_l1 != 0 ? uamap::Norm::kL1 : uamap::Norm::kL2);
  });
}

uam_status uam_config_create(uam_config** out) {
  if (out == nullptr) return fail_invalid("out is NULL");
  return wrap([&] { *out = new uam_config(); });
}

uam_status uam_config_merge_json(uam_config* config, const char* json_text) {
  if (config == nullptr) return fail_invalid("config is NULL");
  if (json_text == nullptr) return fail_invalid("json_text is NULL");
  return wrap(
      [&] { uamap::merge_experiment_config_json(config->cfg, json_text); });
}

uam_status uam_config_merge_file(uam_config* config, const char* path) {
  if (config == nullptr) return fail_invalid("config is NULL");
  if (path == nullptr) return fail_invalid("path is NULL");
  return wrap([&] {
    uamap::merge_experiment_config_json(config->cfg, read_file_or_throw(path));
  });
}

uam_status uam_config_to_json(const uam_config* config, char** out_json) {
  if (config == nullptr) return fail_invalid("config is NULL");
  if (out_json == nullptr) return fail_invalid("out_json is NULL");
  return wrap([&] {
    *out_json = alloc_string(uamap::emit_experiment_config_json(config->cfg));
  });
}

uam_status uam_config_validate(const uam_config* config, char** out_problems) {
  if (config == nullptr) return fail_invalid("config is NULL");
  if (out_problems == nullptr) return fail_invalid("out_problems is NULL");
  return wrap([&] {
    std::string joined;
    for (const std::string& p :
         uamap::validate_experiment_config(config->cfg)) {
      if (!joined.empty()) joined += '\n';
      joined += p;
    }
    *out_problems = alloc_string(joined);
  });
}

void uam_config_destroy(uam_config* config) { delete config; }

uam_status uam_gen_data(const uam_config* config) {
  if (config == nullptr) return fail_invalid("config is NULL");
  return wrap([&] { uamap::cmd_gen_data(config->cfg); });
}

uam_status uam_train_map(const uam_config* config) {
  if (config == nullptr) return fail_invalid("config is NULL");
  return wrap([&] { uamap::cmd_train_map(config->cfg); });
}

uam_status uam_estimate(const uam_config* config) {
  if (config == nullptr) return fail_invalid("config is NULL");
  return wrap([&] { uamap::cmd_estimate(config->cfg); });
}

uam_status uam_train_pred(const uam_config* config) {
  if (config == nullptr) return fail_invalid("config is NULL");
  return wrap([&] { uamap::cmd_train_pred(config->cfg); });
}

uam_status uam_eval(const uam_config* config, char** out_metrics_json) {
  if (config == nullptr) return fail_invalid("config is NULL");
  return wrap([&] {
    const uamap::EvalResult result = uamap::cmd_eval(config->cfg);
    if (out_metrics_json != nullptr) {
      *out_metrics_json =
          alloc_string(uamap::emit_metric_report_json(result.report));
    }
  });
}

uam_status uam_run_ablation(const uam_config* config, char** out_table_csv) {
  if (config == nullptr) return fail_invalid("config is NULL");
  return wrap([&] {
    const uamap::AblationResult result = uamap::cmd_run_ablation(config->cfg);
    if (out_table_csv != nullptr) *out_table_csv = alloc_string(result.csv);
  });
}

uam_status uam_render(const char* scene_path, const char* uncertain_map_path,
                      const char* predictions_csv_path, int scene_id,
                      int use_cv_baseline, char** out_svg) {
  if (scene_path == nullptr) return fail_invalid("scene_path is NULL");
  if (out_svg == nullptr) return fail_invalid("out_svg is NULL");
  if (predictions_csv_path != nullptr && use_cv_baseline != 0) {
    return fail_invalid(
        "choose either a predictions file or the constant-velocity baseline");
  }
  return wrap([&] {
    const uamap::SceneDocument doc = uamap::read_scene_file(scene_path);
    std::vector<uamap::UncertainMapElement> uncertain;
    if (uncertain_map_path != nullptr) {
      uncertain = uamap::load_uncertain_map(uncertain_map_path);
    }
    std::vector<uamap::PredictionSet> predictions;
    if (predictions_csv_path != nullptr) {
      predictions = parse_prediction_dump(
          read_file_or_throw(predictions_csv_path), scene_id);
    } else if (use_cv_baseline != 0) {
      for (const uamap::Agent& agent : doc.scene.agents) {
        predictions.push_back(
            uamap::constant_velocity_baseline(agent.history.samples));
      }
    }
    *out_svg =
        alloc_string(uamap::render_svg(doc.scene, uncertain, predictions));
  });
}

uam_status uam_verify(uint64_t seed, int flip_kl_sign, int* out_all_passed,
                      char** out_report) {
  return wrap([&] {
    uamap::selfcheck::VerifyOptions options;
    options.seed = seed;
    options.flip_kl_sign = flip_kl_sign != 0;
    const std::vector<uamap::selfcheck::CheckResult> results =
        uamap::selfcheck::run_verification(options);
    if (out_all_passed != nullptr) {
      *out_all_passed = uamap::selfcheck::all_passed(results) ? 1 : 0;
    }
    if (out_report != nullptr) {
      *out_report = alloc_string(uamap::selfcheck::format_report(results));
    }
  });
}

}  // extern "C"
