#ifndef UAMAP_H_
#define UAMAP_H_

/* C interface to the uamap toolkit. All functions return a uam_status;
 * outputs are written through pointers. Strings returned through char**
 * are heap-allocated and must be released with uam_string_free. Error
 * details for the calling thread are available via uam_last_error. */

#include <stddef.h>
#include <stdint.h>

#ifndef UAMAP_API
#if defined(_WIN32)
#if defined(UAMAP_BUILD)
#define UAMAP_API __declspec(dllexport)
#else
#define UAMAP_API __declspec(dllimport)
#endif
#else
#define UAMAP_API __attribute__((visibility("default")))
#endif
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum uam_status {
  UAM_OK = 0,
  UAM_ERR_INVALID_ARGUMENT = 1, /* bad parameter or config field */
  UAM_ERR_DOMAIN = 2,           /* math input outside the defined domain */
  UAM_ERR_PARSE = 3,            /* malformed file or text payload */
  UAM_ERR_IO = 4,               /* missing or unwritable file */
  UAM_ERR_RUNTIME = 5,          /* operation failed (diverged, missing stage) */
  UAM_ERR_INTERNAL = 6,         /* unexpected failure */
} uam_status;

/* Stable name of a status code ("ok", "invalid_argument", ...). */
UAMAP_API const char* uam_status_name(uam_status status);

/* Toolkit semantic version, e.g. "0.1.0". Static storage; do not free. */
UAMAP_API const char* uam_version(void);

/* Message for the calling thread's most recent failure; empty string after
 * a successful call. Static thread-local storage; do not free. */
UAMAP_API const char* uam_last_error(void);

/* Releases a string returned through a char** output. NULL is a no-op. */
UAMAP_API void uam_string_free(char* s);

/* ------------------------------------------------------------------ */
/* Uncertainty math                                                    */
/* ------------------------------------------------------------------ */

/* KL(Laplace(mu1, b1) || Laplace(mu2, b2)) in nats. Scales must be
 * positive and finite. */
UAMAP_API uam_status uam_laplace_kl(double mu1, double b1, double mu2,
                                    double b2, double* out_nats);

/* Per-vertex positional uncertainty: sum over the two axes of
 * KL(primary || auxiliary). Each head is packed as
 * {mu_x, mu_y, b_x, b_y}. */
UAMAP_API uam_status uam_positional_uncertainty(const double primary[4],
                                                const double auxiliary[4],
                                                double* out_beta);

/* Mean class scores and componentwise squared difference of two 4-class
 * simplex vectors. Either output pointer may be NULL to skip it. */
UAMAP_API uam_status uam_semantic_fuse(const double c[4],
                                       const double c_aux[4],
                                       double out_c_bar[4],
                                       double out_delta_c[4]);

/* Norm of (p_main - p_aux) over len entries; L2 by default, L1 when
 * use_l1 is nonzero. */
UAMAP_API uam_status uam_prediction_difference(const double* p_main,
                                               const double* p_aux, size_t len,
                                               int use_l1, double* out);

/* ------------------------------------------------------------------ */
/* Experiment configuration                                            */
/* ------------------------------------------------------------------ */

/* Opaque experiment configuration handle. */
typedef struct uam_config uam_config;

/* Fresh handle holding the built-in defaults. */
UAMAP_API uam_status uam_config_create(uam_config** out);

/* Overlays the fields present in the JSON text onto the handle; absent
 * fields keep their current values. */
UAMAP_API uam_status uam_config_merge_json(uam_config* config,
                                           const char* json_text);

/* Same overlay semantics, reading the JSON from a file. */
UAMAP_API uam_status uam_config_merge_file(uam_config* config,
                                           const char* path);

/* Canonical JSON rendering of the full effective configuration. */
UAMAP_API uam_status uam_config_to_json(const uam_config* config,
                                        char** out_json);

/* Writes "" to out_problems when the configuration is valid, otherwise a
 * newline-separated list of field-level messages. */
UAMAP_API uam_status uam_config_validate(const uam_config* config,
                                         char** out_problems);

UAMAP_API void uam_config_destroy(uam_config* config);

/* ------------------------------------------------------------------ */
/* Pipeline stages                                                     */
/* ------------------------------------------------------------------ */

/* Generates train/val/test scene splits plus manifest and config.json
 * under the configured output directory. */
UAMAP_API uam_status uam_gen_data(const uam_config* config);

/* Trains the dual-head map estimator on the train split; writes
 * map_checkpoint.txt and map_trace.csv. */
UAMAP_API uam_status uam_train_map(const uam_config* config);

/* Writes uncertain_####.txt per scene for every split using the trained
 * map checkpoint. */
UAMAP_API uam_status uam_estimate(const uam_config* config);

/* Trains the trajectory predictor variant selected by the unc_pos /
 * unc_sem flags; writes the variant checkpoint and loss trace. */
UAMAP_API uam_status uam_train_pred(const uam_config* config);

/* Evaluates the trained variant on the test split; writes the metric
 * tables and prediction dump, and returns the metric report as JSON. */
UAMAP_API uam_status uam_eval(const uam_config* config,
                              char** out_metrics_json);

/* Runs the four-variant masking ablation on identical data and seeds;
 * writes ablation.csv and returns the same table text. */
UAMAP_API uam_status uam_run_ablation(const uam_config* config,
                                      char** out_table_csv);

/* ------------------------------------------------------------------ */
/* Rendering and verification                                          */
/* ------------------------------------------------------------------ */

/* Renders a scene file to a standalone SVG document. uncertain_map_path
 * may be NULL to skip uncertainty overlays. Predicted modes come either
 * from a prediction dump CSV (rows with scene_id == scene_id are used)
 * or, when use_cv_baseline is nonzero, from the constant-velocity
 * baseline; passing both is an error. */
UAMAP_API uam_status uam_render(const char* scene_path,
                                const char* uncertain_map_path,
                                const char* predictions_csv_path,
                                int scene_id, int use_cv_baseline,
                                char** out_svg);

/* Runs the oracle-agreement and proportionality suites. out_all_passed
 * receives 1 when every check passed. flip_kl_sign is a fault-injection
 * hook that negates the closed-form KL so the suite provably detects
 * failures. The report lists each check with the tolerance used. */
UAMAP_API uam_status uam_verify(uint64_t seed, int flip_kl_sign,
                                int* out_all_passed, char** out_report);

#ifdef __cplusplus
}
#endif

#endif /* UAMAP_H_ */
