/* C interface to the qualmix engine.
 *
 * Every fallible call returns a qm_status and records a message on the
 * context; qm_last_error() returns it until the next call on that context.
 * Strings handed out by the library are released with qm_string_free().
 * A context is not thread-safe; use one per thread. */
#ifndef QUALMIX_QUALMIX_H
#define QUALMIX_QUALMIX_H

#include <stddef.h>
#include <stdint.h>

#if defined(QM_BUILDING_LIBRARY)
#define QM_API __attribute__((visibility("default")))
#else
#define QM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qm_status {
  QM_OK = 0,
  QM_ERR_VALIDATION = 1, /* bad input: config, data, weights */
  QM_ERR_RUNTIME = 2,    /* I/O failure, trainer failure, aborted campaign */
  QM_ERR_INVALID_ARGUMENT = 3, /* null handle or out-of-range argument */
  QM_ERR_INTERNAL = 4
} qm_status;

typedef struct qm_context qm_context;
typedef struct qm_weights qm_weights;
typedef struct qm_bag_model qm_bag_model;

QM_API const char* qm_version(void);

QM_API qm_context* qm_context_new(void);
QM_API void qm_context_free(qm_context* ctx);
QM_API const char* qm_last_error(const qm_context* ctx);
QM_API void qm_string_free(char* s);

/* ---- pipeline commands ------------------------------------------------
 * config_path may be NULL or empty; overrides_json is a JSON merge patch
 * applied over the config (may be NULL). On success *summary_json receives
 * a JSON document describing the run. */
QM_API qm_status qm_cmd_synth(qm_context* ctx, const char* config_path, const char* overrides_json,
                              char** summary_json);
QM_API qm_status qm_cmd_annotate(qm_context* ctx, const char* config_path, const char* overrides_json,
                                 char** summary_json);
QM_API qm_status qm_cmd_select(qm_context* ctx, const char* config_path, const char* overrides_json,
                               char** summary_json);
QM_API qm_status qm_cmd_campaign(qm_context* ctx, const char* config_path, const char* overrides_json,
                                 char** summary_json);
QM_API qm_status qm_cmd_fit(qm_context* ctx, const char* config_path, const char* overrides_json,
                            char** summary_json);
QM_API qm_status qm_cmd_correlate(qm_context* ctx, const char* config_path, const char* overrides_json,
                                  char** summary_json);

/* ---- rule-based signals -------------------------------------------------- */
#define QM_SIGNAL_COUNT 11
QM_API const char* qm_signal_name(size_t index); /* NULL when out of range */
QM_API qm_status qm_compute_signals(qm_context* ctx, const char* text, size_t length,
                                    double out[QM_SIGNAL_COUNT]);

/* ---- training cost ------------------------------------------------------- */
QM_API qm_status qm_flops_train(qm_context* ctx, double params, double tokens, double* out);
QM_API qm_status qm_flops_train_structural(qm_context* ctx, double layers, double hidden, double tokens_per_sample,
                                           double samples, double epochs, double* out);
QM_API qm_status qm_flops_infer_structural(qm_context* ctx, double layers, double hidden, double tokens_per_sample,
                                           double samples, double* out);
/* Published cost table as a JSON list of {group, process, flops_1e19}. */
QM_API qm_status qm_published_costs(qm_context* ctx, char** table_json);

/* ---- weight sampling ----------------------------------------------------- */
/* Fills out[n * m] with n Dirichlet(alpha) vectors of dimension m, row-major. */
QM_API qm_status qm_sample_weights(qm_context* ctx, size_t m, size_t n, uint64_t seed, double alpha, double* out);

/* ---- weight vectors ------------------------------------------------------ */
/* Loads a weights file; renormalize != 0 rescales onto the simplex instead
 * of rejecting totals that are off by rounding. */
QM_API qm_status qm_weights_load(qm_context* ctx, const char* path, int renormalize, qm_weights** out);
QM_API void qm_weights_free(qm_weights* w);
QM_API size_t qm_weights_size(const qm_weights* w);
QM_API const char* qm_weights_name(const qm_weights* w, size_t index);
QM_API double qm_weights_value(const qm_weights* w, size_t index);
/* Dot product of the weights with scores given in the vector's name order. */
QM_API qm_status qm_weights_aggregate(qm_context* ctx, const qm_weights* w, const double* scores, size_t count,
                                      double* out);
/* Ranked table, as the JSON weights-file format and as aligned text. */
QM_API qm_status qm_weights_rank_json(qm_context* ctx, const qm_weights* w, char** json);
QM_API qm_status qm_weights_rank_report(qm_context* ctx, const qm_weights* w, char** text);

/* Ranks a weights file exactly as written (no simplex check, no rescaling),
 * as aligned text (as_json == 0) or in the weights-file JSON format. */
QM_API qm_status qm_rank_weights_file(qm_context* ctx, const char* path, int as_json, char** out);

/* ---- hashed n-gram models ------------------------------------------------ */
QM_API qm_status qm_bag_model_new(qm_context* ctx, uint64_t bucket_count, uint64_t seed, double smoothing,
                                  qm_bag_model** out);
QM_API qm_status qm_bag_model_load(qm_context* ctx, const char* path, qm_bag_model** out);
QM_API void qm_bag_model_free(qm_bag_model* model);
QM_API qm_status qm_bag_model_add(qm_context* ctx, qm_bag_model* model, const char* text, size_t length);
QM_API qm_status qm_bag_model_save(qm_context* ctx, const qm_bag_model* model, const char* path);
/* log p_target(doc) - log p_source(doc) */
QM_API qm_status qm_importance_score(qm_context* ctx, const qm_bag_model* target, const qm_bag_model* source,
                                     const char* text, size_t length, double* out);

#ifdef __cplusplus
}
#endif

#endif /* QUALMIX_QUALMIX_H */
