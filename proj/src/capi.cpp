#include "qualmix/qualmix.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "json.hpp"
#include "qualmix/error.hpp"
#include "qualmix/flops.hpp"
#include "qualmix/importance.hpp"
#include "qualmix/pipeline.hpp"
#include "qualmix/proxy_lab.hpp"
#include "qualmix/selection.hpp"
#include "qualmix/signals.hpp"
#include "qualmix/weight_optimizer.hpp"

struct qm_context {
  std::string last_error;
};

struct qm_weights {
  qualmix::WeightVector vector;
};

struct qm_bag_model {
  qualmix::HashedBagModel model;
};

namespace {

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

qm_status invalid(qm_context* ctx, const char* what) {
  if (ctx) ctx->last_error = what;
  return QM_ERR_INVALID_ARGUMENT;
}

// Runs fn, translating exceptions into status codes and the context message.
template <typename Fn>
qm_status guarded(qm_context* ctx, Fn&& fn) {
  if (!ctx) return QM_ERR_INVALID_ARGUMENT;
  ctx->last_error.clear();
  try {
    fn();
    return QM_OK;
  } catch (const qualmix::ValidationError& e) {
    ctx->last_error = e.what();
    return QM_ERR_VALIDATION;
  } catch (const qualmix::RuntimeFailure& e) {
    ctx->last_error = e.what();
    return QM_ERR_RUNTIME;
  } catch (const std::bad_alloc&) {
    ctx->last_error = "out of memory";
    return QM_ERR_RUNTIME;
  } catch (const std::exception& e) {
    ctx->last_error = e.what();
    return QM_ERR_INTERNAL;
  } catch (...) {
    ctx->last_error = "unknown error";
    return QM_ERR_INTERNAL;
  }
}

using Command = qualmix::pipeline::CommandOutput (*)(const qualmix::pipeline::RunConfig&);

qm_status run_command(qm_context* ctx, Command command, const char* config_path, const char* overrides,
                      char** summary) {
  if (!summary) return invalid(ctx, "summary_json must not be null");
  *summary = nullptr;
  return guarded(ctx, [&] {
    const auto config = qualmix::pipeline::load_config(config_path ? config_path : "", overrides ? overrides : "");
    *summary = dup_string(command(config).summary_json);
  });
}

std::string_view view(const char* text, std::size_t length) { return text ? std::string_view(text, length) : ""; }

}  // namespace

extern "C" {

const char* qm_version(void) { return "0.1.0"; }

qm_context* qm_context_new(void) { return new (std::nothrow) qm_context(); }
void qm_context_free(qm_context* ctx) { delete ctx; }
const char* qm_last_error(const qm_context* ctx) { return ctx ? ctx->last_error.c_str() : "null context"; }
void qm_string_free(char* s) { std::free(s); }

qm_status qm_cmd_synth(qm_context* ctx, const char* c, const char* o, char** s) {
  return run_command(ctx, qualmix::pipeline::cmd_synth, c, o, s);
}
qm_status qm_cmd_annotate(qm_context* ctx, const char* c, const char* o, char** s) {
  return run_command(ctx, qualmix::pipeline::cmd_annotate, c, o, s);
}
qm_status qm_cmd_select(qm_context* ctx, const char* c, const char* o, char** s) {
  return run_command(ctx, qualmix::pipeline::cmd_select, c, o, s);
}
qm_status qm_cmd_campaign(qm_context* ctx, const char* c, const char* o, char** s) {
  return run_command(ctx, qualmix::pipeline::cmd_campaign, c, o, s);
}
qm_status qm_cmd_fit(qm_context* ctx, const char* c, const char* o, char** s) {
  return run_command(ctx, qualmix::pipeline::cmd_fit, c, o, s);
}
qm_status qm_cmd_correlate(qm_context* ctx, const char* c, const char* o, char** s) {
  return run_command(ctx, qualmix::pipeline::cmd_correlate, c, o, s);
}

const char* qm_signal_name(size_t index) {
  return index < qualmix::kSignalNames.size() ? qualmix::kSignalNames[index].data() : nullptr;
}

qm_status qm_compute_signals(qm_context* ctx, const char* text, size_t length, double out[QM_SIGNAL_COUNT]) {
  if (!out || (!text && length)) return invalid(ctx, "null buffer");
  return guarded(ctx, [&] {
    const auto values = qualmix::compute_signals(view(text, length)).values();
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i];
  });
}

qm_status qm_flops_train(qm_context* ctx, double params, double tokens, double* out) {
  if (!out) return invalid(ctx, "null output");
  return guarded(ctx, [&] { *out = qualmix::flops_train(params, tokens); });
}

qm_status qm_flops_train_structural(qm_context* ctx, double layers, double hidden, double tokens_per_sample,
                                    double samples, double epochs, double* out) {
  if (!out) return invalid(ctx, "null output");
  return guarded(ctx, [&] {
    *out = qualmix::flops_train_structural(layers, hidden, tokens_per_sample, samples, epochs);
  });
}

qm_status qm_flops_infer_structural(qm_context* ctx, double layers, double hidden, double tokens_per_sample,
                                    double samples, double* out) {
  if (!out) return invalid(ctx, "null output");
  return guarded(ctx, [&] { *out = qualmix::flops_infer_structural(layers, hidden, tokens_per_sample, samples); });
}

qm_status qm_published_costs(qm_context* ctx, char** table_json) {
  if (!table_json) return invalid(ctx, "null output");
  *table_json = nullptr;
  return guarded(ctx, [&] {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : qualmix::kPublishedCostRows)
      rows.push_back({{"group", r.group}, {"process", r.process}, {"flops_1e19", r.flops_1e19}});
    *table_json = dup_string(rows.dump());
  });
}

qm_status qm_sample_weights(qm_context* ctx, size_t m, size_t n, uint64_t seed, double alpha, double* out) {
  if (!out && m != 0 && n != 0) return invalid(ctx, "null output");
  return guarded(ctx, [&] {
    const auto rows = qualmix::sample_weights(m, n, seed, alpha);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < m; ++j) out[i * m + j] = rows[i][j];
  });
}

qm_status qm_weights_load(qm_context* ctx, const char* path, int renormalize, qm_weights** out) {
  if (!path || !out) return invalid(ctx, "null argument");
  *out = nullptr;
  return guarded(ctx, [&] {
    auto pairs = qualmix::read_weight_pairs(path);
    auto w = renormalize ? qualmix::WeightVector::normalized(std::move(pairs))
                         : qualmix::WeightVector::from_pairs(std::move(pairs));
    *out = new qm_weights{std::move(w)};
  });
}

void qm_weights_free(qm_weights* w) { delete w; }
size_t qm_weights_size(const qm_weights* w) { return w ? w->vector.size() : 0; }
const char* qm_weights_name(const qm_weights* w, size_t index) {
  return w && index < w->vector.size() ? w->vector.names()[index].c_str() : nullptr;
}
double qm_weights_value(const qm_weights* w, size_t index) {
  return w && index < w->vector.size() ? w->vector.values()[index] : 0.0;
}

qm_status qm_weights_aggregate(qm_context* ctx, const qm_weights* w, const double* scores, size_t count, double* out) {
  if (!w || !out || (!scores && count)) return invalid(ctx, "null argument");
  return guarded(ctx, [&] {
    *out = qualmix::aggregate_score({scores, count}, w->vector.values());
  });
}

qm_status qm_weights_rank_json(qm_context* ctx, const qm_weights* w, char** json) {
  if (!w || !json) return invalid(ctx, "null argument");
  *json = nullptr;
  return guarded(ctx, [&] { *json = dup_string(qualmix::weights_file_json(qualmix::rank_weights(w->vector))); });
}

qm_status qm_weights_rank_report(qm_context* ctx, const qm_weights* w, char** text) {
  if (!w || !text) return invalid(ctx, "null argument");
  *text = nullptr;
  return guarded(ctx, [&] { *text = dup_string(qualmix::format_rank_report(qualmix::rank_weights(w->vector))); });
}

qm_status qm_rank_weights_file(qm_context* ctx, const char* path, int as_json, char** out) {
  if (!path || !out) return invalid(ctx, "null argument");
  *out = nullptr;
  return guarded(ctx, [&] {
    std::vector<std::string> names;
    std::vector<double> values;
    for (auto& [name, value] : qualmix::read_weight_pairs(path)) {
      if (!std::isfinite(value) || value < 0.0)
        throw qualmix::ValidationError("weight for '" + name + "' must be finite and >= 0");
      names.push_back(std::move(name));
      values.push_back(value);
    }
    const auto ranked = qualmix::rank_weights(names, values);
    *out = dup_string(as_json ? qualmix::weights_file_json(ranked) : qualmix::format_rank_report(ranked));
  });
}

qm_status qm_bag_model_new(qm_context* ctx, uint64_t bucket_count, uint64_t seed, double smoothing,
                           qm_bag_model** out) {
  if (!out) return invalid(ctx, "null output");
  *out = nullptr;
  return guarded(ctx, [&] { *out = new qm_bag_model{qualmix::HashedBagModel(bucket_count, seed, smoothing)}; });
}

qm_status qm_bag_model_load(qm_context* ctx, const char* path, qm_bag_model** out) {
  if (!path || !out) return invalid(ctx, "null argument");
  *out = nullptr;
  return guarded(ctx, [&] { *out = new qm_bag_model{qualmix::HashedBagModel::load(path)}; });
}

void qm_bag_model_free(qm_bag_model* model) { delete model; }

qm_status qm_bag_model_add(qm_context* ctx, qm_bag_model* model, const char* text, size_t length) {
  if (!model || (!text && length)) return invalid(ctx, "null argument");
  return guarded(ctx, [&] { model->model.add_document(view(text, length)); });
}

qm_status qm_bag_model_save(qm_context* ctx, const qm_bag_model* model, const char* path) {
  if (!model || !path) return invalid(ctx, "null argument");
  return guarded(ctx, [&] { model->model.save(path); });
}

qm_status qm_importance_score(qm_context* ctx, const qm_bag_model* target, const qm_bag_model* source,
                              const char* text, size_t length, double* out) {
  if (!target || !source || !out || (!text && length)) return invalid(ctx, "null argument");
  return guarded(ctx, [&] { *out = qualmix::importance_score(view(text, length), target->model, source->model); });
}

}  // extern "C"
