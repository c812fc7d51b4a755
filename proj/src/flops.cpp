#include "qualmix/flops.hpp"

#include <fmt/format.h>

#include <cmath>

#include "qualmix/error.hpp"

namespace qualmix {

namespace {

void require_nonnegative(double v, const char* what) {
  if (!std::isfinite(v) || v < 0.0) throw ValidationError(fmt::format("{} must be a finite nonnegative number, got {}", what, v));
}

}  // namespace

double flops_train(double params_nominal, double tokens) {
  require_nonnegative(params_nominal, "parameter count");
  require_nonnegative(tokens, "token count");
  return 6.0 * params_nominal * tokens;
}

double flops_train_structural(double layers, double hidden, double tokens_per_sample, double samples, double epochs) {
  require_nonnegative(layers, "layers");
  require_nonnegative(hidden, "hidden size");
  require_nonnegative(tokens_per_sample, "tokens per sample");
  require_nonnegative(samples, "sample count");
  require_nonnegative(epochs, "epochs");
  return 6.0 * layers * hidden * hidden * tokens_per_sample * samples * epochs;
}

double flops_infer_structural(double layers, double hidden, double tokens_per_sample, double samples) {
  require_nonnegative(layers, "layers");
  require_nonnegative(hidden, "hidden size");
  require_nonnegative(tokens_per_sample, "tokens per sample");
  require_nonnegative(samples, "sample count");
  return 2.0 * layers * hidden * hidden * tokens_per_sample * samples;
}

}  // namespace qualmix
