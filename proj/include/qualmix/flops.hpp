#pragma once

#include <string_view>

namespace qualmix {

/// 6 * parameters * tokens.
double flops_train(double params_nominal, double tokens);

/// 6 * layers * hidden^2 * tokens_per_sample * samples * epochs.
double flops_train_structural(double layers, double hidden, double tokens_per_sample, double samples, double epochs);

/// 2 * layers * hidden^2 * tokens_per_sample * samples.
double flops_infer_structural(double layers, double hidden, double tokens_per_sample, double samples);

/// Published cost rows, in units of 1e19 FLOPs. The rating rows depend on
/// annotated-token counts that were never released, so they are constants
/// rather than computed values.
struct CostRow {
  std::string_view group;
  std::string_view process;
  double flops_1e19;
};

inline constexpr CostRow kPublishedCostRows[] = {
    {"Quality Scores Rating", "Fineweb-edu Classifier", 0.44},
    {"Quality Scores Rating", "WanjuanCC Classifiers (2)", 0.88},
    {"Quality Scores Rating", "QuRating Classifiers (4)", 6.18},
    {"Quality Scores Rating", "PRRC Classifiers (4)", 25.52},
    {"Meta-rater Construction", "Proxy Models Training and Inference", 0.18},
    {"Pre-training", "1.3B Model on 30B Tokens", 23.40},
    {"Pre-training", "3.3B Model on 100B Tokens", 198.00},
};

}  // namespace qualmix
