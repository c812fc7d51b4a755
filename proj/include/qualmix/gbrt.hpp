#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace qualmix {

/// Anything that maps a weight vector to a predicted loss.
class Regressor {
 public:
  virtual ~Regressor() = default;
  virtual double predict(std::span<const double> features) const = 0;
  virtual std::size_t feature_count() const = 0;
};

struct RegressorHyper {
  std::size_t trees = 100;
  std::size_t max_depth = 4;
  double learning_rate = 0.05;
  double subsample = 0.8;
  std::size_t min_samples_leaf = 5;
  std::uint64_t seed = 0;
};

/// Depth-limited least-squares regression tree stored as a flat node array.
struct RegressionTree {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    double value = 0.0;
  };
  std::vector<Node> nodes;

  double predict(std::span<const double> x) const;
  std::size_t leaves() const;
};

/// Gradient-boosted regression trees for squared error with shrinkage and
/// row subsampling.
class GradientBoostedTrees final : public Regressor {
 public:
  /// Rows of `features` are samples. Training rows are put into a canonical
  /// order first, so the model does not depend on input row order.
  static GradientBoostedTrees fit(const std::vector<std::vector<double>>& features, std::span<const double> targets,
                                  const RegressorHyper& hyper);

  double predict(std::span<const double> features) const override;
  std::size_t feature_count() const override { return feature_count_; }

  const RegressorHyper& hyper() const { return hyper_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }
  double base_score() const { return base_; }
  double in_sample_mse() const { return in_sample_mse_; }
  /// Set when the targets were all equal and the model is a constant.
  bool degenerate() const { return degenerate_; }

 private:
  RegressorHyper hyper_;
  std::size_t feature_count_ = 0;
  double base_ = 0.0;
  std::vector<RegressionTree> trees_;
  double in_sample_mse_ = 0.0;
  bool degenerate_ = false;
};

}  // namespace qualmix
