#include "qualmix/gbrt.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qualmix/error.hpp"
#include "qualmix/random.hpp"

namespace qualmix {

double RegressionTree::predict(std::span<const double> x) const {
  std::uint32_t i = 0;
  while (nodes[i].feature >= 0) i = x[static_cast<std::size_t>(nodes[i].feature)] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
  return nodes[i].value;
}

std::size_t RegressionTree::leaves() const {
  return static_cast<std::size_t>(std::ranges::count_if(nodes, [](const Node& n) { return n.feature < 0; }));
}

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<double>>& x, std::span<const double> residual, const RegressorHyper& hyper)
      : x_(x), residual_(residual), hyper_(hyper) {}

  RegressionTree build(std::vector<std::size_t> rows) {
    tree_.nodes.clear();
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  std::uint32_t grow(std::vector<std::size_t> rows, std::size_t depth) {
    const auto id = static_cast<std::uint32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    double sum = 0.0;
    for (auto r : rows) sum += residual_[r];
    tree_.nodes[id].value = sum / static_cast<double>(rows.size());

    if (depth >= hyper_.max_depth || rows.size() < 2 * hyper_.min_samples_leaf) return id;
    const Split s = best_split(rows, sum);
    if (s.feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (auto r : rows) (x_[r][static_cast<std::size_t>(s.feature)] <= s.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    tree_.nodes[id].feature = s.feature;
    tree_.nodes[id].threshold = s.threshold;
    const auto l = grow(std::move(left), depth + 1);
    const auto r = grow(std::move(right), depth + 1);
    tree_.nodes[id].left = l;
    tree_.nodes[id].right = r;
    return id;
  }

  // Exact greedy search: every feature, every boundary between distinct
  // sorted values. The first best (lowest feature, lowest threshold) wins.
  Split best_split(const std::vector<std::size_t>& rows, double total) const {
    const std::size_t n = rows.size();
    const double parent = total * total / static_cast<double>(n);
    Split best;
    std::vector<std::size_t> order(rows);
    for (std::size_t f = 0; f < x_.front().size(); ++f) {
      std::ranges::sort(order, [&](std::size_t a, std::size_t b) {
        if (x_[a][f] != x_[b][f]) return x_[a][f] < x_[b][f];
        return a < b;
      });
      double left_sum = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_sum += residual_[order[i]];
        const std::size_t nl = i + 1, nr = n - nl;
        if (nl < hyper_.min_samples_leaf) continue;
        if (nr < hyper_.min_samples_leaf) break;
        const double lo = x_[order[i]][f], hi = x_[order[i + 1]][f];
        if (lo == hi) continue;
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / static_cast<double>(nl) +
                            right_sum * right_sum / static_cast<double>(nr) - parent;
        if (gain > best.gain + 1e-15) {
          best.gain = gain;
          best.feature = static_cast<int>(f);
          best.threshold = lo + 0.5 * (hi - lo);
        }
      }
    }
    return best;
  }

  const std::vector<std::vector<double>>& x_;
  std::span<const double> residual_;
  const RegressorHyper& hyper_;
  RegressionTree tree_;
};

}  // namespace

GradientBoostedTrees GradientBoostedTrees::fit(const std::vector<std::vector<double>>& features,
                                               std::span<const double> targets, const RegressorHyper& hyper) {
  if (features.empty() || features.size() != targets.size())
    throw ValidationError("regressor needs one target per feature row and at least one row");
  if (hyper.trees == 0 || hyper.max_depth == 0 || hyper.min_samples_leaf == 0)
    throw ValidationError("regressor trees, depth and min_samples_leaf must be positive");
  if (!(hyper.learning_rate > 0.0) || !(hyper.subsample > 0.0 && hyper.subsample <= 1.0))
    throw ValidationError("learning rate must be positive and subsample in (0, 1]");
  const std::size_t m = features.front().size();
  for (const auto& row : features)
    if (row.size() != m) throw ValidationError("feature rows have inconsistent widths");
  for (double t : targets)
    if (!std::isfinite(t)) throw ValidationError("regression target is not finite");

  // Canonical row order: lexicographic on features, then target.
  std::vector<std::size_t> perm(features.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::ranges::sort(perm, [&](std::size_t a, std::size_t b) {
    if (features[a] != features[b]) return features[a] < features[b];
    return targets[a] < targets[b];
  });
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  x.reserve(perm.size());
  for (auto p : perm) {
    x.push_back(features[p]);
    y.push_back(targets[p]);
  }
  const std::size_t n = y.size();

  GradientBoostedTrees model;
  model.hyper_ = hyper;
  model.feature_count_ = m;
  model.base_ = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

  if (std::ranges::all_of(y, [&](double v) { return v == y.front(); })) {
    model.base_ = y.front();
    model.degenerate_ = true;
    return model;
  }

  std::vector<double> pred(n, model.base_);
  std::vector<double> residual(n);
  const auto take = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(hyper.subsample * static_cast<double>(n))));
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);

  for (std::size_t t = 0; t < hyper.trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - pred[i];
    std::vector<std::size_t> rows = all;
    if (take < n) {
      Rng rng(derive_seed(hyper.seed, t));
      for (std::size_t i = 0; i < take; ++i) std::swap(rows[i], rows[i + rng.below(n - i)]);
      rows.resize(take);
      std::ranges::sort(rows);
    }
    TreeBuilder builder(x, residual, hyper);
    RegressionTree tree = builder.build(std::move(rows));
    for (std::size_t i = 0; i < n; ++i) pred[i] += hyper.learning_rate * tree.predict(x[i]);
    model.trees_.push_back(std::move(tree));
  }

  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) sse += (y[i] - pred[i]) * (y[i] - pred[i]);
  model.in_sample_mse_ = sse / static_cast<double>(n);
  return model;
}

double GradientBoostedTrees::predict(std::span<const double> features) const {
  if (features.size() != feature_count_)
    throw ValidationError(fmt::format("regressor expects {} features, got {}", feature_count_, features.size()));
  double s = base_;
  for (const auto& t : trees_) s += hyper_.learning_rate * t.predict(features);
  return s;
}

}  // namespace qualmix
