#include "qualmix/weight_optimizer.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "qualmix/error.hpp"
#include "qualmix/parallel.hpp"
#include "qualmix/random.hpp"

namespace qualmix {

RegressorModel fit_regressor(std::span<const ExperimentRecord> records, const RegressorHyper& hyper) {
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  std::vector<std::string> names;
  for (const auto& r : records) {
    if (!r.ok()) continue;
    if (names.empty())
      names = r.weights.names();
    else if (r.weights.names() != names)
      throw ValidationError(fmt::format("record {} weights a different set of scores", r.experiment_id));
    x.push_back(r.weights.values());
    y.push_back(r.loss);
  }
  if (y.size() < kMinRecordsForFit)
    throw ValidationError(fmt::format("need at least {} successful records to fit, got {}", kMinRecordsForFit, y.size()));

  RegressorModel model{names, GradientBoostedTrees::fit(x, y, hyper), y.size(), {}};
  if (model.trees.degenerate()) model.warnings.push_back("all losses are equal; fitted a constant model");
  return model;
}

SearchOutcome search_optimal(const Regressor& model, const std::vector<std::string>& names,
                             const SearchOptions& options) {
  const std::size_t m = names.size();
  const std::size_t J = options.candidates;
  const std::size_t k = options.top_k;
  if (k == 0 || J < k) throw ValidationError(fmt::format("search needs J >= k >= 1, got J={} k={}", J, k));
  if (m != model.feature_count())
    throw ValidationError(fmt::format("regressor expects {} scores, got {}", model.feature_count(), m));

  const auto candidates = sample_weights(m, J, options.seed, options.dirichlet_alpha);
  std::vector<double> pred(J);
  parallel_chunks(J, options.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) pred[j] = model.predict(candidates[j]);
  });

  std::vector<std::size_t> order(J);
  std::iota(order.begin(), order.end(), 0);
  std::ranges::partial_sort(order, order.begin() + static_cast<std::ptrdiff_t>(k), [&](std::size_t a, std::size_t b) {
    if (pred[a] != pred[b]) return pred[a] < pred[b];
    return a < b;
  });

  SearchOutcome out;
  std::vector<double> mean(m, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    const auto& c = candidates[order[i]];
    for (std::size_t d = 0; d < m; ++d) mean[d] += c[d];
    out.top_candidates.push_back({c, pred[order[i]]});
  }
  std::vector<std::pair<std::string, double>> pairs;
  for (std::size_t d = 0; d < m; ++d) pairs.emplace_back(names[d], mean[d]);
  // `mean` holds the coordinate sums; rescaling them is the mean. Skip the
  // rescale when it would be a no-op so that k = 1 returns the candidate unchanged.
  const double total = std::accumulate(mean.begin(), mean.end(), 0.0);
  out.w_star = std::abs(total - 1.0) <= 1e-12 ? WeightVector::from_pairs(std::move(pairs))
                                              : WeightVector::normalized(std::move(pairs));

  std::vector<double> star(m);
  for (std::size_t d = 0; d < m; ++d) star[d] = *out.w_star.weight_of(names[d]);
  out.predicted_loss_at_star = model.predict(star);
  out.mean_predicted_loss = std::accumulate(pred.begin(), pred.end(), 0.0) / static_cast<double>(J);
  return out;
}

std::vector<RankedWeight> rank_weights(const std::vector<std::string>& names, const std::vector<double>& weights) {
  if (names.size() != weights.size()) throw ValidationError("weight names and values differ in length");
  std::vector<RankedWeight> out;
  for (std::size_t i = 0; i < names.size(); ++i) out.push_back({names[i], weights[i], 100.0 * weights[i], 0});
  std::ranges::stable_sort(out, [](const RankedWeight& a, const RankedWeight& b) { return a.weight > b.weight; });
  auto key = [](const RankedWeight& r) { return std::llround(r.percent * 100.0); };
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i].rank = (i > 0 && key(out[i]) == key(out[i - 1])) ? out[i - 1].rank : i + 1;
  return out;
}

std::string format_rank_report(const std::vector<RankedWeight>& ranked) {
  std::size_t width = 5;
  for (const auto& r : ranked) width = std::max(width, r.name.size());
  std::string out = fmt::format("{:<{}}  {:>10}  {:>4}\n", "Rater", width, "Weight (%)", "Rank");
  for (const auto& r : ranked) out += fmt::format("{:<{}}  {:>10.2f}  {:>4}\n", r.name, width, r.percent, r.rank);
  return out;
}

std::string weights_file_json(const std::vector<RankedWeight>& ranked) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& r : ranked) {
    nlohmann::ordered_json e;
    e["name"] = r.name;
    e["weight"] = r.weight;
    e["rank"] = r.rank;
    j.push_back(std::move(e));
  }
  return j.dump(2);
}

double Landscape::explained_ratio(std::size_t k) const {
  const double total = std::accumulate(explained_variance.begin(), explained_variance.end(), 0.0);
  if (total <= 0.0) return 0.0;
  double part = 0.0;
  for (std::size_t i = 0; i < std::min(k, explained_variance.size()); ++i) part += explained_variance[i];
  return part / total;
}

Landscape pca_landscape(std::span<const ExperimentRecord> records, const Regressor& model, std::size_t grid) {
  std::vector<const ExperimentRecord*> ok;
  for (const auto& r : records)
    if (r.ok()) ok.push_back(&r);
  if (ok.size() < 3) throw ValidationError(fmt::format("landscape needs at least 3 records, got {}", ok.size()));
  if (grid < 2) throw ValidationError("landscape grid must be at least 2");
  const std::size_t n = ok.size();
  const std::size_t m = ok.front()->weights.size();
  if (m != model.feature_count()) throw ValidationError("records and regressor disagree on the number of scores");

  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = ok[i]->weights.values()[j];
  const Eigen::VectorXd mean = X.colwise().mean();
  const Eigen::MatrixXd C = X.rowwise() - mean.transpose();
  const Eigen::MatrixXd cov = (C.transpose() * C) / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw RuntimeFailure("eigen decomposition of the weight covariance failed");
  // Eigen returns ascending eigenvalues.
  const Eigen::VectorXd values = eig.eigenvalues().reverse();
  const Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();

  Landscape out;
  out.mean.assign(mean.data(), mean.data() + m);
  for (Eigen::Index i = 0; i < values.size(); ++i) out.explained_variance.push_back(std::max(0.0, values(i)));

  const double top = out.explained_variance.empty() ? 0.0 : out.explained_variance[0];
  const double tol = 1e-12 * std::max(top, 1.0);
  std::size_t dims = 0;
  for (std::size_t i = 0; i < std::min<std::size_t>(2, out.explained_variance.size()); ++i)
    if (out.explained_variance[i] > tol) ++dims;
  if (dims < 2) {
    out.warning = "weight vectors span fewer than two independent directions; using a 1-D landscape";
    dims = 1;
  }
  for (std::size_t d = 0; d < std::min(dims, m); ++d) {
    std::vector<double> v(vectors.col(static_cast<Eigen::Index>(d)).data(),
                          vectors.col(static_cast<Eigen::Index>(d)).data() + m);
    // Sign convention: the largest-magnitude coordinate is positive.
    const auto big = std::ranges::max_element(v, {}, [](double a) { return std::abs(a); });
    if (*big < 0.0)
      for (auto& c : v) c = -c;
    out.components.push_back(std::move(v));
  }

  auto project = [&](const std::vector<double>& w, std::size_t d) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += (w[j] - out.mean[j]) * out.components[d][j];
    return s;
  };
  double lo1 = 0, hi1 = 0, lo2 = 0, hi2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = project(ok[i]->weights.values(), 0);
    const double b = out.components.size() > 1 ? project(ok[i]->weights.values(), 1) : 0.0;
    out.projected.emplace_back(a, b);
    if (i == 0 || a < lo1) lo1 = a;
    if (i == 0 || a > hi1) hi1 = a;
    if (i == 0 || b < lo2) lo2 = b;
    if (i == 0 || b > hi2) hi2 = b;
  }

  const std::size_t rows2 = out.components.size() > 1 ? grid : 1;
  std::vector<double> w(m);
  for (std::size_t i = 0; i < grid; ++i) {
    const double a = lo1 + (hi1 - lo1) * static_cast<double>(i) / static_cast<double>(grid - 1);
    for (std::size_t k = 0; k < rows2; ++k) {
      const double b = rows2 == 1 ? 0.0 : lo2 + (hi2 - lo2) * static_cast<double>(k) / static_cast<double>(grid - 1);
      for (std::size_t j = 0; j < m; ++j) {
        w[j] = out.mean[j] + a * out.components[0][j];
        if (out.components.size() > 1) w[j] += b * out.components[1][j];
      }
      out.grid.push_back({a, b, model.predict(w)});
    }
  }
  return out;
}

void write_landscape_csv(const std::filesystem::path& path, const Landscape& landscape) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure(fmt::format("cannot write landscape '{}'", path.string()));
  out << "pc1,pc2,loss\n";
  for (const auto& p : landscape.grid) out << fmt::format("{},{},{}\n", p.pc1, p.pc2, p.loss);
}

}  // namespace qualmix
