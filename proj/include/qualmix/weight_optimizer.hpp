#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qualmix/gbrt.hpp"
#include "qualmix/proxy_lab.hpp"
#include "qualmix/selection.hpp"

namespace qualmix {

inline constexpr std::size_t kMinRecordsForFit = 16;

struct RegressorModel {
  std::vector<std::string> score_names;  // feature order
  GradientBoostedTrees trees;
  std::size_t training_records = 0;
  std::vector<std::string> warnings;

  double predict(std::span<const double> w) const { return trees.predict(w); }
};

/// Fits loss ~ weights on the successful records. Throws ValidationError with
/// fewer than 16 of them or when records disagree on score names.
RegressorModel fit_regressor(std::span<const ExperimentRecord> records, const RegressorHyper& hyper = {});

struct Candidate {
  std::vector<double> weights;
  double predicted_loss = 0.0;
};

struct SearchOptions {
  std::size_t candidates = 100'000;  // J
  std::size_t top_k = 100;           // k
  std::uint64_t seed = 0;
  double dirichlet_alpha = 1.0;
  unsigned threads = 1;
};

struct SearchOutcome {
  WeightVector w_star;
  std::vector<Candidate> top_candidates;  // ascending predicted loss
  double predicted_loss_at_star = 0.0;
  double mean_predicted_loss = 0.0;  // over all candidates
};

/// Scores J Dirichlet candidates with the regressor and averages the k best
/// onto the simplex.
SearchOutcome search_optimal(const Regressor& model, const std::vector<std::string>& names,
                             const SearchOptions& options = {});

struct RankedWeight {
  std::string name;
  double weight = 0.0;
  double percent = 0.0;  // 100 * weight
  std::size_t rank = 0;  // competition ranking on the 2-decimal percentage
};

/// Sorts by weight, descending. Entries whose percentages agree to two
/// decimals share a rank, and the next distinct entry skips ahead (1, 2, 2, 4).
std::vector<RankedWeight> rank_weights(const std::vector<std::string>& names, const std::vector<double>& weights);
inline std::vector<RankedWeight> rank_weights(const WeightVector& w) { return rank_weights(w.names(), w.values()); }

std::string format_rank_report(const std::vector<RankedWeight>& ranked);
/// JSON list of {name, weight, rank}.
std::string weights_file_json(const std::vector<RankedWeight>& ranked);

struct Landscape {
  std::vector<double> mean;                     // center of the weight cloud
  std::vector<std::vector<double>> components;  // orthonormal, one or two
  std::vector<double> explained_variance;       // all eigenvalues, descending
  std::vector<std::pair<double, double>> projected;  // records in PC space
  struct Point {
    double pc1, pc2, loss;
  };
  std::vector<Point> grid;
  std::optional<std::string> warning;

  double explained_ratio(std::size_t k) const;
};

/// Projects the record weights onto their top two principal directions and
/// evaluates the regressor on a grid x grid lattice over the projected range
/// (points mapped back through mean + a * v1 + b * v2). Falls back to one
/// direction, with a warning, when the weights span fewer than two.
Landscape pca_landscape(std::span<const ExperimentRecord> records, const Regressor& model, std::size_t grid);

void write_landscape_csv(const std::filesystem::path& path, const Landscape& landscape);

}  // namespace qualmix
