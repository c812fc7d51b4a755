#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qualmix/corpus.hpp"
#include "qualmix/score_matrix.hpp"

namespace qualmix {

/// A point on the weight simplex over named scores, kept in canonical order.
class WeightVector {
 public:
  WeightVector() = default;

  /// Validates: every weight finite and >= 0, total within 1e-9 of 1.
  static WeightVector from_pairs(std::vector<std::pair<std::string, double>> weights);
  /// Scales nonnegative weights onto the simplex (for rounded published tables).
  static WeightVector normalized(std::vector<std::pair<std::string, double>> weights);
  static WeightVector uniform(const std::vector<std::string>& names);

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<double>& values() const { return values_; }
  std::optional<double> weight_of(std::string_view name) const;

  /// Coefficients aligned with the matrix columns (0 for unweighted columns).
  /// Throws ValidationError when a weighted name is not a matrix column.
  std::vector<double> aligned_to(const ScoreMatrix& matrix) const;

  bool operator==(const WeightVector&) const = default;

 private:
  static WeightVector build(std::vector<std::pair<std::string, double>> weights, bool rescale);

  std::vector<std::string> names_;
  std::vector<double> values_;
};

/// Reads either a JSON list of {name, weight[, rank]} or an object name -> weight.
std::vector<std::pair<std::string, double>> read_weight_pairs(const std::filesystem::path& path);

/// Weighted sum of one document's normalized scores. Sizes must match.
double aggregate_score(std::span<const double> scores, std::span<const double> weights);
std::vector<double> aggregate_scores(const ScoreMatrix& normalized, const WeightVector& w, unsigned threads = 1);

enum class TieBreak { kLexicographicId };

struct SelectionPlan {
  std::uint64_t token_budget = 0;
  std::vector<std::pair<std::string, double>> domain_targets = default_domain_mix();
  TieBreak tie_break = TieBreak::kLexicographicId;

  /// Throws ValidationError unless budget > 0 and proportions sum to 1.
  void validate() const;
  static SelectionPlan common_crawl_only(std::uint64_t budget);
};

/// What selection needs to know about a document besides its scores.
struct PoolEntry {
  std::string id;
  std::string domain;
  std::uint64_t tokens = 0;
};

std::vector<PoolEntry> pool_from_documents(std::span<const Document> docs);

struct DomainOutcome {
  std::string domain;
  double target_proportion = 0.0;
  double target_tokens = 0.0;
  std::uint64_t selected_tokens = 0;
  std::size_t selected_documents = 0;
  double achieved_proportion = 0.0;
  std::optional<double> threshold;  // aggregate score of the last document taken
  double shortfall_tokens = 0.0;    // > 0 when the pool ran out before the target
};

struct SelectionResult {
  std::vector<std::string> selected_ids;  // domain order, then descending score
  std::vector<DomainOutcome> domains;
  std::uint64_t total_tokens = 0;
  std::uint64_t token_budget = 0;

  bool has_shortfall() const;
};

/// Per-domain quota filling: each domain takes documents in descending
/// aggregate score (ties by id) until budget * proportion is reached. The
/// document crossing the target is kept.
SelectionResult select_top_k(const ScoreMatrix& normalized, std::span<const PoolEntry> pool, const WeightVector& w,
                             const SelectionPlan& plan, unsigned threads = 1);

/// Same quota filling over precomputed per-row scores; rows with
/// admitted[row] == false are never taken. `scores` is indexed by matrix row.
SelectionResult select_by_scores(const ScoreMatrix& matrix, std::span<const PoolEntry> pool,
                                 std::span<const double> scores, const std::vector<bool>& admitted,
                                 const SelectionPlan& plan, unsigned threads = 1);

/// Admits a document only if every listed normalized score is >= its threshold,
/// then fills quotas ordered by the uniform-weight aggregate.
SelectionResult intersection_select(const ScoreMatrix& normalized, std::span<const PoolEntry> pool,
                                    const std::map<std::string, double>& thresholds, const SelectionPlan& plan,
                                    unsigned threads = 1);

void write_manifest(const std::filesystem::path& path, const SelectionResult& result);
std::vector<std::string> read_manifest(const std::filesystem::path& path);
/// {token_budget, total_tokens, selected_documents, target_proportions,
///  achieved_proportions, thresholds, shortfalls}
std::string selection_report_json(const SelectionResult& result);

}  // namespace qualmix
