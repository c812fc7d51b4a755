#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qualmix/corpus.hpp"

namespace qualmix {

/// Model-based raters accepted by ingestion, in canonical order.
inline constexpr std::string_view kRaterNames[] = {
    "Fineweb-edu",       "Advertisement",     "Fluency",         "Required Expertise",
    "Writing Style",     "Facts and Trivia",  "Educational Value", "Professionalism",
    "Readability",       "Reasoning",         "Cleanliness",
};

/// Raters on the additive 0-5 scale.
inline constexpr std::string_view kPrrcNames[] = {"Professionalism", "Readability", "Reasoning", "Cleanliness"};

/// All 25 score names: signals, importance scores, model ratings.
const std::vector<std::string>& canonical_score_names();

bool is_registered_rater(std::string_view name);
bool is_prrc_rater(std::string_view name);

/// Orders `names` by canonical position; names outside the canonical set keep
/// their relative order after it.
std::vector<std::string> canonical_order(std::vector<std::string> names);

/// Dense documents x scores matrix. Missing raw cells hold NaN until filled.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(std::vector<std::string> doc_ids, std::vector<std::string> score_names);

  std::size_t rows() const { return doc_ids_.size(); }
  std::size_t cols() const { return names_.size(); }
  const std::vector<std::string>& doc_ids() const { return doc_ids_; }
  const std::vector<std::string>& score_names() const { return names_; }
  std::optional<std::size_t> column_of(std::string_view name) const;
  std::optional<std::size_t> row_of(std::string_view doc_id) const;

  double raw(std::size_t r, std::size_t c) const { return raw_[r * cols() + c]; }
  void set_raw(std::size_t r, std::size_t c, double v) { raw_[r * cols() + c] = v; }
  bool missing(std::size_t r, std::size_t c) const;
  std::vector<double> raw_column(std::size_t c) const;

  bool imputed(std::size_t r, std::size_t c) const { return imputed_[r * cols() + c] != 0; }
  void mark_imputed(std::size_t r, std::size_t c) { imputed_[r * cols() + c] = 1; }
  std::size_t imputed_count() const;

  bool has_normalized() const { return !normalized_.empty(); }
  double normalized(std::size_t r, std::size_t c) const { return normalized_[r * cols() + c]; }
  std::span<const double> normalized_row(std::size_t r) const {
    return std::span<const double>(normalized_).subspan(r * cols(), cols());
  }
  void set_normalized(std::vector<double> values);

  bool operator==(const ScoreMatrix&) const;

 private:
  std::vector<std::string> doc_ids_;
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> row_index_;
  std::vector<double> raw_;
  std::vector<double> normalized_;
  std::vector<std::uint8_t> imputed_;
};

/// Pulls the named scores out of each document's score map. Absent cells stay
/// missing so ratings can be ingested afterwards.
ScoreMatrix matrix_from_documents(std::span<const Document> docs, const std::vector<std::string>& names);

struct RatingAnnotation {
  std::string doc_id;
  std::string rater;
  double value = 0.0;
};

struct IngestReport {
  std::size_t applied = 0;
  std::vector<std::string> unknown_doc_ids;
  std::map<std::string, double> coverage;  // rater -> share of rows with a value
};

/// Writes annotations into raw cells. Throws ValidationError for unregistered
/// raters, raters absent from the matrix, and PRRC values outside [0, 5].
IngestReport ingest_ratings(ScoreMatrix& matrix, std::span<const RatingAnnotation> annotations);

/// Reads rating annotations from JSONL lines {"doc_id", "rater", "value"}.
std::vector<RatingAnnotation> read_ratings(const std::filesystem::path& path);

struct ImputationReport {
  std::map<std::string, std::size_t> imputed_cells;  // rater -> cells filled with the median
  std::map<std::string, double> medians;
};

/// Fills missing model-rating cells with the column median and flags them.
/// Missing signal or importance cells are an error.
ImputationReport impute_missing(ScoreMatrix& matrix);

/// Average ranks (1-based), ties share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

enum class NormalizationMode {
  kRank,    // (rank - 1) / (n - 1) with average ranks; 0.5 for a single row
  kZScore,  // standard normal CDF of the column z-score
};

/// Returns a copy of `matrix` whose normalized cells are filled.
ScoreMatrix normalize(const ScoreMatrix& matrix, NormalizationMode mode = NormalizationMode::kRank);
inline ScoreMatrix rank_normalize(const ScoreMatrix& m) { return normalize(m, NormalizationMode::kRank); }

struct CorrelationMatrix {
  std::vector<std::string> names;
  std::vector<double> values;  // row-major m x m, NaN where flagged
  std::vector<bool> flagged;   // undefined because a column is constant

  double at(std::size_t i, std::size_t j) const { return values[i * names.size() + j]; }
  bool is_flagged(std::size_t i, std::size_t j) const { return flagged[i * names.size() + j]; }
};

/// Spearman rank correlation between every pair of raw columns.
CorrelationMatrix spearman_matrix(const ScoreMatrix& matrix, unsigned threads = 1);

void write_matrix_csv(const std::filesystem::path& path, const ScoreMatrix& matrix);
ScoreMatrix read_matrix_csv(const std::filesystem::path& path);
void write_correlation_csv(const std::filesystem::path& path, const CorrelationMatrix& corr);

}  // namespace qualmix
