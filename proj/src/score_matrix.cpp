#include "qualmix/score_matrix.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "qualmix/error.hpp"
#include "qualmix/importance.hpp"
#include "qualmix/parallel.hpp"
#include "qualmix/signals.hpp"

namespace qualmix {

const std::vector<std::string>& canonical_score_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (auto s : kSignalNames) n.emplace_back(s);
    for (auto s : kImportanceNames) n.emplace_back(s);
    for (auto s : kRaterNames) n.emplace_back(s);
    return n;
  }();
  return names;
}

bool is_registered_rater(std::string_view name) {
  return std::ranges::find(kRaterNames, name) != std::end(kRaterNames);
}

bool is_prrc_rater(std::string_view name) { return std::ranges::find(kPrrcNames, name) != std::end(kPrrcNames); }

std::vector<std::string> canonical_order(std::vector<std::string> names) {
  const auto& canon = canonical_score_names();
  auto pos = [&](const std::string& n) {
    auto it = std::ranges::find(canon, n);
    return static_cast<std::size_t>(it - canon.begin());
  };
  // Known names in canonical order, then unknown names alphabetically.
  std::ranges::sort(names, [&](const std::string& a, const std::string& b) {
    return std::pair(pos(a), std::string_view(a)) < std::pair(pos(b), std::string_view(b));
  });
  return names;
}

ScoreMatrix::ScoreMatrix(std::vector<std::string> doc_ids, std::vector<std::string> score_names)
    : doc_ids_(std::move(doc_ids)), names_(std::move(score_names)) {
  for (std::size_t i = 0; i < doc_ids_.size(); ++i)
    if (!row_index_.emplace(doc_ids_[i], i).second)
      throw ValidationError(fmt::format("duplicate document id '{}' in score matrix", doc_ids_[i]));
  std::vector<std::string> sorted = names_;
  std::ranges::sort(sorted);
  if (std::ranges::adjacent_find(sorted) != sorted.end()) throw ValidationError("duplicate score names in matrix");
  raw_.assign(rows() * cols(), std::numeric_limits<double>::quiet_NaN());
  imputed_.assign(rows() * cols(), 0);
}

std::optional<std::size_t> ScoreMatrix::column_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return i;
  return std::nullopt;
}

std::optional<std::size_t> ScoreMatrix::row_of(std::string_view doc_id) const {
  auto it = row_index_.find(std::string(doc_id));
  if (it == row_index_.end()) return std::nullopt;
  return it->second;
}

bool ScoreMatrix::missing(std::size_t r, std::size_t c) const { return std::isnan(raw(r, c)); }

std::vector<double> ScoreMatrix::raw_column(std::size_t c) const {
  std::vector<double> col(rows());
  for (std::size_t r = 0; r < rows(); ++r) col[r] = raw(r, c);
  return col;
}

std::size_t ScoreMatrix::imputed_count() const { return static_cast<std::size_t>(std::ranges::count(imputed_, 1)); }

void ScoreMatrix::set_normalized(std::vector<double> values) {
  if (values.size() != rows() * cols()) throw std::invalid_argument("normalized matrix has the wrong size");
  normalized_ = std::move(values);
}

bool ScoreMatrix::operator==(const ScoreMatrix& o) const {
  if (doc_ids_ != o.doc_ids_ || names_ != o.names_ || imputed_ != o.imputed_) return false;
  auto same = [](const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!(a[i] == b[i] || (std::isnan(a[i]) && std::isnan(b[i])))) return false;
    return true;
  };
  return same(raw_, o.raw_) && same(normalized_, o.normalized_);
}

ScoreMatrix matrix_from_documents(std::span<const Document> docs, const std::vector<std::string>& names) {
  std::vector<std::string> ids;
  ids.reserve(docs.size());
  for (const auto& d : docs) ids.push_back(d.id);
  ScoreMatrix m(std::move(ids), names);
  for (std::size_t r = 0; r < docs.size(); ++r)
    for (std::size_t c = 0; c < names.size(); ++c)
      if (auto it = docs[r].scores.find(names[c]); it != docs[r].scores.end()) m.set_raw(r, c, it->second);
  return m;
}

IngestReport ingest_ratings(ScoreMatrix& matrix, std::span<const RatingAnnotation> annotations) {
  IngestReport report;
  for (const auto& a : annotations) {
    if (!is_registered_rater(a.rater)) throw ValidationError(fmt::format("unregistered rater '{}'", a.rater));
    if (!std::isfinite(a.value))
      throw ValidationError(fmt::format("rating for '{}' by '{}' is not finite", a.doc_id, a.rater));
    if (is_prrc_rater(a.rater) && (a.value < 0.0 || a.value > 5.0))
      throw ValidationError(fmt::format("rating {} for '{}' by '{}' is outside [0, 5]", a.value, a.doc_id, a.rater));
    const auto col = matrix.column_of(a.rater);
    if (!col) throw ValidationError(fmt::format("rater '{}' is not a configured score column", a.rater));
    const auto row = matrix.row_of(a.doc_id);
    if (!row) {
      report.unknown_doc_ids.push_back(a.doc_id);
      continue;
    }
    matrix.set_raw(*row, *col, a.value);
    ++report.applied;
  }
  for (std::size_t c = 0; c < matrix.cols(); ++c) {
    const auto& name = matrix.score_names()[c];
    if (!is_registered_rater(name)) continue;
    std::size_t present = 0;
    for (std::size_t r = 0; r < matrix.rows(); ++r) present += matrix.missing(r, c) ? 0 : 1;
    report.coverage[name] = matrix.rows() == 0 ? 0.0 : static_cast<double>(present) / static_cast<double>(matrix.rows());
  }
  return report;
}

std::vector<RatingAnnotation> read_ratings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot open ratings file '{}'", path.string()));
  std::vector<RatingAnnotation> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("doc_id").get<std::string>(), j.at("rater").get<std::string>(), j.at("value").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(fmt::format("{}:{}: malformed rating record: {}", path.string(), line_no, e.what()));
    }
  }
  return out;
}

namespace {

double median_of(std::vector<double> v) {
  std::ranges::sort(v);
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

ImputationReport impute_missing(ScoreMatrix& matrix) {
  ImputationReport report;
  for (std::size_t c = 0; c < matrix.cols(); ++c) {
    const auto& name = matrix.score_names()[c];
    std::vector<double> present;
    std::vector<std::size_t> holes;
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
      if (matrix.missing(r, c))
        holes.push_back(r);
      else
        present.push_back(matrix.raw(r, c));
    }
    if (holes.empty()) continue;
    if (!is_registered_rater(name))
      throw ValidationError(fmt::format("score '{}' is missing for document '{}'", name, matrix.doc_ids()[holes.front()]));
    if (present.empty()) throw ValidationError(fmt::format("rater '{}' has no values to impute from", name));
    const double med = median_of(std::move(present));
    for (std::size_t r : holes) {
      matrix.set_raw(r, c, med);
      matrix.mark_imputed(r, c);
    }
    report.imputed_cells[name] = holes.size();
    report.medians[name] = med;
  }
  return report;
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 hold ranks i+1..j; their mean is (i + 1 + j) / 2.
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

namespace {

void require_complete(const ScoreMatrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c)
      if (m.missing(r, c))
        throw ValidationError(
            fmt::format("score '{}' is missing for document '{}'", m.score_names()[c], m.doc_ids()[r]));
}

}  // namespace

ScoreMatrix normalize(const ScoreMatrix& matrix, NormalizationMode mode) {
  if (matrix.rows() == 0) throw ValidationError("cannot normalize an empty score matrix");
  require_complete(matrix);
  const std::size_t n = matrix.rows();
  const std::size_t m = matrix.cols();
  std::vector<double> out(n * m);
  for (std::size_t c = 0; c < m; ++c) {
    const auto col = matrix.raw_column(c);
    if (mode == NormalizationMode::kRank) {
      if (n == 1) {
        out[c] = 0.5;
        continue;
      }
      const auto ranks = average_ranks(col);
      for (std::size_t r = 0; r < n; ++r) out[r * m + c] = (ranks[r] - 1.0) / static_cast<double>(n - 1);
    } else {
      const double mean = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(n);
      double ss = 0.0;
      for (double v : col) ss += (v - mean) * (v - mean);
      const double sd = std::sqrt(ss / static_cast<double>(n));
      for (std::size_t r = 0; r < n; ++r) {
        const double z = sd > 0.0 ? (col[r] - mean) / sd : 0.0;
        out[r * m + c] = 0.5 * std::erfc(-z / std::numbers::sqrt2);
      }
    }
  }
  ScoreMatrix result = matrix;
  result.set_normalized(std::move(out));
  return result;
}

CorrelationMatrix spearman_matrix(const ScoreMatrix& matrix, unsigned threads) {
  if (matrix.rows() < 2) throw ValidationError("spearman correlation needs at least 2 documents");
  require_complete(matrix);
  const std::size_t n = matrix.rows();
  const std::size_t m = matrix.cols();

  // Centered ranks and their norms, one column per task.
  std::vector<std::vector<double>> centered(m);
  std::vector<double> norms(m);
  parallel_chunks(m, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      auto ranks = average_ranks(matrix.raw_column(c));
      const double mean = std::accumulate(ranks.begin(), ranks.end(), 0.0) / static_cast<double>(n);
      double ss = 0.0;
      for (auto& r : ranks) {
        r -= mean;
        ss += r * r;
      }
      centered[c] = std::move(ranks);
      norms[c] = std::sqrt(ss);
    }
  });

  CorrelationMatrix corr;
  corr.names = matrix.score_names();
  corr.values.assign(m * m, 0.0);
  corr.flagged.assign(m * m, false);
  parallel_chunks(m, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      corr.values[i * m + i] = 1.0;
      for (std::size_t j = 0; j < m; ++j) {
        if (j == i) continue;
        // Each pair is computed with the lower index first so (i, j) and
        // (j, i) are bitwise identical.
        const std::size_t a = std::min(i, j), b = std::max(i, j);
        if (norms[a] == 0.0 || norms[b] == 0.0) {
          corr.values[i * m + j] = std::numeric_limits<double>::quiet_NaN();
          corr.flagged[i * m + j] = true;
          continue;
        }
        double dot = 0.0;
        for (std::size_t r = 0; r < n; ++r) dot += centered[a][r] * centered[b][r];
        corr.values[i * m + j] = std::clamp(dot / (norms[a] * norms[b]), -1.0, 1.0);
      }
    }
  });
  return corr;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string format_cell(double v) { return std::isnan(v) ? std::string("NaN") : fmt::format("{}", v); }

}  // namespace

void write_matrix_csv(const std::filesystem::path& path, const ScoreMatrix& matrix) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure(fmt::format("cannot write matrix '{}'", path.string()));
  out << "doc_id";
  for (const auto& n : matrix.score_names()) out << ',' << csv_field(n);
  out << '\n';
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    out << csv_field(matrix.doc_ids()[r]);
    for (std::size_t c = 0; c < matrix.cols(); ++c) out << ',' << format_cell(matrix.raw(r, c));
    out << '\n';
  }
}

ScoreMatrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot open matrix '{}'", path.string()));
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(fmt::format("matrix '{}' has no header", path.string()));
  auto header = parse_csv_line(line);
  if (header.empty() || header.front() != "doc_id")
    throw ValidationError(fmt::format("matrix '{}' header must start with doc_id", path.string()));
  header.erase(header.begin());

  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = parse_csv_line(line);
    if (fields.size() != header.size() + 1)
      throw ValidationError(fmt::format("{}:{}: expected {} fields", path.string(), line_no, header.size() + 1));
    ids.push_back(fields[0]);
    std::vector<double> vals;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      try {
        std::size_t used = 0;
        vals.push_back(fields[i] == "NaN" ? std::numeric_limits<double>::quiet_NaN() : std::stod(fields[i], &used));
        if (fields[i] != "NaN" && used != fields[i].size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw ValidationError(fmt::format("{}:{}: bad number '{}'", path.string(), line_no, fields[i]));
      }
    }
    rows.push_back(std::move(vals));
  }
  ScoreMatrix m(std::move(ids), std::move(header));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m.set_raw(r, c, rows[r][c]);
  return m;
}

void write_correlation_csv(const std::filesystem::path& path, const CorrelationMatrix& corr) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure(fmt::format("cannot write correlation matrix '{}'", path.string()));
  out << "score";
  for (const auto& n : corr.names) out << ',' << csv_field(n);
  out << '\n';
  const std::size_t m = corr.names.size();
  for (std::size_t i = 0; i < m; ++i) {
    out << csv_field(corr.names[i]);
    for (std::size_t j = 0; j < m; ++j) out << ',' << format_cell(corr.at(i, j));
    out << '\n';
  }
}

}  // namespace qualmix
