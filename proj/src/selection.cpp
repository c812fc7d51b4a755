#include "qualmix/selection.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "qualmix/error.hpp"
#include "qualmix/parallel.hpp"

namespace qualmix {

WeightVector WeightVector::build(std::vector<std::pair<std::string, double>> weights, bool rescale) {
  if (weights.empty()) throw ValidationError("weight vector is empty");
  double total = 0.0;
  for (const auto& [name, w] : weights) {
    if (!std::isfinite(w) || w < 0.0)
      throw ValidationError(fmt::format("weight for '{}' must be finite and nonnegative, got {}", name, w));
    total += w;
  }
  std::vector<std::string> names;
  for (const auto& [name, _] : weights) names.push_back(name);
  auto sorted = names;
  std::ranges::sort(sorted);
  if (auto dup = std::ranges::adjacent_find(sorted); dup != sorted.end())
    throw ValidationError(fmt::format("weight '{}' listed twice", *dup));

  if (rescale) {
    if (!(total > 0.0)) throw ValidationError("weights sum to zero");
    for (auto& [_, w] : weights) w /= total;
  } else if (std::abs(total - 1.0) > 1e-9) {
    throw ValidationError(fmt::format("weights sum to {} instead of 1", total));
  }

  WeightVector v;
  for (const auto& n : canonical_order(names)) {
    v.names_.push_back(n);
    v.values_.push_back(std::ranges::find(weights, n, &std::pair<std::string, double>::first)->second);
  }
  return v;
}

WeightVector WeightVector::from_pairs(std::vector<std::pair<std::string, double>> weights) {
  return build(std::move(weights), false);
}

WeightVector WeightVector::normalized(std::vector<std::pair<std::string, double>> weights) {
  return build(std::move(weights), true);
}

WeightVector WeightVector::uniform(const std::vector<std::string>& names) {
  std::vector<std::pair<std::string, double>> w;
  for (const auto& n : names) w.emplace_back(n, 1.0);
  return build(std::move(w), true);
}

std::optional<double> WeightVector::weight_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return values_[i];
  return std::nullopt;
}

std::vector<double> WeightVector::aligned_to(const ScoreMatrix& matrix) const {
  std::vector<double> coef(matrix.cols(), 0.0);
  for (std::size_t i = 0; i < names_.size(); ++i) {
    const auto col = matrix.column_of(names_[i]);
    if (!col) throw ValidationError(fmt::format("weighted score '{}' is not in the score matrix", names_[i]));
    coef[*col] = values_[i];
  }
  return coef;
}

std::vector<std::pair<std::string, double>> read_weight_pairs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot open weights file '{}'", path.string()));
  std::vector<std::pair<std::string, double>> out;
  try {
    nlohmann::json j;
    in >> j;
    if (j.is_object() && j.contains("weights")) j = j["weights"];
    if (j.is_array()) {
      for (const auto& e : j) out.emplace_back(e.at("name").get<std::string>(), e.at("weight").get<double>());
    } else if (j.is_object()) {
      for (const auto& [k, v] : j.items()) out.emplace_back(k, v.get<double>());
    } else {
      throw ValidationError(fmt::format("weights file '{}' must hold a list or an object", path.string()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("weights file '{}' is malformed: {}", path.string(), e.what()));
  }
  return out;
}

double aggregate_score(std::span<const double> scores, std::span<const double> weights) {
  if (scores.size() != weights.size())
    throw ValidationError(fmt::format("score vector has {} entries but weights have {}", scores.size(), weights.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) s += weights[i] * scores[i];
  return s;
}

std::vector<double> aggregate_scores(const ScoreMatrix& normalized, const WeightVector& w, unsigned threads) {
  if (!normalized.has_normalized()) throw ValidationError("score matrix has not been normalized");
  const auto coef = w.aligned_to(normalized);
  std::vector<double> out(normalized.rows());
  parallel_chunks(out.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) out[r] = aggregate_score(normalized.normalized_row(r), coef);
  });
  return out;
}

void SelectionPlan::validate() const {
  if (token_budget == 0) throw ValidationError("token budget must be positive");
  if (domain_targets.empty()) throw ValidationError("selection plan has no domain targets");
  double total = 0.0;
  for (const auto& [d, p] : domain_targets) {
    if (!std::isfinite(p) || p < 0.0) throw ValidationError(fmt::format("proportion for '{}' must be >= 0", d));
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError(fmt::format("domain proportions sum to {} instead of 1", total));
}

SelectionPlan SelectionPlan::common_crawl_only(std::uint64_t budget) {
  SelectionPlan plan;
  plan.token_budget = budget;
  plan.domain_targets = {{"CommonCrawl", 1.0}};
  return plan;
}

std::vector<PoolEntry> pool_from_documents(std::span<const Document> docs) {
  std::vector<PoolEntry> pool;
  pool.reserve(docs.size());
  for (const auto& d : docs) pool.push_back({d.id, d.domain, d.token_estimate});
  return pool;
}

bool SelectionResult::has_shortfall() const {
  return std::ranges::any_of(domains, [](const DomainOutcome& d) { return d.shortfall_tokens > 0.0; });
}

SelectionResult select_by_scores(const ScoreMatrix& matrix, std::span<const PoolEntry> pool,
                                 std::span<const double> scores, const std::vector<bool>& admitted,
                                 const SelectionPlan& plan, unsigned threads) {
  plan.validate();
  if (scores.size() != matrix.rows() || admitted.size() != matrix.rows())
    throw std::invalid_argument("scores and admission mask must have one entry per matrix row");

  const std::size_t domains = plan.domain_targets.size();
  std::vector<std::vector<std::size_t>> members(domains);  // pool indices
  std::vector<std::size_t> row_of_pool(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto row = matrix.row_of(pool[i].id);
    if (!row) throw ValidationError(fmt::format("document '{}' has no scores", pool[i].id));
    row_of_pool[i] = *row;
    for (std::size_t d = 0; d < domains; ++d) {
      if (plan.domain_targets[d].first == pool[i].domain) {
        if (admitted[*row]) members[d].push_back(i);
        break;
      }
    }
  }

  SelectionResult result;
  result.token_budget = plan.token_budget;
  result.domains.resize(domains);
  std::vector<std::vector<std::string>> picked(domains);

  parallel_chunks(domains, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t d = begin; d < end; ++d) {
      auto& idx = members[d];
      std::ranges::sort(idx, [&](std::size_t a, std::size_t b) {
        const double sa = scores[row_of_pool[a]], sb = scores[row_of_pool[b]];
        if (sa != sb) return sa > sb;
        return pool[a].id < pool[b].id;
      });
      DomainOutcome& out = result.domains[d];
      out.domain = plan.domain_targets[d].first;
      out.target_proportion = plan.domain_targets[d].second;
      out.target_tokens = static_cast<double>(plan.token_budget) * out.target_proportion;
      for (std::size_t i : idx) {
        if (static_cast<double>(out.selected_tokens) >= out.target_tokens) break;
        out.selected_tokens += pool[i].tokens;
        ++out.selected_documents;
        out.threshold = scores[row_of_pool[i]];
        picked[d].push_back(pool[i].id);
      }
      if (static_cast<double>(out.selected_tokens) < out.target_tokens)
        out.shortfall_tokens = out.target_tokens - static_cast<double>(out.selected_tokens);
    }
  });

  for (std::size_t d = 0; d < domains; ++d) {
    result.total_tokens += result.domains[d].selected_tokens;
    result.selected_ids.insert(result.selected_ids.end(), picked[d].begin(), picked[d].end());
  }
  for (auto& d : result.domains)
    d.achieved_proportion =
        result.total_tokens == 0 ? 0.0 : static_cast<double>(d.selected_tokens) / static_cast<double>(result.total_tokens);
  return result;
}

SelectionResult select_top_k(const ScoreMatrix& normalized, std::span<const PoolEntry> pool, const WeightVector& w,
                             const SelectionPlan& plan, unsigned threads) {
  const auto scores = aggregate_scores(normalized, w, threads);
  return select_by_scores(normalized, pool, scores, std::vector<bool>(normalized.rows(), true), plan, threads);
}

SelectionResult intersection_select(const ScoreMatrix& normalized, std::span<const PoolEntry> pool,
                                    const std::map<std::string, double>& thresholds, const SelectionPlan& plan,
                                    unsigned threads) {
  if (!normalized.has_normalized()) throw ValidationError("score matrix has not been normalized");
  std::vector<std::pair<std::size_t, double>> limits;
  for (const auto& [name, t] : thresholds) {
    const auto col = normalized.column_of(name);
    if (!col) throw ValidationError(fmt::format("threshold score '{}' is not in the score matrix", name));
    limits.emplace_back(*col, t);
  }
  std::vector<bool> admitted(normalized.rows(), true);
  for (std::size_t r = 0; r < normalized.rows(); ++r)
    for (const auto& [c, t] : limits)
      if (normalized.normalized(r, c) < t) {
        admitted[r] = false;
        break;
      }
  const auto scores = aggregate_scores(normalized, WeightVector::uniform(normalized.score_names()), threads);
  return select_by_scores(normalized, pool, scores, admitted, plan, threads);
}

void write_manifest(const std::filesystem::path& path, const SelectionResult& result) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure(fmt::format("cannot write manifest '{}'", path.string()));
  for (const auto& id : result.selected_ids) out << id << '\n';
}

std::vector<std::string> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot open manifest '{}'", path.string()));
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ids.push_back(line);
  return ids;
}

std::string selection_report_json(const SelectionResult& result) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["token_budget"] = result.token_budget;
  j["total_tokens"] = result.total_tokens;
  j["selected_documents"] = result.selected_ids.size();
  ordered_json targets = ordered_json::object(), achieved = ordered_json::object(),
               thresholds = ordered_json::object(), shortfalls = ordered_json::object();
  for (const auto& d : result.domains) {
    targets[d.domain] = d.target_proportion;
    achieved[d.domain] = d.achieved_proportion;
    thresholds[d.domain] = d.threshold ? ordered_json(*d.threshold) : ordered_json(nullptr);
    if (d.shortfall_tokens > 0.0) shortfalls[d.domain] = d.shortfall_tokens;
  }
  j["target_proportions"] = std::move(targets);
  j["achieved_proportions"] = std::move(achieved);
  j["thresholds"] = std::move(thresholds);
  j["shortfalls"] = std::move(shortfalls);
  return j.dump(2);
}

}  // namespace qualmix
