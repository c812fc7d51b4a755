#include "qualmix/corpus.hpp"

#include <fmt/format.h>
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qualmix/error.hpp"
#include "qualmix/random.hpp"
#include "qualmix/text.hpp"

namespace qualmix {

using nlohmann::json;
using nlohmann::ordered_json;

DomainRegistry::DomainRegistry()
    : names_{"CommonCrawl", "C4", "GitHub", "Books", "ArXiv", "Wikipedia", "StackExchange"} {}

DomainRegistry::DomainRegistry(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) throw ValidationError("domain registry must declare at least one domain");
  std::vector<std::string> sorted = names_;
  std::ranges::sort(sorted);
  if (std::ranges::adjacent_find(sorted) != sorted.end())
    throw ValidationError("domain registry contains duplicate names");
}

bool DomainRegistry::contains(std::string_view name) const { return index_of(name).has_value(); }

std::optional<std::size_t> DomainRegistry::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return i;
  return std::nullopt;
}

std::uint64_t estimate_tokens(std::string_view text, TokenEstimator estimator) {
  switch (estimator) {
    case TokenEstimator::kWhitespaceWords:
      return text::count_words(text);
    case TokenEstimator::kCharRatio:
      return static_cast<std::uint64_t>(std::llround(static_cast<double>(text::count_code_points(text)) / 0.77));
  }
  return 0;
}

CorpusReader::CorpusReader(const std::filesystem::path& path, CorpusSchema schema)
    : path_(path), in_(path, std::ios::binary), schema_(std::move(schema)) {
  if (!in_) throw RuntimeFailure(fmt::format("cannot open corpus file '{}'", path.string()));
}

std::optional<Document> CorpusReader::next() {
  while (std::getline(in_, line_)) {
    ++line_no_;
    if (!line_.empty() && line_.back() == '\r') line_.pop_back();
    if (std::ranges::all_of(line_, [](char c) { return c == ' ' || c == '\t'; })) continue;
    if (auto doc = parse(line_)) return doc;
  }
  if (in_.bad()) throw RuntimeFailure(fmt::format("I/O error reading '{}'", path_.string()));
  return std::nullopt;
}

std::optional<Document> CorpusReader::parse(const std::string& line) {
  auto fail = [&](std::string msg) -> std::optional<Document> {
    errors_.push_back({line_no_, std::move(msg)});
    return std::nullopt;
  };

  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    return fail(fmt::format("invalid JSON: {}", e.what()));
  }
  if (!obj.is_object()) return fail("record is not a JSON object");

  auto id_it = obj.find("id");
  if (id_it == obj.end() || !id_it->is_string()) return fail("missing or non-string 'id'");
  auto text_it = obj.find("text");
  if (text_it == obj.end() || !text_it->is_string()) return fail("missing or non-string 'text'");
  auto domain_it = obj.find("domain");
  if (domain_it == obj.end() || !domain_it->is_string()) return fail("missing or non-string 'domain'");

  Document doc;
  doc.id = id_it->get<std::string>();
  doc.text = text_it->get<std::string>();
  doc.domain = domain_it->get<std::string>();
  if (doc.id.empty()) return fail("empty 'id'");
  if (schema_.enforce_domains && !schema_.domains.contains(doc.domain)) return fail(fmt::format("unknown domain '{}'", doc.domain));

  if (auto scores_it = obj.find("scores"); scores_it != obj.end() && !scores_it->is_null()) {
    if (!scores_it->is_object()) return fail("'scores' is not an object");
    for (const auto& [name, value] : scores_it->items()) {
      if (!value.is_number()) return fail(fmt::format("score '{}' is not a number", name));
      const double v = value.get<double>();
      if (!std::isfinite(v)) return fail(fmt::format("score '{}' is not finite", name));
      doc.scores.emplace(name, v);
    }
  }

  if (schema_.reject_duplicate_ids && !seen_ids_.insert(doc.id).second)
    throw ValidationError(fmt::format("{}:{}: duplicate document id '{}'", path_.string(), line_no_, doc.id));

  doc.token_estimate = estimate_tokens(doc.text, schema_.estimator);
  return doc;
}

CorpusContents read_corpus(const std::filesystem::path& path, const CorpusSchema& schema) {
  CorpusReader reader(path, schema);
  CorpusContents out;
  while (auto doc = reader.next()) out.documents.push_back(std::move(*doc));
  out.errors = reader.errors();
  return out;
}

std::string serialize_document(const Document& doc) {
  ordered_json obj;
  obj["id"] = doc.id;
  obj["text"] = doc.text;
  obj["domain"] = doc.domain;
  if (!doc.scores.empty()) {
    ordered_json scores = ordered_json::object();
    for (const auto& [name, value] : doc.scores) scores[name] = value;
    obj["scores"] = std::move(scores);
  }
  return obj.dump(-1, ' ', false, ordered_json::error_handler_t::replace);
}

void write_document(std::ostream& out, const Document& doc) { out << serialize_document(doc) << '\n'; }

void write_corpus(const std::filesystem::path& path, const std::vector<Document>& docs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure(fmt::format("cannot write corpus file '{}'", path.string()));
  for (const auto& d : docs) write_document(out, d);
  if (!out) throw RuntimeFailure(fmt::format("I/O error writing '{}'", path.string()));
}

std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& proportions) {
  if (proportions.empty()) throw ValidationError("apportionment needs at least one proportion");
  double sum = 0.0;
  for (double p : proportions) {
    if (!(p >= 0.0)) throw ValidationError("proportions must be nonnegative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError(fmt::format("proportions sum to {} instead of 1", sum));

  std::vector<std::size_t> counts(proportions.size());
  std::vector<double> remainders(proportions.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < proportions.size(); ++i) {
    const double quota = static_cast<double>(total) * proportions[i];
    // Snap values that are integral up to rounding noise.
    const double snapped = std::abs(quota - std::round(quota)) < 1e-9 ? std::round(quota) : quota;
    counts[i] = static_cast<std::size_t>(std::floor(snapped));
    // Quantized so remainders equal up to rounding noise compare as ties.
    remainders[i] = std::round((snapped - std::floor(snapped)) * 1e9);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(proportions.size());
  std::iota(order.begin(), order.end(), 0);
  std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++counts[order[k % order.size()]];
  return counts;
}

std::vector<std::pair<std::string, double>> default_domain_mix() {
  return {{"CommonCrawl", 0.5220}, {"C4", 0.2670},       {"GitHub", 0.0520},       {"Books", 0.0420},
          {"ArXiv", 0.0460},       {"Wikipedia", 0.0380}, {"StackExchange", 0.0330}};
}

namespace {

constexpr std::string_view kOnsets[] = {"b", "c", "d", "f", "g", "h", "k", "l", "m", "n",
                                        "p", "r", "s", "t", "v", "w", "st", "tr", "pl", "gr"};
constexpr std::string_view kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou", "ee"};

std::string make_word(std::size_t index) {
  // Deterministic pseudo-word built from the index digits in a mixed radix.
  std::string w;
  std::size_t x = index + 1;
  do {
    w += kOnsets[x % std::size(kOnsets)];
    x /= std::size(kOnsets);
    w += kVowels[x % std::size(kVowels)];
    x /= std::size(kVowels);
  } while (x > 0);
  return w;
}

}  // namespace

std::vector<Document> synthesize_documents(const SynthesisSpec& spec, std::uint64_t seed) {
  if (spec.domain_mix.empty()) throw ValidationError("synthesis spec has an empty domain mix");
  if (spec.min_words == 0 || spec.max_words < spec.min_words)
    throw ValidationError("synthesis spec needs 0 < min_words <= max_words");
  if (spec.vocabulary == 0) throw ValidationError("synthesis spec needs a nonempty vocabulary");
  for (const auto& s : spec.scores)
    if (!(std::abs(s.loading) <= 1.0) || !(s.stddev >= 0.0))
      throw ValidationError(fmt::format("score latent '{}' needs |loading| <= 1 and stddev >= 0", s.name));

  std::vector<double> props;
  for (const auto& [_, p] : spec.domain_mix) props.push_back(p);
  const auto counts = apportion(spec.documents, props);

  std::vector<std::size_t> labels;
  labels.reserve(spec.documents);
  for (std::size_t d = 0; d < counts.size(); ++d) labels.insert(labels.end(), counts[d], d);

  Rng rng(seed);
  for (std::size_t i = labels.size(); i > 1; --i) std::swap(labels[i - 1], labels[rng.below(i)]);

  std::vector<std::string> vocab(spec.vocabulary);
  for (std::size_t i = 0; i < vocab.size(); ++i) vocab[i] = make_word(i);

  const std::size_t width = std::to_string(std::max<std::size_t>(spec.documents, 1)).size();
  std::vector<Document> docs;
  docs.reserve(spec.documents);
  for (std::size_t i = 0; i < spec.documents; ++i) {
    Document doc;
    doc.id = fmt::format("doc-{:0{}}", i, width);
    doc.domain = spec.domain_mix[labels[i]].first;

    const std::size_t words = spec.min_words + rng.below(spec.max_words - spec.min_words + 1);
    std::string text;
    std::size_t since_break = 0;
    for (std::size_t w = 0; w < words; ++w) {
      // Zipf-like skew: squaring a uniform favours small vocabulary indices.
      const double u = rng.uniform();
      std::string word = vocab[static_cast<std::size_t>(u * u * static_cast<double>(vocab.size()))];
      if (since_break == 0 && !word.empty()) word[0] = static_cast<char>(word[0] - 'a' + 'A');
      text += word;
      ++since_break;
      const bool last = w + 1 == words;
      if (last || (since_break >= 6 && rng.uniform() < 0.2)) {
        text += '.';
        since_break = 0;
        if (!last) text += rng.uniform() < 0.3 ? '\n' : ' ';
      } else {
        text += ' ';
      }
    }
    doc.text = std::move(text);
    doc.token_estimate = words;

    const double z = rng.normal();
    for (const auto& s : spec.scores) {
      const double eps = rng.normal();
      doc.scores[s.name] = s.mean + s.stddev * (s.loading * z + std::sqrt(1.0 - s.loading * s.loading) * eps);
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

void synthesize_corpus(const SynthesisSpec& spec, std::uint64_t seed, const std::filesystem::path& out) {
  write_corpus(out, synthesize_documents(spec, seed));
}

}  // namespace qualmix
