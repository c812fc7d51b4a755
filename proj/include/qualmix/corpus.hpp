#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace qualmix {

/// Declared domain enumeration. Order matters: it is the report order and the
/// tie-break order for apportionment.
class DomainRegistry {
 public:
  DomainRegistry();  // CommonCrawl, C4, GitHub, Books, ArXiv, Wikipedia, StackExchange
  explicit DomainRegistry(std::vector<std::string> names);

  bool contains(std::string_view name) const;
  std::optional<std::size_t> index_of(std::string_view name) const;
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
};

enum class TokenEstimator {
  kWhitespaceWords,
  kCharRatio,  // code points / 0.77, rounded to nearest
};

std::uint64_t estimate_tokens(std::string_view text, TokenEstimator estimator);

struct Document {
  std::string id;
  std::string text;
  std::string domain;
  std::uint64_t token_estimate = 0;
  std::map<std::string, double> scores;

  bool operator==(const Document&) const = default;
};

struct CorpusSchema {
  DomainRegistry domains;
  TokenEstimator estimator = TokenEstimator::kWhitespaceWords;
  bool reject_duplicate_ids = true;
  bool enforce_domains = true;  // false: accept any domain string (target corpora)
};

struct RecordError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

/// Single-consumer stream over a JSONL corpus file. Holds one line at a time;
/// the only state that grows is the id set used for duplicate detection.
class CorpusReader {
 public:
  CorpusReader(const std::filesystem::path& path, CorpusSchema schema);

  /// Next well-formed document, or nullopt at end of file. Malformed records
  /// are skipped and logged in errors(); a duplicate id throws ValidationError.
  std::optional<Document> next();

  const std::vector<RecordError>& errors() const { return errors_; }
  std::size_t lines_read() const { return line_no_; }

 private:
  std::optional<Document> parse(const std::string& line);

  std::filesystem::path path_;
  std::ifstream in_;
  CorpusSchema schema_;
  std::size_t line_no_ = 0;
  std::string line_;
  std::vector<RecordError> errors_;
  std::unordered_set<std::string> seen_ids_;
};

struct CorpusContents {
  std::vector<Document> documents;
  std::vector<RecordError> errors;
};

/// Reads a whole file. Throws ValidationError on duplicate ids.
CorpusContents read_corpus(const std::filesystem::path& path, const CorpusSchema& schema = {});

/// One JSON object, keys in the order id, text, domain, scores (scores omitted
/// when empty). No trailing newline.
std::string serialize_document(const Document& doc);
void write_document(std::ostream& out, const Document& doc);
void write_corpus(const std::filesystem::path& path, const std::vector<Document>& docs);

/// Largest-remainder apportionment of `total` items over `proportions`.
/// Remainder ties go to the earlier entry.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& proportions);

/// Latent model for one synthetic score column:
/// value = mean + stddev * (loading * z_doc + sqrt(1 - loading^2) * eps).
struct ScoreLatent {
  std::string name;
  double mean = 0.0;
  double stddev = 1.0;
  double loading = 0.0;  // correlation with the shared per-document latent z_doc
};

struct SynthesisSpec {
  std::size_t documents = 1000;
  std::vector<std::pair<std::string, double>> domain_mix;
  std::vector<ScoreLatent> scores;
  std::size_t min_words = 20;
  std::size_t max_words = 200;
  std::size_t vocabulary = 2000;
};

/// SlimPajama domain proportions used as the default mix.
std::vector<std::pair<std::string, double>> default_domain_mix();

/// Generates documents deterministically from the seed.
std::vector<Document> synthesize_documents(const SynthesisSpec& spec, std::uint64_t seed);
void synthesize_corpus(const SynthesisSpec& spec, std::uint64_t seed, const std::filesystem::path& out);

}  // namespace qualmix
