#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qualmix {

inline constexpr std::uint64_t kDefaultBucketCount = 65536;

/// Word unigram and bigram features of normalized text. Bigrams are
/// "w1␟w2" (SYMBOL FOR UNIT SEPARATOR between the words).
std::vector<std::string> ngram_features(std::string_view text);

/// Seeded 64-bit hash of a feature string (FNV-1a body, splitmix finalizer).
std::uint64_t feature_hash(std::string_view feature, std::uint64_t seed);

/// Bag of hashed {1,2}-word-grams with additive smoothing.
class HashedBagModel {
 public:
  HashedBagModel(std::uint64_t bucket_count, std::uint64_t seed, double smoothing = 1.0);

  void add_document(std::string_view text);
  void add_bucket(std::uint64_t bucket, std::uint64_t count = 1);
  /// Adds another model's counts; both must share bucket count and seed.
  void merge(const HashedBagModel& other);

  std::uint64_t bucket_of(std::string_view feature) const { return feature_hash(feature, seed_) % bucket_count_; }
  double probability(std::uint64_t bucket) const;
  double log_probability(std::uint64_t bucket) const;

  std::uint64_t bucket_count() const { return bucket_count_; }
  std::uint64_t seed() const { return seed_; }
  double smoothing() const { return smoothing_; }
  std::uint64_t total() const { return total_; }
  std::span<const std::uint64_t> counts() const { return counts_; }

  void save(const std::filesystem::path& path) const;
  static HashedBagModel load(const std::filesystem::path& path);

  bool operator==(const HashedBagModel&) const = default;

 private:
  std::uint64_t bucket_count_;
  std::uint64_t seed_;
  double smoothing_;
  std::uint64_t total_ = 0;
  std::vector<std::uint64_t> counts_;
};

/// Fits a model over the given texts, accumulating shard-local counts in
/// parallel and merging once. Throws ValidationError for an empty corpus or
/// bucket_count < 2.
HashedBagModel fit_bag_model(std::span<const std::string_view> texts, std::uint64_t bucket_count,
                             std::uint64_t seed, double smoothing = 1.0, unsigned threads = 1);

/// log p(doc) - log q(doc) in nats, summed over the document's hashed
/// features. Throws ValidationError when p and q disagree on buckets or seed.
double importance_score(std::string_view text, const HashedBagModel& p, const HashedBagModel& q);

/// Score names written by the annotator for the three default targets.
inline constexpr std::string_view kImportanceTargets[] = {"books", "wikipedia", "math"};
inline constexpr std::string_view kImportanceNames[] = {"books_importance", "wikipedia_importance",
                                                        "math_importance"};

}  // namespace qualmix
