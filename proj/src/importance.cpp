#include "qualmix/importance.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "qualmix/error.hpp"
#include "qualmix/parallel.hpp"
#include "qualmix/random.hpp"
#include "qualmix/text.hpp"

namespace qualmix {

namespace {
constexpr std::string_view kBigramSeparator = "\xE2\x90\x9F";  // U+241F
}

std::vector<std::string> ngram_features(std::string_view text) {
  const std::u32string norm = text::normalize(text);
  const auto words = text::split_words(norm);
  std::vector<std::string> encoded;
  encoded.reserve(words.size());
  for (auto w : words) encoded.push_back(text::encode_utf8(w));

  std::vector<std::string> features;
  features.reserve(encoded.empty() ? 0 : 2 * encoded.size() - 1);
  for (std::size_t i = 0; i < encoded.size(); ++i) {
    features.push_back(encoded[i]);
    if (i + 1 < encoded.size()) {
      std::string bigram = encoded[i];
      bigram += kBigramSeparator;
      bigram += encoded[i + 1];
      features.push_back(std::move(bigram));
    }
  }
  return features;
}

std::uint64_t feature_hash(std::string_view feature, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ mix64(seed);
  for (unsigned char c : feature) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(h);
}

HashedBagModel::HashedBagModel(std::uint64_t bucket_count, std::uint64_t seed, double smoothing)
    : bucket_count_(bucket_count), seed_(seed), smoothing_(smoothing) {
  if (bucket_count < 2) throw ValidationError(fmt::format("bucket_count must be >= 2, got {}", bucket_count));
  if (!(smoothing > 0.0) || !std::isfinite(smoothing))
    throw ValidationError(fmt::format("smoothing must be a positive finite number, got {}", smoothing));
  counts_.assign(bucket_count, 0);
}

void HashedBagModel::add_document(std::string_view text) {
  for (const auto& f : ngram_features(text)) add_bucket(bucket_of(f));
}

void HashedBagModel::add_bucket(std::uint64_t bucket, std::uint64_t count) {
  counts_.at(bucket) += count;
  total_ += count;
}

void HashedBagModel::merge(const HashedBagModel& other) {
  if (other.bucket_count_ != bucket_count_ || other.seed_ != seed_)
    throw ValidationError("cannot merge bag models with different bucket counts or seeds");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  total_ += other.total_;
}

double HashedBagModel::probability(std::uint64_t bucket) const {
  return (static_cast<double>(counts_.at(bucket)) + smoothing_) /
         (static_cast<double>(total_) + smoothing_ * static_cast<double>(bucket_count_));
}

double HashedBagModel::log_probability(std::uint64_t bucket) const {
  return std::log(static_cast<double>(counts_.at(bucket)) + smoothing_) -
         std::log(static_cast<double>(total_) + smoothing_ * static_cast<double>(bucket_count_));
}

void HashedBagModel::save(const std::filesystem::path& path) const {
  nlohmann::ordered_json j;
  j["bucket_count"] = bucket_count_;
  j["seed"] = seed_;
  j["smoothing"] = smoothing_;
  j["counts"] = counts_;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure(fmt::format("cannot write bag model '{}'", path.string()));
  out << j.dump() << '\n';
}

HashedBagModel HashedBagModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFailure(fmt::format("cannot open bag model '{}'", path.string()));
  nlohmann::json j;
  try {
    in >> j;
    HashedBagModel m(j.at("bucket_count").get<std::uint64_t>(), j.at("seed").get<std::uint64_t>(),
                     j.at("smoothing").get<double>());
    const auto& counts = j.at("counts");
    if (!counts.is_array() || counts.size() != m.bucket_count_)
      throw ValidationError(fmt::format("bag model '{}': counts length does not match bucket_count", path.string()));
    for (std::size_t i = 0; i < counts.size(); ++i) m.add_bucket(i, counts[i].get<std::uint64_t>());
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("bag model '{}' is malformed: {}", path.string(), e.what()));
  }
}

HashedBagModel fit_bag_model(std::span<const std::string_view> texts, std::uint64_t bucket_count,
                             std::uint64_t seed, double smoothing, unsigned threads) {
  if (texts.empty()) throw ValidationError("cannot fit a bag model on an empty corpus");
  HashedBagModel model(bucket_count, seed, smoothing);

  const std::size_t workers = std::min<std::size_t>(resolve_threads(threads), texts.size());
  if (workers <= 1) {
    for (auto t : texts) model.add_document(t);
    return model;
  }
  std::vector<HashedBagModel> shards(workers, HashedBagModel(bucket_count, seed, smoothing));
  const std::size_t chunk = (texts.size() + workers - 1) / workers;
  parallel_chunks(workers, static_cast<unsigned>(workers), [&](std::size_t begin, std::size_t end) {
    for (std::size_t w = begin; w < end; ++w) {
      const std::size_t lo = w * chunk;
      const std::size_t hi = std::min(texts.size(), lo + chunk);
      for (std::size_t i = lo; i < hi; ++i) shards[w].add_document(texts[i]);
    }
  });
  for (const auto& s : shards) model.merge(s);
  return model;
}

double importance_score(std::string_view text, const HashedBagModel& p, const HashedBagModel& q) {
  if (p.bucket_count() != q.bucket_count() || p.seed() != q.seed())
    throw ValidationError(fmt::format("importance models disagree: p has {} buckets/seed {}, q has {} buckets/seed {}",
                                      p.bucket_count(), p.seed(), q.bucket_count(), q.seed()));
  double value = 0.0;
  for (const auto& f : ngram_features(text)) {
    const std::uint64_t b = p.bucket_of(f);
    value += p.log_probability(b) - q.log_probability(b);
  }
  return value;
}

}  // namespace qualmix
