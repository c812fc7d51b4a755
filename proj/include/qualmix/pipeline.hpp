#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qualmix/corpus.hpp"
#include "qualmix/gbrt.hpp"
#include "qualmix/proxy_lab.hpp"
#include "qualmix/score_matrix.hpp"
#include "qualmix/selection.hpp"
#include "qualmix/weight_optimizer.hpp"

namespace qualmix::pipeline {

/// Streams derived from the root seed. Each consumer gets its own stream so
/// adding randomness in one stage never shifts another.
enum class SeedStream : std::uint64_t {
  kCampaign = 1,
  kRegressor = 2,
  kSearch = 3,
  kSynth = 4,
  kHash = 5,
  kOracle = 6,
};
std::uint64_t stream_seed(std::uint64_t root, SeedStream stream);

struct ImportanceConfig {
  std::map<std::string, std::filesystem::path> targets;  // books / wikipedia / math -> corpus
  std::uint64_t bucket_count = 65536;
  double smoothing = 1.0;
};

struct TrainerConfig {
  std::string kind = "quadratic_oracle";  // quadratic_oracle | selection_oracle | command
  std::string command;
  std::vector<std::pair<std::string, double>> w_star;  // quadratic oracle; empty: sampled
  std::vector<std::string> drivers;                    // selection oracle
  double base = 1.0;
  double sigma = 0.0;
};

/// Everything a command needs, parsed from one JSON config file with flag
/// overrides merged on top (RFC 7386 merge patch). Documented in README.md.
struct RunConfig {
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::filesystem::path output_dir = ".";

  std::vector<std::filesystem::path> corpus;
  CorpusSchema schema;

  bool signals = true;
  std::optional<ImportanceConfig> importance;
  std::vector<std::filesystem::path> ratings;
  std::vector<std::string> raters;  // empty: every rater seen in the ratings files
  double min_rating_coverage = 0.0;

  std::vector<std::string> score_names;  // empty: inferred from the corpus
  NormalizationMode normalization = NormalizationMode::kRank;

  SelectionPlan plan;
  std::optional<std::filesystem::path> weights;
  std::optional<std::filesystem::path> thresholds;
  bool uniform_weights = false;
  bool renormalize_weights = false;  // rescale a weights file that sums to ~1 (rounded tables)

  std::size_t experiments = 256;
  double dirichlet_alpha = 1.0;
  double max_failure_rate = 0.2;
  std::optional<std::filesystem::path> campaign_log;
  std::string valset;
  ProxyConfig proxy;
  TrainerConfig trainer;

  RegressorHyper regressor;
  std::size_t candidates = 100'000;
  std::size_t top_k = 100;
  std::size_t grid = 50;

  SynthesisSpec synth;
  std::optional<std::filesystem::path> synth_output;
};

/// Parses the config (path may be empty) and applies overrides, then checks
/// that referenced input files exist. Throws ValidationError.
RunConfig load_config(const std::filesystem::path& path, const std::string& overrides_json);
RunConfig parse_config(const std::string& config_json, const std::filesystem::path& base_dir);

struct CommandOutput {
  std::vector<std::filesystem::path> files;
  std::string summary_json;
};

CommandOutput cmd_synth(const RunConfig& config);
CommandOutput cmd_annotate(const RunConfig& config);
CommandOutput cmd_select(const RunConfig& config);
CommandOutput cmd_campaign(const RunConfig& config);
CommandOutput cmd_fit(const RunConfig& config);
CommandOutput cmd_correlate(const RunConfig& config);

/// Reads every configured corpus file, enforcing id uniqueness across files.
std::vector<Document> load_documents(const RunConfig& config);

/// Score matrix over `names` (or the names every document carries), with
/// missing ratings imputed and columns normalized per the config.
ScoreMatrix build_normalized_matrix(const RunConfig& config, std::span<const Document> docs,
                                    std::vector<std::string> names);

}  // namespace qualmix::pipeline
