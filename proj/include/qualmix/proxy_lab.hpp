#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "qualmix/score_matrix.hpp"
#include "qualmix/selection.hpp"

namespace qualmix {

/// Proxy model shape handed to the trainer. Defaults are the 18M proxy.
struct ProxyConfig {
  std::uint64_t hidden_dim = 256;
  std::uint64_t layers = 2;
  std::uint64_t heads = 4;
  std::uint64_t kv_heads = 4;
  std::uint64_t token_budget = 500'000'000;

  void validate() const;
  std::string to_json() const;
};

enum class ExperimentStatus { kOk, kFailed };

struct ExperimentRecord {
  std::string experiment_id;
  std::size_t index = 0;
  WeightVector weights;
  double loss = 0.0;
  ExperimentStatus status = ExperimentStatus::kOk;
  std::string error;
  std::string manifest;  // path of the selection manifest, empty if not written
  std::uint64_t seed = 0;
  std::uint64_t steps = 0;
  std::uint64_t tokens = 0;

  bool ok() const { return status == ExperimentStatus::kOk; }
};

std::string experiment_id(std::size_t index);

/// n flat-Dirichlet points on the m-simplex (concentration `alpha` per
/// coordinate), generated sequentially from one seeded stream.
std::vector<std::vector<double>> sample_weights(std::size_t m, std::size_t n, std::uint64_t seed, double alpha = 1.0);
std::vector<WeightVector> sample_weight_vectors(const std::vector<std::string>& names, std::size_t n,
                                                std::uint64_t seed, double alpha = 1.0);

/// Planted-optimum loss: base + ||w - w_star||^2 + N(0, sigma^2).
struct OracleSpec {
  WeightVector w_star;
  double base = 1.0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

/// `stream` selects an independent noise draw, so the loss of experiment i
/// does not depend on evaluation order.
double oracle_loss(const WeightVector& w, const OracleSpec& oracle, std::uint64_t stream = 0);

struct TrainerRequest {
  std::string experiment_id;
  std::size_t index = 0;
  const WeightVector* weights = nullptr;
  std::span<const std::string> manifest_ids;
  std::filesystem::path manifest_path;  // may be empty for in-process trainers
  std::uint64_t manifest_tokens = 0;
  ProxyConfig config;
  std::string valset;
  std::uint64_t seed = 0;
};

struct TrainerResult {
  double loss = 0.0;
  std::uint64_t steps = 0;
  std::uint64_t tokens = 0;
};

/// Boundary to proxy training. Implementations must be safe to call from
/// several threads at once.
class Trainer {
 public:
  virtual ~Trainer() = default;
  /// Returns an empty string when the trainer is usable, otherwise the reason.
  virtual std::string probe() const { return {}; }
  virtual TrainerResult train(const TrainerRequest& request) const = 0;
  /// Whether manifests must be written to disk before train() is called.
  virtual bool needs_manifest_file() const { return false; }
};

/// Loss depends only on the weights through oracle_loss.
class QuadraticOracleTrainer final : public Trainer {
 public:
  explicit QuadraticOracleTrainer(OracleSpec spec) : spec_(std::move(spec)) {}
  TrainerResult train(const TrainerRequest& request) const override;
  const OracleSpec& spec() const { return spec_; }

 private:
  OracleSpec spec_;
};

/// Loss = base - mean utility of the selected documents + N(0, sigma^2).
class SelectionOracleTrainer final : public Trainer {
 public:
  SelectionOracleTrainer(std::unordered_map<std::string, double> utility, double base, double sigma,
                         std::uint64_t seed);
  TrainerResult train(const TrainerRequest& request) const override;
  double subset_loss(std::span<const std::string> ids, std::uint64_t stream) const;

 private:
  std::unordered_map<std::string, double> utility_;
  double base_;
  double sigma_;
  std::uint64_t seed_;
};

/// Mean of the named normalized columns per document: the hidden quality that
/// drives SelectionOracleTrainer.
std::unordered_map<std::string, double> driver_utilities(const ScoreMatrix& normalized,
                                                          const std::vector<std::string>& drivers);

/// Runs `<command> --manifest M --config C --valset V` and reads a JSON object
/// with a numeric "loss" from the last non-empty stdout line.
class CommandTrainer final : public Trainer {
 public:
  CommandTrainer(std::string command, std::filesystem::path work_dir);
  std::string probe() const override;
  TrainerResult train(const TrainerRequest& request) const override;
  bool needs_manifest_file() const override { return true; }

 private:
  std::string command_;
  std::filesystem::path work_dir_;
};

struct CampaignOptions {
  std::size_t experiments = 256;
  std::uint64_t seed = 0;
  double dirichlet_alpha = 1.0;
  std::filesystem::path log_path;      // JSONL, appended; required
  std::filesystem::path manifest_dir;  // empty: manifests kept in memory only
  ProxyConfig proxy;
  std::string valset;
  double max_failure_rate = 0.2;
  unsigned threads = 1;
};

struct CampaignSummary {
  std::vector<ExperimentRecord> records;  // every experiment, by index
  std::size_t trainer_invocations = 0;    // this run only
  std::size_t failures = 0;
};

/// Data-collection loop. Experiments already recorded as ok in the log are
/// skipped; new records are appended in index order. Throws RuntimeFailure
/// when the trainer fails its probe or more than max_failure_rate of the
/// experiments fail.
CampaignSummary run_campaign(const ScoreMatrix& normalized, std::span<const PoolEntry> pool, const SelectionPlan& plan,
                             const Trainer& trainer, const CampaignOptions& options);

std::string record_to_json(const ExperimentRecord& record);
ExperimentRecord record_from_json(const std::string& line);
/// Last record per experiment id wins; result sorted by index.
std::vector<ExperimentRecord> read_campaign_log(const std::filesystem::path& path);

}  // namespace qualmix
