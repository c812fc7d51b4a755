#include "qualmix/proxy_lab.hpp"

#include <fmt/format.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "qualmix/error.hpp"
#include "qualmix/parallel.hpp"
#include "qualmix/random.hpp"

namespace qualmix {

using nlohmann::json;
using nlohmann::ordered_json;

void ProxyConfig::validate() const {
  if (hidden_dim == 0 || layers == 0 || heads == 0 || kv_heads == 0 || token_budget == 0)
    throw ValidationError("proxy config fields must all be positive");
}

std::string ProxyConfig::to_json() const {
  ordered_json j;
  j["hidden_dim"] = hidden_dim;
  j["layers"] = layers;
  j["heads"] = heads;
  j["kv_heads"] = kv_heads;
  j["token_budget"] = token_budget;
  return j.dump();
}

std::string experiment_id(std::size_t index) { return fmt::format("exp-{:04}", index); }

std::vector<std::vector<double>> sample_weights(std::size_t m, std::size_t n, std::uint64_t seed, double alpha) {
  if (m == 0) throw ValidationError("cannot sample weights over zero scores");
  if (!(alpha > 0.0)) throw ValidationError("Dirichlet concentration must be positive");
  Rng rng(seed);
  std::vector<std::vector<double>> out(n, std::vector<double>(m));
  for (auto& w : out) {
    if (m == 1) {
      w[0] = 1.0;
      continue;
    }
    rng.dirichlet(alpha, w);
  }
  return out;
}

std::vector<WeightVector> sample_weight_vectors(const std::vector<std::string>& names, std::size_t n,
                                                std::uint64_t seed, double alpha) {
  const auto raw = sample_weights(names.size(), n, seed, alpha);
  std::vector<WeightVector> out;
  out.reserve(n);
  for (const auto& w : raw) {
    std::vector<std::pair<std::string, double>> pairs;
    for (std::size_t j = 0; j < names.size(); ++j) pairs.emplace_back(names[j], w[j]);
    out.push_back(WeightVector::from_pairs(std::move(pairs)));
  }
  return out;
}

double oracle_loss(const WeightVector& w, const OracleSpec& oracle, std::uint64_t stream) {
  if (w.names() != oracle.w_star.names())
    throw ValidationError("weight vector and oracle optimum cover different scores");
  double sq = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double d = w.values()[i] - oracle.w_star.values()[i];
    sq += d * d;
  }
  double loss = oracle.base + sq;
  if (oracle.sigma > 0.0) {
    Rng rng(derive_seed(oracle.seed, stream));
    loss += oracle.sigma * rng.normal();
  }
  return loss;
}

TrainerResult QuadraticOracleTrainer::train(const TrainerRequest& request) const {
  return {oracle_loss(*request.weights, spec_, request.index), 0, request.manifest_tokens};
}

SelectionOracleTrainer::SelectionOracleTrainer(std::unordered_map<std::string, double> utility, double base,
                                               double sigma, std::uint64_t seed)
    : utility_(std::move(utility)), base_(base), sigma_(sigma), seed_(seed) {}

double SelectionOracleTrainer::subset_loss(std::span<const std::string> ids, std::uint64_t stream) const {
  double sum = 0.0;
  for (const auto& id : ids) {
    auto it = utility_.find(id);
    if (it == utility_.end()) throw RuntimeFailure(fmt::format("oracle has no utility for document '{}'", id));
    sum += it->second;
  }
  double loss = base_ - (ids.empty() ? 0.0 : sum / static_cast<double>(ids.size()));
  if (sigma_ > 0.0) {
    Rng rng(derive_seed(seed_, stream));
    loss += sigma_ * rng.normal();
  }
  return loss;
}

TrainerResult SelectionOracleTrainer::train(const TrainerRequest& request) const {
  return {subset_loss(request.manifest_ids, request.index), 0, request.manifest_tokens};
}

std::unordered_map<std::string, double> driver_utilities(const ScoreMatrix& normalized,
                                                          const std::vector<std::string>& drivers) {
  if (!normalized.has_normalized()) throw ValidationError("score matrix has not been normalized");
  if (drivers.empty()) throw ValidationError("selection oracle needs at least one driver score");
  std::vector<std::size_t> cols;
  for (const auto& d : drivers) {
    const auto c = normalized.column_of(d);
    if (!c) throw ValidationError(fmt::format("driver score '{}' is not in the score matrix", d));
    cols.push_back(*c);
  }
  std::unordered_map<std::string, double> out;
  for (std::size_t r = 0; r < normalized.rows(); ++r) {
    double s = 0.0;
    for (auto c : cols) s += normalized.normalized(r, c);
    out[normalized.doc_ids()[r]] = s / static_cast<double>(cols.size());
  }
  return out;
}

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  out += '\'';
  return out;
}

bool is_executable_file(const std::filesystem::path& p) {
  std::error_code ec;
  return std::filesystem::is_regular_file(p, ec) && ::access(p.c_str(), X_OK) == 0;
}

}  // namespace

CommandTrainer::CommandTrainer(std::string command, std::filesystem::path work_dir)
    : command_(std::move(command)), work_dir_(std::move(work_dir)) {}

std::string CommandTrainer::probe() const {
  std::istringstream in(command_);
  std::string program;
  in >> program;
  if (program.empty()) return "trainer command is empty";
  if (program.find('/') != std::string::npos)
    return is_executable_file(program) ? std::string{} : fmt::format("trainer '{}' is not an executable file", program);
  const char* path_env = std::getenv("PATH");
  std::istringstream dirs(path_env ? path_env : "");
  std::string dir;
  while (std::getline(dirs, dir, ':'))
    if (!dir.empty() && is_executable_file(std::filesystem::path(dir) / program)) return {};
  return fmt::format("trainer '{}' was not found on PATH", program);
}

TrainerResult CommandTrainer::train(const TrainerRequest& request) const {
  const auto config_path = work_dir_ / (request.experiment_id + ".config.json");
  {
    std::ofstream cfg(config_path, std::ios::binary | std::ios::trunc);
    if (!cfg) throw RuntimeFailure(fmt::format("cannot write trainer config '{}'", config_path.string()));
    cfg << request.config.to_json() << '\n';
  }
  const std::string cmd = fmt::format("{} --manifest {} --config {} --valset {}", command_,
                                      shell_quote(request.manifest_path.string()), shell_quote(config_path.string()),
                                      shell_quote(request.valset));
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) throw RuntimeFailure(fmt::format("cannot start trainer '{}'", command_));
  std::string output;
  char buf[4096];
  while (std::size_t got = std::fread(buf, 1, sizeof buf, pipe)) output.append(buf, got);
  const int status = ::pclose(pipe);
  if (status != 0) {
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    throw RuntimeFailure(fmt::format("trainer exited with status {}", code));
  }

  std::istringstream lines(output);
  std::string line, last;
  while (std::getline(lines, line))
    if (line.find_first_not_of(" \t\r") != std::string::npos) last = line;
  try {
    const auto j = json::parse(last);
    TrainerResult r;
    r.loss = j.at("loss").get<double>();
    r.steps = j.value("steps", std::uint64_t{0});
    r.tokens = j.value("tokens", request.manifest_tokens);
    return r;
  } catch (const json::exception& e) {
    throw RuntimeFailure(fmt::format("trainer output is not a JSON object with 'loss': {}", e.what()));
  }
}

std::string record_to_json(const ExperimentRecord& r) {
  ordered_json j;
  j["experiment_id"] = r.experiment_id;
  j["index"] = r.index;
  j["status"] = r.ok() ? "ok" : "failed";
  ordered_json w = ordered_json::object();
  for (std::size_t i = 0; i < r.weights.size(); ++i) w[r.weights.names()[i]] = r.weights.values()[i];
  j["weights"] = std::move(w);
  if (r.ok())
    j["loss"] = r.loss;
  else
    j["loss"] = nullptr;
  j["manifest"] = r.manifest;
  j["seed"] = r.seed;
  j["steps"] = r.steps;
  j["tokens"] = r.tokens;
  if (!r.ok()) j["error"] = r.error;
  return j.dump();
}

ExperimentRecord record_from_json(const std::string& line) {
  try {
    const auto j = ordered_json::parse(line);
    ExperimentRecord r;
    r.experiment_id = j.at("experiment_id").get<std::string>();
    r.index = j.at("index").get<std::size_t>();
    const auto status = j.at("status").get<std::string>();
    if (status != "ok" && status != "failed") throw ValidationError(fmt::format("unknown status '{}'", status));
    r.status = status == "ok" ? ExperimentStatus::kOk : ExperimentStatus::kFailed;
    std::vector<std::pair<std::string, double>> pairs;
    for (const auto& [k, v] : j.at("weights").items()) pairs.emplace_back(k, v.get<double>());
    r.weights = WeightVector::from_pairs(std::move(pairs));
    if (r.ok()) {
      r.loss = j.at("loss").get<double>();
      if (!std::isfinite(r.loss)) throw ValidationError("record loss is not finite");
    }
    r.manifest = j.value("manifest", std::string{});
    r.seed = j.value("seed", std::uint64_t{0});
    r.steps = j.value("steps", std::uint64_t{0});
    r.tokens = j.value("tokens", std::uint64_t{0});
    r.error = j.value("error", std::string{});
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("malformed campaign record: {}", e.what()));
  }
}

std::vector<ExperimentRecord> read_campaign_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot open campaign log '{}'", path.string()));
  std::map<std::size_t, ExperimentRecord> by_index;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto r = record_from_json(line);
      by_index.insert_or_assign(r.index, std::move(r));
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  std::vector<ExperimentRecord> out;
  for (auto& [_, r] : by_index) out.push_back(std::move(r));
  return out;
}

CampaignSummary run_campaign(const ScoreMatrix& normalized, std::span<const PoolEntry> pool, const SelectionPlan& plan,
                             const Trainer& trainer, const CampaignOptions& options) {
  plan.validate();
  options.proxy.validate();
  if (options.experiments == 0) throw ValidationError("campaign needs at least one experiment");
  if (options.log_path.empty()) throw ValidationError("campaign needs a log path");
  if (const auto why = trainer.probe(); !why.empty()) throw RuntimeFailure(fmt::format("trainer probe failed: {}", why));

  const auto weights = sample_weight_vectors(normalized.score_names(), options.experiments, options.seed,
                                             options.dirichlet_alpha);

  std::map<std::size_t, ExperimentRecord> done;
  if (std::filesystem::exists(options.log_path)) {
    for (auto& r : read_campaign_log(options.log_path)) {
      if (r.index >= options.experiments) continue;
      if (r.weights != weights[r.index])
        throw ValidationError(fmt::format("campaign log entry {} was produced with different weights or seed",
                                          r.experiment_id));
      done.emplace(r.index, std::move(r));
    }
  }

  std::filesystem::path manifest_dir = options.manifest_dir;
  if (manifest_dir.empty() && trainer.needs_manifest_file())
    manifest_dir = options.log_path.parent_path() / "manifests";
  if (!manifest_dir.empty()) std::filesystem::create_directories(manifest_dir);

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < options.experiments; ++i) {
    auto it = done.find(i);
    if (it == done.end() || !it->second.ok()) pending.push_back(i);
  }

  std::ofstream log(options.log_path, std::ios::binary | std::ios::app);
  if (!log) throw RuntimeFailure(fmt::format("cannot append to campaign log '{}'", options.log_path.string()));

  CampaignSummary summary;
  const std::size_t batch = resolve_threads(options.threads);
  const auto allowed_failures = static_cast<std::size_t>(std::floor(options.max_failure_rate * static_cast<double>(options.experiments)));

  for (std::size_t start = 0; start < pending.size(); start += batch) {
    const std::size_t count = std::min(batch, pending.size() - start);
    std::vector<ExperimentRecord> results(count);
    parallel_chunks(count, static_cast<unsigned>(batch), [&](std::size_t begin, std::size_t end) {
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t i = pending[start + k];
        ExperimentRecord& rec = results[k];
        rec.experiment_id = experiment_id(i);
        rec.index = i;
        rec.weights = weights[i];
        rec.seed = derive_seed(options.seed, i);

        const SelectionResult sel = select_top_k(normalized, pool, weights[i], plan, 1);
        TrainerRequest req;
        req.experiment_id = rec.experiment_id;
        req.index = i;
        req.weights = &weights[i];
        req.manifest_ids = sel.selected_ids;
        req.manifest_tokens = sel.total_tokens;
        req.config = options.proxy;
        req.valset = options.valset;
        req.seed = rec.seed;
        if (!manifest_dir.empty()) {
          req.manifest_path = manifest_dir / (rec.experiment_id + ".txt");
          write_manifest(req.manifest_path, sel);
          rec.manifest = req.manifest_path.string();
        }
        try {
          const TrainerResult tr = trainer.train(req);
          if (!std::isfinite(tr.loss)) throw RuntimeFailure("trainer returned a non-finite loss");
          rec.loss = tr.loss;
          rec.steps = tr.steps;
          rec.tokens = tr.tokens;
        } catch (const std::exception& e) {
          rec.status = ExperimentStatus::kFailed;
          rec.error = e.what();
        }
      }
    });

    for (auto& rec : results) {
      log << record_to_json(rec) << '\n';
      ++summary.trainer_invocations;
      if (!rec.ok()) ++summary.failures;
      done.insert_or_assign(rec.index, std::move(rec));
    }
    log.flush();
    if (!log) throw RuntimeFailure(fmt::format("I/O error writing campaign log '{}'", options.log_path.string()));
    if (summary.failures > allowed_failures)
      throw RuntimeFailure(fmt::format("campaign aborted: {} of {} experiments failed", summary.failures,
                                       options.experiments));
  }

  for (auto& [_, r] : done) summary.records.push_back(std::move(r));
  return summary;
}

}  // namespace qualmix
