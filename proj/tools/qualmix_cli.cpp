// Command-line front end. Talks to the engine only through the C interface.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qualmix/qualmix.h"

namespace {

using nlohmann::ordered_json;

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct Context {
  qm_context* ctx = qm_context_new();
  ~Context() { qm_context_free(ctx); }
};

int report_error(std::string_view kind, std::string_view message, int code) {
  ordered_json err;
  err["error"] = kind;
  err["message"] = message;
  err["exit_code"] = code;
  std::cerr << err.dump() << '\n';
  return code;
}

int report_status(qm_status status, qm_context* ctx) {
  switch (status) {
    case QM_OK:
      return 0;
    case QM_ERR_VALIDATION:
      return report_error("validation", qm_last_error(ctx), kExitValidation);
    case QM_ERR_INVALID_ARGUMENT:
      return report_error("invalid_argument", qm_last_error(ctx), kExitValidation);
    default:
      return report_error("runtime", qm_last_error(ctx), kExitRuntime);
  }
}

// Flags shared by every pipeline command; each set flag becomes a config override.
struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> out;
  std::vector<std::string> corpus;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config, "JSON config file");
    app->add_option("--seed", seed, "root seed (overrides config)");
    app->add_option("--threads", threads, "worker cap; 0 = all cores");
    app->add_option("-o,--out", out, "output directory");
    app->add_option("--corpus", corpus, "corpus JSONL file(s)");
  }

  // Paths given on the command line are relative to the working directory,
  // so they are made absolute before being merged into the config.
  static std::string absolute(const std::string& p) { return std::filesystem::absolute(p).string(); }

  void apply(ordered_json& patch) const {
    if (seed) patch["seed"] = *seed;
    if (threads) patch["threads"] = *threads;
    if (out) patch["output_dir"] = absolute(*out);
    if (!corpus.empty()) {
      ordered_json list = ordered_json::array();
      for (const auto& c : corpus) list.push_back(absolute(c));
      patch["corpus"] = std::move(list);
    }
  }
};

using CommandFn = qm_status (*)(qm_context*, const char*, const char*, char**);

int run_pipeline(CommandFn fn, const CommonFlags& flags, ordered_json patch) {
  flags.apply(patch);
  Context c;
  char* summary = nullptr;
  const std::string overrides = patch.empty() ? "" : patch.dump();
  const qm_status status = fn(c.ctx, flags.config.empty() ? nullptr : flags.config.c_str(),
                              overrides.empty() ? nullptr : overrides.c_str(), &summary);
  if (status != QM_OK) return report_status(status, c.ctx);
  std::cout << summary << '\n';
  qm_string_free(summary);
  return 0;
}

std::string format_1e19(double flops) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", flops / 1e19);
  return buf;
}

struct CostFlags {
  std::optional<double> params, tokens;
  std::optional<double> layers, hidden, seq, samples;
  double epochs = 1.0;
  bool infer = false;
  bool table = false;
};

int run_cost(const CostFlags& f) {
  Context c;
  ordered_json out;
  if (f.table) {
    char* table = nullptr;
    if (auto s = qm_published_costs(c.ctx, &table); s != QM_OK) return report_status(s, c.ctx);
    out["published"] = ordered_json::parse(table);
    qm_string_free(table);
  }
  if (f.params || f.tokens) {
    if (!f.params || !f.tokens) return report_error("validation", "--params and --tokens go together", kExitValidation);
    double flops = 0;
    if (auto s = qm_flops_train(c.ctx, *f.params, *f.tokens, &flops); s != QM_OK) return report_status(s, c.ctx);
    out["formula"] = "6*params*tokens";
    out["flops"] = flops;
    out["flops_1e19"] = format_1e19(flops);
  } else if (f.layers || f.hidden || f.seq || f.samples) {
    if (!(f.layers && f.hidden && f.seq && f.samples))
      return report_error("validation", "--layers, --hidden, --seq and --samples go together", kExitValidation);
    double flops = 0;
    qm_status s = f.infer ? qm_flops_infer_structural(c.ctx, *f.layers, *f.hidden, *f.seq, *f.samples, &flops)
                          : qm_flops_train_structural(c.ctx, *f.layers, *f.hidden, *f.seq, *f.samples, f.epochs, &flops);
    if (s != QM_OK) return report_status(s, c.ctx);
    out["formula"] = f.infer ? "2*L*H^2*T*D" : "6*L*H^2*T*D*E";
    out["flops"] = flops;
    out["flops_1e19"] = format_1e19(flops);
  } else if (!f.table) {
    return report_error("validation", "cost needs --params/--tokens, structural flags, or --table", kExitValidation);
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

int run_rank(const std::string& path, bool as_json) {
  Context c;
  char* text = nullptr;
  if (auto s = qm_rank_weights_file(c.ctx, path.c_str(), as_json ? 1 : 0, &text); s != QM_OK)
    return report_status(s, c.ctx);
  std::cout << text;
  if (as_json) std::cout << '\n';
  qm_string_free(text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qualmix: quality-score driven pre-training data selection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(qm_version()));

  CommonFlags common;
  ordered_json patch = ordered_json::object();

  auto* annotate = app.add_subcommand("annotate", "compute signals and importance, merge ratings");
  common.attach(annotate);
  std::vector<std::string> ratings;
  annotate->add_option("--ratings", ratings, "ratings JSONL file(s)");

  auto* select = app.add_subcommand("select", "select top documents per domain under a token budget");
  common.attach(select);
  std::string weights, thresholds;
  bool mean = false, cc_only = false, renormalize = false;
  std::optional<std::uint64_t> budget;
  select->add_option("--weights", weights, "weights file (list of {name, weight} or name -> weight)");
  select->add_option("--thresholds", thresholds, "per-score thresholds on normalized values (intersection mode)");
  select->add_flag("--mean", mean, "uniform weights over every score");
  select->add_flag("--cc-only", cc_only, "spend the whole budget on CommonCrawl");
  select->add_flag("--renormalize", renormalize, "rescale weights that sum to 1 only up to rounding");
  select->add_option("--budget", budget, "token budget");

  auto* campaign = app.add_subcommand("campaign", "run proxy experiments over sampled weight vectors");
  common.attach(campaign);
  std::optional<std::size_t> experiments;
  std::string log, trainer_cmd;
  campaign->add_option("--experiments", experiments, "number of experiments N");
  campaign->add_option("--log", log, "campaign log path");
  campaign->add_option("--trainer-cmd", trainer_cmd, "external trainer executable");

  auto* fit = app.add_subcommand("fit", "fit the loss regressor and search for optimal weights");
  common.attach(fit);
  fit->add_option("--log", log, "campaign log path");

  auto* correlate = app.add_subcommand("correlate", "Spearman correlation matrix of the scores");
  common.attach(correlate);

  auto* synth = app.add_subcommand("synth", "generate a synthetic test corpus");
  common.attach(synth);
  std::optional<std::size_t> documents;
  std::string synth_output;
  synth->add_option("--documents", documents, "number of documents");
  synth->add_option("--output", synth_output, "output JSONL path");

  auto* cost = app.add_subcommand("cost", "FLOPs calculator");
  CostFlags cf;
  cost->add_option("--params", cf.params, "nominal parameter count");
  cost->add_option("--tokens", cf.tokens, "training tokens");
  cost->add_option("--layers", cf.layers, "layers L");
  cost->add_option("--hidden", cf.hidden, "hidden size H");
  cost->add_option("--seq", cf.seq, "tokens per sample T");
  cost->add_option("--samples", cf.samples, "samples D");
  cost->add_option("--epochs", cf.epochs, "epochs E");
  cost->add_flag("--infer", cf.infer, "inference cost instead of training");
  cost->add_flag("--table", cf.table, "print the published cost table");

  auto* rank = app.add_subcommand("rank", "print a weights file ranked by weight");
  std::string rank_path;
  rank->add_option("weights", rank_path, "weights file")->required();
  bool rank_json = false;
  rank->add_flag("--json", rank_json, "print JSON instead of a table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what(), kExitValidation);
  }

  try {
    auto absolute = CommonFlags::absolute;
    if (annotate->parsed()) {
      if (!ratings.empty()) {
        ordered_json list = ordered_json::array();
        for (const auto& r : ratings) list.push_back(absolute(r));
        patch["ratings"] = std::move(list);
      }
      return run_pipeline(qm_cmd_annotate, common, patch);
    }
    if (select->parsed()) {
      ordered_json sel = ordered_json::object();
      if (!weights.empty()) sel["weights"] = absolute(weights);
      if (!thresholds.empty()) sel["thresholds"] = absolute(thresholds);
      if (mean) sel["uniform"] = true;
      if (renormalize) sel["renormalize"] = true;
      if (!sel.empty()) patch["select"] = std::move(sel);
      if (cc_only) patch["plan"]["cc_only"] = true;
      if (budget) patch["plan"]["token_budget"] = *budget;
      return run_pipeline(qm_cmd_select, common, patch);
    }
    if (campaign->parsed()) {
      if (experiments) patch["campaign"]["experiments"] = *experiments;
      if (!log.empty()) patch["campaign"]["log"] = absolute(log);
      if (!trainer_cmd.empty()) patch["campaign"]["trainer"] = {{"kind", "command"}, {"command", trainer_cmd}};
      return run_pipeline(qm_cmd_campaign, common, patch);
    }
    if (fit->parsed()) {
      if (!log.empty()) patch["campaign"]["log"] = absolute(log);
      return run_pipeline(qm_cmd_fit, common, patch);
    }
    if (correlate->parsed()) return run_pipeline(qm_cmd_correlate, common, patch);
    if (synth->parsed()) {
      if (documents) patch["synth"]["documents"] = *documents;
      if (!synth_output.empty()) patch["synth"]["output"] = absolute(synth_output);
      return run_pipeline(qm_cmd_synth, common, patch);
    }
    if (cost->parsed()) return run_cost(cf);
    if (rank->parsed()) return run_rank(rank_path, rank_json);
  } catch (const std::exception& e) {
    return report_error("runtime", e.what(), kExitRuntime);
  }
  return report_error("usage", "no command", kExitValidation);
}
