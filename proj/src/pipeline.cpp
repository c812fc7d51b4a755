#include "qualmix/pipeline.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_set>

#include "json.hpp"
#include "qualmix/error.hpp"
#include "qualmix/importance.hpp"
#include "qualmix/parallel.hpp"
#include "qualmix/random.hpp"
#include "qualmix/signals.hpp"

namespace qualmix::pipeline {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

std::uint64_t stream_seed(std::uint64_t root, SeedStream stream) {
  return derive_seed(root, static_cast<std::uint64_t>(stream));
}

namespace {

// ---------------------------------------------------------------- config parsing

void check_keys(const ordered_json& obj, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!obj.is_object()) throw ValidationError(fmt::format("config '{}' must be an object", where));
  for (const auto& [k, _] : obj.items())
    if (std::ranges::find(allowed, k) == allowed.end())
      throw ValidationError(fmt::format("unknown config key '{}{}{}'", where, where.empty() ? "" : ".", k));
}

template <typename T>
T get_or(const ordered_json& obj, std::string_view key, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(fmt::format("config key '{}' has the wrong type", key));
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::vector<fs::path> path_list(const ordered_json& obj, std::string_view key, const fs::path& base) {
  std::vector<fs::path> out;
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return out;
  if (it->is_string()) {
    out.push_back(resolve(base, it->get<std::string>()));
  } else if (it->is_array()) {
    for (const auto& e : *it) {
      if (!e.is_string()) throw ValidationError(fmt::format("config '{}' must list paths", key));
      out.push_back(resolve(base, e.get<std::string>()));
    }
  } else {
    throw ValidationError(fmt::format("config '{}' must be a path or a list of paths", key));
  }
  return out;
}

std::vector<std::pair<std::string, double>> ordered_pairs(const ordered_json& obj, std::string_view where) {
  if (!obj.is_object()) throw ValidationError(fmt::format("config '{}' must map names to numbers", where));
  std::vector<std::pair<std::string, double>> out;
  for (const auto& [k, v] : obj.items()) {
    if (!v.is_number()) throw ValidationError(fmt::format("config '{}.{}' must be a number", where, k));
    out.emplace_back(k, v.get<double>());
  }
  return out;
}

void require_file(const fs::path& p, std::string_view what) {
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) throw ValidationError(fmt::format("{} '{}' does not exist", what, p.string()));
}

}  // namespace

RunConfig parse_config(const std::string& config_json, const fs::path& base_dir) {
  ordered_json j;
  try {
    j = config_json.empty() ? ordered_json::object() : ordered_json::parse(config_json);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(fmt::format("config is not valid JSON: {}", e.what()));
  }
  check_keys(j,
             {"seed", "threads", "output_dir", "corpus", "domains", "token_estimator", "signals", "importance",
              "ratings", "raters", "min_rating_coverage", "scores", "normalization", "plan", "select", "campaign",
              "optimizer", "synth"},
             "");

  RunConfig c;
  c.seed = get_or<std::uint64_t>(j, "seed", 0);
  c.threads = get_or<unsigned>(j, "threads", 0);
  c.output_dir = resolve(base_dir, get_or<std::string>(j, "output_dir", "."));
  c.corpus = path_list(j, "corpus", base_dir);
  if (j.contains("domains")) c.schema.domains = DomainRegistry(get_or<std::vector<std::string>>(j, "domains", {}));
  const auto estimator = get_or<std::string>(j, "token_estimator", "words");
  if (estimator == "words")
    c.schema.estimator = TokenEstimator::kWhitespaceWords;
  else if (estimator == "char_ratio")
    c.schema.estimator = TokenEstimator::kCharRatio;
  else
    throw ValidationError(fmt::format("unknown token_estimator '{}'", estimator));

  c.signals = get_or<bool>(j, "signals", true);
  if (auto it = j.find("importance"); it != j.end() && !it->is_null()) {
    check_keys(*it, {"targets", "bucket_count", "smoothing"}, "importance");
    ImportanceConfig imp;
    imp.bucket_count = get_or<std::uint64_t>(*it, "bucket_count", kDefaultBucketCount);
    imp.smoothing = get_or<double>(*it, "smoothing", 1.0);
    if (auto t = it->find("targets"); t != it->end()) {
      check_keys(*t, {"books", "wikipedia", "math"}, "importance.targets");
      for (const auto& [k, v] : t->items()) imp.targets[k] = resolve(base_dir, v.get<std::string>());
    }
    if (imp.targets.empty()) throw ValidationError("importance needs at least one target corpus");
    c.importance = std::move(imp);
  }
  c.ratings = path_list(j, "ratings", base_dir);
  c.raters = get_or<std::vector<std::string>>(j, "raters", {});
  for (const auto& r : c.raters)
    if (!is_registered_rater(r)) throw ValidationError(fmt::format("unregistered rater '{}'", r));
  c.min_rating_coverage = get_or<double>(j, "min_rating_coverage", 0.0);
  c.score_names = get_or<std::vector<std::string>>(j, "scores", {});
  const auto norm = get_or<std::string>(j, "normalization", "rank");
  if (norm == "rank")
    c.normalization = NormalizationMode::kRank;
  else if (norm == "zscore")
    c.normalization = NormalizationMode::kZScore;
  else
    throw ValidationError(fmt::format("unknown normalization '{}'", norm));

  if (auto it = j.find("plan"); it != j.end() && !it->is_null()) {
    check_keys(*it, {"token_budget", "domain_targets", "cc_only"}, "plan");
    c.plan.token_budget = get_or<std::uint64_t>(*it, "token_budget", 0);
    if (auto t = it->find("domain_targets"); t != it->end()) c.plan.domain_targets = ordered_pairs(*t, "plan.domain_targets");
    if (get_or<bool>(*it, "cc_only", false)) c.plan = SelectionPlan::common_crawl_only(c.plan.token_budget);
  }

  if (auto it = j.find("select"); it != j.end() && !it->is_null()) {
    check_keys(*it, {"weights", "thresholds", "uniform", "renormalize"}, "select");
    if (auto w = get_or<std::string>(*it, "weights", ""); !w.empty()) c.weights = resolve(base_dir, w);
    if (auto t = get_or<std::string>(*it, "thresholds", ""); !t.empty()) c.thresholds = resolve(base_dir, t);
    c.uniform_weights = get_or<bool>(*it, "uniform", false);
    c.renormalize_weights = get_or<bool>(*it, "renormalize", false);
  }

  if (auto it = j.find("campaign"); it != j.end() && !it->is_null()) {
    check_keys(*it, {"experiments", "dirichlet_alpha", "max_failure_rate", "log", "valset", "proxy", "trainer"},
               "campaign");
    c.experiments = get_or<std::size_t>(*it, "experiments", 256);
    c.dirichlet_alpha = get_or<double>(*it, "dirichlet_alpha", 1.0);
    c.max_failure_rate = get_or<double>(*it, "max_failure_rate", 0.2);
    if (auto l = get_or<std::string>(*it, "log", ""); !l.empty()) c.campaign_log = resolve(base_dir, l);
    c.valset = get_or<std::string>(*it, "valset", "");
    if (auto p = it->find("proxy"); p != it->end()) {
      check_keys(*p, {"hidden_dim", "layers", "heads", "kv_heads", "token_budget"}, "campaign.proxy");
      c.proxy.hidden_dim = get_or<std::uint64_t>(*p, "hidden_dim", c.proxy.hidden_dim);
      c.proxy.layers = get_or<std::uint64_t>(*p, "layers", c.proxy.layers);
      c.proxy.heads = get_or<std::uint64_t>(*p, "heads", c.proxy.heads);
      c.proxy.kv_heads = get_or<std::uint64_t>(*p, "kv_heads", c.proxy.kv_heads);
      c.proxy.token_budget = get_or<std::uint64_t>(*p, "token_budget", c.proxy.token_budget);
      c.proxy.validate();
    }
    if (auto t = it->find("trainer"); t != it->end()) {
      check_keys(*t, {"kind", "command", "w_star", "drivers", "base", "sigma"}, "campaign.trainer");
      c.trainer.kind = get_or<std::string>(*t, "kind", "quadratic_oracle");
      c.trainer.command = get_or<std::string>(*t, "command", "");
      if (auto w = t->find("w_star"); w != t->end() && !w->is_null()) c.trainer.w_star = ordered_pairs(*w, "campaign.trainer.w_star");
      c.trainer.drivers = get_or<std::vector<std::string>>(*t, "drivers", {});
      c.trainer.base = get_or<double>(*t, "base", 1.0);
      c.trainer.sigma = get_or<double>(*t, "sigma", 0.0);
      if (c.trainer.kind != "quadratic_oracle" && c.trainer.kind != "selection_oracle" && c.trainer.kind != "command")
        throw ValidationError(fmt::format("unknown trainer kind '{}'", c.trainer.kind));
      if (c.trainer.sigma < 0.0) throw ValidationError("trainer sigma must be >= 0");
    }
  }

  if (auto it = j.find("optimizer"); it != j.end() && !it->is_null()) {
    check_keys(*it,
               {"trees", "depth", "learning_rate", "subsample", "min_samples_leaf", "candidates", "top_k", "grid"},
               "optimizer");
    c.regressor.trees = get_or<std::size_t>(*it, "trees", c.regressor.trees);
    c.regressor.max_depth = get_or<std::size_t>(*it, "depth", c.regressor.max_depth);
    c.regressor.learning_rate = get_or<double>(*it, "learning_rate", c.regressor.learning_rate);
    c.regressor.subsample = get_or<double>(*it, "subsample", c.regressor.subsample);
    c.regressor.min_samples_leaf = get_or<std::size_t>(*it, "min_samples_leaf", c.regressor.min_samples_leaf);
    c.candidates = get_or<std::size_t>(*it, "candidates", c.candidates);
    c.top_k = get_or<std::size_t>(*it, "top_k", c.top_k);
    c.grid = get_or<std::size_t>(*it, "grid", c.grid);
  }

  if (auto it = j.find("synth"); it != j.end() && !it->is_null()) {
    check_keys(*it, {"documents", "domain_mix", "scores", "min_words", "max_words", "vocabulary", "output"}, "synth");
    c.synth.documents = get_or<std::size_t>(*it, "documents", c.synth.documents);
    c.synth.min_words = get_or<std::size_t>(*it, "min_words", c.synth.min_words);
    c.synth.max_words = get_or<std::size_t>(*it, "max_words", c.synth.max_words);
    c.synth.vocabulary = get_or<std::size_t>(*it, "vocabulary", c.synth.vocabulary);
    if (auto m = it->find("domain_mix"); m != it->end()) c.synth.domain_mix = ordered_pairs(*m, "synth.domain_mix");
    if (auto s = it->find("scores"); s != it->end()) {
      if (!s->is_array()) throw ValidationError("config 'synth.scores' must be a list");
      for (const auto& e : *s) {
        check_keys(e, {"name", "mean", "stddev", "loading"}, "synth.scores[]");
        c.synth.scores.push_back({get_or<std::string>(e, "name", ""), get_or<double>(e, "mean", 0.0),
                                  get_or<double>(e, "stddev", 1.0), get_or<double>(e, "loading", 0.0)});
        if (c.synth.scores.back().name.empty()) throw ValidationError("synth score needs a name");
      }
    }
    if (auto o = get_or<std::string>(*it, "output", ""); !o.empty()) c.synth_output = resolve(base_dir, o);
  }
  if (c.synth.domain_mix.empty()) c.synth.domain_mix = default_domain_mix();
  return c;
}

RunConfig load_config(const fs::path& path, const std::string& overrides_json) {
  ordered_json base = ordered_json::object();
  fs::path base_dir;
  if (!path.empty()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError(fmt::format("cannot open config '{}'", path.string()));
    try {
      in >> base;
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(fmt::format("config '{}' is not valid JSON: {}", path.string(), e.what()));
    }
    base_dir = path.parent_path();
  }
  if (!overrides_json.empty()) {
    try {
      base.merge_patch(ordered_json::parse(overrides_json));
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(fmt::format("overrides are not valid JSON: {}", e.what()));
    }
  }
  RunConfig c = parse_config(base.dump(), base_dir);
  for (const auto& p : c.ratings) require_file(p, "ratings file");
  if (c.importance)
    for (const auto& [_, p] : c.importance->targets) require_file(p, "importance target corpus");
  if (c.weights) require_file(*c.weights, "weights file");
  if (c.thresholds) require_file(*c.thresholds, "thresholds file");
  return c;
}

// ---------------------------------------------------------------- shared helpers

namespace {

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure(fmt::format("cannot write '{}'", path.string()));
  out << content;
  if (!content.empty() && content.back() != '\n') out << '\n';
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw RuntimeFailure(fmt::format("cannot create directory '{}': {}", dir.string(), ec.message()));
}

ordered_json errors_json(const fs::path& file, const std::vector<RecordError>& errors) {
  ordered_json arr = ordered_json::array();
  for (const auto& e : errors) arr.push_back({{"file", file.string()}, {"line", e.line}, {"message", e.message}});
  return arr;
}

// Corpus files are checked per command: synth produces the corpus others read.
void require_corpus(const RunConfig& c) {
  if (c.corpus.empty()) throw ValidationError("no corpus files configured");
  for (const auto& p : c.corpus) require_file(p, "corpus file");
}

}  // namespace

std::vector<Document> load_documents(const RunConfig& config) {
  require_corpus(config);
  std::vector<Document> docs;
  std::unordered_set<std::string> ids;
  for (const auto& path : config.corpus) {
    CorpusReader reader(path, config.schema);
    while (auto d = reader.next()) {
      if (!ids.insert(d->id).second)
        throw ValidationError(fmt::format("duplicate document id '{}' across corpus files", d->id));
      docs.push_back(std::move(*d));
    }
  }
  return docs;
}

ScoreMatrix build_normalized_matrix(const RunConfig& config, std::span<const Document> docs,
                                    std::vector<std::string> names) {
  if (docs.empty()) throw ValidationError("corpus is empty");
  if (names.empty()) {
    std::set<std::string> all;
    for (const auto& d : docs)
      for (const auto& [k, _] : d.scores) all.insert(k);
    names = canonical_order({all.begin(), all.end()});
  }
  if (names.empty()) throw ValidationError("documents carry no scores; run annotate first");
  ScoreMatrix m = matrix_from_documents(docs, names);
  impute_missing(m);
  return normalize(m, config.normalization);
}

// ---------------------------------------------------------------- synth

CommandOutput cmd_synth(const RunConfig& config) {
  const fs::path out = config.synth_output.value_or(config.output_dir / "synthetic.jsonl");
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  const auto seed = stream_seed(config.seed, SeedStream::kSynth);
  synthesize_corpus(config.synth, seed, out);

  ordered_json s;
  s["command"] = "synth";
  s["seed"] = config.seed;
  s["documents"] = config.synth.documents;
  s["output"] = out.string();
  return {{out}, s.dump(2)};
}

// ---------------------------------------------------------------- annotate

CommandOutput cmd_annotate(const RunConfig& config) {
  require_corpus(config);
  ensure_dir(config.output_dir);
  const unsigned threads = resolve_threads(config.threads);
  ordered_json report;
  report["command"] = "annotate";
  report["seed"] = config.seed;

  // Pass 1: ids, record errors, and the source-side bag model.
  std::vector<std::string> ids;
  std::unordered_set<std::string> seen;
  ordered_json record_errors = ordered_json::array();
  const auto hash_seed = stream_seed(config.seed, SeedStream::kHash);
  std::optional<HashedBagModel> source;
  if (config.importance) source.emplace(config.importance->bucket_count, hash_seed, config.importance->smoothing);
  for (const auto& path : config.corpus) {
    CorpusReader reader(path, config.schema);
    while (auto d = reader.next()) {
      if (!seen.insert(d->id).second)
        throw ValidationError(fmt::format("duplicate document id '{}' across corpus files", d->id));
      ids.push_back(d->id);
      if (source) source->add_document(d->text);
    }
    for (auto& e : errors_json(path, reader.errors())) record_errors.push_back(std::move(e));
  }
  report["documents"] = ids.size();
  report["record_errors"] = record_errors;

  // Target models.
  std::vector<std::pair<std::string, HashedBagModel>> targets;
  if (config.importance && !ids.empty()) {
    const fs::path model_dir = config.output_dir / "models";
    ensure_dir(model_dir);
    source->save(model_dir / "source.json");
    ordered_json imp;
    imp["bucket_count"] = config.importance->bucket_count;
    imp["smoothing"] = config.importance->smoothing;
    imp["hash_seed"] = hash_seed;
    for (std::size_t t = 0; t < std::size(kImportanceTargets); ++t) {
      auto it = config.importance->targets.find(std::string(kImportanceTargets[t]));
      if (it == config.importance->targets.end()) continue;
      CorpusSchema any = config.schema;
      any.enforce_domains = false;
      any.reject_duplicate_ids = false;
      HashedBagModel model(config.importance->bucket_count, hash_seed, config.importance->smoothing);
      CorpusReader reader(it->second, any);
      std::size_t n = 0;
      while (auto d = reader.next()) {
        model.add_document(d->text);
        ++n;
      }
      if (n == 0) throw ValidationError(fmt::format("importance target corpus '{}' is empty", it->second.string()));
      model.save(model_dir / fmt::format("{}.json", kImportanceTargets[t]));
      imp["targets"][std::string(kImportanceTargets[t])] = {{"corpus", it->second.string()}, {"documents", n}};
      targets.emplace_back(std::string(kImportanceNames[t]), std::move(model));
    }
    report["importance"] = std::move(imp);
  }

  // Ratings: ingest into a rating-only matrix, then impute.
  std::optional<ScoreMatrix> ratings;
  if (!config.ratings.empty()) {
    std::vector<RatingAnnotation> annotations;
    for (const auto& p : config.ratings) {
      auto part = read_ratings(p);
      annotations.insert(annotations.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    std::vector<std::string> raters = config.raters;
    if (raters.empty()) {
      std::set<std::string> seen_raters;
      for (const auto& a : annotations) {
        if (!is_registered_rater(a.rater)) throw ValidationError(fmt::format("unregistered rater '{}'", a.rater));
        seen_raters.insert(a.rater);
      }
      raters = canonical_order({seen_raters.begin(), seen_raters.end()});
    }
    ratings.emplace(ids, raters);
    const IngestReport ingest = ingest_ratings(*ratings, annotations);
    for (const auto& [rater, cov] : ingest.coverage)
      if (cov < config.min_rating_coverage)
        throw ValidationError(
            fmt::format("rater '{}' covers {:.4f} of documents, below the configured minimum {:.4f}", rater, cov,
                        config.min_rating_coverage));
    const ImputationReport imputed = impute_missing(*ratings);
    ordered_json r;
    r["applied"] = ingest.applied;
    r["unknown_doc_ids"] = ingest.unknown_doc_ids;
    r["coverage"] = ingest.coverage;
    r["imputed_cells"] = imputed.imputed_cells;
    r["medians"] = imputed.medians;
    report["ratings"] = std::move(r);
  }

  // Pass 2: compute and write.
  const fs::path out_path = config.output_dir / "annotated.jsonl";
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure(fmt::format("cannot write '{}'", out_path.string()));
  std::size_t row = 0;
  constexpr std::size_t kBatch = 1024;
  std::vector<Document> batch;
  auto flush = [&] {
    parallel_chunks(batch.size(), threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        Document& d = batch[i];
        if (config.signals) {
          const auto values = compute_signals(d.text).values();
          for (std::size_t k = 0; k < kSignalNames.size(); ++k) d.scores[std::string(kSignalNames[k])] = values[k];
        }
        for (const auto& [name, model] : targets) d.scores[name] = importance_score(d.text, model, *source);
        if (ratings)
          for (std::size_t c = 0; c < ratings->cols(); ++c) d.scores[ratings->score_names()[c]] = ratings->raw(row + i, c);
      }
    });
    for (const auto& d : batch) write_document(out, d);
    row += batch.size();
    batch.clear();
  };
  for (const auto& path : config.corpus) {
    CorpusSchema schema = config.schema;
    schema.reject_duplicate_ids = false;  // already checked in pass 1
    CorpusReader reader(path, schema);
    while (auto d = reader.next()) {
      batch.push_back(std::move(*d));
      if (batch.size() == kBatch) flush();
    }
  }
  flush();
  out.close();
  if (!out) throw RuntimeFailure(fmt::format("I/O error writing '{}'", out_path.string()));

  const fs::path report_path = config.output_dir / "annotate_report.json";
  write_text(report_path, report.dump(2));
  return {{out_path, report_path}, report.dump(2)};
}

// ---------------------------------------------------------------- select

CommandOutput cmd_select(const RunConfig& config) {
  ensure_dir(config.output_dir);
  const auto docs = load_documents(config);
  const auto pool = pool_from_documents(docs);
  const unsigned threads = resolve_threads(config.threads);

  ordered_json summary;
  summary["command"] = "select";
  summary["seed"] = config.seed;

  SelectionResult result;
  if (config.thresholds) {
    std::ifstream in(*config.thresholds, std::ios::binary);
    ordered_json tj;
    try {
      in >> tj;
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(fmt::format("thresholds file is not valid JSON: {}", e.what()));
    }
    std::map<std::string, double> thresholds;
    for (const auto& [k, v] : ordered_pairs(tj, "thresholds")) thresholds[k] = v;
    const auto matrix = build_normalized_matrix(config, docs, config.score_names);
    result = intersection_select(matrix, pool, thresholds, config.plan, threads);
    summary["mode"] = "intersection";
  } else if (config.uniform_weights) {
    const auto matrix = build_normalized_matrix(config, docs, config.score_names);
    result = select_top_k(matrix, pool, WeightVector::uniform(matrix.score_names()), config.plan, threads);
    summary["mode"] = "mean";
  } else {
    if (!config.weights) throw ValidationError("select needs a weights file, --uniform, or --thresholds");
    auto pairs = read_weight_pairs(*config.weights);
    const WeightVector w = config.renormalize_weights ? WeightVector::normalized(std::move(pairs))
                                                      : WeightVector::from_pairs(std::move(pairs));
    const auto matrix = build_normalized_matrix(config, docs, w.names());
    result = select_top_k(matrix, pool, w, config.plan, threads);
    summary["mode"] = "weighted";
  }

  const fs::path manifest = config.output_dir / "manifest.txt";
  const fs::path report_path = config.output_dir / "selection_report.json";
  write_manifest(manifest, result);
  auto report = ordered_json::parse(selection_report_json(result));
  report["seed"] = config.seed;
  write_text(report_path, report.dump(2));
  summary["selected_documents"] = result.selected_ids.size();
  summary["total_tokens"] = result.total_tokens;
  summary["shortfall"] = result.has_shortfall();
  return {{manifest, report_path}, summary.dump(2)};
}

// ---------------------------------------------------------------- campaign

CommandOutput cmd_campaign(const RunConfig& config) {
  ensure_dir(config.output_dir);
  const auto docs = load_documents(config);
  const auto pool = pool_from_documents(docs);
  const auto matrix = build_normalized_matrix(config, docs, config.score_names);
  const auto& names = matrix.score_names();

  ordered_json summary;
  summary["command"] = "campaign";
  summary["seed"] = config.seed;

  std::unique_ptr<Trainer> trainer;
  if (config.trainer.kind == "quadratic_oracle") {
    OracleSpec spec;
    if (config.trainer.w_star.empty())
      spec.w_star = sample_weight_vectors(names, 1, stream_seed(config.seed, SeedStream::kOracle))[0];
    else
      spec.w_star = WeightVector::from_pairs(config.trainer.w_star);
    if (spec.w_star.names() != names) throw ValidationError("oracle w_star must cover exactly the campaign scores");
    spec.base = config.trainer.base;
    spec.sigma = config.trainer.sigma;
    spec.seed = stream_seed(config.seed, SeedStream::kOracle);
    ordered_json ws = ordered_json::object();
    for (std::size_t i = 0; i < spec.w_star.size(); ++i) ws[spec.w_star.names()[i]] = spec.w_star.values()[i];
    summary["oracle_w_star"] = std::move(ws);
    trainer = std::make_unique<QuadraticOracleTrainer>(std::move(spec));
  } else if (config.trainer.kind == "selection_oracle") {
    trainer = std::make_unique<SelectionOracleTrainer>(driver_utilities(matrix, config.trainer.drivers),
                                                       config.trainer.base, config.trainer.sigma,
                                                       stream_seed(config.seed, SeedStream::kOracle));
  } else {
    const fs::path work = config.output_dir / "trainer";
    ensure_dir(work);
    trainer = std::make_unique<CommandTrainer>(config.trainer.command, work);
  }

  CampaignOptions opts;
  opts.experiments = config.experiments;
  opts.seed = stream_seed(config.seed, SeedStream::kCampaign);
  opts.dirichlet_alpha = config.dirichlet_alpha;
  opts.log_path = config.campaign_log.value_or(config.output_dir / "campaign.jsonl");
  if (trainer->needs_manifest_file()) opts.manifest_dir = config.output_dir / "manifests";
  opts.proxy = config.proxy;
  opts.valset = config.valset;
  opts.max_failure_rate = config.max_failure_rate;
  opts.threads = config.threads;

  const CampaignSummary run = run_campaign(matrix, pool, config.plan, *trainer, opts);
  summary["experiments"] = run.records.size();
  summary["trainer_invocations"] = run.trainer_invocations;
  summary["failures"] = run.failures;
  summary["log"] = opts.log_path.string();
  return {{opts.log_path}, summary.dump(2)};
}

// ---------------------------------------------------------------- fit

CommandOutput cmd_fit(const RunConfig& config) {
  ensure_dir(config.output_dir);
  const fs::path log_path = config.campaign_log.value_or(config.output_dir / "campaign.jsonl");
  const auto records = read_campaign_log(log_path);

  RegressorHyper hyper = config.regressor;
  hyper.seed = stream_seed(config.seed, SeedStream::kRegressor);
  const RegressorModel model = fit_regressor(records, hyper);

  SearchOptions search;
  search.candidates = config.candidates;
  search.top_k = config.top_k;
  search.seed = stream_seed(config.seed, SeedStream::kSearch);
  search.dirichlet_alpha = config.dirichlet_alpha;
  search.threads = config.threads;
  const SearchOutcome outcome = search_optimal(model.trees, model.score_names, search);
  const auto ranked = rank_weights(outcome.w_star);

  const fs::path weights_path = config.output_dir / "weights.json";
  write_text(weights_path, weights_file_json(ranked));

  std::vector<fs::path> files{weights_path};
  ordered_json report;
  report["command"] = "fit";
  report["seed"] = config.seed;
  report["campaign_log"] = log_path.string();
  report["training_records"] = model.training_records;
  report["in_sample_mse"] = model.trees.in_sample_mse();
  report["predicted_loss_at_star"] = outcome.predicted_loss_at_star;
  report["mean_predicted_loss"] = outcome.mean_predicted_loss;
  report["candidates"] = search.candidates;
  report["top_k"] = search.top_k;
  ordered_json ws = ordered_json::object();
  for (std::size_t i = 0; i < outcome.w_star.size(); ++i) ws[outcome.w_star.names()[i]] = outcome.w_star.values()[i];
  report["w_star"] = std::move(ws);
  report["warnings"] = model.warnings;

  const Landscape land = pca_landscape(records, model.trees, config.grid);
  const fs::path landscape_path = config.output_dir / "landscape.csv";
  write_landscape_csv(landscape_path, land);
  files.push_back(landscape_path);
  report["landscape"] = {{"explained_variance", land.explained_variance},
                         {"explained_ratio_2", land.explained_ratio(2)},
                         {"components", land.components}};
  if (land.warning) report["warnings"].push_back(*land.warning);

  const fs::path report_path = config.output_dir / "fit_report.json";
  write_text(report_path, report.dump(2));
  files.push_back(report_path);
  return {files, report.dump(2)};
}

// ---------------------------------------------------------------- correlate

CommandOutput cmd_correlate(const RunConfig& config) {
  ensure_dir(config.output_dir);
  const auto docs = load_documents(config);
  const auto matrix = build_normalized_matrix(config, docs, config.score_names);
  const CorrelationMatrix corr = spearman_matrix(matrix, resolve_threads(config.threads));
  const fs::path out = config.output_dir / "spearman.csv";
  write_correlation_csv(out, corr);

  ordered_json summary;
  summary["command"] = "correlate";
  summary["seed"] = config.seed;
  summary["scores"] = corr.names;
  ordered_json flagged = ordered_json::array();
  for (std::size_t i = 0; i < corr.names.size(); ++i)
    for (std::size_t j = i + 1; j < corr.names.size(); ++j)
      if (corr.is_flagged(i, j)) flagged.push_back({corr.names[i], corr.names[j]});
  summary["flagged_pairs"] = std::move(flagged);
  summary["output"] = out.string();
  return {{out}, summary.dump(2)};
}

}  // namespace qualmix::pipeline
