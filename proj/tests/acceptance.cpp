// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "cli_runner.hpp"
#include "json.hpp"
#include "qualmix/error.hpp"
#include "qualmix/flops.hpp"
#include "qualmix/importance.hpp"
#include "qualmix/proxy_lab.hpp"
#include "qualmix/score_matrix.hpp"
#include "qualmix/selection.hpp"
#include "qualmix/signals.hpp"
#include "qualmix/text.hpp"
#include "qualmix/weight_optimizer.hpp"

using namespace qualmix;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

// Collects failed checks for one criterion.
struct Verdict {
  std::vector<std::string> failures;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void note(const std::string& s) { notes.push_back(s); }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string published_path() { return std::string(QM_REPO_DIR) + "/data/published_weights.json"; }

double uniform01(std::mt19937_64& rng) { return std::ldexp(static_cast<double>(rng() >> 11), -53); }

// ---------------------------------------------------------------- AC1

void ac1(Verdict& v) {
  const auto t0 = Clock::now();
  const auto small = fmt::format("{:.2f}", flops_train(1.3e9, 30e9) / 1e19);
  const auto large = fmt::format("{:.2f}", flops_train(3.3e9, 100e9) / 1e19);
  v.check(small == "23.40", "1.3B x 30B gave " + small);
  v.check(large == "198.00", "3.3B x 100B gave " + large);

  TempDir dir;
  const auto r1 = run_cli({"cost", "--params", "1.3e9", "--tokens", "30e9"}, dir.path());
  const auto r2 = run_cli({"cost", "--params", "3.3e9", "--tokens", "100e9"}, dir.path());
  v.check(r1.code == 0 && json::parse(r1.out).at("flops_1e19") == "23.40", "cli 1.3B row");
  v.check(r2.code == 0 && json::parse(r2.out).at("flops_1e19") == "198.00", "cli 3.3B row");
  const double t = seconds_since(t0);
  v.check(t < 1.0, fmt::format("runtime {:.2f}s", t));
  v.note(fmt::format("{} / {} x1e19", small, large));
}

// ---------------------------------------------------------------- AC2

void ac2(Verdict& v) {
  const auto pairs = read_weight_pairs(published_path());
  std::vector<std::string> names;
  std::vector<double> weights;
  for (const auto& [n, w] : pairs) names.push_back(n), weights.push_back(w);
  const auto ranked = rank_weights(names, weights);
  v.check(ranked.size() == 25, "expected 25 weights");
  v.check(ranked.front().name == "Educational Value" && fmt::format("{:.2f}", ranked.front().percent) == "5.64",
          "first entry " + ranked.front().name);
  v.check(ranked.back().name == "Writing Style" && fmt::format("{:.2f}", ranked.back().percent) == "0.05",
          "last entry " + ranked.back().name);

  // Aggregates on a 10-document matrix against a name-lookup dot product.
  const auto w = WeightVector::normalized(pairs);
  std::mt19937_64 rng(2);
  std::vector<std::string> ids;
  for (int i = 0; i < 10; ++i) ids.push_back("doc" + std::to_string(i));
  ScoreMatrix m(ids, canonical_score_names());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) m.set_raw(r, c, uniform01(rng));
  m = rank_normalize(m);
  const auto got = aggregate_scores(m, w);
  double worst = 0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double want = 0;
    for (std::size_t k = 0; k < w.size(); ++k) want += w.values()[k] * m.normalized(r, *m.column_of(w.names()[k]));
    worst = std::max(worst, std::abs(got[r] - want));
  }
  v.check(worst <= 1e-12, fmt::format("aggregate error {:.3g}", worst));
  v.note(fmt::format("max aggregate error {:.3g}", worst));
}

// ---------------------------------------------------------------- AC3

std::string random_text(std::mt19937_64& rng) {
  static const std::vector<std::u32string> pools = {
      U"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ", U"0123456789", U" \t\n\n\r 　",
      U".!?\",;:'()-[]{}¿¡—«»", U"éüßÄÖİǅ", U"αβΓΔжЖя", U"数据文字。、", U"١٢०१½²Ⅻ", U"̧́̈",
      U"\U0001f642\U0001f680"};
  std::u32string cps;
  const auto n = rng() % 61;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = pools[rng() % pools.size()];
    cps.push_back(p[rng() % p.size()]);
  }
  return text::encode_utf8(cps);
}

void ac3(Verdict& v) {
  const auto t0 = Clock::now();
  // Golden values produced by an independent brute-force implementation.
  std::ifstream in(std::string(QM_TEST_DATA_DIR) + "/signals_golden.jsonl");
  std::size_t docs = 0, mismatches = 0;
  for (std::string line; std::getline(in, line); ++docs) {
    const auto j = json::parse(line);
    const auto values = compute_signals(j.at("text").get<std::string>()).values();
    for (std::size_t k = 0; k < kSignalNames.size(); ++k) {
      const double want = j.at("expected").at(std::string(kSignalNames[k])).get<double>();
      const bool integral = kSignalNames[k] == "doc_word_count" || kSignalNames[k] == "doc_num_sentences";
      if (integral ? values[k] != want : std::abs(values[k] - want) > 1e-12) ++mismatches;
    }
  }
  v.check(docs == 200, fmt::format("golden fixture has {} documents", docs));
  v.check(mismatches == 0, fmt::format("{} golden mismatches", mismatches));

  std::mt19937_64 rng(11);
  std::size_t violations = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto t = random_text(rng);
    const auto s = compute_signals(t);
    for (double f : {s.frac_no_alph_words, s.frac_unique_words, s.lines_terminal_punctuation, s.lines_numerical_fraction,
                     s.lines_uppercase_fraction, s.frac_chars_top_2gram, s.frac_chars_top_3gram})
      violations += !(f >= 0.0 && f <= 1.0);
    if (s.word_count > 0) violations += s.unigram_entropy > std::log(static_cast<double>(s.word_count)) + 1e-12;
    violations += s.unigram_entropy < 0.0;
    violations += !(compute_signals(t) == s);
  }
  v.check(violations == 0, fmt::format("{} property violations", violations));
  const double t = seconds_since(t0);
  v.check(t < 30.0, fmt::format("runtime {:.1f}s", t));
  v.note(fmt::format("200 golden docs, 10000 random strings, {:.1f}s", t));
}

// ---------------------------------------------------------------- AC4

std::vector<std::string> words_of(const std::string& doc) {
  std::istringstream in(doc);
  std::vector<std::string> w;
  for (std::string s; in >> s;) w.push_back(s);
  return w;
}

std::vector<std::string> unhashed_features(const std::string& doc) {
  const auto w = words_of(doc);
  std::vector<std::string> out = w;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) out.push_back(w[i] + "␟" + w[i + 1]);
  return out;
}

std::vector<std::string> random_docs(std::mt19937_64& rng, const std::vector<std::string>& vocab, std::size_t n,
                                     double skew) {
  std::vector<std::string> docs;
  for (std::size_t i = 0; i < n; ++i) {
    std::string d;
    for (std::size_t k = 0, len = rng() % 30; k < len; ++k) {
      const auto idx = static_cast<std::size_t>(std::pow(uniform01(rng), skew) * static_cast<double>(vocab.size()));
      d += (d.empty() ? "" : " ") + vocab[std::min(idx, vocab.size() - 1)];
    }
    docs.push_back(d);
  }
  return docs;
}

void ac4(Verdict& v) {
  std::vector<std::string> vocab;
  for (int i = 0; i < 100; ++i) vocab.push_back(fmt::format("w{}x", static_cast<char>('a' + i % 26)) + std::to_string(i / 26));
  std::mt19937_64 rng(404);
  const auto pdocs = random_docs(rng, vocab, 50, 2.5), qdocs = random_docs(rng, vocab, 50, 1.0);
  const auto tests = random_docs(rng, vocab, 300, 1.5);
  const std::uint64_t buckets = 1u << 22;

  std::set<std::string> distinct;
  for (const auto* set : {&pdocs, &qdocs, &tests})
    for (const auto& d : *set)
      for (const auto& f : unhashed_features(d)) distinct.insert(f);
  std::uint64_t seed = 1;
  for (;; ++seed) {
    std::set<std::uint64_t> used;
    for (const auto& f : distinct) used.insert(feature_hash(f, seed) % buckets);
    if (used.size() == distinct.size()) break;
  }

  auto count = [](const std::vector<std::string>& docs) {
    std::map<std::string, double> c;
    double total = 0;
    for (const auto& d : docs)
      for (const auto& f : unhashed_features(d)) c[f] += 1, total += 1;
    return std::make_pair(c, total);
  };
  const auto [pc, pt] = count(pdocs);
  const auto [qc, qt] = count(qdocs);
  auto logp = [&](const std::map<std::string, double>& c, double total, const std::string& f) {
    const auto it = c.find(f);
    return std::log(((it == c.end() ? 0.0 : it->second) + 1.0) / (total + static_cast<double>(buckets)));
  };

  std::vector<std::string_view> pv(pdocs.begin(), pdocs.end()), qv(qdocs.begin(), qdocs.end());
  const auto p = fit_bag_model(pv, buckets, seed), q = fit_bag_model(qv, buckets, seed);
  double worst = 0;
  for (const auto& d : tests) {
    double want = 0;
    for (const auto& f : unhashed_features(d)) want += logp(pc, pt, f) - logp(qc, qt, f);
    worst = std::max(worst, std::abs(importance_score(d, p, q) - want));
  }
  v.check(worst <= 1e-12, fmt::format("hashed vs unhashed error {:.3g}", worst));

  const auto p2 = fit_bag_model(pv, 4096, 9), q2 = fit_bag_model(qv, 4096, 9);
  std::size_t asym = 0;
  for (const auto& d : random_docs(rng, vocab, 1000, 1.3)) asym += importance_score(d, p2, q2) != -importance_score(d, q2, p2);
  v.check(asym == 0, fmt::format("{} anti-symmetry violations", asym));
  v.note(fmt::format("{} features, max error {:.3g}, 1000 anti-symmetric docs", distinct.size(), worst));
}

// ---------------------------------------------------------------- AC5

const std::vector<std::string> kDomains{"CommonCrawl", "C4", "GitHub", "Books", "ArXiv", "Wikipedia", "StackExchange"};

struct Pool {
  ScoreMatrix matrix;
  std::vector<PoolEntry> entries;
};

Pool random_pool(std::mt19937_64& rng, std::size_t n, std::size_t m) {
  std::vector<std::string> ids, names;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(fmt::format("d{}_{}", rng() % 100000, i));
  for (std::size_t c = 0; c < m; ++c) names.push_back("s" + std::to_string(c));
  Pool p{ScoreMatrix(ids, names), {}};
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < m; ++c) p.matrix.set_raw(r, c, static_cast<double>(rng() % 25));
    p.entries.push_back({ids[r], kDomains[rng() % kDomains.size()], 1 + rng() % 60});
  }
  return p;
}

WeightVector random_simplex(std::mt19937_64& rng, const std::vector<std::string>& names) {
  std::vector<std::pair<std::string, double>> pairs;
  for (const auto& n : names) pairs.emplace_back(n, static_cast<double>(1 + rng() % 100));
  return WeightVector::normalized(pairs);
}

std::set<std::string> brute_force_selection(const ScoreMatrix& m, const std::vector<PoolEntry>& pool,
                                            const WeightVector& w, const SelectionPlan& plan) {
  std::set<std::string> out;
  for (const auto& [domain, share] : plan.domain_targets) {
    std::vector<std::pair<double, std::string>> members;
    std::map<std::string, std::uint64_t> tokens;
    for (const auto& e : pool) {
      if (e.domain != domain) continue;
      const auto r = *m.row_of(e.id);
      double s = 0;
      for (std::size_t k = 0; k < w.size(); ++k) s += w.values()[k] * m.normalized(r, *m.column_of(w.names()[k]));
      members.emplace_back(-s, e.id);
      tokens[e.id] = e.tokens;
    }
    std::sort(members.begin(), members.end());
    double taken = 0;
    for (const auto& [s, id] : members) {
      if (taken >= static_cast<double>(plan.token_budget) * share) break;
      taken += static_cast<double>(tokens[id]);
      out.insert(id);
    }
  }
  return out;
}

void ac5(Verdict& v) {
  std::mt19937_64 rng(505);
  std::size_t mismatched = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto p = random_pool(rng, 1 + rng() % 10000, 1 + rng() % 5);
    p.matrix = rank_normalize(p.matrix);
    const auto w = random_simplex(rng, p.matrix.score_names());
    SelectionPlan plan;
    plan.token_budget = 1 + rng() % (p.entries.size() * 30);
    const auto got = select_top_k(p.matrix, p.entries, w, plan, 1 + trial % 4);
    mismatched += std::set<std::string>(got.selected_ids.begin(), got.selected_ids.end()) !=
                  brute_force_selection(p.matrix, p.entries, w, plan);
  }
  v.check(mismatched == 0, fmt::format("{} of 100 trials differ from brute force", mismatched));

  SynthesisSpec spec;
  spec.documents = 40000;
  spec.domain_mix = default_domain_mix();
  spec.scores = {{"quality", 0.0, 1.0, 0.8}, {"style", 3.0, 2.0, 0.5}};
  const auto docs = synthesize_documents(spec, 55);
  const auto pool = pool_from_documents(docs);
  const auto m = rank_normalize(matrix_from_documents(docs, {"quality", "style"}));
  SelectionPlan plan;
  plan.token_budget = 1'000'000;
  const auto r = select_top_k(m, pool, WeightVector::uniform({"quality", "style"}), plan, 4);
  double worst = 0;
  for (const auto& d : r.domains) worst = std::max(worst, std::abs(d.achieved_proportion - d.target_proportion));
  v.check(!r.has_shortfall(), "1M-token selection ran short");
  v.check(worst <= 0.005, fmt::format("worst domain deviation {:.4f}", worst));

  std::size_t variant = 0;
  for (int trial = 0; trial < 20; ++trial) {
    auto p = random_pool(rng, 3000, 3);
    ScoreMatrix transformed = p.matrix;
    for (std::size_t row = 0; row < p.matrix.rows(); ++row)
      for (std::size_t c = 0; c < p.matrix.cols(); ++c) {
        const double x = p.matrix.raw(row, c);
        transformed.set_raw(row, c, c == 0 ? std::exp(x / 4.0) - 50.0 : c == 1 ? x * x * x : 3.0 * x + 1.0);
      }
    const auto w = random_simplex(rng, p.matrix.score_names());
    SelectionPlan sp;
    sp.token_budget = 25000;
    variant += select_top_k(rank_normalize(p.matrix), p.entries, w, sp).selected_ids !=
               select_top_k(rank_normalize(transformed), p.entries, w, sp).selected_ids;
  }
  v.check(variant == 0, fmt::format("{} of 20 monotone transforms changed the selection", variant));
  v.note(fmt::format("100/100 oracle trials, max mix deviation {:.4f}, 20/20 rank-invariant", worst));
}

// ---------------------------------------------------------------- AC6

double l1(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

void ac6(Verdict& v) {
  const auto t0 = Clock::now();
  std::vector<std::string> summary;
  for (std::size_t m : {3, 5, 10}) {
    std::vector<std::string> names;
    for (std::size_t j = 0; j < m; ++j) names.push_back("q" + std::to_string(j));
    std::size_t within = 0;
    double worst = 0;
    for (std::uint64_t trial = 1; trial <= 20; ++trial) {
      const std::uint64_t seed = 1000 * m + trial;
      OracleSpec spec;
      spec.w_star = sample_weight_vectors(names, 1, seed ^ 0x5eed)[0];
      spec.base = 2.0;
      spec.seed = seed;
      const auto ws = sample_weight_vectors(names, 256, seed);

      // Noise is 10% of the noiseless loss range over the sampled weights.
      std::vector<double> clean;
      for (const auto& w : ws) clean.push_back(oracle_loss(w, spec));
      const auto [lo, hi] = std::ranges::minmax(clean);
      spec.sigma = 0.1 * (hi - lo);

      std::vector<ExperimentRecord> records(ws.size());
      for (std::size_t i = 0; i < ws.size(); ++i) {
        records[i].experiment_id = experiment_id(i);
        records[i].index = i;
        records[i].weights = ws[i];
        records[i].loss = oracle_loss(ws[i], spec, i);
      }
      const auto model = fit_regressor(records, {.seed = seed});
      const auto out = search_optimal(model.trees, names, {.seed = seed, .threads = 4});
      const double err = l1(out.w_star.values(), spec.w_star.values());
      worst = std::max(worst, err);
      within += err <= 0.2;
    }
    v.check(within >= 18, fmt::format("m={}: {}/20 within 0.2", m, within));
    summary.push_back(fmt::format("m={} {}/20 (worst {:.3f})", m, within, worst));
  }
  const double t = seconds_since(t0);
  v.check(t < 300.0, fmt::format("runtime {:.0f}s", t));
  std::string s;
  for (const auto& x : summary) s += x + ", ";
  v.note(s + fmt::format("{:.1f}s", t));
}

// ---------------------------------------------------------------- AC7

void ac7(Verdict& v) {
  std::vector<std::string> names;
  for (int j = 0; j < 8; ++j) names.push_back("s" + std::to_string(j));
  std::size_t wins = 0;
  double margin_sum = 0;
  for (std::uint64_t trial = 1; trial <= 20; ++trial) {
    SynthesisSpec spec;
    spec.documents = 4000;
    spec.domain_mix = default_domain_mix();
    for (const auto& n : names) spec.scores.push_back({n, 0.0, 1.0, 0.3});
    const auto docs = synthesize_documents(spec, 7000 + trial);
    const auto pool = pool_from_documents(docs);
    const auto matrix = rank_normalize(matrix_from_documents(docs, names));
    std::uint64_t pool_tokens = 0;
    for (const auto& e : pool) pool_tokens += e.tokens;

    std::mt19937_64 rng(trial);
    std::vector<std::string> drivers = names;
    std::shuffle(drivers.begin(), drivers.end(), rng);
    drivers.resize(2);
    const auto utility = driver_utilities(matrix, drivers);
    const SelectionOracleTrainer trainer(utility, 1.0, 0.002, trial);
    const SelectionOracleTrainer judge(utility, 1.0, 0.0, trial);

    SelectionPlan plan;
    plan.token_budget = pool_tokens / 10;
    TempDir dir;
    CampaignOptions options;
    options.experiments = 64;
    options.seed = trial;
    options.log_path = dir / "campaign.jsonl";
    options.threads = 4;
    const auto campaign = run_campaign(matrix, pool, plan, trainer, options);
    const auto model = fit_regressor(campaign.records, {.seed = trial});
    const auto best = search_optimal(model.trees, names, {.seed = trial, .threads = 4});

    const auto meta = select_top_k(matrix, pool, best.w_star, plan, 4);
    const auto mean = select_top_k(matrix, pool, WeightVector::uniform(names), plan, 4);
    const double meta_loss = judge.subset_loss(meta.selected_ids, 0), mean_loss = judge.subset_loss(mean.selected_ids, 0);
    wins += meta_loss < mean_loss;
    margin_sum += mean_loss - meta_loss;
  }
  v.check(wins >= 19, fmt::format("fitted weights beat the mean in {}/20 trials", wins));
  v.note(fmt::format("{}/20 wins, mean loss margin {:.4f}", wins, margin_sum / 20));
}

// ---------------------------------------------------------------- AC8

std::vector<double> quadratic_ranks(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double smaller = 0, equal = 0;
    for (double y : x) smaller += y < x[i], equal += y == x[i];
    r[i] = 1.0 + smaller + (equal - 1.0) / 2.0;
  }
  return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n, mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

class ConstantModel final : public Regressor {
 public:
  explicit ConstantModel(std::size_t m) : m_(m) {}
  double predict(std::span<const double>) const override { return 1.0; }
  std::size_t feature_count() const override { return m_; }

 private:
  std::size_t m_;
};

void ac8(Verdict& v) {
  std::mt19937_64 rng(808);
  std::size_t asym = 0, diag = 0;
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 100, k = 1 + rng() % 6;
    std::vector<std::vector<double>> cols(k, std::vector<double>(n));
    std::vector<std::string> ids, names;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("d" + std::to_string(i));
    for (std::size_t c = 0; c < k; ++c) names.push_back("c" + std::to_string(c));
    ScoreMatrix m(ids, names);
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t r = 0; r < n; ++r) m.set_raw(r, c, cols[c][r] = rng() % 3 == 0 ? double(rng() % 4) : uniform01(rng));
    const auto corr = spearman_matrix(m, 1 + trial % 3);
    for (std::size_t i = 0; i < k; ++i) {
      diag += corr.at(i, i) != 1.0;
      for (std::size_t j = 0; j < k; ++j) {
        if (corr.is_flagged(i, j)) {
          asym += !corr.is_flagged(j, i);
          continue;
        }
        asym += corr.at(i, j) != corr.at(j, i);
        if (i != j) worst = std::max(worst, std::abs(corr.at(i, j) - pearson(quadratic_ranks(cols[i]), quadratic_ranks(cols[j]))));
      }
    }
  }
  v.check(asym == 0, fmt::format("{} asymmetric entries", asym));
  v.check(diag == 0, fmt::format("{} non-unit diagonal entries", diag));
  v.check(worst <= 1e-12, fmt::format("oracle error {:.3g}", worst));

  double ortho = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const std::size_t m = 2 + seed % 9;
    std::vector<std::string> names;
    for (std::size_t j = 0; j < m; ++j) names.push_back("q" + std::to_string(j));
    const auto ws = sample_weight_vectors(names, 40, seed);
    std::vector<ExperimentRecord> records(ws.size());
    for (std::size_t i = 0; i < ws.size(); ++i) records[i].index = i, records[i].weights = ws[i];
    const auto land = pca_landscape(records, ConstantModel(m), 4);
    for (std::size_t a = 0; a < land.components.size(); ++a)
      for (std::size_t b = 0; b < land.components.size(); ++b) {
        const auto& x = land.components[a];
        const double d = std::inner_product(x.begin(), x.end(), land.components[b].begin(), 0.0);
        ortho = std::max(ortho, std::abs(d - (a == b ? 1.0 : 0.0)));
      }
  }
  v.check(ortho <= 1e-9, fmt::format("PCA orthonormality error {:.3g}", ortho));
  v.note(fmt::format("Spearman oracle error {:.3g}, PCA orthonormality error {:.3g}", worst, ortho));
}

// ---------------------------------------------------------------- AC9

void ac9(Verdict& v) {
  TempDir dir;
  const auto s = dir.path().string();
  std::vector<std::string> raters;
  for (auto r : kRaterNames) raters.emplace_back(r);
  write_file(dir / "config.json",
             json{{"seed", 21},
                  {"output_dir", "out"},
                  {"corpus", "out/annotated.jsonl"},
                  {"ratings", "ratings.jsonl"},
                  {"importance", {{"targets", {{"books", "books.jsonl"}, {"wikipedia", "wiki.jsonl"}, {"math", "math.jsonl"}}},
                                  {"bucket_count", 4096}}},
                  {"plan", {{"token_budget", 40000}}},
                  {"campaign", {{"experiments", 20}}},
                  {"optimizer", {{"candidates", 2000}, {"top_k", 20}, {"grid", 5}}}}
                 .dump());
  write_file(dir / "ratings.jsonl", "");
  const auto cfg = s + "/config.json";
  const std::vector<std::vector<std::string>> setup{
      {"synth", "--seed", "1", "--documents", "20", "--output", s + "/books.jsonl", "-o", s + "/scratch"},
      {"synth", "--seed", "2", "--documents", "20", "--output", s + "/wiki.jsonl", "-o", s + "/scratch"},
      {"synth", "--seed", "3", "--documents", "20", "--output", s + "/math.jsonl", "-o", s + "/scratch"},
      {"synth", "-c", cfg, "--documents", "1500", "--output", s + "/raw.jsonl"},
  };
  for (const auto& c : setup) v.check(run_cli(c, dir.path()).code == 0, "setup: " + c[0]);
  {
    std::ifstream in(dir / "raw.jsonl");
    std::ofstream out(dir / "ratings.jsonl");
    std::mt19937_64 rng(5);
    for (std::string line; std::getline(in, line);) {
      const auto id = json::parse(line).at("id").get<std::string>();
      for (const auto& r : raters) out << json{{"doc_id", id}, {"rater", r}, {"value", (rng() % 51) / 10.0}}.dump() << '\n';
    }
  }
  write_file(dir / "thresholds.json", R"({"Fluency":0.2,"doc_word_count":0.1})");

  const auto out = s + "/out";
  const std::vector<std::vector<std::string>> commands{
      {"synth", "-c", cfg, "--documents", "300", "--output", out + "/synth/synthetic.jsonl"},
      {"annotate", "-c", cfg, "--corpus", s + "/raw.jsonl"},
      {"select", "-c", cfg, "--mean", "-o", out + "/mean"},
      {"select", "-c", cfg, "--weights", published_path(), "--renormalize", "-o", out + "/weighted"},
      {"select", "-c", cfg, "--mean", "--cc-only", "-o", out + "/cc"},
      {"select", "-c", cfg, "--thresholds", s + "/thresholds.json", "-o", out + "/intersection"},
      {"campaign", "-c", cfg, "-o", out + "/campaign", "--threads", "4"},
      {"fit", "-c", cfg, "-o", out + "/campaign"},
      {"correlate", "-c", cfg, "-o", out + "/correlate"},
      {"cost", "--params", "1.3e9", "--tokens", "30e9"},
      {"rank", published_path(), "--json"},
  };
  // The annotated corpus is an input to later commands, so each run starts
  // from a fresh output directory and repeats the whole sequence.
  auto run_all = [&] {
    std::filesystem::remove_all(out);
    std::vector<std::string> stdout_texts;
    for (const auto& c : commands) {
      const auto r = run_cli(c, dir.path());
      v.check(r.code == 0, c[0] + " failed: " + r.err);
      stdout_texts.push_back(r.out);
    }
    return std::make_pair(stdout_texts, snapshot(out));
  };
  const auto first = run_all(), second = run_all();
  v.check(first.first == second.first, "stdout differs between runs");
  std::size_t differing = 0;
  for (const auto& [path, content] : first.second) {
    const auto it = second.second.find(path);
    if (it == second.second.end() || it->second != content) {
      ++differing;
      v.check(false, "differs: " + path);
    }
  }
  v.check(first.second.size() == second.second.size(), "file sets differ");
  v.note(fmt::format("{} commands, {} output files byte-identical", commands.size(), first.second.size() - differing));
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> criteria{
      {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4}, {"AC5", ac5},
      {"AC6", ac6}, {"AC7", ac7}, {"AC8", ac8}, {"AC9", ac9}};
  const std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [id, run] : criteria) {
    if (!only.empty() && !only.contains(id)) continue;
    Verdict v;
    const auto t0 = Clock::now();
    try {
      run(v);
    } catch (const std::exception& e) {
      v.failures.push_back(std::string("exception: ") + e.what());
    }
    const bool pass = v.failures.empty();
    failed += !pass;
    std::string detail;
    for (const auto& n : v.notes) detail += (detail.empty() ? "" : "; ") + n;
    for (const auto& f : v.failures) detail += (detail.empty() ? "" : "; ") + f;
    std::cout << fmt::format("{} {} ({:.1f}s) {}", id, pass ? "PASS" : "FAIL", seconds_since(t0), detail) << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
