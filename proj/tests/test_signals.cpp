#include <cmath>
#include <random>

#include "doctest.h"
#include "json.hpp"
#include "qualmix/parallel.hpp"
#include "qualmix/signals.hpp"
#include "qualmix/text.hpp"
#include "support.hpp"

using namespace qualmix;

namespace {

// Random text drawn from a mix of scripts, whitespace, punctuation, digits,
// combining marks and (occasionally) invalid UTF-8 bytes.
std::string random_text(std::mt19937_64& rng) {
  static const std::vector<std::u32string> pools = {
      U"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ",
      U"0123456789",
      U" \t\n\n\r 　",
      U".!?\",;:'()-[]{}¿¡—«»",
      U"éüßÄÖİǅ",
      U"αβΓΔжЖя",
      U"数据文字。、",
      U"١٢०१½²Ⅻ",
      U"̧́̈",
      U"\U0001f642\U0001f680",
  };
  std::uniform_int_distribution<int> len(0, 60);
  std::uniform_int_distribution<std::size_t> pool(0, pools.size() - 1);
  std::u32string cps;
  const int n = len(rng);
  for (int i = 0; i < n; ++i) {
    const auto& p = pools[pool(rng)];
    cps.push_back(p[std::uniform_int_distribution<std::size_t>(0, p.size() - 1)(rng)]);
  }
  std::string out = text::encode_utf8(cps);
  if (rng() % 20 == 0 && !out.empty()) out.insert(rng() % out.size(), 1, static_cast<char>(0x80 | (rng() % 64)));
  return out;
}

void check_invariants(const std::string& t) {
  const SignalVector s = compute_signals(t);
  for (double f : {s.frac_no_alph_words, s.frac_unique_words, s.lines_terminal_punctuation, s.lines_numerical_fraction,
                   s.lines_uppercase_fraction, s.frac_chars_top_2gram, s.frac_chars_top_3gram}) {
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
  }
  CHECK(s.unigram_entropy >= 0.0);
  CHECK(s.mean_word_length >= 0.0);
  if (s.word_count > 0) {
    const double bound = std::log(static_cast<double>(s.word_count));
    CHECK(s.unigram_entropy <= bound + 1e-12);
    const bool all_distinct = s.frac_unique_words == 1.0;
    CHECK(all_distinct == (std::abs(s.unigram_entropy - bound) <= 1e-9));
  } else {
    // No words: word-level and n-gram signals are zero; line signals may not be ("?!").
    CHECK(s.frac_no_alph_words == 0.0);
    CHECK(s.mean_word_length == 0.0);
    CHECK(s.frac_unique_words == 0.0);
    CHECK(s.unigram_entropy == 0.0);
    CHECK(s.frac_chars_top_2gram == 0.0);
    CHECK(s.frac_chars_top_3gram == 0.0);
  }
  CHECK(compute_signals(t) == s);
}

}  // namespace

TEST_CASE("word signals on hand-counted examples") {
  auto s = word_signals("hello 123 world");
  CHECK(s.frac_no_alph_words == doctest::Approx(1.0 / 3.0));
  CHECK(s.word_count == 3);

  s = word_signals("the cat the");
  CHECK(s.unigram_entropy == doctest::Approx(-(2.0 / 3 * std::log(2.0 / 3) + 1.0 / 3 * std::log(1.0 / 3))).epsilon(1e-12));
  CHECK(s.unigram_entropy == doctest::Approx(0.63651).epsilon(1e-5));

  CHECK(word_signals("a b c").frac_unique_words == 1.0);
  CHECK(word_signals("ab cde").mean_word_length == 2.5);
  // Normalization: case folding and punctuation removal merge these words.
  s = word_signals("Hello, hello! HELLO");
  CHECK(s.word_count == 3);
  CHECK(s.frac_unique_words == doctest::Approx(1.0 / 3.0));
  // NFC: a decomposed e-acute equals the precomposed one.
  CHECK(word_signals("café café").frac_unique_words == 0.5);
}

TEST_CASE("empty text yields zeros everywhere") {
  CHECK(compute_signals("") == SignalVector{});
  CHECK(word_signals("   \n\t ").word_count == 0);
}

TEST_CASE("line signals on hand-tallied examples") {
  CHECK(line_signals("Done.\noops").terminal_punctuation == 0.5);
  const auto s = line_signals("A1b2");
  CHECK(s.numerical_fraction == 0.5);
  CHECK(s.uppercase_fraction == 0.25);
  CHECK(line_signals("all lowercase here\nand here").uppercase_fraction == 0.0);
  CHECK(line_signals("He said \"hi\"  \nWhy?\nNo").terminal_punctuation == doctest::Approx(2.0 / 3.0));
  // A trailing newline does not add an empty line; an inner blank line counts.
  CHECK(line_signals("a.\n").terminal_punctuation == 1.0);
  CHECK(line_signals("a.\n\nb.").terminal_punctuation == doctest::Approx(2.0 / 3.0));
  CHECK(line_signals("").terminal_punctuation == 0.0);
  CHECK(line_signals("").uppercase_fraction == 0.0);
}

TEST_CASE("sentence counts follow the boundary-anchored pattern") {
  CHECK(sentence_count("Hi. Bye!") == 2);
  CHECK(sentence_count("") == 0);
  CHECK(sentence_count("no punctuation at all") == 1);
  CHECK(sentence_count("...") == 0);
  CHECK(sentence_count("Wait... what?! Ok") == 3);
  CHECK(sentence_count("3.14 is pi.") == 2);
  CHECK(sentence_count(" leading space") == 1);
}

TEST_CASE("top n-gram fractions count overlapping occurrences") {
  auto s = ngram_repetition("ab cd ab cd ef");
  CHECK(s.top_2gram == 0.8);
  s = ngram_repetition("solitary");
  CHECK(s.top_2gram == 0.0);
  CHECK(s.top_3gram == 0.0);
  s = ngram_repetition("x x x x");
  CHECK(s.top_2gram == 1.0);  // (3 * 2) / 4 clamped
  CHECK(s.top_3gram == 1.0);  // (2 * 3) / 4 clamped
  CHECK(ngram_repetition("a b").top_3gram == 0.0);
}

TEST_CASE("signal names keep the published spelling") {
  CHECK(kSignalNames[5] == "lines_ending_with_terminal_punctution_mark");
  CHECK(kSignalNames.size() == 11);
}

TEST_CASE("all signals match the brute-force reference on the mixed-language fixture") {
  std::ifstream in(std::string(QM_TEST_DATA_DIR) + "/signals_golden.jsonl");
  REQUIRE(in.good());
  std::string line;
  std::size_t docs = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    const std::string text = j.at("text");
    const auto values = compute_signals(text).values();
    for (std::size_t k = 0; k < kSignalNames.size(); ++k) {
      const double expected = j.at("expected").at(std::string(kSignalNames[k])).get<double>();
      INFO("doc " << docs << " signal " << kSignalNames[k] << " text " << text);
      if (kSignalNames[k] == "doc_word_count" || kSignalNames[k] == "doc_num_sentences")
        CHECK(values[k] == expected);
      else
        CHECK(std::abs(values[k] - expected) <= 1e-12);
    }
    ++docs;
  }
  CHECK(docs == 200);
}

TEST_CASE("properties hold over 10,000 random strings") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 10000; ++i) {
    const std::string t = random_text(rng);
    check_invariants(t);

    const SignalVector one = compute_signals(t);
    const SignalVector twice = compute_signals(t + "\n" + t);
    CHECK(twice.word_count == 2 * one.word_count);
    CHECK(twice.frac_unique_words <= one.frac_unique_words);
  }
}

TEST_CASE("results do not depend on the thread count") {
  std::mt19937_64 rng(11);
  std::vector<std::string> texts(2000);
  for (auto& t : texts) t = random_text(rng);
  std::vector<SignalVector> serial(texts.size()), parallel(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) serial[i] = compute_signals(texts[i]);
  parallel_chunks(texts.size(), 8, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) parallel[i] = compute_signals(texts[i]);
  });
  CHECK(serial == parallel);
}
