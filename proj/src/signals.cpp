#include "qualmix/signals.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "qualmix/text.hpp"

namespace qualmix {

namespace {

struct Words {
  std::u32string normalized;
  std::vector<std::u32string_view> words;
};

Words normalized_words(std::string_view text) {
  Words w;
  w.normalized = text::normalize(text);
  w.words = text::split_words(w.normalized);
  return w;
}

WordSignals word_signals_of(const std::vector<std::u32string_view>& words) {
  WordSignals s;
  s.word_count = words.size();
  if (words.empty()) return s;

  const auto n = static_cast<double>(words.size());
  std::size_t no_alpha = 0;
  std::size_t total_len = 0;
  std::unordered_map<std::u32string_view, std::size_t> counts;
  for (auto w : words) {
    if (std::ranges::none_of(w, text::is_letter)) ++no_alpha;
    total_len += w.size();
    ++counts[w];
  }
  s.frac_no_alph_words = static_cast<double>(no_alpha) / n;
  s.mean_word_length = static_cast<double>(total_len) / n;
  s.frac_unique_words = static_cast<double>(counts.size()) / n;

  // Sum in first-occurrence order so the result does not depend on hash layout.
  std::unordered_set<std::u32string_view> done;
  double entropy = 0.0;
  for (auto w : words) {
    if (!done.insert(w).second) continue;
    const double p = static_cast<double>(counts[w]) / n;
    entropy -= p * std::log(p);
  }
  s.unigram_entropy = entropy;
  return s;
}

// Length-prefixed join so distinct word tuples never share a key.
std::u32string ngram_key(const std::vector<std::u32string_view>& words, std::size_t at, std::size_t n) {
  std::u32string key;
  for (std::size_t k = 0; k < n; ++k) {
    key.push_back(static_cast<char32_t>(words[at + k].size()));
    key.append(words[at + k]);
  }
  return key;
}

double top_ngram_fraction(const std::vector<std::u32string_view>& words, std::size_t n) {
  if (words.size() < n) return 0.0;
  std::size_t total_chars = 0;
  for (auto w : words) total_chars += w.size();
  if (total_chars == 0) return 0.0;

  const std::size_t grams = words.size() - n + 1;
  std::vector<std::u32string> keys(grams);
  std::unordered_map<std::u32string, std::size_t> counts;
  for (std::size_t i = 0; i < grams; ++i) {
    keys[i] = ngram_key(words, i, n);
    ++counts[keys[i]];
  }
  // Most frequent n-gram; ties go to the one that appears first.
  std::size_t best_count = 0;
  std::size_t best_at = 0;
  for (std::size_t i = 0; i < grams; ++i) {
    const std::size_t c = counts[keys[i]];
    if (c > best_count) {
      best_count = c;
      best_at = i;
    }
  }
  std::size_t gram_chars = 0;
  for (std::size_t k = 0; k < n; ++k) gram_chars += words[best_at + k].size();
  const double frac = static_cast<double>(best_count * gram_chars) / static_cast<double>(total_chars);
  return std::clamp(frac, 0.0, 1.0);
}

bool is_terminal_mark(char32_t c) { return c == U'.' || c == U'!' || c == U'?' || c == U'"'; }

}  // namespace

std::array<double, 11> SignalVector::values() const {
  return {frac_no_alph_words,
          mean_word_length,
          frac_unique_words,
          unigram_entropy,
          static_cast<double>(word_count),
          lines_terminal_punctuation,
          lines_numerical_fraction,
          lines_uppercase_fraction,
          static_cast<double>(num_sentences),
          frac_chars_top_2gram,
          frac_chars_top_3gram};
}

WordSignals word_signals(std::string_view text) { return word_signals_of(normalized_words(text).words); }

LineSignals line_signals(std::string_view text) {
  LineSignals s;
  const auto lines = text::split_lines(text);
  if (lines.empty()) return s;

  double terminal = 0.0;
  double numerical = 0.0;
  double uppercase = 0.0;
  for (auto line : lines) {
    const std::u32string raw = text::decode_utf8(line);

    std::size_t end = raw.size();
    while (end > 0 && text::is_whitespace(raw[end - 1])) --end;
    if (end > 0 && is_terminal_mark(raw[end - 1])) terminal += 1.0;

    if (!raw.empty()) {
      const auto upper = std::ranges::count_if(raw, text::is_uppercase);
      uppercase += static_cast<double>(upper) / static_cast<double>(raw.size());
    }

    const std::u32string norm = text::normalize(line);
    if (!norm.empty()) {
      const auto digits = std::ranges::count_if(norm, text::is_digit);
      numerical += static_cast<double>(digits) / static_cast<double>(norm.size());
    }
  }
  const auto n = static_cast<double>(lines.size());
  s.terminal_punctuation = terminal / n;
  s.numerical_fraction = numerical / n;
  s.uppercase_fraction = uppercase / n;
  return s;
}

std::uint64_t sentence_count(std::string_view text) {
  const std::u32string cps = text::decode_utf8(text);
  const std::size_t n = cps.size();
  auto is_mark = [](char32_t c) { return c == U'.' || c == U'!' || c == U'?'; };
  auto word_at = [&](std::size_t i) { return i < n && text::is_word_char(cps[i]); };

  std::uint64_t count = 0;
  std::size_t pos = 0;
  while (pos < n) {
    const bool prev_word = pos > 0 && word_at(pos - 1);
    const bool boundary = prev_word != word_at(pos);
    if (!boundary || is_mark(cps[pos])) {
      ++pos;
      continue;
    }
    std::size_t j = pos;
    while (j < n && !is_mark(cps[j])) ++j;
    while (j < n && is_mark(cps[j])) ++j;
    ++count;
    pos = j;
  }
  return count;
}

NgramSignals ngram_repetition(std::string_view text) {
  const auto w = normalized_words(text);
  return {top_ngram_fraction(w.words, 2), top_ngram_fraction(w.words, 3)};
}

SignalVector compute_signals(std::string_view text) {
  const auto w = normalized_words(text);
  const WordSignals ws = word_signals_of(w.words);
  const LineSignals ls = line_signals(text);

  SignalVector v;
  v.frac_no_alph_words = ws.frac_no_alph_words;
  v.mean_word_length = ws.mean_word_length;
  v.frac_unique_words = ws.frac_unique_words;
  v.unigram_entropy = ws.unigram_entropy;
  v.word_count = ws.word_count;
  v.lines_terminal_punctuation = ls.terminal_punctuation;
  v.lines_numerical_fraction = ls.numerical_fraction;
  v.lines_uppercase_fraction = ls.uppercase_fraction;
  v.num_sentences = sentence_count(text);
  v.frac_chars_top_2gram = top_ngram_fraction(w.words, 2);
  v.frac_chars_top_3gram = top_ngram_fraction(w.words, 3);
  return v;
}

}  // namespace qualmix
