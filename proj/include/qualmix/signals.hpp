#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace qualmix {

/// Rule-based natural-language quality signals, in canonical column order.
/// The names are the published ones, spelling included.
inline constexpr std::array<std::string_view, 11> kSignalNames = {
    "doc_frac_no_alph_words",
    "doc_mean_word_length",
    "doc_frac_unique_words",
    "doc_unigram_entropy",
    "doc_word_count",
    "lines_ending_with_terminal_punctution_mark",
    "lines_numerical_chars_fraction",
    "lines_uppercase_letter_fraction",
    "doc_num_sentences",
    "doc_frac_chars_top_2gram",
    "doc_frac_chars_top_3gram",
};

struct SignalVector {
  double frac_no_alph_words = 0.0;
  double mean_word_length = 0.0;
  double frac_unique_words = 0.0;
  double unigram_entropy = 0.0;  // nats
  std::uint64_t word_count = 0;
  double lines_terminal_punctuation = 0.0;
  double lines_numerical_fraction = 0.0;
  double lines_uppercase_fraction = 0.0;
  std::uint64_t num_sentences = 0;
  double frac_chars_top_2gram = 0.0;
  double frac_chars_top_3gram = 0.0;

  /// Values aligned with kSignalNames.
  std::array<double, 11> values() const;

  bool operator==(const SignalVector&) const = default;
};

struct WordSignals {
  double frac_no_alph_words = 0.0;
  double mean_word_length = 0.0;
  double frac_unique_words = 0.0;
  double unigram_entropy = 0.0;
  std::uint64_t word_count = 0;
};

struct LineSignals {
  double terminal_punctuation = 0.0;
  double numerical_fraction = 0.0;
  double uppercase_fraction = 0.0;
};

struct NgramSignals {
  double top_2gram = 0.0;
  double top_3gram = 0.0;
};

WordSignals word_signals(std::string_view text);

/// Per-line ratios averaged with equal weight per line.
LineSignals line_signals(std::string_view text);

/// Number of non-overlapping matches of \b[^.!?]+[.!?]* over the raw text,
/// with Unicode word boundaries.
std::uint64_t sentence_count(std::string_view text);

/// Share of word characters covered by the most frequent word 2-gram and
/// 3-gram, counting overlapping occurrences, clamped to [0, 1].
NgramSignals ngram_repetition(std::string_view text);

SignalVector compute_signals(std::string_view text);

}  // namespace qualmix
