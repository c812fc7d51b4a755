#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace qualmix::text {

/// Decodes UTF-8; malformed sequences become U+FFFD.
std::u32string decode_utf8(std::string_view bytes);
std::string encode_utf8(std::u32string_view cps);

bool is_whitespace(char32_t c);
bool is_letter(char32_t c);       // general category L*
bool is_uppercase(char32_t c);    // general category Lu
bool is_digit(char32_t c);        // general category Nd
bool is_punctuation(char32_t c);  // general category P*
/// Regex word character: letters, numbers, connector underscore.
bool is_word_char(char32_t c);

/// NFC, full lowercase, punctuation removed. Whitespace and line breaks kept.
std::u32string normalize(std::string_view raw);

/// Maximal runs of non-whitespace code points.
std::vector<std::u32string_view> split_words(std::u32string_view s);

/// Splits on '\n'. A trailing newline does not open an extra empty line and an
/// empty string has zero lines.
std::vector<std::string_view> split_lines(std::string_view raw);

std::size_t count_words(std::string_view raw);
std::size_t count_code_points(std::string_view raw);

}  // namespace qualmix::text
