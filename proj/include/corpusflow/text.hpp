#pragma once

// UTF-8 and small string helpers shared by the codecs. Character offsets
// everywhere in corpusflow count Unicode code points, not bytes.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace corpusflow::text {

inline constexpr std::size_t npos = static_cast<std::size_t>(-1);

// Byte offset of the first ill-formed UTF-8 sequence, or npos.
std::size_t find_invalid_utf8(std::string_view bytes);
inline bool is_valid_utf8(std::string_view bytes) { return find_invalid_utf8(bytes) == npos; }

// Ill-formed sequences decode to U+FFFD.
std::u32string decode_utf8(std::string_view bytes);
void append_utf8(std::string& out, char32_t cp);
std::string encode_utf8(std::u32string_view cps);
std::size_t codepoint_length(std::string_view bytes);

// Code points are ICU properties: white space, punctuation (incl. symbols),
// uppercase letter, decimal digit.
bool is_space(char32_t cp);
bool is_punct(char32_t cp);
bool is_upper(char32_t cp);
bool is_digit(char32_t cp);

// NFC, then full case folding, then NFC again.
std::string nfc_casefold(std::string_view s);
std::string to_lower(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);
// Splits on runs of ASCII blanks; no empty pieces.
std::vector<std::string> split_ws(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string_view trim(std::string_view s);
// Trims and collapses internal white space runs to a single ASCII space.
std::string collapse_spaces(std::string_view s);

bool starts_with(std::string_view s, std::string_view prefix);

}  // namespace corpusflow::text
