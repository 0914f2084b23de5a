#pragma once

#include <string>
#include <string_view>
#include <vector>

// Minimal UTF-8 helpers. Offsets exposed to callers count Unicode scalar
// values, never bytes.
namespace aes::utf8 {

/// Decodes to code points. Invalid sequences decode to U+FFFD.
std::u32string decode(std::string_view s);
std::string encode(std::u32string_view s);
void append(std::string& out, char32_t cp);

/// Number of code points.
std::size_t length(std::string_view s);

/// Simple case mapping for Latin-1 and Latin Extended-A; enough for Estonian.
char32_t to_lower(char32_t cp);
char32_t to_upper(char32_t cp);
std::string to_lower(std::string_view s);

bool is_upper(char32_t cp);
bool is_letter(char32_t cp);
bool is_digit(char32_t cp);
bool is_space(char32_t cp);

/// Punctuation and symbols that tokenize as separate tokens.
bool is_punct(char32_t cp);

}  // namespace aes::utf8
