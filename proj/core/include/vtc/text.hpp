#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace vtc::text {

// Decodes UTF-8; invalid sequences become U+FFFD (one replacement per bad byte).
std::u32string decode_utf8(std::string_view utf8);
std::string encode_utf8(std::u32string_view text);

// Control codepoints are unrenderable: C0 except tab/newline, plus DEL.
// Tab renders as a wide space, newline is a hard line break.
bool is_control(char32_t c);
bool is_space(char32_t c);      // ' ', tab, newline, CR, FF, VT
bool is_word_char(char32_t c);  // ASCII alphanumeric or any codepoint >= 0x80

char32_t ascii_lower(char32_t c);

// Lowercased word-char runs, encoded back to UTF-8. Shared by BM25, ROUGE and
// the probe builders so "token" means one thing everywhere.
std::vector<std::string> word_tokens(std::u32string_view text);
std::vector<std::string> word_tokens_utf8(std::string_view utf8);

}  // namespace vtc::text
