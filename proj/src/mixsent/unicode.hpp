#pragma once

#include <string>
#include <string_view>

namespace mixsent::unicode {

// Invalid UTF-8 sequences decode to U+FFFD.
std::u32string decode(std::string_view utf8);
std::string encode(std::u32string_view text);
void append(std::string& out, char32_t c);

std::string nfc(std::string_view utf8);

bool is_space(char32_t c);
bool is_alpha(char32_t c);
// Unicode punctuation (P*) and the ASCII symbol marks; '_' counts as a
// word character.
bool is_punctuation(char32_t c);
// Pictographs, presentation emoji and the joiners/modifiers that build
// emoji sequences.
bool is_emoji_part(char32_t c);

char32_t to_lower(char32_t c);
std::string to_lower(std::string_view utf8);

}  // namespace mixsent::unicode
