#include "mixsent/unicode.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "mixsent/error.hpp"

namespace mixsent::unicode {

std::u32string decode(std::string_view utf8) {
    std::u32string out;
    out.reserve(utf8.size());
    const auto* s = reinterpret_cast<const uint8_t*>(utf8.data());
    const auto length = static_cast<int32_t>(utf8.size());
    int32_t i = 0;
    while (i < length) {
        UChar32 c = 0;
        U8_NEXT(s, i, length, c);
        out.push_back(c < 0 ? U'�' : static_cast<char32_t>(c));
    }
    return out;
}

void append(std::string& out, char32_t c) {
    uint8_t buf[U8_MAX_LENGTH];
    int32_t n = 0;
    UBool error = false;
    U8_APPEND(buf, n, U8_MAX_LENGTH, static_cast<UChar32>(c), error);
    if (error) {
        out += "\xEF\xBF\xBD";
        return;
    }
    out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
}

std::string encode(std::u32string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char32_t c : text) append(out, c);
    return out;
}

std::string nfc(std::string_view utf8) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) fail(ErrorCode::internal, "ICU NFC normalizer unavailable");
    const icu::UnicodeString source = icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
    if (normalizer->isNormalized(source, status) && U_SUCCESS(status)) return std::string(utf8);
    status = U_ZERO_ERROR;
    const icu::UnicodeString normalized = normalizer->normalize(source, status);
    if (U_FAILURE(status)) fail(ErrorCode::internal, "NFC normalization failed");
    std::string out;
    normalized.toUTF8String(out);
    return out;
}

bool is_space(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)); }

bool is_alpha(char32_t c) { return u_isUAlphabetic(static_cast<UChar32>(c)); }

bool is_punctuation(char32_t c) {
    if (c == U'_') return false;
    if (c < 0x80) {
        switch (c) {
            case U'$': case U'+': case U'<': case U'=': case U'>': case U'^': case U'`': case U'|': case U'~':
                return true;
            default:
                break;
        }
    }
    return u_ispunct(static_cast<UChar32>(c));
}

bool is_emoji_part(char32_t c) {
    const auto cp = static_cast<UChar32>(c);
    if (c == 0x200D || c == 0xFE0F || c == 0x20E3) return true;
    return u_hasBinaryProperty(cp, UCHAR_EXTENDED_PICTOGRAPHIC) || u_hasBinaryProperty(cp, UCHAR_EMOJI_PRESENTATION) ||
           u_hasBinaryProperty(cp, UCHAR_EMOJI_MODIFIER) || u_hasBinaryProperty(cp, UCHAR_REGIONAL_INDICATOR);
}

char32_t to_lower(char32_t c) { return static_cast<char32_t>(u_tolower(static_cast<UChar32>(c))); }

std::string to_lower(std::string_view utf8) {
    std::string out;
    out.reserve(utf8.size());
    for (char32_t c : decode(utf8)) append(out, to_lower(c));
    return out;
}

}  // namespace mixsent::unicode
