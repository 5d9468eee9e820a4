#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace smartclass::text {

/// 64-bit FNV-1a. Offset basis 0xcbf29ce484222325, prime 0x100000001b3.
constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// True for bytes that belong to a token: ASCII letters, digits, and any
/// byte >= 0x80 so multi-byte UTF-8 letters stay inside one token.
constexpr bool is_token_byte(unsigned char c) noexcept {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

/// Lowercased maximal runs of token bytes, in order of appearance.
std::vector<std::string> tokenize(std::string_view text);

/// A token together with its byte offset in the source text (original case).
struct TokenSpan {
    std::string_view token;
    std::size_t offset;
};
std::vector<TokenSpan> token_spans(std::string_view text);

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s) noexcept;
bool starts_with(std::string_view s, std::string_view prefix) noexcept;

/// Splits on '\n', dropping a trailing '\r' from each line. A final newline
/// does not produce an extra empty line.
std::vector<std::string_view> split_lines(std::string_view s);

/// Splits on any run of spaces/tabs.
std::vector<std::string_view> split_fields(std::string_view s);

/// Sentences end at '.', '!' or '?' followed by whitespace or end of text.
/// Returned views are trimmed and non-empty.
std::vector<std::string_view> split_sentences(std::string_view text);

/// Hex encoding of arbitrary bytes (lowercase).
std::string to_hex(const unsigned char* data, std::size_t n);

}  // namespace smartclass::text
