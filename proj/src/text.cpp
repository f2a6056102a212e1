#include "cqasum/text.hpp"

#include <stdexcept>

namespace cqasum {
namespace {

struct CodePoint {
    char32_t value;
    std::size_t length; // bytes consumed
};

// Lenient UTF-8 decoder: malformed bytes decode as themselves, one byte long.
CodePoint decode(std::string_view s, std::size_t i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) return {b0, 1};
    std::size_t len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) { len = 2; cp = b0 & 0x1F; }
    else if ((b0 & 0xF0) == 0xE0) { len = 3; cp = b0 & 0x0F; }
    else if ((b0 & 0xF8) == 0xF0) { len = 4; cp = b0 & 0x07; }
    else return {b0, 1};
    if (i + len > s.size()) return {b0, 1};
    for (std::size_t k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) return {b0, 1};
        cp = (cp << 6) | (b & 0x3F);
    }
    return {cp, len};
}

bool is_space(char32_t c) {
    if (c == U' ' || (c >= 0x09 && c <= 0x0D)) return true;
    switch (c) {
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
        return true;
    default:
        return c >= 0x2000 && c <= 0x200A;
    }
}

bool is_punct(char32_t c) {
    if (c < 0x80) {
        return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
               (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
    }
    switch (c) {
    case 0xA1: case 0xA7: case 0xAB: case 0xB6: case 0xB7: case 0xBB: case 0xBF:
    case 0x3001: case 0x3002: case 0x3003:
        return true;
    default:
        return (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E);
    }
}

} // namespace

Tokens tokenize(std::string_view text) {
    Tokens out;
    std::string word;
    auto flush = [&] {
        if (!word.empty()) {
            out.push_back(std::move(word));
            word.clear();
        }
    };
    for (std::size_t i = 0; i < text.size();) {
        const CodePoint cp = decode(text, i);
        const std::string_view bytes = text.substr(i, cp.length);
        i += cp.length;
        if (is_space(cp.value)) {
            flush();
        } else if (is_punct(cp.value)) {
            flush();
            out.emplace_back(bytes);
        } else if (cp.value >= U'A' && cp.value <= U'Z') {
            word.push_back(static_cast<char>(cp.value - U'A' + U'a'));
        } else {
            word.append(bytes);
        }
    }
    flush();
    return out;
}

NgramCounts ngrams(const Tokens& tokens, std::size_t n) {
    if (n == 0) throw std::invalid_argument("ngrams: n must be >= 1");
    NgramCounts counts;
    if (tokens.size() < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        ++counts[Ngram(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                       tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
    }
    return counts;
}

std::string join(const Tokens& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

std::size_t word_count(std::string_view text) { return tokenize(text).size(); }

} // namespace cqasum
