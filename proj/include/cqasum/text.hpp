#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace cqasum {

using Token = std::string;
using Tokens = std::vector<Token>;
using Ngram = std::vector<Token>;
using NgramCounts = std::map<Ngram, std::size_t>;

/// Lowercases (ASCII), splits on Unicode whitespace, and emits every
/// punctuation character as a separate token. Never yields empty tokens.
Tokens tokenize(std::string_view text);

/// All contiguous n-token windows with multiplicities. n must be >= 1.
NgramCounts ngrams(const Tokens& tokens, std::size_t n);

/// Joins with single spaces.
std::string join(const Tokens& tokens);

std::size_t word_count(std::string_view text);

} // namespace cqasum
