#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace sumeval {

enum class TokenizerMode {
  standard,      // ASCII case folding, split on runs of non-alphanumerics
  pretokenized,  // split on whitespace only, no case folding
};

TokenizerMode parse_tokenizer_mode(std::string_view name);

/// Tokens of one summary in reading order. Tokens are non-empty and contain
/// no whitespace.
struct TokenSequence {
  std::vector<std::string> tokens;
  std::string source_text;

  std::size_t size() const noexcept { return tokens.size(); }
  bool empty() const noexcept { return tokens.empty(); }
  const std::string& operator[](std::size_t i) const { return tokens[i]; }

  /// Build directly from tokens; source_text becomes the space-joined tokens.
  static TokenSequence from_tokens(std::vector<std::string> tokens);
};

TokenSequence normalize_tokenize(std::string_view text, TokenizerMode mode = TokenizerMode::standard);

using NGram = std::vector<std::string>;

/// Sliding-window n-gram counts of a token sequence.
struct NGramMultiset {
  std::size_t n = 1;
  std::map<NGram, std::size_t> counts;

  std::size_t total() const noexcept;
  std::size_t count(const NGram& gram) const;
};

/// Throws std::invalid_argument when n < 1.
NGramMultiset ngram_profile(const TokenSequence& seq, int n);

std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b);

/// Weighted LCS: the maximum, over all common-subsequence alignments of a
/// and b, of sum f(k) across maximal runs of consecutive matches, with
/// f(k) = k^alpha. Exact for any alignment shape, so alpha = 1 yields the
/// plain LCS length. Throws std::invalid_argument when alpha < 1.
double wlcs_score(const TokenSequence& a, const TokenSequence& b, double alpha);

/// Porter stemmer, iterated to a fixpoint so that stem(stem(w)) == stem(w).
/// Tokens containing anything other than ASCII lowercase letters are
/// returned unchanged.
std::string stem(std::string_view word);

}  // namespace sumeval
