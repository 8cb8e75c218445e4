#include "sumeval/text_core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sumeval/error.hpp"

namespace sumeval {

namespace {

// Bytes >= 0x80 belong to UTF-8 multibyte sequences; they are kept inside
// tokens so non-ASCII letters are never used as separators.
bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

TokenizerMode parse_tokenizer_mode(std::string_view name) {
  if (name == "standard") return TokenizerMode::standard;
  if (name == "pretokenized") return TokenizerMode::pretokenized;
  throw ConfigError("unknown tokenizer mode '" + std::string(name) + "'");
}

TokenSequence TokenSequence::from_tokens(std::vector<std::string> tokens) {
  TokenSequence seq;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) seq.source_text += ' ';
    seq.source_text += tokens[i];
  }
  seq.tokens = std::move(tokens);
  return seq;
}

TokenSequence normalize_tokenize(std::string_view text, TokenizerMode mode) {
  TokenSequence seq;
  seq.source_text = std::string(text);
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      seq.tokens.push_back(std::move(current));
      current.clear();
    }
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (mode == TokenizerMode::standard) {
      if (is_word_byte(c)) {
        current += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch;
      } else {
        flush();
      }
    } else {
      if (is_space_byte(c)) {
        flush();
      } else {
        current += ch;
      }
    }
  }
  flush();
  return seq;
}

std::size_t NGramMultiset::total() const noexcept {
  std::size_t sum = 0;
  for (const auto& [gram, c] : counts) sum += c;
  return sum;
}

std::size_t NGramMultiset::count(const NGram& gram) const {
  const auto it = counts.find(gram);
  return it == counts.end() ? 0 : it->second;
}

NGramMultiset ngram_profile(const TokenSequence& seq, int n) {
  if (n < 1) throw std::invalid_argument("n-gram size must be >= 1");
  NGramMultiset profile;
  profile.n = static_cast<std::size_t>(n);
  if (seq.size() < profile.n) return profile;
  for (std::size_t i = 0; i + profile.n <= seq.size(); ++i) {
    NGram gram(seq.tokens.begin() + static_cast<std::ptrdiff_t>(i),
               seq.tokens.begin() + static_cast<std::ptrdiff_t>(i + profile.n));
    ++profile.counts[std::move(gram)];
  }
  return profile;
}

std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double wlcs_score(const TokenSequence& a, const TokenSequence& b, double alpha) {
  if (!(alpha >= 1.0)) throw std::invalid_argument("WLCS alpha must be >= 1");
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  if (n == 0 || m == 0) return 0.0;

  const auto weight = [alpha](std::size_t k) { return std::pow(static_cast<double>(k), alpha); };
  const std::size_t cols = m + 1;
  auto at = [cols](std::size_t i, std::size_t j) { return i * cols + j; };

  // 1-based cells. diag: length of the run of equal tokens ending at (i, j).
  // start: best score of an alignment strictly before a run that starts at
  // (i, j), i.e. whose last match lies in [1,i-1]x[1,j-1] minus (i-1, j-1).
  // ending: best score of an alignment whose last match is (i, j).
  // prefix: max of ending over [1,i]x[1,j] (0 when empty).
  std::vector<std::size_t> diag((n + 1) * cols, 0);
  std::vector<double> start((n + 1) * cols, 0.0);
  std::vector<double> prefix((n + 1) * cols, 0.0);

  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      double ending = 0.0;
      bool has_ending = false;
      if (a[i - 1] == b[j - 1]) {
        diag[at(i, j)] = diag[at(i - 1, j - 1)] + 1;
        const double before_top = i >= 2 ? prefix[at(i - 2, j - 1)] : 0.0;
        const double before_left = j >= 2 ? prefix[at(i - 1, j - 2)] : 0.0;
        start[at(i, j)] = std::max(before_top, before_left);
        for (std::size_t k = 1; k <= diag[at(i, j)]; ++k) {
          ending = std::max(ending, start[at(i - k + 1, j - k + 1)] + weight(k));
        }
        has_ending = true;
      }
      double best = std::max(prefix[at(i - 1, j)], prefix[at(i, j - 1)]);
      if (has_ending) best = std::max(best, ending);
      prefix[at(i, j)] = best;
    }
  }
  return prefix[at(n, m)];
}

}  // namespace sumeval
