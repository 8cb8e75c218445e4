#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sumeval/error.hpp"
#include "sumeval/text_core.hpp"

namespace sumeval {

template <typename Scalar>
struct CosineResult {
  Scalar value{0};
  /// Set when either input has zero norm; value is then 0.
  bool degenerate = false;
};

namespace detail {

template <typename A, typename B>
void require_same_size(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
  if (x.size() != y.size()) {
    throw DimensionMismatch("vector dimensions differ: " + std::to_string(x.size()) + " vs " +
                            std::to_string(y.size()));
  }
}

}  // namespace detail

/// x.y / (|x| |y|), computed on the normalized vectors.
template <typename A, typename B>
CosineResult<typename A::Scalar> cosine_similarity(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
  using Scalar = typename A::Scalar;
  detail::require_same_size(x, y);
  const Scalar nx = x.norm();
  const Scalar ny = y.norm();
  if (nx == Scalar(0) || ny == Scalar(0)) return {Scalar(0), true};
  return {(x.derived().template cast<Scalar>() / nx).dot(y.derived().template cast<Scalar>() / ny), false};
}

template <typename A, typename B>
typename A::Scalar euclidean_distance(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
  detail::require_same_size(x, y);
  return (x - y).norm();
}

template <typename Scalar>
struct BertScoreResult {
  Scalar precision{0};
  Scalar recall{0};
  Scalar f1{0};
};

/// Greedy token matching over L2-normalized rows. Each matrix holds one
/// token vector per row. Zero rows stay zero after normalization.
template <typename P, typename R>
BertScoreResult<typename P::Scalar> bertscore(const Eigen::MatrixBase<P>& prediction_rows,
                                              const Eigen::MatrixBase<R>& reference_rows) {
  using Scalar = typename P::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (prediction_rows.rows() == 0 || reference_rows.rows() == 0) {
    throw std::invalid_argument("BERTScore needs at least one token on each side");
  }
  if (prediction_rows.cols() != reference_rows.cols()) {
    throw DimensionMismatch("token vector widths differ: " + std::to_string(prediction_rows.cols()) + " vs " +
                            std::to_string(reference_rows.cols()));
  }
  auto normalized = [](const auto& m) {
    Matrix out = m.template cast<Scalar>();
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      const Scalar n = out.row(i).norm();
      if (n > Scalar(0)) out.row(i) /= n;
    }
    return out;
  };
  const Matrix pred = normalized(prediction_rows.derived());
  const Matrix ref = normalized(reference_rows.derived());
  const Matrix sim = ref * pred.transpose();  // sim(i, j) = ref_i . pred_j

  BertScoreResult<Scalar> r;
  r.recall = sim.rowwise().maxCoeff().mean();
  r.precision = sim.colwise().maxCoeff().mean();
  const Scalar sum = r.precision + r.recall;
  r.f1 = sum != Scalar(0) ? Scalar(2) * r.precision * r.recall / sum : Scalar(0);
  return r;
}

/// Smoothed tf-idf over a corpus where each document is one summary:
/// idf(t) = ln((1 + N) / (1 + df(t))) + 1. Vocabulary is sorted.
class TfIdfModel {
 public:
  const std::vector<std::string>& vocabulary() const noexcept { return vocabulary_; }
  std::size_t document_count() const noexcept { return document_count_; }
  std::size_t document_frequency(std::string_view term) const;
  /// 0 for out-of-vocabulary terms.
  double idf(std::string_view term) const;
  std::optional<std::size_t> index_of(std::string_view term) const;

  friend TfIdfModel tfidf_fit(std::span<const TokenSequence> corpus);

 private:
  std::vector<std::string> vocabulary_;
  std::vector<std::size_t> df_;
  Eigen::VectorXd idf_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t document_count_ = 0;
};

/// Throws std::invalid_argument on an empty corpus.
TfIdfModel tfidf_fit(std::span<const TokenSequence> corpus);

/// Raw term count times idf, in vocabulary order; not normalized.
Eigen::VectorXd tfidf_vector(const TfIdfModel& model, const TokenSequence& seq);

enum class TextRole { prediction, reference };
enum class EmbeddingKind { sentence, tokens };

std::string_view to_string(TextRole role);
std::string_view to_string(EmbeddingKind kind);

struct EmbeddingRecord {
  std::string item_id;
  TextRole role = TextRole::prediction;
  std::string model;
  EmbeddingKind kind = EmbeddingKind::sentence;
  Eigen::VectorXd vector;             // sentence kind
  std::vector<std::string> tokens;    // tokens kind
  Eigen::MatrixXd matrix;             // tokens kind: one row per token

  Eigen::Index dimension() const { return kind == EmbeddingKind::sentence ? vector.size() : matrix.cols(); }
};

BertScoreResult<double> bertscore_f1(const EmbeddingRecord& prediction, const EmbeddingRecord& reference);

/// All embeddings from one model, keyed by (item id, role).
class EmbeddingStore {
 public:
  using Key = std::pair<std::string, TextRole>;

  const std::string& model() const noexcept { return model_; }
  std::optional<Eigen::Index> dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  const EmbeddingRecord* find(const std::string& item_id, TextRole role) const;
  const std::map<Key, EmbeddingRecord>& records() const noexcept { return records_; }

  /// Validates model, dimension and key uniqueness. `line` is used in errors.
  void insert(EmbeddingRecord record, std::size_t line = 0);

 private:
  std::string model_;
  std::optional<Eigen::Index> dimension_;
  std::map<Key, EmbeddingRecord> records_;
};

/// Parses one embedding JSONL line. Throws DataError naming `line`.
EmbeddingRecord parse_embedding_record(std::string_view json_line, std::size_t line = 0);
std::string format_embedding_record(const EmbeddingRecord& record);

EmbeddingStore load_embeddings(std::istream& in);
EmbeddingStore load_embeddings(const std::filesystem::path& path);

/// Deterministic bag-of-tokens embedding: the sum over tokens of a unit
/// vector drawn from a SplitMix64 stream. For each token the stream state
/// starts at fnv1a64(token bytes) XOR splitmix64_mix(seed); component k
/// advances the state by 0x9E3779B97F4A7C15, mixes it, and maps the top 53
/// bits u to 2 * u / 2^53 - 1. The raw vector is then scaled to unit length.
/// Token vectors are accumulated in sorted token order.
Eigen::VectorXd det_embed(const TokenSequence& seq, int dim, std::uint64_t seed);

/// The per-token unit vector used by det_embed.
Eigen::VectorXd det_token_vector(std::string_view token, int dim, std::uint64_t seed);

}  // namespace sumeval
