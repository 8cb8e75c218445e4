#include "sumeval/vector_metrics.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace sumeval {

std::size_t TfIdfModel::document_frequency(std::string_view term) const {
  const auto idx = index_of(term);
  return idx ? df_[*idx] : 0;
}

double TfIdfModel::idf(std::string_view term) const {
  const auto idx = index_of(term);
  return idx ? idf_[static_cast<Eigen::Index>(*idx)] : 0.0;
}

std::optional<std::size_t> TfIdfModel::index_of(std::string_view term) const {
  const auto it = index_.find(std::string(term));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TfIdfModel tfidf_fit(std::span<const TokenSequence> corpus) {
  if (corpus.empty()) throw std::invalid_argument("tf-idf corpus must be non-empty");
  std::map<std::string, std::size_t> df;
  for (const auto& doc : corpus) {
    const std::set<std::string> terms(doc.tokens.begin(), doc.tokens.end());
    for (const auto& t : terms) ++df[t];
  }

  TfIdfModel model;
  model.document_count_ = corpus.size();
  model.vocabulary_.reserve(df.size());
  model.df_.reserve(df.size());
  model.idf_.resize(static_cast<Eigen::Index>(df.size()));
  const double n = static_cast<double>(corpus.size());
  for (const auto& [term, count] : df) {
    const std::size_t idx = model.vocabulary_.size();
    model.index_.emplace(term, idx);
    model.vocabulary_.push_back(term);
    model.df_.push_back(count);
    model.idf_[static_cast<Eigen::Index>(idx)] = std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0;
  }
  return model;
}

Eigen::VectorXd tfidf_vector(const TfIdfModel& model, const TokenSequence& seq) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.vocabulary().size()));
  for (const auto& t : seq.tokens) {
    if (const auto idx = model.index_of(t)) v[static_cast<Eigen::Index>(*idx)] += 1.0;
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0) v[i] *= model.idf(model.vocabulary()[static_cast<std::size_t>(i)]);
  }
  return v;
}

BertScoreResult<double> bertscore_f1(const EmbeddingRecord& prediction, const EmbeddingRecord& reference) {
  if (prediction.kind != EmbeddingKind::tokens || reference.kind != EmbeddingKind::tokens) {
    throw std::invalid_argument("BERTScore needs token-kind embedding records");
  }
  return bertscore(prediction.matrix, reference.matrix);
}

namespace {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

Eigen::VectorXd det_token_vector(std::string_view token, int dim, std::uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("embedding dimension must be >= 1");
  Eigen::VectorXd v(dim);
  std::uint64_t state = fnv1a64(token) ^ splitmix64_mix(seed);
  for (int k = 0; k < dim; ++k) {
    state += 0x9E3779B97F4A7C15ULL;
    const std::uint64_t bits = splitmix64_mix(state) >> 11;
    v[k] = 2.0 * static_cast<double>(bits) / 9007199254740992.0 - 1.0;
  }
  const double n = v.norm();
  if (n > 0.0) v /= n;
  return v;
}

Eigen::VectorXd det_embed(const TokenSequence& seq, int dim, std::uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("embedding dimension must be >= 1");
  // Summed in sorted token order so the result is independent of permutation
  // down to the last bit.
  std::vector<std::string> sorted = seq.tokens;
  std::sort(sorted.begin(), sorted.end());
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  for (const auto& t : sorted) sum += det_token_vector(t, dim, seed);
  return sum;
}

}  // namespace sumeval
