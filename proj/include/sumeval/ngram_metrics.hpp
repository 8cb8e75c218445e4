#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sumeval/text_core.hpp"

namespace sumeval {

enum class Orientation {
  higher_is_more_similar,
  lower_is_more_similar,
};

std::string_view to_string(Orientation o);
Orientation parse_orientation(std::string_view name);

struct SummaryPair {
  std::string item_id;
  TokenSequence prediction;
  TokenSequence reference;
};

struct MetricScore {
  std::string metric_name;
  std::string item_id;
  double value = 0.0;
  Orientation orientation = Orientation::higher_is_more_similar;
};

/// Set-based unigram overlap. Both sides empty scores 1, one side empty 0.
MetricScore jaccard(const SummaryPair& pair);

/// Clipped n-gram precision of the prediction against the reference; 0 when
/// the prediction has fewer than n tokens. Throws std::invalid_argument if n < 1.
MetricScore bleu_n(const SummaryPair& pair, int n);

enum class BleuSmoothing {
  none,         // any zero weighted precision collapses the score to 0
  add_epsilon,  // zero precisions are replaced by kBleuEpsilon before the log
};

inline constexpr double kBleuEpsilon = 1e-7;

struct BleuOptions {
  std::vector<double> weights{0.25, 0.25, 0.25, 0.25};
  BleuSmoothing smoothing = BleuSmoothing::none;
  bool brevity_penalty = true;
};

/// Sentence-level BLEU: BP * exp(sum_n w_n ln p_n). Weights must be
/// non-negative and sum to 1 within 1e-9, otherwise std::invalid_argument.
MetricScore bleu_composite(const SummaryPair& pair, const BleuOptions& options = {});

double brevity_penalty(std::size_t prediction_length, std::size_t reference_length);

struct RougeResult {
  double recall = 0.0;
  double precision = 0.0;
  double beta = 1.0;
  double f = 0.0;
};

/// (1 + beta^2) R P / (R + beta^2 P), or 0 when the denominator vanishes.
double rouge_f_measure(double recall, double precision, double beta);

RougeResult rouge_l(const SummaryPair& pair, double beta = 1.0);
RougeResult rouge_w(const SummaryPair& pair, double alpha = 1.2, double beta = 1.0);

/// Synonym sets, one per line of the source file. Two distinct words are
/// synonyms when some line contains both.
class SynonymLexicon {
 public:
  SynonymLexicon() = default;

  static SynonymLexicon load(const std::filesystem::path& path);
  static SynonymLexicon parse(std::istream& in);

  void add_set(const std::vector<std::string>& words);
  bool are_synonyms(std::string_view a, std::string_view b) const;
  bool empty() const noexcept { return set_count_ == 0; }
  std::size_t set_count() const noexcept { return set_count_; }

 private:
  std::unordered_map<std::string, std::vector<std::size_t>> membership_;
  std::size_t set_count_ = 0;
};

struct MeteorParams {
  double alpha = 0.9;
  double gamma = 0.5;
  double beta = 3.0;
};

enum class MeteorStage : std::size_t { exact = 0, stem = 1, synonym = 2 };

/// One aligned unigram pair (prediction index, reference index).
struct MeteorLink {
  std::size_t prediction_index;
  std::size_t reference_index;
  MeteorStage stage;
};

struct MeteorResult {
  std::size_t matches = 0;
  std::size_t chunks = 0;
  double precision = 0.0;
  double recall = 0.0;
  double fmean = 0.0;
  double penalty = 0.0;
  double score = 0.0;
  std::array<std::size_t, 3> stage_counts{};
  std::vector<MeteorLink> alignment;
  /// False when the search budget was exhausted and the greedy aligner
  /// produced the alignment instead.
  bool exact_alignment = true;

  std::size_t stage_count(MeteorStage s) const { return stage_counts[static_cast<std::size_t>(s)]; }
};

/// Stage of the earliest matcher that accepts the pair, if any.
std::optional<MeteorStage> meteor_match_stage(const std::string& prediction_token,
                                              const std::string& reference_token,
                                              const SynonymLexicon* synonyms);

/// Score fields derived from a finished alignment.
MeteorResult meteor_from_alignment(std::vector<MeteorLink> alignment, std::size_t prediction_length,
                                   std::size_t reference_length, const MeteorParams& params);

/// Unigram alignment in three stages (exact, stem, synonym). The alignment
/// maximises the stage match counts lexicographically, so each stage is a
/// maximum matching over tokens left unmatched by earlier stages, and among
/// those picks the fewest chunks. Falls back to a greedy left-to-right
/// aligner, preferring links that extend the current chunk, when the exact
/// search exceeds its state budget.
MeteorResult meteor(const SummaryPair& pair, const MeteorParams& params = {},
                    const SynonymLexicon* synonyms = nullptr);

/// The greedy aligner alone, exposed for comparison.
MeteorResult meteor_greedy(const SummaryPair& pair, const MeteorParams& params = {},
                           const SynonymLexicon* synonyms = nullptr);

}  // namespace sumeval
