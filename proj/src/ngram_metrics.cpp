#include "sumeval/ngram_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "sumeval/error.hpp"

namespace sumeval {

std::string_view to_string(Orientation o) {
  return o == Orientation::higher_is_more_similar ? "higher_is_more_similar" : "lower_is_more_similar";
}

Orientation parse_orientation(std::string_view name) {
  if (name == "higher_is_more_similar") return Orientation::higher_is_more_similar;
  if (name == "lower_is_more_similar") return Orientation::lower_is_more_similar;
  throw std::invalid_argument("unknown orientation '" + std::string(name) + "'");
}

MetricScore jaccard(const SummaryPair& pair) {
  const std::set<std::string> pred(pair.prediction.tokens.begin(), pair.prediction.tokens.end());
  const std::set<std::string> ref(pair.reference.tokens.begin(), pair.reference.tokens.end());
  double value = 0.0;
  if (pred.empty() && ref.empty()) {
    value = 1.0;
  } else if (!pred.empty() && !ref.empty()) {
    std::size_t common = 0;
    for (const auto& t : pred) common += ref.count(t);
    value = static_cast<double>(common) / static_cast<double>(pred.size() + ref.size() - common);
  }
  return {"jaccard", pair.item_id, value, Orientation::higher_is_more_similar};
}

MetricScore bleu_n(const SummaryPair& pair, int n) {
  if (n < 1) throw std::invalid_argument("BLEU n must be >= 1");
  const NGramMultiset pred = ngram_profile(pair.prediction, n);
  const NGramMultiset ref = ngram_profile(pair.reference, n);
  const std::size_t total = pred.total();
  double value = 0.0;
  if (total > 0) {
    std::size_t clipped = 0;
    for (const auto& [gram, count] : pred.counts) clipped += std::min(count, ref.count(gram));
    value = static_cast<double>(clipped) / static_cast<double>(total);
  }
  return {"bleu" + std::to_string(n), pair.item_id, value, Orientation::higher_is_more_similar};
}

double brevity_penalty(std::size_t prediction_length, std::size_t reference_length) {
  if (prediction_length == 0) return 0.0;
  if (prediction_length > reference_length) return 1.0;
  return std::exp(1.0 - static_cast<double>(reference_length) / static_cast<double>(prediction_length));
}

MetricScore bleu_composite(const SummaryPair& pair, const BleuOptions& options) {
  const auto& w = options.weights;
  if (w.empty()) throw std::invalid_argument("BLEU weights must be non-empty");
  if (std::any_of(w.begin(), w.end(), [](double x) { return !(x >= 0.0) || !std::isfinite(x); })) {
    throw std::invalid_argument("BLEU weights must be non-negative");
  }
  if (std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0) > 1e-9) {
    throw std::invalid_argument("BLEU weights must sum to 1");
  }

  MetricScore score{"bleu", pair.item_id, 0.0, Orientation::higher_is_more_similar};
  const double bp =
      options.brevity_penalty ? brevity_penalty(pair.prediction.size(), pair.reference.size()) : 1.0;
  if (bp == 0.0) return score;

  double log_sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == 0.0) continue;
    double p = bleu_n(pair, static_cast<int>(i + 1)).value;
    if (p == 0.0) {
      if (options.smoothing == BleuSmoothing::none) return score;
      p = kBleuEpsilon;
    }
    log_sum += w[i] * std::log(p);
  }
  score.value = bp * std::exp(log_sum);
  return score;
}

double rouge_f_measure(double recall, double precision, double beta) {
  const double b2 = beta * beta;
  const double denom = recall + b2 * precision;
  if (!(denom > 0.0)) return 0.0;
  return (1.0 + b2) * recall * precision / denom;
}

RougeResult rouge_l(const SummaryPair& pair, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("ROUGE beta must be > 0");
  RougeResult r;
  r.beta = beta;
  if (pair.prediction.empty() || pair.reference.empty()) return r;
  const auto lcs = static_cast<double>(lcs_length(pair.prediction, pair.reference));
  r.recall = lcs / static_cast<double>(pair.reference.size());
  r.precision = lcs / static_cast<double>(pair.prediction.size());
  r.f = rouge_f_measure(r.recall, r.precision, beta);
  return r;
}

RougeResult rouge_w(const SummaryPair& pair, double alpha, double beta) {
  if (!(alpha >= 1.0)) throw std::invalid_argument("ROUGE-W alpha must be >= 1");
  if (!(beta > 0.0)) throw std::invalid_argument("ROUGE beta must be > 0");
  RougeResult r;
  r.beta = beta;
  if (pair.prediction.empty() || pair.reference.empty()) return r;
  const double wlcs = wlcs_score(pair.prediction, pair.reference, alpha);
  const auto weight = [alpha](std::size_t k) { return std::pow(static_cast<double>(k), alpha); };
  const auto inverse = [alpha](double x) { return std::pow(x, 1.0 / alpha); };
  r.recall = inverse(wlcs / weight(pair.reference.size()));
  r.precision = inverse(wlcs / weight(pair.prediction.size()));
  r.f = rouge_f_measure(r.recall, r.precision, beta);
  return r;
}

}  // namespace sumeval
