#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "sumeval/error.hpp"
#include "sumeval/report.hpp"

namespace {

using namespace sumeval;

struct Flags {
  std::string pairs;
  std::string ratings;
  std::vector<std::string> embeddings;
  std::string synonyms;
  std::string tfidf_corpus;
  std::string metrics;
  std::string tokenizer = "standard";
  std::string invert = "completeness,conciseness";
  std::vector<double> bleu_weights{0.25, 0.25, 0.25, 0.25};
  std::string bleu_smoothing = "none";
  bool no_brevity_penalty = false;
  double rouge_beta = 1.0;
  double rouge_w_alpha = 1.2;
  double meteor_alpha = 0.9;
  double meteor_gamma = 0.5;
  double meteor_beta = 3.0;
  double group_low = 2.0;
  double group_high = 3.0;
  std::string variance = "sample";
  std::string quality_variant = "generated";
  std::string scores;
  std::string aggregates;
  std::string out = ".";
  unsigned threads = 0;
};

std::set<Criterion> parse_criteria(const std::string& list) {
  std::set<Criterion> out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const auto comma = list.find(',', pos);
    const std::string item = list.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!item.empty() && item != "none") {
      try {
        out.insert(parse_criterion(item));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

RunConfig to_config(const Flags& f) {
  RunConfig c;
  c.pairs_path = f.pairs;
  if (!f.ratings.empty()) c.ratings_path = f.ratings;
  for (const auto& e : f.embeddings) c.embeddings_paths.emplace_back(e);
  if (!f.synonyms.empty()) c.synonyms_path = f.synonyms;
  if (!f.tfidf_corpus.empty()) c.tfidf_corpus_path = f.tfidf_corpus;
  if (!f.metrics.empty()) c.metrics = parse_metric_list(f.metrics);
  c.tokenizer = parse_tokenizer_mode(f.tokenizer);
  c.bleu.weights = f.bleu_weights;
  if (f.bleu_smoothing == "none") {
    c.bleu.smoothing = BleuSmoothing::none;
  } else if (f.bleu_smoothing == "add_epsilon") {
    c.bleu.smoothing = BleuSmoothing::add_epsilon;
  } else {
    throw ConfigError("unknown BLEU smoothing '" + f.bleu_smoothing + "'");
  }
  c.bleu.brevity_penalty = !f.no_brevity_penalty;
  c.rouge_beta = f.rouge_beta;
  c.rouge_w_alpha = f.rouge_w_alpha;
  c.meteor = {f.meteor_alpha, f.meteor_gamma, f.meteor_beta};
  c.inverted = parse_criteria(f.invert);
  c.group_low = f.group_low;
  c.group_high = f.group_high;
  if (!(c.group_low < c.group_high)) throw ConfigError("group thresholds must satisfy low < high");
  if (f.variance == "sample") {
    c.variance = VarianceConvention::sample;
  } else if (f.variance == "population") {
    c.variance = VarianceConvention::population;
  } else {
    throw ConfigError("unknown variance convention '" + f.variance + "'");
  }
  if (f.quality_variant == "generated") {
    c.quality_variant = QualityVariant::generated;
  } else if (f.quality_variant == "reference") {
    c.quality_variant = QualityVariant::reference;
  } else if (f.quality_variant == "all") {
    c.quality_variant = QualityVariant::all;
  } else {
    throw ConfigError("unknown quality variant '" + f.quality_variant + "'");
  }
  c.out_dir = f.out;
  c.threads = f.threads;
  return c;
}

void add_options(CLI::App& app, Flags& f) {
  app.add_option("--out", f.out, "Output directory");
  app.add_option("--tokenizer", f.tokenizer, "standard|pretokenized");
  app.add_option("--pairs", f.pairs, "Pairs JSONL");
  app.add_option("--ratings", f.ratings, "Ratings CSV");
  app.add_option("--embeddings", f.embeddings, "Embedding JSONL, one model per file (repeatable)");
  app.add_option("--metrics", f.metrics, "Comma separated metric list");
  app.add_option("--synonyms", f.synonyms, "Synonym sets for METEOR, one set per line");
  app.add_option("--tfidf-corpus", f.tfidf_corpus, "Documents for idf, one per line (default: all pair texts)");
  app.add_option("--bleu-weights", f.bleu_weights, "BLEU n-gram weights")->delimiter(',');
  app.add_option("--bleu-smoothing", f.bleu_smoothing, "none|add_epsilon");
  app.add_flag("--no-brevity-penalty", f.no_brevity_penalty, "Disable the BLEU brevity penalty");
  app.add_option("--rouge-beta", f.rouge_beta, "ROUGE F-measure beta");
  app.add_option("--rouge-w-alpha", f.rouge_w_alpha, "ROUGE-W weighting exponent");
  app.add_option("--meteor-alpha", f.meteor_alpha, "METEOR precision/recall balance");
  app.add_option("--meteor-gamma", f.meteor_gamma, "METEOR fragmentation penalty weight");
  app.add_option("--meteor-beta", f.meteor_beta, "METEOR fragmentation penalty exponent");
  app.add_option("--threads", f.threads, "Scoring threads (0: all cores)");
  app.add_option("--invert", f.invert, "Criteria whose answers are flipped (5 - answer), or 'none'");
  app.add_option("--variance", f.variance, "sample|population");
  app.add_option("--group-low", f.group_low, "Mean rating at or below which an item is in the agree group");
  app.add_option("--group-high", f.group_high, "Mean rating at or above which an item is in the disagree group");
  app.add_option("--quality-variant", f.quality_variant, "generated|reference|all, for non-similarity criteria");
  app.add_option("--scores", f.scores, "Score JSONL for correlate/cross (default: <out>/scores.jsonl)");
  app.add_option("--aggregates", f.aggregates, "Aggregates CSV for correlate/cross (default: <out>/aggregates.csv)");
}

int run(int argc, char** argv) {
  CLI::App app{"Summary similarity metrics and their agreement with human ratings"};
  app.set_config("--config", "", "Flat key = value file; command-line flags override it");
  app.require_subcommand(1);
  Flags f;

  add_options(app, f);
  app.fallthrough();
  auto* score = app.add_subcommand("score", "Score every pair with the selected metrics");
  auto* ratings = app.add_subcommand("ratings", "Aggregate ratings, descriptive statistics and rater agreement");
  auto* correlate = app.add_subcommand("correlate", "Correlate metric scores with agreement levels");
  auto* cross = app.add_subcommand("cross", "Cross-correlate metrics and criteria");
  auto* report = app.add_subcommand("report", "Run score, ratings, correlate and cross");
  for (auto* sub : {score, ratings, correlate, cross, report}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const RunConfig config = to_config(f);
    const auto scores = f.scores.empty() ? config.out_dir / files::kScores : std::filesystem::path(f.scores);
    const auto aggregates =
        f.aggregates.empty() ? config.out_dir / files::kAggregates : std::filesystem::path(f.aggregates);
    if (score->parsed()) {
      const ScoreRun r = cmd_score(config);
      std::cerr << r.scores.size() << " scores, " << r.errors.size() << " errors\n";
    } else if (ratings->parsed()) {
      const RatingsRun r = cmd_ratings(config);
      std::cerr << r.aggregates.size() << " aggregate rows\n";
    } else if (correlate->parsed()) {
      const CorrelationReport r = cmd_correlate(scores, aggregates, config);
      if (r.warnings) std::cerr << r.warnings << " cells lacked overlapping items\n";
    } else if (cross->parsed()) {
      cmd_cross(scores, aggregates, config);
    } else if (report->parsed()) {
      cmd_report(config);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
