#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sumeval/ngram_metrics.hpp"
#include "sumeval/ratings.hpp"
#include "sumeval/stats.hpp"
#include "sumeval/text_core.hpp"
#include "sumeval/vector_metrics.hpp"

namespace sumeval {

enum class MetricFamily {
  jaccard,
  bleu1,
  bleu,
  rouge_l,
  rouge_w,
  meteor,
  tfidf_cosine,
  tfidf_euclid,
  emb_cosine,
  emb_euclid,
  bertscore,
};

struct MetricSpec {
  MetricFamily family = MetricFamily::jaccard;
  std::string model;  // embedding metrics only

  std::string name() const;
  Orientation orientation() const;
  bool needs_embeddings() const;
  bool operator==(const MetricSpec&) const = default;
};

/// Parses "jaccard", "rouge-w", "emb-cosine:<model>", ... Throws ConfigError.
MetricSpec parse_metric_spec(std::string_view text);
std::vector<MetricSpec> parse_metric_list(std::string_view comma_list);
/// Every metric that needs no embedding file.
std::vector<MetricSpec> default_metrics();

/// Which presentation's answers feed the accuracy, completeness and
/// conciseness aggregates used for correlation. Similarity always pools.
enum class QualityVariant { generated, reference, all };

struct RunConfig {
  std::filesystem::path pairs_path;
  std::optional<std::filesystem::path> ratings_path;
  std::vector<std::filesystem::path> embeddings_paths;
  std::optional<std::filesystem::path> synonyms_path;
  std::optional<std::filesystem::path> tfidf_corpus_path;
  std::vector<MetricSpec> metrics = default_metrics();
  TokenizerMode tokenizer = TokenizerMode::standard;
  BleuOptions bleu;
  double rouge_beta = 1.0;
  double rouge_w_alpha = 1.2;
  MeteorParams meteor;
  std::set<Criterion> inverted = default_inverted_criteria();
  double group_low = 2.0;
  double group_high = 3.0;
  VarianceConvention variance = VarianceConvention::sample;
  QualityVariant quality_variant = QualityVariant::generated;
  std::filesystem::path out_dir = ".";
  unsigned threads = 0;  // 0: hardware concurrency

  /// Throws ConfigError describing the first invalid setting.
  void validate() const;
};

/// Output file names inside RunConfig::out_dir.
namespace files {
inline constexpr const char* kScores = "scores.jsonl";
inline constexpr const char* kScoreErrors = "score_errors.jsonl";
inline constexpr const char* kScoreSummary = "score_summary.csv";
inline constexpr const char* kScoreMeta = "scores.meta.json";
inline constexpr const char* kAggregates = "aggregates.csv";
inline constexpr const char* kRatingStats = "rating_stats.csv";
inline constexpr const char* kAgreement = "agreement.csv";
inline constexpr const char* kRatingsText = "ratings.txt";
inline constexpr const char* kCorrelationCsv = "correlation.csv";
inline constexpr const char* kCorrelationText = "correlation.txt";
inline constexpr const char* kCrossSpearman = "cross_spearman.csv";
inline constexpr const char* kCrossKendall = "cross_kendall.csv";
inline constexpr const char* kCrossText = "cross.txt";
}  // namespace files

/// Pairs JSONL: {"id", "prediction", "reference"} per line. Throws DataError.
std::vector<SummaryPair> load_pairs(const std::filesystem::path& path, TokenizerMode mode);

struct ScoreError {
  std::string item_id;
  std::string metric_name;
  std::string message;
};

struct ScoredMetric {
  MetricScore score;
  bool degenerate = false;  // zero-norm cosine input
};

struct MetricSummary {
  std::string metric_name;
  Orientation orientation = Orientation::higher_is_more_similar;
  std::size_t scored = 0;
  std::size_t errors = 0;
  std::optional<double> mean;
};

struct ScoreRun {
  std::vector<ScoredMetric> scores;  // sorted by (item id, metric name)
  std::vector<ScoreError> errors;    // sorted by (item id, metric name)
  std::vector<MetricSummary> summary;
};

/// Scores every pair with every configured metric and writes scores.jsonl,
/// score_errors.jsonl, score_summary.csv and scores.meta.json to out_dir.
ScoreRun cmd_score(const RunConfig& config);

struct CriterionStats {
  Criterion criterion = Criterion::similarity;
  std::string variant;  // "all", "generated" or "reference"
  DescriptiveStats stats;
};

struct CriterionAgreement {
  Criterion criterion = Criterion::similarity;
  AgreementHistogram histogram;
};

/// An aggregate tagged with the presentation it was computed over.
struct AggregateRow {
  AggregateRating rating;
  std::string variant;  // "all", "generated" or "reference"
};

struct RatingsRun {
  std::vector<AggregateRow> aggregates;
  std::vector<CriterionStats> stats;
  std::vector<CriterionAgreement> agreement;
};

/// Requires config.ratings_path. Writes aggregates.csv, rating_stats.csv,
/// agreement.csv and ratings.txt.
RatingsRun cmd_ratings(const RunConfig& config);

std::vector<AggregateRow> load_aggregates(const std::filesystem::path& path);
std::vector<ScoredMetric> load_scores(const std::filesystem::path& path);

enum class CellStatus { ok, degenerate, insufficient };
std::string_view to_string(CellStatus s);

struct ReportCell {
  std::size_t n = 0;
  CellStatus correlation_status = CellStatus::insufficient;
  std::optional<double> spearman;
  std::optional<double> kendall;
  std::size_t n_agree = 0;
  std::size_t n_disagree = 0;
  std::optional<UTestResult> utest;  // absent when either group is empty
};

struct ReportRow {
  std::string metric_name;
  Orientation orientation = Orientation::higher_is_more_similar;
  std::map<Criterion, ReportCell> cells;
};

struct CorrelationReport {
  std::vector<std::string> header;      // configuration lines
  std::vector<Criterion> criteria;      // columns, in report order
  std::vector<ReportRow> rows;          // one per metric
  std::size_t warnings = 0;             // cells with insufficient data

  const ReportRow* find(std::string_view metric) const;
};

/// Rank correlations and agree/disagree U-tests of every metric against
/// every criterion present in the aggregates. Writes correlation.csv and
/// correlation.txt.
CorrelationReport cmd_correlate(const std::filesystem::path& score_file, const std::filesystem::path& aggregates_file,
                                const RunConfig& config);

struct CrossMatrix {
  std::vector<std::string> labels;  // metrics, then "human:<criterion>"
  Eigen::MatrixXd spearman;          // NaN where undefined
  Eigen::MatrixXd kendall;
  Eigen::MatrixXi n;
};

/// Pairwise Spearman and Kendall correlations among all metric score series
/// and criterion agreement series, each pair aligned on shared items.
CrossMatrix cmd_cross(const std::filesystem::path& score_file, const std::filesystem::path& aggregates_file,
                      const RunConfig& config);

/// score, ratings, correlate and cross in sequence, all under out_dir.
void cmd_report(const RunConfig& config);

/// Fixed-point rendering used in text tables.
std::string format_fixed(double value, int decimals = 4);
/// Round-trip rendering used in CSV files.
std::string format_full(double value);

}  // namespace sumeval
