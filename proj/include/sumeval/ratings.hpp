#pragma once

#include <array>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sumeval {

enum class ShownVariant { generated, reference };

enum class Criterion { accuracy, completeness, conciseness, similarity };

inline constexpr std::array<Criterion, 4> kAllCriteria{Criterion::similarity, Criterion::accuracy,
                                                       Criterion::completeness, Criterion::conciseness};

std::string_view to_string(ShownVariant v);
std::string_view to_string(Criterion c);
ShownVariant parse_shown_variant(std::string_view name);
Criterion parse_criterion(std::string_view name);

/// One participant answer on the 1..4 scale (1 = strongly agree).
struct RatingRecord {
  std::string participant_id;
  std::string item_id;
  ShownVariant shown_variant = ShownVariant::generated;
  Criterion criterion = Criterion::similarity;
  int answer = 1;
};

/// Reads the ratings CSV (header participant_id,item_id,shown_variant,criterion,answer).
/// Throws DataError naming the line for malformed rows, answers outside
/// 1..4 and repeated (participant, item, criterion) rows.
std::vector<RatingRecord> load_ratings(std::istream& in);
std::vector<RatingRecord> load_ratings(const std::filesystem::path& path);

/// Criteria whose questions are negatively phrased by default.
std::set<Criterion> default_inverted_criteria();

/// answer <- 5 - answer for criteria in `inverted`.
RatingRecord normalize_polarity(RatingRecord record, const std::set<Criterion>& inverted);

struct AggregateRating {
  std::string item_id;
  Criterion criterion = Criterion::similarity;
  double mean = 0.0;
  std::size_t count = 0;
};

/// Per-item mean answer for one criterion, sorted by item id. When `variant`
/// is set only records shown with that variant contribute; otherwise both
/// presentations are pooled.
std::vector<AggregateRating> aggregate(std::span<const RatingRecord> records, Criterion criterion,
                                       std::optional<ShownVariant> variant = std::nullopt);

enum class VarianceConvention { sample, population };

struct DescriptiveStats {
  double mean = 0.0;
  double geometric_mean = 0.0;
  double harmonic_mean = 0.0;
  double median = 0.0;
  double stddev = 0.0;
  double cv = 0.0;
  double variance = 0.0;
  std::size_t count = 0;
};

/// Values must be non-empty and strictly positive. A single value has zero
/// spread under either convention.
DescriptiveStats descriptive_stats(std::span<const double> values,
                                   VarianceConvention convention = VarianceConvention::sample);

/// Distribution of |answer difference| over every unordered pair of
/// participants who rated the same (item, criterion, shown variant).
struct AgreementHistogram {
  std::array<std::size_t, 4> pair_counts{};

  std::size_t total_pairs() const noexcept;
  /// Fractions for differences 0..3; empty when no pair exists.
  std::map<int, double> fractions() const;
};

AgreementHistogram agreement_histogram(std::span<const RatingRecord> records);

struct GroupSplit {
  std::vector<std::string> agree_ids;     // mean <= low
  std::vector<std::string> disagree_ids;  // mean >= high
  std::vector<std::string> excluded_ids;  // strictly between
};

/// Throws std::invalid_argument unless low < high.
GroupSplit split_groups(std::span<const AggregateRating> aggregates, double low = 2.0, double high = 3.0);

}  // namespace sumeval
