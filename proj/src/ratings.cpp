#include "sumeval/ratings.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "sumeval/error.hpp"

namespace sumeval {

std::string_view to_string(ShownVariant v) { return v == ShownVariant::generated ? "generated" : "reference"; }

std::string_view to_string(Criterion c) {
  switch (c) {
    case Criterion::accuracy: return "accuracy";
    case Criterion::completeness: return "completeness";
    case Criterion::conciseness: return "conciseness";
    case Criterion::similarity: return "similarity";
  }
  return "unknown";
}

ShownVariant parse_shown_variant(std::string_view name) {
  if (name == "generated") return ShownVariant::generated;
  if (name == "reference") return ShownVariant::reference;
  throw std::invalid_argument("unknown shown_variant '" + std::string(name) + "'");
}

Criterion parse_criterion(std::string_view name) {
  for (Criterion c : kAllCriteria) {
    if (to_string(c) == name) return c;
  }
  throw std::invalid_argument("unknown criterion '" + std::string(name) + "'");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<RatingRecord> load_ratings(std::istream& in) {
  static constexpr const char* kHeader = "participant_id,item_id,shown_variant,criterion,answer";
  std::vector<RatingRecord> records;
  std::set<std::tuple<std::string, std::string, Criterion>> seen;
  std::string text;
  std::size_t line = 0;
  bool header_seen = false;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (line == 1 && text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);
    if (trim(text).empty()) continue;
    if (!header_seen) {
      if (trim(text) != kHeader) throw DataError(std::string("expected header '") + kHeader + "'", line);
      header_seen = true;
      continue;
    }
    auto fields = split_csv_line(text);
    if (fields.size() != 5) {
      throw DataError("expected 5 fields, got " + std::to_string(fields.size()), line);
    }
    for (auto& f : fields) f = trim(std::move(f));

    RatingRecord rec;
    rec.participant_id = fields[0];
    rec.item_id = fields[1];
    if (rec.participant_id.empty() || rec.item_id.empty()) throw DataError("empty participant or item id", line);
    try {
      rec.shown_variant = parse_shown_variant(fields[2]);
      rec.criterion = parse_criterion(fields[3]);
    } catch (const std::invalid_argument& e) {
      throw DataError(e.what(), line);
    }
    const std::string& answer = fields[4];
    if (answer.size() != 1 || answer[0] < '0' || answer[0] > '9') {
      throw DataError("answer '" + answer + "' is not an integer in 1..4", line);
    }
    rec.answer = answer[0] - '0';
    if (rec.answer < 1 || rec.answer > 4) throw DataError("answer " + answer + " outside 1..4", line);

    if (!seen.emplace(rec.participant_id, rec.item_id, rec.criterion).second) {
      throw DataError("duplicate rating for participant '" + rec.participant_id + "', item '" + rec.item_id +
                          "', criterion '" + std::string(to_string(rec.criterion)) + "'",
                      line);
    }
    records.push_back(std::move(rec));
  }
  if (!header_seen) throw DataError("missing header line", line == 0 ? 1 : line);
  return records;
}

std::vector<RatingRecord> load_ratings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open ratings file '" + path.string() + "'");
  return load_ratings(in);
}

std::set<Criterion> default_inverted_criteria() { return {Criterion::completeness, Criterion::conciseness}; }

RatingRecord normalize_polarity(RatingRecord record, const std::set<Criterion>& inverted) {
  if (inverted.count(record.criterion)) record.answer = 5 - record.answer;
  return record;
}

std::vector<AggregateRating> aggregate(std::span<const RatingRecord> records, Criterion criterion,
                                       std::optional<ShownVariant> variant) {
  std::map<std::string, std::pair<long, std::size_t>> sums;
  for (const auto& r : records) {
    if (r.criterion != criterion) continue;
    if (variant && r.shown_variant != *variant) continue;
    auto& [sum, count] = sums[r.item_id];
    sum += r.answer;
    ++count;
  }
  std::vector<AggregateRating> out;
  out.reserve(sums.size());
  for (const auto& [item, sc] : sums) {
    out.push_back({item, criterion, static_cast<double>(sc.first) / static_cast<double>(sc.second), sc.second});
  }
  return out;
}

DescriptiveStats descriptive_stats(std::span<const double> values, VarianceConvention convention) {
  if (values.empty()) throw std::invalid_argument("descriptive statistics need at least one value");
  if (std::any_of(values.begin(), values.end(), [](double v) { return !(v > 0.0) || !std::isfinite(v); })) {
    throw std::invalid_argument("descriptive statistics need strictly positive finite values");
  }
  const auto n = static_cast<double>(values.size());
  DescriptiveStats s;
  s.count = values.size();
  double sum = 0.0, log_sum = 0.0, inv_sum = 0.0;
  for (double v : values) {
    sum += v;
    log_sum += std::log(v);
    inv_sum += 1.0 / v;
  }
  s.mean = sum / n;
  s.geometric_mean = std::exp(log_sum / n);
  s.harmonic_mean = n / inv_sum;

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  s.median = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);

  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  const double denom = convention == VarianceConvention::sample ? n - 1.0 : n;
  s.variance = denom > 0.0 ? ss / denom : 0.0;
  s.stddev = std::sqrt(s.variance);
  s.variance = s.stddev * s.stddev;
  s.cv = s.stddev / s.mean;
  return s;
}

std::size_t AgreementHistogram::total_pairs() const noexcept {
  return std::accumulate(pair_counts.begin(), pair_counts.end(), std::size_t{0});
}

std::map<int, double> AgreementHistogram::fractions() const {
  std::map<int, double> out;
  const std::size_t total = total_pairs();
  if (total == 0) return out;
  for (int d = 0; d < 4; ++d) {
    out[d] = static_cast<double>(pair_counts[static_cast<std::size_t>(d)]) / static_cast<double>(total);
  }
  return out;
}

AgreementHistogram agreement_histogram(std::span<const RatingRecord> records) {
  std::map<std::tuple<std::string, Criterion, ShownVariant>, std::vector<int>> groups;
  for (const auto& r : records) groups[{r.item_id, r.criterion, r.shown_variant}].push_back(r.answer);
  AgreementHistogram h;
  for (const auto& [key, answers] : groups) {
    for (std::size_t a = 0; a < answers.size(); ++a) {
      for (std::size_t b = a + 1; b < answers.size(); ++b) {
        const int diff = std::abs(answers[a] - answers[b]);
        ++h.pair_counts[static_cast<std::size_t>(std::min(diff, 3))];
      }
    }
  }
  return h;
}

GroupSplit split_groups(std::span<const AggregateRating> aggregates, double low, double high) {
  if (!(low < high)) throw std::invalid_argument("group thresholds must satisfy low < high");
  GroupSplit g;
  for (const auto& a : aggregates) {
    if (a.mean <= low) {
      g.agree_ids.push_back(a.item_id);
    } else if (a.mean >= high) {
      g.disagree_ids.push_back(a.item_id);
    } else {
      g.excluded_ids.push_back(a.item_id);
    }
  }
  std::sort(g.agree_ids.begin(), g.agree_ids.end());
  std::sort(g.disagree_ids.begin(), g.disagree_ids.end());
  std::sort(g.excluded_ids.begin(), g.excluded_ids.end());
  return g;
}

}  // namespace sumeval
