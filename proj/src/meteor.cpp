#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "sumeval/error.hpp"
#include "sumeval/ngram_metrics.hpp"

namespace sumeval {

SynonymLexicon SynonymLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open synonym lexicon '" + path.string() + "'");
  return parse(in);
}

SynonymLexicon SynonymLexicon::parse(std::istream& in) {
  SynonymLexicon lexicon;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream words(line);
    std::vector<std::string> set;
    for (std::string w; words >> w;) set.push_back(std::move(w));
    if (!set.empty()) lexicon.add_set(set);
  }
  return lexicon;
}

void SynonymLexicon::add_set(const std::vector<std::string>& words) {
  const std::size_t id = set_count_++;
  for (const auto& w : words) {
    auto& sets = membership_[w];
    if (sets.empty() || sets.back() != id) sets.push_back(id);
  }
}

bool SynonymLexicon::are_synonyms(std::string_view a, std::string_view b) const {
  if (a == b) return false;
  const auto ia = membership_.find(std::string(a));
  const auto ib = membership_.find(std::string(b));
  if (ia == membership_.end() || ib == membership_.end()) return false;
  // Set ids are appended in increasing order.
  const auto& sa = ia->second;
  const auto& sb = ib->second;
  std::size_t x = 0, y = 0;
  while (x < sa.size() && y < sb.size()) {
    if (sa[x] == sb[y]) return true;
    if (sa[x] < sb[y]) ++x; else ++y;
  }
  return false;
}

std::optional<MeteorStage> meteor_match_stage(const std::string& prediction_token,
                                              const std::string& reference_token,
                                              const SynonymLexicon* synonyms) {
  if (prediction_token == reference_token) return MeteorStage::exact;
  if (stem(prediction_token) == stem(reference_token)) return MeteorStage::stem;
  if (synonyms && synonyms->are_synonyms(prediction_token, reference_token)) return MeteorStage::synonym;
  return std::nullopt;
}

namespace {

void validate(const MeteorParams& p) {
  if (!(p.alpha > 0.0 && p.alpha <= 1.0)) throw std::invalid_argument("METEOR alpha must be in (0, 1]");
  if (!(p.gamma > 0.0 && p.gamma <= 1.0)) throw std::invalid_argument("METEOR gamma must be in (0, 1]");
  if (!(p.beta > 0.0)) throw std::invalid_argument("METEOR beta must be > 0");
}

constexpr int kNoStage = -1;

// stage[i][j]: earliest stage linking prediction i to reference j, or kNoStage.
std::vector<std::vector<int>> stage_table(const SummaryPair& pair, const SynonymLexicon* synonyms) {
  const auto& pred = pair.prediction.tokens;
  const auto& ref = pair.reference.tokens;
  std::vector<std::string> pred_stems, ref_stems;
  for (const auto& t : pred) pred_stems.push_back(stem(t));
  for (const auto& t : ref) ref_stems.push_back(stem(t));

  std::vector<std::vector<int>> table(pred.size(), std::vector<int>(ref.size(), kNoStage));
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = 0; j < ref.size(); ++j) {
      if (pred[i] == ref[j]) {
        table[i][j] = static_cast<int>(MeteorStage::exact);
      } else if (pred_stems[i] == ref_stems[j]) {
        table[i][j] = static_cast<int>(MeteorStage::stem);
      } else if (synonyms && synonyms->are_synonyms(pred[i], ref[j])) {
        table[i][j] = static_cast<int>(MeteorStage::synonym);
      }
    }
  }
  return table;
}

std::vector<MeteorLink> greedy_alignment(const std::vector<std::vector<int>>& table, std::size_t ref_len) {
  const std::size_t pred_len = table.size();
  constexpr auto kFree = static_cast<std::size_t>(-1);
  std::vector<std::size_t> pred_to_ref(pred_len, kFree);
  std::vector<bool> ref_used(ref_len, false);

  for (int stage = 0; stage < 3; ++stage) {
    for (std::size_t i = 0; i < pred_len; ++i) {
      if (pred_to_ref[i] != kFree) continue;
      std::size_t choice = kFree;
      if (i > 0 && pred_to_ref[i - 1] != kFree) {
        const std::size_t next = pred_to_ref[i - 1] + 1;
        if (next < ref_len && !ref_used[next] && table[i][next] == stage) choice = next;
      }
      for (std::size_t j = 0; choice == kFree && j < ref_len; ++j) {
        if (!ref_used[j] && table[i][j] == stage) choice = j;
      }
      if (choice != kFree) {
        pred_to_ref[i] = choice;
        ref_used[choice] = true;
      }
    }
  }

  std::vector<MeteorLink> links;
  for (std::size_t i = 0; i < pred_len; ++i) {
    if (pred_to_ref[i] != kFree) {
      links.push_back({i, pred_to_ref[i], static_cast<MeteorStage>(table[i][pred_to_ref[i]])});
    }
  }
  return links;
}

// Exact search over prediction positions, memoised on the set of reference
// positions still reachable by later predictions and on whether the previous
// prediction's link can be extended. The objective packs
// (exact, stem, synonym, adjacent-link count) into one integer compared
// lexicographically; chunks = matches - adjacent links.
class ExactAligner {
 public:
  static constexpr std::size_t kStateBudget = 200000;

  ExactAligner(const std::vector<std::vector<int>>& table, std::size_t ref_len)
      : table_(table), pred_len_(table.size()), ref_len_(ref_len), reachable_(table.size() + 1, 0) {
    for (std::size_t i = pred_len_; i-- > 0;) {
      std::uint64_t bits = reachable_[i + 1];
      for (std::size_t j = 0; j < ref_len_; ++j) {
        if (table_[i][j] != kNoStage) bits |= std::uint64_t{1} << j;
      }
      reachable_[i] = bits;
    }
  }

  std::optional<std::vector<MeteorLink>> solve() {
    if (ref_len_ > 64 || pred_len_ > 250) return std::nullopt;
    if (!best(0, 0, kNone)) return std::nullopt;
    std::vector<MeteorLink> links;
    std::size_t i = 0;
    std::uint64_t used = 0;
    int prev = kNone;
    while (i < pred_len_) {
      const Entry& e = memo_.at(key(i, used, prev));
      if (e.choice >= 0) {
        const auto j = static_cast<std::size_t>(e.choice);
        links.push_back({i, j, static_cast<MeteorStage>(table_[i][j])});
        used |= std::uint64_t{1} << j;
        prev = e.choice;
      } else {
        prev = kNone;
      }
      ++i;
    }
    return links;
  }

 private:
  static constexpr int kNone = -1;
  static constexpr std::int64_t kStageUnit[3] = {std::int64_t{1} << 24, std::int64_t{1} << 16,
                                                  std::int64_t{1} << 8};

  struct Entry {
    std::int64_t value;
    int choice;
  };

  struct Key {
    std::uint64_t used;
    std::uint32_t index;
    std::int32_t prev;
    bool operator==(const Key&) const = default;
  };

  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      std::uint64_t h = k.used * 0x9E3779B97F4A7C15ULL;
      h ^= (static_cast<std::uint64_t>(k.index) << 32 | static_cast<std::uint32_t>(k.prev)) + 0x7F4A7C15ULL +
           (h << 6) + (h >> 2);
      return static_cast<std::size_t>(h);
    }
  };

  Key key(std::size_t i, std::uint64_t used, int prev) const {
    const std::uint64_t live = used & reachable_[i];
    int p = kNone;
    if (prev != kNone && i < pred_len_) {
      const auto next = static_cast<std::size_t>(prev) + 1;
      if (next < ref_len_ && table_[i][next] != kNoStage) p = prev;
    }
    return {live, static_cast<std::uint32_t>(i), p};
  }

  std::int64_t value_of(std::size_t i, std::uint64_t used, int prev) const {
    return i == pred_len_ ? 0 : memo_.at(key(i, used, prev)).value;
  }

  // Returns false once the state budget is exhausted.
  bool best(std::size_t i, std::uint64_t used, int prev) {
    if (i == pred_len_) return true;
    const Key k = key(i, used, prev);
    if (memo_.count(k)) return true;
    if (memo_.size() >= kStateBudget) return false;

    if (!best(i + 1, used, kNone)) return false;
    Entry entry{value_of(i + 1, used, kNone), -1};

    for (std::size_t j = 0; j < ref_len_; ++j) {
      const int stage = table_[i][j];
      if (stage == kNoStage || (used >> j & 1U)) continue;
      const std::uint64_t next_used = used | (std::uint64_t{1} << j);
      if (!best(i + 1, next_used, static_cast<int>(j))) return false;
      std::int64_t value = kStageUnit[stage] + value_of(i + 1, next_used, static_cast<int>(j));
      if (prev != kNone && j == static_cast<std::size_t>(prev) + 1) value += 1;
      if (value > entry.value) entry = {value, static_cast<int>(j)};
    }
    memo_.emplace(k, entry);
    return true;
  }

  const std::vector<std::vector<int>>& table_;
  std::size_t pred_len_;
  std::size_t ref_len_;
  std::vector<std::uint64_t> reachable_;
  std::unordered_map<Key, Entry, KeyHash> memo_;
};

}  // namespace

MeteorResult meteor_from_alignment(std::vector<MeteorLink> alignment, std::size_t prediction_length,
                                   std::size_t reference_length, const MeteorParams& params) {
  validate(params);
  std::sort(alignment.begin(), alignment.end(),
            [](const MeteorLink& a, const MeteorLink& b) { return a.prediction_index < b.prediction_index; });
  MeteorResult r;
  r.matches = alignment.size();
  for (std::size_t k = 0; k < alignment.size(); ++k) {
    ++r.stage_counts[static_cast<std::size_t>(alignment[k].stage)];
    const bool continues = k > 0 && alignment[k].prediction_index == alignment[k - 1].prediction_index + 1 &&
                           alignment[k].reference_index == alignment[k - 1].reference_index + 1;
    if (!continues) ++r.chunks;
  }
  r.alignment = std::move(alignment);
  if (r.matches == 0) return r;

  const auto m = static_cast<double>(r.matches);
  r.precision = m / static_cast<double>(prediction_length);
  r.recall = m / static_cast<double>(reference_length);
  r.fmean = r.precision * r.recall / (params.alpha * r.precision + (1.0 - params.alpha) * r.recall);
  r.penalty = params.gamma * std::pow(static_cast<double>(r.chunks) / m, params.beta);
  r.score = r.fmean * (1.0 - r.penalty);
  return r;
}

MeteorResult meteor_greedy(const SummaryPair& pair, const MeteorParams& params, const SynonymLexicon* synonyms) {
  validate(params);
  const auto table = stage_table(pair, synonyms);
  auto result = meteor_from_alignment(greedy_alignment(table, pair.reference.size()), pair.prediction.size(),
                                      pair.reference.size(), params);
  result.exact_alignment = false;
  return result;
}

MeteorResult meteor(const SummaryPair& pair, const MeteorParams& params, const SynonymLexicon* synonyms) {
  validate(params);
  const auto table = stage_table(pair, synonyms);
  ExactAligner aligner(table, pair.reference.size());
  if (auto links = aligner.solve()) {
    return meteor_from_alignment(std::move(*links), pair.prediction.size(), pair.reference.size(), params);
  }
  auto result = meteor_from_alignment(greedy_alignment(table, pair.reference.size()), pair.prediction.size(),
                                      pair.reference.size(), params);
  result.exact_alignment = false;
  return result;
}

}  // namespace sumeval
