#include "sumeval/report.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>
#include <tuple>
#include <unordered_map>

#include "sumeval/error.hpp"

namespace sumeval {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Metric specs and configuration

namespace {

struct FamilyInfo {
  MetricFamily family;
  const char* name;
  bool takes_model;
  Orientation orientation;
};

constexpr FamilyInfo kFamilies[] = {
    {MetricFamily::jaccard, "jaccard", false, Orientation::higher_is_more_similar},
    {MetricFamily::bleu1, "bleu1", false, Orientation::higher_is_more_similar},
    {MetricFamily::bleu, "bleu", false, Orientation::higher_is_more_similar},
    {MetricFamily::rouge_l, "rouge-l", false, Orientation::higher_is_more_similar},
    {MetricFamily::rouge_w, "rouge-w", false, Orientation::higher_is_more_similar},
    {MetricFamily::meteor, "meteor", false, Orientation::higher_is_more_similar},
    {MetricFamily::tfidf_cosine, "tfidf-cosine", false, Orientation::higher_is_more_similar},
    {MetricFamily::tfidf_euclid, "tfidf-euclid", false, Orientation::lower_is_more_similar},
    {MetricFamily::emb_cosine, "emb-cosine", true, Orientation::higher_is_more_similar},
    {MetricFamily::emb_euclid, "emb-euclid", true, Orientation::lower_is_more_similar},
    {MetricFamily::bertscore, "bertscore", true, Orientation::higher_is_more_similar},
};

const FamilyInfo& info(MetricFamily f) {
  for (const auto& i : kFamilies) {
    if (i.family == f) return i;
  }
  throw std::logic_error("unknown metric family");
}

std::string_view to_string(QualityVariant v) {
  switch (v) {
    case QualityVariant::generated: return "generated";
    case QualityVariant::reference: return "reference";
    case QualityVariant::all: return "all";
  }
  return "all";
}

std::string_view to_string(BleuSmoothing s) { return s == BleuSmoothing::none ? "none" : "add_epsilon"; }

}  // namespace

std::string MetricSpec::name() const {
  const auto& i = info(family);
  return i.takes_model ? std::string(i.name) + ":" + model : std::string(i.name);
}

Orientation MetricSpec::orientation() const { return info(family).orientation; }

bool MetricSpec::needs_embeddings() const { return info(family).takes_model; }

MetricSpec parse_metric_spec(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  for (const auto& i : kFamilies) {
    if (head != i.name) continue;
    if (i.takes_model) {
      if (colon == std::string_view::npos || colon + 1 == text.size()) {
        throw ConfigError("metric '" + std::string(text) + "' needs a model: " + i.name + ":<model>");
      }
      return {i.family, std::string(text.substr(colon + 1))};
    }
    if (colon != std::string_view::npos) throw ConfigError("metric '" + std::string(head) + "' takes no model");
    return {i.family, {}};
  }
  throw ConfigError("unknown metric '" + std::string(text) + "'");
}

std::vector<MetricSpec> parse_metric_list(std::string_view comma_list) {
  std::vector<MetricSpec> out;
  std::size_t pos = 0;
  while (pos <= comma_list.size()) {
    const auto comma = comma_list.find(',', pos);
    std::string_view item = comma_list.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) out.push_back(parse_metric_spec(item));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::vector<MetricSpec> default_metrics() {
  std::vector<MetricSpec> out;
  for (const auto& i : kFamilies) {
    if (!i.takes_model) out.push_back({i.family, {}});
  }
  return out;
}

void RunConfig::validate() const {
  if (pairs_path.empty()) throw ConfigError("--pairs is required");
  if (metrics.empty()) throw ConfigError("at least one metric must be enabled");
  std::set<std::string> names;
  for (const auto& m : metrics) {
    if (!names.insert(m.name()).second) throw ConfigError("metric '" + m.name() + "' listed twice");
  }
  if (!(group_low < group_high)) throw ConfigError("group thresholds must satisfy low < high");
  try {
    // Parameter checks live with the metrics; probe them on an empty pair.
    const SummaryPair probe;
    bleu_composite(probe, bleu);
    rouge_l(probe, rouge_beta);
    rouge_w(probe, rouge_w_alpha, rouge_beta);
    sumeval::meteor(probe, meteor);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const bool needs_embeddings =
      std::any_of(metrics.begin(), metrics.end(), [](const MetricSpec& m) { return m.needs_embeddings(); });
  if (needs_embeddings && embeddings_paths.empty()) {
    throw ConfigError("embedding metrics requested but no --embeddings file given");
  }
}

// ---------------------------------------------------------------------------
// Formatting and file helpers

std::string format_fixed(double value, int decimals) {
  if (std::isnan(value)) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string s(buf);
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);  // no "-0.0000"
  return s;
}

std::string format_full(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  return out;
}

std::ifstream open_input(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(std::string("cannot open ") + what + " '" + path.string() + "'");
  return in;
}

bool read_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

bool blank(const std::string& s) { return s.find_first_not_of(" \t") == std::string::npos; }

json parse_json_line(const std::string& text, std::size_t line) {
  try {
    json obj = json::parse(text);
    if (!obj.is_object()) throw DataError("record must be a JSON object", line);
    return obj;
  } catch (const json::parse_error& e) {
    throw DataError(std::string("malformed JSON: ") + e.what(), line);
  }
}

std::string json_string(const json& obj, const char* field, std::size_t line) {
  const auto it = obj.find(field);
  if (it == obj.end() || !it->is_string()) throw DataError(std::string("missing string field '") + field + "'", line);
  return it->get<std::string>();
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Aligned text table: first column left-aligned, the rest right-aligned.
std::string render_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows) {
    width.resize(std::max(width.size(), r.size()), 0);
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  std::string out;
  for (const auto& r : rows) {
    std::string line;
    for (std::size_t c = 0; c < r.size(); ++c) {
      const std::string pad(width[c] - r[c].size(), ' ');
      if (c == 0) {
        line += r[c] + pad;
      } else {
        line += "  " + pad + r[c];
      }
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

std::size_t metric_rank(const std::string& name) {
  const auto head = name.substr(0, name.find(':'));
  for (std::size_t i = 0; i < std::size(kFamilies); ++i) {
    if (head == kFamilies[i].name) return i;
  }
  return std::size(kFamilies);
}

bool metric_order(const std::string& a, const std::string& b) {
  return std::make_pair(metric_rank(a), a) < std::make_pair(metric_rank(b), b);
}

}  // namespace

// ---------------------------------------------------------------------------
// score

std::vector<SummaryPair> load_pairs(const std::filesystem::path& path, TokenizerMode mode) {
  auto in = open_input(path, "pairs file");
  std::vector<SummaryPair> pairs;
  std::set<std::string> ids;
  std::string text;
  std::size_t line = 0;
  while (read_line(in, text)) {
    ++line;
    if (blank(text)) continue;
    const json obj = parse_json_line(text, line);
    SummaryPair p;
    p.item_id = json_string(obj, "id", line);
    if (p.item_id.empty()) throw DataError("empty id", line);
    if (!ids.insert(p.item_id).second) throw DataError("duplicate id '" + p.item_id + "'", line);
    p.prediction = normalize_tokenize(json_string(obj, "prediction", line), mode);
    p.reference = normalize_tokenize(json_string(obj, "reference", line), mode);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

namespace {

struct ScoringContext {
  const RunConfig& config;
  std::map<std::string, EmbeddingStore> stores;
  std::optional<SynonymLexicon> synonyms;
  std::optional<TfIdfModel> tfidf;
};

struct ItemResult {
  std::vector<ScoredMetric> scores;
  std::vector<ScoreError> errors;
};

const EmbeddingRecord& require_record(const EmbeddingStore& store, const std::string& item, TextRole role,
                                      EmbeddingKind kind) {
  const EmbeddingRecord* rec = store.find(item, role);
  if (!rec) {
    throw InsufficientData("no " + std::string(to_string(role)) + " embedding for model '" + store.model() + "'");
  }
  if (rec->kind != kind) {
    throw InsufficientData(std::string(to_string(role)) + " embedding is of kind '" +
                           std::string(to_string(rec->kind)) + "', expected '" + std::string(to_string(kind)) + "'");
  }
  return *rec;
}

ScoredMetric score_one(const ScoringContext& ctx, const MetricSpec& spec, const SummaryPair& pair) {
  const RunConfig& cfg = ctx.config;
  ScoredMetric out;
  out.score = {spec.name(), pair.item_id, 0.0, spec.orientation()};
  switch (spec.family) {
    case MetricFamily::jaccard:
      out.score.value = jaccard(pair).value;
      break;
    case MetricFamily::bleu1:
      out.score.value = bleu_n(pair, 1).value;
      break;
    case MetricFamily::bleu:
      out.score.value = bleu_composite(pair, cfg.bleu).value;
      break;
    case MetricFamily::rouge_l:
      out.score.value = rouge_l(pair, cfg.rouge_beta).f;
      break;
    case MetricFamily::rouge_w:
      out.score.value = rouge_w(pair, cfg.rouge_w_alpha, cfg.rouge_beta).f;
      break;
    case MetricFamily::meteor:
      out.score.value = meteor(pair, cfg.meteor, ctx.synonyms ? &*ctx.synonyms : nullptr).score;
      break;
    case MetricFamily::tfidf_cosine: {
      const auto c = cosine_similarity(tfidf_vector(*ctx.tfidf, pair.prediction), tfidf_vector(*ctx.tfidf, pair.reference));
      out.score.value = c.value;
      out.degenerate = c.degenerate;
      break;
    }
    case MetricFamily::tfidf_euclid:
      out.score.value =
          euclidean_distance(tfidf_vector(*ctx.tfidf, pair.prediction), tfidf_vector(*ctx.tfidf, pair.reference));
      break;
    case MetricFamily::emb_cosine:
    case MetricFamily::emb_euclid: {
      const auto& store = ctx.stores.at(spec.model);
      const auto& p = require_record(store, pair.item_id, TextRole::prediction, EmbeddingKind::sentence);
      const auto& r = require_record(store, pair.item_id, TextRole::reference, EmbeddingKind::sentence);
      if (spec.family == MetricFamily::emb_cosine) {
        const auto c = cosine_similarity(p.vector, r.vector);
        out.score.value = c.value;
        out.degenerate = c.degenerate;
      } else {
        out.score.value = euclidean_distance(p.vector, r.vector);
      }
      break;
    }
    case MetricFamily::bertscore: {
      const auto& store = ctx.stores.at(spec.model);
      const auto& p = require_record(store, pair.item_id, TextRole::prediction, EmbeddingKind::tokens);
      const auto& r = require_record(store, pair.item_id, TextRole::reference, EmbeddingKind::tokens);
      out.score.value = bertscore_f1(p, r).f1;
      break;
    }
  }
  if (!std::isfinite(out.score.value)) throw InsufficientData("metric produced a non-finite value");
  return out;
}

ItemResult score_item(const ScoringContext& ctx, const SummaryPair& pair) {
  ItemResult r;
  for (const auto& spec : ctx.config.metrics) {
    try {
      r.scores.push_back(score_one(ctx, spec, pair));
    } catch (const std::exception& e) {
      r.errors.push_back({pair.item_id, spec.name(), e.what()});
    }
  }
  return r;
}

std::vector<ItemResult> score_parallel(const ScoringContext& ctx, const std::vector<SummaryPair>& pairs) {
  std::vector<ItemResult> results(pairs.size());
  unsigned workers = ctx.config.threads ? ctx.config.threads : std::max(1U, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(1, pairs.size())));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < pairs.size(); i = next++) results[i] = score_item(ctx, pairs[i]);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return results;
}

json score_meta(const RunConfig& cfg) {
  json meta;
  meta["tokenizer"] = cfg.tokenizer == TokenizerMode::standard ? "standard" : "pretokenized";
  meta["bleu"] = {{"weights", cfg.bleu.weights},
                  {"smoothing", std::string(to_string(cfg.bleu.smoothing))},
                  {"brevity_penalty", cfg.bleu.brevity_penalty}};
  meta["rouge"] = {{"beta", cfg.rouge_beta}, {"w_alpha", cfg.rouge_w_alpha}};
  meta["meteor"] = {{"alpha", cfg.meteor.alpha},
                    {"gamma", cfg.meteor.gamma},
                    {"beta", cfg.meteor.beta},
                    {"synonyms", cfg.synonyms_path ? cfg.synonyms_path->filename().string() : std::string()}};
  meta["tfidf_corpus"] = cfg.tfidf_corpus_path ? cfg.tfidf_corpus_path->filename().string() : std::string("pairs");
  std::vector<std::string> names;
  for (const auto& m : cfg.metrics) names.push_back(m.name());
  meta["metrics"] = names;
  return meta;
}

}  // namespace

ScoreRun cmd_score(const RunConfig& config) {
  config.validate();
  const auto pairs = load_pairs(config.pairs_path, config.tokenizer);

  ScoringContext ctx{config, {}, {}, {}};
  for (const auto& path : config.embeddings_paths) {
    EmbeddingStore store;
    try {
      auto in = open_input(path, "embeddings file");
      store = load_embeddings(in);
    } catch (const DataError& e) {
      throw DataError(path.filename().string() + ": " + e.what());
    }
    if (store.empty()) continue;
    const std::string model = store.model();
    if (!ctx.stores.emplace(model, std::move(store)).second) {
      throw ConfigError("model '" + model + "' appears in more than one embeddings file");
    }
  }
  for (const auto& m : config.metrics) {
    if (m.needs_embeddings() && !ctx.stores.count(m.model)) {
      throw ConfigError("no embeddings file provides model '" + m.model + "' for metric '" + m.name() + "'");
    }
  }
  if (config.synonyms_path) ctx.synonyms = SynonymLexicon::load(*config.synonyms_path);

  const bool needs_tfidf = std::any_of(config.metrics.begin(), config.metrics.end(), [](const MetricSpec& m) {
    return m.family == MetricFamily::tfidf_cosine || m.family == MetricFamily::tfidf_euclid;
  });
  if (needs_tfidf) {
    std::vector<TokenSequence> corpus;
    if (config.tfidf_corpus_path) {
      auto in = open_input(*config.tfidf_corpus_path, "tf-idf corpus");
      std::string text;
      while (read_line(in, text)) {
        if (!blank(text)) corpus.push_back(normalize_tokenize(text, config.tokenizer));
      }
    } else {
      for (const auto& p : pairs) {
        corpus.push_back(p.prediction);
        corpus.push_back(p.reference);
      }
    }
    if (corpus.empty()) throw DataError("tf-idf corpus is empty");
    ctx.tfidf = tfidf_fit(corpus);
  }

  ScoreRun run;
  for (auto& item : score_parallel(ctx, pairs)) {
    std::move(item.scores.begin(), item.scores.end(), std::back_inserter(run.scores));
    std::move(item.errors.begin(), item.errors.end(), std::back_inserter(run.errors));
  }
  std::sort(run.scores.begin(), run.scores.end(), [](const ScoredMetric& a, const ScoredMetric& b) {
    return std::tie(a.score.item_id, a.score.metric_name) < std::tie(b.score.item_id, b.score.metric_name);
  });
  std::sort(run.errors.begin(), run.errors.end(), [](const ScoreError& a, const ScoreError& b) {
    return std::tie(a.item_id, a.metric_name) < std::tie(b.item_id, b.metric_name);
  });

  for (const auto& m : config.metrics) {
    MetricSummary s{m.name(), m.orientation(), 0, 0, std::nullopt};
    double sum = 0.0;
    for (const auto& sc : run.scores) {
      if (sc.score.metric_name == s.metric_name) {
        ++s.scored;
        sum += sc.score.value;
      }
    }
    for (const auto& e : run.errors) s.errors += e.metric_name == s.metric_name;
    if (s.scored) s.mean = sum / static_cast<double>(s.scored);
    run.summary.push_back(s);
  }

  {
    auto out = open_output(config.out_dir / files::kScores);
    for (const auto& sc : run.scores) {
      json obj = {{"item_id", sc.score.item_id},
                  {"metric", sc.score.metric_name},
                  {"value", sc.score.value},
                  {"orientation", std::string(to_string(sc.score.orientation))}};
      if (sc.degenerate) obj["degenerate"] = true;
      out << obj.dump() << '\n';
    }
  }
  {
    auto out = open_output(config.out_dir / files::kScoreErrors);
    for (const auto& e : run.errors) {
      out << json{{"item_id", e.item_id}, {"metric", e.metric_name}, {"error", e.message}}.dump() << '\n';
    }
  }
  {
    auto out = open_output(config.out_dir / files::kScoreSummary);
    out << "metric,orientation,scored,errors,mean\n";
    for (const auto& s : run.summary) {
      out << s.metric_name << ',' << to_string(s.orientation) << ',' << s.scored << ',' << s.errors << ','
          << (s.mean ? format_full(*s.mean) : std::string()) << '\n';
    }
  }
  {
    auto out = open_output(config.out_dir / files::kScoreMeta);
    out << score_meta(config).dump(2) << '\n';
  }
  return run;
}

std::vector<ScoredMetric> load_scores(const std::filesystem::path& path) {
  auto in = open_input(path, "scores file");
  std::vector<ScoredMetric> out;
  std::string text;
  std::size_t line = 0;
  while (read_line(in, text)) {
    ++line;
    if (blank(text)) continue;
    const json obj = parse_json_line(text, line);
    ScoredMetric sc;
    sc.score.item_id = json_string(obj, "item_id", line);
    sc.score.metric_name = json_string(obj, "metric", line);
    const auto v = obj.find("value");
    if (v == obj.end() || !v->is_number()) throw DataError("missing numeric field 'value'", line);
    sc.score.value = v->get<double>();
    try {
      sc.score.orientation = parse_orientation(json_string(obj, "orientation", line));
    } catch (const std::invalid_argument& e) {
      throw DataError(e.what(), line);
    }
    const auto d = obj.find("degenerate");
    sc.degenerate = d != obj.end() && d->is_boolean() && d->get<bool>();
    out.push_back(std::move(sc));
  }
  return out;
}

// ---------------------------------------------------------------------------
// ratings

namespace {

constexpr const char* kVariants[] = {"all", "generated", "reference"};

std::optional<ShownVariant> variant_filter(std::string_view v) {
  if (v == "generated") return ShownVariant::generated;
  if (v == "reference") return ShownVariant::reference;
  return std::nullopt;
}

}  // namespace

RatingsRun cmd_ratings(const RunConfig& config) {
  if (!config.ratings_path) throw ConfigError("--ratings is required");
  std::vector<RatingRecord> records;
  {
    auto in = open_input(*config.ratings_path, "ratings file");
    records = load_ratings(in);
  }
  for (auto& r : records) r = normalize_polarity(std::move(r), config.inverted);

  RatingsRun run;
  for (Criterion c : kAllCriteria) {
    std::vector<RatingRecord> of_criterion;
    std::copy_if(records.begin(), records.end(), std::back_inserter(of_criterion),
                 [c](const RatingRecord& r) { return r.criterion == c; });
    if (of_criterion.empty()) continue;
    for (const char* variant : kVariants) {
      const auto filter = variant_filter(variant);
      for (auto& a : aggregate(of_criterion, c, filter)) run.aggregates.push_back({std::move(a), variant});
      std::vector<double> answers;
      for (const auto& r : of_criterion) {
        if (!filter || r.shown_variant == *filter) answers.push_back(r.answer);
      }
      if (!answers.empty()) run.stats.push_back({c, variant, descriptive_stats(answers, config.variance)});
    }
    run.agreement.push_back({c, agreement_histogram(of_criterion)});
  }

  {
    auto out = open_output(config.out_dir / files::kAggregates);
    out << "item_id,criterion,variant,mean,count\n";
    for (const auto& a : run.aggregates) {
      out << a.rating.item_id << ',' << to_string(a.rating.criterion) << ',' << a.variant << ','
          << format_full(a.rating.mean) << ',' << a.rating.count << '\n';
    }
  }
  {
    auto out = open_output(config.out_dir / files::kRatingStats);
    out << "criterion,variant,n,mean,geometric_mean,harmonic_mean,median,stddev,cv,variance\n";
    for (const auto& s : run.stats) {
      const auto& d = s.stats;
      out << to_string(s.criterion) << ',' << s.variant << ',' << d.count << ',' << format_full(d.mean) << ','
          << format_full(d.geometric_mean) << ',' << format_full(d.harmonic_mean) << ',' << format_full(d.median)
          << ',' << format_full(d.stddev) << ',' << format_full(d.cv) << ',' << format_full(d.variance) << '\n';
    }
  }
  {
    auto out = open_output(config.out_dir / files::kAgreement);
    out << "criterion,difference,pairs,fraction\n";
    for (const auto& a : run.agreement) {
      const auto fractions = a.histogram.fractions();
      for (int d = 0; d < 4; ++d) {
        out << to_string(a.criterion) << ',' << d << ',' << a.histogram.pair_counts[static_cast<std::size_t>(d)]
            << ',' << (fractions.empty() ? std::string() : format_full(fractions.at(d))) << '\n';
      }
    }
  }
  {
    std::vector<std::vector<std::string>> stats_rows{
        {"criterion", "variant", "n", "mean", "gmean", "hmean", "median", "stddev", "cv", "variance"}};
    for (const auto& s : run.stats) {
      const auto& d = s.stats;
      stats_rows.push_back({std::string(to_string(s.criterion)), s.variant, std::to_string(d.count),
                            format_fixed(d.mean), format_fixed(d.geometric_mean), format_fixed(d.harmonic_mean),
                            format_fixed(d.median), format_fixed(d.stddev), format_fixed(d.cv),
                            format_fixed(d.variance)});
    }
    std::vector<std::vector<std::string>> agree_rows{{"criterion", "pairs", "diff 0", "diff 1", "diff 2", "diff 3"}};
    for (const auto& a : run.agreement) {
      const auto f = a.histogram.fractions();
      std::vector<std::string> row{std::string(to_string(a.criterion)), std::to_string(a.histogram.total_pairs())};
      for (int d = 0; d < 4; ++d) row.push_back(f.empty() ? "-" : format_fixed(f.at(d)));
      agree_rows.push_back(std::move(row));
    }
    auto out = open_output(config.out_dir / files::kRatingsText);
    out << "# answers on 1..4, lower is better; inverted criteria:";
    for (Criterion c : config.inverted) out << ' ' << to_string(c);
    out << "\n\nDescriptive statistics of individual answers\n" << render_table(stats_rows);
    out << "\nRater agreement (fraction of rater pairs by absolute difference)\n" << render_table(agree_rows);
  }
  return run;
}

std::vector<AggregateRow> load_aggregates(const std::filesystem::path& path) {
  auto in = open_input(path, "aggregates file");
  std::vector<AggregateRow> out;
  std::string text;
  std::size_t line = 0;
  bool header = false;
  std::set<std::tuple<std::string, Criterion, std::string>> seen;
  while (read_line(in, text)) {
    ++line;
    if (blank(text)) continue;
    if (!header) {
      if (text != "item_id,criterion,variant,mean,count") {
        throw DataError("expected header 'item_id,criterion,variant,mean,count'", line);
      }
      header = true;
      continue;
    }
    const auto f = split_fields(text);
    if (f.size() != 5) throw DataError("expected 5 fields, got " + std::to_string(f.size()), line);
    AggregateRow row;
    row.rating.item_id = f[0];
    if (row.rating.item_id.empty()) throw DataError("empty item id", line);
    try {
      row.rating.criterion = parse_criterion(f[1]);
    } catch (const std::invalid_argument& e) {
      throw DataError(e.what(), line);
    }
    row.variant = f[2];
    if (std::find(std::begin(kVariants), std::end(kVariants), row.variant) == std::end(kVariants)) {
      throw DataError("unknown variant '" + row.variant + "'", line);
    }
    try {
      std::size_t used = 0;
      row.rating.mean = std::stod(f[3], &used);
      if (used != f[3].size()) throw std::invalid_argument("trailing characters");
      row.rating.count = static_cast<std::size_t>(std::stoul(f[4], &used));
      if (used != f[4].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw DataError("mean and count must be numeric", line);
    }
    if (!(row.rating.mean >= 1.0 && row.rating.mean <= 4.0)) throw DataError("mean outside [1, 4]", line);
    if (row.rating.count < 1) throw DataError("count must be >= 1", line);
    if (!seen.emplace(row.rating.item_id, row.rating.criterion, row.variant).second) {
      throw DataError("duplicate aggregate for item '" + row.rating.item_id + "'", line);
    }
    out.push_back(std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------------------
// correlate and cross

std::string_view to_string(CellStatus s) {
  switch (s) {
    case CellStatus::ok: return "ok";
    case CellStatus::degenerate: return "degenerate";
    case CellStatus::insufficient: return "insufficient";
  }
  return "insufficient";
}

const ReportRow* CorrelationReport::find(std::string_view metric) const {
  for (const auto& r : rows) {
    if (r.metric_name == metric) return &r;
  }
  return nullptr;
}

namespace {

struct LoadedInputs {
  std::map<std::string, std::vector<MetricScore>> by_metric;
  std::vector<std::string> metric_names;  // report order
  std::map<Criterion, std::vector<AggregateRating>> by_criterion;
  std::vector<Criterion> criteria;
};

LoadedInputs load_inputs(const std::filesystem::path& score_file, const std::filesystem::path& aggregates_file,
                         const RunConfig& config) {
  LoadedInputs in;
  std::map<std::string, Orientation> orientation;
  for (auto& sc : load_scores(score_file)) {
    const auto [it, fresh] = orientation.emplace(sc.score.metric_name, sc.score.orientation);
    if (!fresh && it->second != sc.score.orientation) {
      throw DataError("metric '" + sc.score.metric_name + "' has inconsistent orientation");
    }
    in.by_metric[sc.score.metric_name].push_back(std::move(sc.score));
  }
  for (const auto& [name, v] : in.by_metric) in.metric_names.push_back(name);
  std::sort(in.metric_names.begin(), in.metric_names.end(), metric_order);

  const std::string quality(to_string(config.quality_variant));
  for (auto& row : load_aggregates(aggregates_file)) {
    const std::string wanted = row.rating.criterion == Criterion::similarity ? "all" : quality;
    if (row.variant == wanted) in.by_criterion[row.rating.criterion].push_back(std::move(row.rating));
  }
  for (Criterion c : kAllCriteria) {
    if (in.by_criterion.count(c)) in.criteria.push_back(c);
  }
  return in;
}

std::vector<std::string> report_header(const std::filesystem::path& score_file, const RunConfig& config) {
  std::vector<std::string> header;
  std::filesystem::path meta_path = score_file;
  meta_path.replace_extension(".meta.json");
  std::ifstream meta_in(meta_path);
  if (meta_in) {
    try {
      const json meta = json::parse(meta_in);
      const auto& b = meta.at("bleu");
      std::string weights;
      for (const auto& w : b.at("weights")) weights += (weights.empty() ? "" : ",") + format_full(w.get<double>());
      header.push_back("bleu: weights=" + weights + " smoothing=" + b.at("smoothing").get<std::string>() +
                       " brevity_penalty=" + (b.at("brevity_penalty").get<bool>() ? "on" : "off"));
      header.push_back("tokenizer: " + meta.at("tokenizer").get<std::string>());
    } catch (const json::exception&) {
      header.push_back("bleu: configuration unreadable in " + meta_path.filename().string());
    }
  } else {
    header.push_back("bleu: configuration unknown (no score metadata)");
  }
  header.push_back("groups: agree <= " + format_full(config.group_low) + ", disagree >= " +
                   format_full(config.group_high));
  header.push_back("quality criteria use " + std::string(to_string(config.quality_variant)) +
                   " ratings; similarity pools both presentations");
  return header;
}

ReportCell correlate_cell(const std::vector<MetricScore>& scores, const std::vector<AggregateRating>& aggregates,
                          const RunConfig& config) {
  ReportCell cell;
  OrientedSeries series;
  try {
    series = oriented_series(scores, aggregates);
  } catch (const InsufficientData&) {
    return cell;
  }
  cell.n = series.item_ids.size();
  try {
    cell.spearman = spearman_rho(series.metric, series.agreement).value;
    cell.kendall = kendall_tau_b(series.metric, series.agreement).value;
    cell.correlation_status = CellStatus::ok;
  } catch (const DegenerateError&) {
    cell.spearman.reset();
    cell.kendall.reset();
    cell.correlation_status = CellStatus::degenerate;
  }

  std::map<std::string, double> mean_of;
  for (const auto& a : aggregates) mean_of[a.item_id] = a.mean;
  std::vector<AggregateRating> aligned;
  for (const auto& id : series.item_ids) aligned.push_back({id, aggregates.front().criterion, mean_of[id], 1});
  const GroupSplit groups = split_groups(aligned, config.group_low, config.group_high);
  std::map<std::string, double> value_of;
  for (std::size_t i = 0; i < series.item_ids.size(); ++i) {
    value_of[series.item_ids[i]] = series.metric[static_cast<Eigen::Index>(i)];
  }
  std::vector<double> agree, disagree;
  for (const auto& id : groups.agree_ids) agree.push_back(value_of[id]);
  for (const auto& id : groups.disagree_ids) disagree.push_back(value_of[id]);
  cell.n_agree = agree.size();
  cell.n_disagree = disagree.size();
  if (!agree.empty() && !disagree.empty()) cell.utest = mann_whitney_u(as_vector(agree), as_vector(disagree));
  return cell;
}

std::string cell_text(const ReportCell& c, const std::optional<double>& v) {
  if (c.correlation_status == CellStatus::degenerate) return "degen";
  return v ? format_fixed(*v) : "-";
}

std::string u_text(const ReportCell& c) {
  if (!c.utest) return "-";
  const auto& u = *c.utest;
  return format_full(u.u1) + "/" + format_full(u.u2) + "/" + format_full(std::min(u.u1, u.u2));
}

std::string p_text(const ReportCell& c) {
  if (!c.utest) return "-";
  return c.utest->p_two_sided < 1e-4 ? "<0.0001" : format_fixed(c.utest->p_two_sided);
}

}  // namespace

CorrelationReport cmd_correlate(const std::filesystem::path& score_file, const std::filesystem::path& aggregates_file,
                                const RunConfig& config) {
  if (!(config.group_low < config.group_high)) throw ConfigError("group thresholds must satisfy low < high");
  const LoadedInputs in = load_inputs(score_file, aggregates_file, config);

  CorrelationReport report;
  report.header = report_header(score_file, config);
  report.criteria = in.criteria;
  for (const auto& name : in.metric_names) {
    const auto& scores = in.by_metric.at(name);
    ReportRow row{name, scores.front().orientation, {}};
    for (Criterion c : in.criteria) {
      ReportCell cell = correlate_cell(scores, in.by_criterion.at(c), config);
      if (cell.correlation_status == CellStatus::insufficient) ++report.warnings;
      row.cells.emplace(c, std::move(cell));
    }
    report.rows.push_back(std::move(row));
  }
  if (report.warnings) report.header.push_back("warnings: " + std::to_string(report.warnings) + " cell(s) lacked overlapping items");

  {
    auto out = open_output(config.out_dir / files::kCorrelationCsv);
    out << "metric,orientation,criterion,n,status,spearman,kendall,n_agree,n_disagree,u1,u2,u_min,z,p,method\n";
    for (const auto& row : report.rows) {
      for (Criterion c : report.criteria) {
        const ReportCell& cell = row.cells.at(c);
        const auto opt = [](const std::optional<double>& v) { return v ? format_full(*v) : std::string(); };
        out << row.metric_name << ',' << to_string(row.orientation) << ',' << to_string(c) << ',' << cell.n << ','
            << to_string(cell.correlation_status) << ',' << opt(cell.spearman) << ',' << opt(cell.kendall) << ','
            << cell.n_agree << ',' << cell.n_disagree << ',';
        if (cell.utest) {
          const auto& u = *cell.utest;
          out << format_full(u.u1) << ',' << format_full(u.u2) << ',' << format_full(std::min(u.u1, u.u2)) << ','
              << format_full(u.z) << ',' << format_full(u.p_two_sided) << ',' << to_string(u.method);
        } else {
          out << ",,,,,";
        }
        out << '\n';
      }
    }
  }
  {
    auto out = open_output(config.out_dir / files::kCorrelationText);
    for (const auto& h : report.header) out << "# " << h << '\n';

    std::vector<std::string> head{"metric"};
    for (Criterion c : report.criteria) head.emplace_back(to_string(c));

    std::vector<std::vector<std::string>> rho{head}, tau{head}, pval{head}, ustat{head}, counts{head};
    for (const auto& row : report.rows) {
      std::vector<std::string> r1{row.metric_name}, r2{row.metric_name}, r3{row.metric_name}, r4{row.metric_name},
          r5{row.metric_name};
      for (Criterion c : report.criteria) {
        const ReportCell& cell = row.cells.at(c);
        r1.push_back(cell_text(cell, cell.spearman));
        r2.push_back(cell_text(cell, cell.kendall));
        r3.push_back(p_text(cell));
        r4.push_back(u_text(cell));
        r5.push_back(std::to_string(cell.n) + " (" + std::to_string(cell.n_agree) + "/" + std::to_string(cell.n_disagree) +
                     ")");
      }
      rho.push_back(std::move(r1));
      tau.push_back(std::move(r2));
      pval.push_back(std::move(r3));
      ustat.push_back(std::move(r4));
      counts.push_back(std::move(r5));
    }
    out << "\nSpearman rho (metric vs. agreement level)\n" << render_table(rho);
    out << "\nKendall tau-b (metric vs. agreement level)\n" << render_table(tau);
    out << "\nMann-Whitney U p (agree vs. disagree groups)\n" << render_table(pval);
    out << "\nMann-Whitney U (u1/u2/min)\n" << render_table(ustat);
    out << "\nItems per cell (agree/disagree)\n" << render_table(counts);
  }
  return report;
}

CrossMatrix cmd_cross(const std::filesystem::path& score_file, const std::filesystem::path& aggregates_file,
                      const RunConfig& config) {
  const LoadedInputs in = load_inputs(score_file, aggregates_file, config);

  std::vector<std::map<std::string, double>> series;
  CrossMatrix m;
  for (const auto& name : in.metric_names) {
    std::map<std::string, double> s;
    for (const auto& sc : in.by_metric.at(name)) {
      const double v = sc.orientation == Orientation::lower_is_more_similar ? -sc.value : sc.value;
      if (!s.emplace(sc.item_id, v).second) throw DataError("item '" + sc.item_id + "' scored twice for " + name);
    }
    m.labels.push_back(name);
    series.push_back(std::move(s));
  }
  for (Criterion c : in.criteria) {
    std::map<std::string, double> s;
    for (const auto& a : in.by_criterion.at(c)) s[a.item_id] = 5.0 - a.mean;
    m.labels.push_back("human:" + std::string(to_string(c)));
    series.push_back(std::move(s));
  }

  const auto k = static_cast<Eigen::Index>(series.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  m.spearman = Eigen::MatrixXd::Constant(k, k, nan);
  m.kendall = Eigen::MatrixXd::Constant(k, k, nan);
  m.n = Eigen::MatrixXi::Zero(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = a; b < k; ++b) {
      std::vector<double> x, y;
      for (const auto& [item, v] : series[static_cast<std::size_t>(a)]) {
        const auto it = series[static_cast<std::size_t>(b)].find(item);
        if (it == series[static_cast<std::size_t>(b)].end()) continue;
        x.push_back(v);
        y.push_back(it->second);
      }
      m.n(a, b) = m.n(b, a) = static_cast<int>(x.size());
      if (x.size() < 2) continue;
      try {
        m.spearman(a, b) = m.spearman(b, a) = spearman_rho(as_vector(x), as_vector(y)).value;
        m.kendall(a, b) = m.kendall(b, a) = kendall_tau_b(as_vector(x), as_vector(y)).value;
      } catch (const DegenerateError&) {
      }
    }
  }

  auto write_csv = [&](const char* file, const Eigen::MatrixXd& mat) {
    auto out = open_output(config.out_dir / file);
    out << "series";
    for (const auto& l : m.labels) out << ',' << l;
    out << '\n';
    for (Eigen::Index a = 0; a < k; ++a) {
      out << m.labels[static_cast<std::size_t>(a)];
      for (Eigen::Index b = 0; b < k; ++b) out << ',' << (std::isnan(mat(a, b)) ? std::string() : format_full(mat(a, b)));
      out << '\n';
    }
  };
  write_csv(files::kCrossSpearman, m.spearman);
  write_csv(files::kCrossKendall, m.kendall);

  auto table = [&](const Eigen::MatrixXd& mat) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> head{""};
    for (const auto& l : m.labels) head.push_back(l);
    rows.push_back(std::move(head));
    for (Eigen::Index a = 0; a < k; ++a) {
      std::vector<std::string> r{m.labels[static_cast<std::size_t>(a)]};
      for (Eigen::Index b = 0; b < k; ++b) r.push_back(format_fixed(mat(a, b)));
      rows.push_back(std::move(r));
    }
    return render_table(rows);
  };
  auto out = open_output(config.out_dir / files::kCrossText);
  out << "Spearman rho\n" << table(m.spearman) << "\nKendall tau-b\n" << table(m.kendall);
  return m;
}

void cmd_report(const RunConfig& config) {
  config.validate();
  if (!config.ratings_path) throw ConfigError("--ratings is required for report");
  cmd_score(config);
  cmd_ratings(config);
  const auto scores = config.out_dir / files::kScores;
  const auto aggregates = config.out_dir / files::kAggregates;
  cmd_correlate(scores, aggregates, config);
  cmd_cross(scores, aggregates, config);
}

}  // namespace sumeval
