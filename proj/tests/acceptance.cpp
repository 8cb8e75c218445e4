// Acceptance checks. One line per criterion, non-zero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sumeval/ngram_metrics.hpp"
#include "sumeval/ratings.hpp"
#include "sumeval/report.hpp"
#include "sumeval/stats.hpp"

using namespace sumeval;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(const char* name, bool ok, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

SummaryPair make_pair(const oracle::Tokens& p, const oracle::Tokens& r, std::string id = "x") {
  return {std::move(id), TokenSequence::from_tokens(p), TokenSequence::from_tokens(r)};
}

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

void jaccard_word_order() {
  const auto t0 = Clock::now();
  const SummaryPair p{"x", normalize_tokenize("dog bites man"), normalize_tokenize("man bites dog")};
  const double v = jaccard(p).value;
  const double ms = seconds_since(t0) * 1e3;
  report("jaccard-word-order", v == 1.0 && ms < 1.0, fmt("value %.17g in %.3f ms", v, ms));
}

void bleu1_is_unigram_precision() {
  std::mt19937_64 rng(1001);
  const auto vocab = oracle::numbered_vocab(20);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto p = oracle::random_tokens(rng, vocab, 1, 15);
    const auto r = oracle::random_tokens(rng, vocab, 1, 15);
    worst = std::max(worst, std::abs(bleu_n(make_pair(p, r), 1).value - oracle::unigram_precision(p, r)));
  }
  report("bleu1-unigram-precision", worst <= 1e-12, fmt("max abs diff %.3g over 1000 pairs", worst));
}

void ngram_oracle_suite() {
  const oracle::Tokens vocab{"the",   "a",     "run",   "running", "runs",  "fast",  "quick", "rapid",
                             "file",  "files", "open",  "opens",   "read",  "name",  "get",   "return"};
  oracle::Synonyms syn{{{"fast", "quick", "rapid"}, {"get", "return"}, {"open", "read"}}};
  SynonymLexicon lex;
  for (const auto& s : syn.sets) lex.add_set({s.begin(), s.end()});

  std::mt19937_64 rng(2002);
  const auto t0 = Clock::now();
  double worst = 0.0;
  int structural = 0;
  for (int i = 0; i < 50; ++i) {
    const auto p = oracle::random_tokens(rng, vocab, 1, 8);
    const auto r = oracle::random_tokens(rng, vocab, 1, 8);
    const auto pair = make_pair(p, r);
    auto diff = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };
    if (lcs_length(pair.prediction, pair.reference) != oracle::lcs(p, r)) ++structural;
    diff(wlcs_score(pair.prediction, pair.reference, 1.2), oracle::wlcs(p, r, 1.2));
    diff(wlcs_score(pair.prediction, pair.reference, 2.0), oracle::wlcs(p, r, 2.0));
    diff(rouge_l(pair).f, oracle::rouge_l(p, r));
    diff(rouge_w(pair).f, oracle::rouge_w(p, r));
    diff(rouge_l(pair, 2.0).f, oracle::rouge_l(p, r, 2.0));
    for (std::size_t n = 1; n <= 4; ++n) diff(bleu_n(pair, static_cast<int>(n)).value, oracle::bleu_n(p, r, n));
    diff(bleu_composite(pair).value, oracle::bleu(p, r, {0.25, 0.25, 0.25, 0.25}, false, true));
    BleuOptions eps;
    eps.smoothing = BleuSmoothing::add_epsilon;
    diff(bleu_composite(pair, eps).value, oracle::bleu(p, r, eps.weights, true, true));
    const auto got = meteor(pair, {}, &lex);
    const auto want = oracle::meteor(p, r, syn);
    diff(got.score, want.score);
    if (got.stage_count(MeteorStage::exact) != want.exact || got.stage_count(MeteorStage::stem) != want.stem ||
        got.stage_count(MeteorStage::synonym) != want.synonym || (got.matches > 0 && got.chunks != want.chunks))
      ++structural;
  }
  const double secs = seconds_since(t0);
  report("ngram-oracle-suite", worst <= 1e-9 && structural == 0 && secs < 10.0,
         fmt("max abs diff %.3g, ", worst) + std::to_string(structural) + " count mismatches, " + fmt("%.2f s", secs));
}

void statistics_oracles() {
  std::mt19937_64 rng(3003);
  std::uniform_int_distribution<std::size_t> size(2, 30);
  double worst = 0.0;
  int checked = 0;
  while (checked < 500) {
    const std::size_t n = size(rng);
    std::uniform_int_distribution<int> level(0, 1 + static_cast<int>(n / 3));
    std::vector<double> x(n), y(n);
    for (auto& v : x) v = level(rng);
    for (auto& v : y) v = level(rng);
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) continue;
    if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; })) continue;
    ++checked;
    worst = std::max(worst, std::abs(spearman_rho(as_vector(x), as_vector(y)).value - oracle::spearman(x, y)));
    worst = std::max(worst, std::abs(kendall_tau_b(as_vector(x), as_vector(y)).value - oracle::kendall_b(x, y)));
  }
  double worst_p = 0.0;
  std::uniform_int_distribution<std::size_t> group(1, 11);
  std::uniform_int_distribution<int> level(0, 4);
  int tests = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n1 = group(rng);
    const std::size_t n2 = std::uniform_int_distribution<std::size_t>(1, 12 - n1)(rng);
    std::vector<double> g1(n1), g2(n2);
    for (auto& v : g1) v = level(rng);
    for (auto& v : g2) v = level(rng);
    const double p = mann_whitney_u(as_vector(g1), as_vector(g2), UTestMode::exact).p_two_sided;
    worst_p = std::max(worst_p, std::abs(p - oracle::mann_whitney_p(g1, g2)));
    ++tests;
  }
  report("statistics-oracles", worst <= 1e-9 && worst_p <= 1e-12,
         fmt("rank max diff %.3g on 500 series, exact U p max diff %.3g", worst, worst_p) + " on " +
             std::to_string(tests) + " splits");
}

// 210 pairs whose Jaccard values spread over [0, 1].
std::vector<std::pair<oracle::Tokens, oracle::Tokens>> synthetic_pairs(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> shared(0, 6), extra(0, 5);
  std::vector<std::pair<oracle::Tokens, oracle::Tokens>> out;
  for (int i = 0; i < 210; ++i) {
    oracle::Tokens p, r;
    const int k = shared(rng);
    for (int j = 0; j < k; ++j) {
      p.push_back("s" + std::to_string(j));
      r.push_back("s" + std::to_string(j));
    }
    const int a = extra(rng), b = extra(rng);
    for (int j = 0; j < a; ++j) p.push_back("p" + std::to_string(j));
    for (int j = 0; j < b; ++j) r.push_back("r" + std::to_string(j));
    if (p.empty()) p.push_back("p0");
    if (r.empty()) r.push_back("r0");
    out.emplace_back(p, r);
  }
  return out;
}

std::string join(const oracle::Tokens& t) {
  std::string s;
  for (const auto& w : t) s += (s.empty() ? "" : " ") + w;
  return s;
}

std::string item_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "i%03d", i);
  return buf;
}

void pipeline_property(const fs::path& dir) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(4004);
  const auto pairs = synthetic_pairs(rng);
  {
    std::ofstream out(dir / "pairs.jsonl");
    for (int i = 0; i < 210; ++i)
      out << R"({"id":")" << item_name(i) << R"(","prediction":")" << join(pairs[i].first) << R"(","reference":")"
          << join(pairs[i].second) << "\"}\n";
  }
  RunConfig config;
  config.pairs_path = dir / "pairs.jsonl";
  config.metrics = parse_metric_list("jaccard");
  config.out_dir = dir / "score";
  const auto run = cmd_score(config);

  auto write_aggregates = [&](const fs::path& path, const std::function<double(double)>& f) {
    std::ofstream out(path);
    out << "item_id,criterion,variant,mean,count\n";
    for (const auto& s : run.scores)
      out << s.score.item_id << ",similarity,all," << format_full(f(s.score.value)) << ",4\n";
  };
  write_aggregates(dir / "exact.csv", [](double j) { return 4.0 - 3.0 * j; });
  std::uniform_real_distribution<double> noise(-0.25, 0.25);
  write_aggregates(dir / "noisy.csv", [&](double j) { return std::clamp(4.0 - 3.0 * j + noise(rng), 1.0, 4.0); });

  const auto scores = dir / "score" / files::kScores;
  config.out_dir = dir / "exact";
  const auto exact = cmd_correlate(scores, dir / "exact.csv", config);
  config.out_dir = dir / "noisy";
  const auto noisy = cmd_correlate(scores, dir / "noisy.csv", config);
  const double secs = seconds_since(t0);

  auto cell = [](const CorrelationReport& r) -> const ReportCell* {
    const auto* row = r.find("jaccard");
    if (!row) return nullptr;
    const auto it = row->cells.find(Criterion::similarity);
    return it == row->cells.end() ? nullptr : &it->second;
  };
  const auto* e = cell(exact);
  const auto* n = cell(noisy);
  const bool ok = e && n && e->n == 210 && e->spearman && e->kendall && n->spearman && *e->spearman == 1.0 &&
                  *e->kendall == 1.0 && *n->spearman >= 0.95 && secs < 5.0;
  report("pipeline-property", ok,
         e && n && e->spearman && e->kendall && n->spearman
             ? fmt("rho %.17g tau %.17g", *e->spearman, *e->kendall) + fmt(", noisy rho %.4f, %.2f s", *n->spearman, secs)
             : std::string("missing jaccard/similarity cell"));
}

void group_shift() {
  std::mt19937_64 rng(5005);
  std::uniform_real_distribution<double> base(1.0, 3.0);
  Eigen::VectorXd g1(105), g2(105);
  for (Eigen::Index i = 0; i < 105; ++i) {
    g1[i] = base(rng);
    g2[i] = base(rng) + 1.0;
  }
  const auto r = mann_whitney_u(g1, g2);
  report("group-shift", r.p_two_sided < 1e-4,
         fmt("p %.3g, U min %.0f (", r.p_two_sided, std::min(r.u1, r.u2)) + std::string(to_string(r.method)) + ")");
}

void descriptive_consistency() {
  std::mt19937_64 rng(6006);
  std::uniform_real_distribution<double> val(0.5, 4.0);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + trial % 40);
    for (auto& x : v) x = val(rng);
    for (auto conv : {VarianceConvention::sample, VarianceConvention::population}) {
      const auto s = descriptive_stats(v, conv);
      worst = std::max(worst, std::abs(s.cv - s.stddev / s.mean));
      worst = std::max(worst, std::abs(s.variance - s.stddev * s.stddev));
    }
  }
  // Published similarity summary: mean 2.160, stddev 1.021, cv 0.473, variance 1.043.
  const double cv_gap = std::abs(1.021 / 2.160 - 0.473);
  const double var_gap = std::abs(1.021 * 1.021 - 1.043);
  const bool published = cv_gap <= 1e-3 && var_gap <= 1e-3;
  report("descriptive-consistency", worst <= 1e-9 && published,
         fmt("identity max diff %.3g; ", worst) + fmt("published cv gap %.5f, variance gap %.5f", cv_gap, var_gap));
}

}  // namespace

int main() {
  const fs::path dir = fs::temp_directory_path() / "sumeval_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);

  const std::vector<std::pair<const char*, std::function<void()>>> checks{
      {"jaccard-word-order", jaccard_word_order},
      {"bleu1-unigram-precision", bleu1_is_unigram_precision},
      {"ngram-oracle-suite", ngram_oracle_suite},
      {"statistics-oracles", statistics_oracles},
      {"pipeline-property", [&] { pipeline_property(dir); }},
      {"group-shift", group_shift},
      {"descriptive-consistency", descriptive_consistency},
  };
  for (const auto& [name, check] : checks) {
    try {
      check();
    } catch (const std::exception& e) {
      report(name, false, std::string("threw: ") + e.what());
    }
  }
  fs::remove_all(dir);
  std::printf("%d of %zu criteria failed\n", failures, checks.size());
  return failures == 0 ? 0 : 1;
}
