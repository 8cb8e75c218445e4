#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "sumeval/error.hpp"
#include "sumeval/report.hpp"

using namespace sumeval;
namespace fs = std::filesystem;

namespace {

class ReportTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("sumeval_report_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
  }

  static std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }

  static std::vector<std::string> lines(const fs::path& p) {
    std::vector<std::string> out;
    std::istringstream in(read(p));
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
  }

  RunConfig config(const std::string& metrics = "") {
    RunConfig c;
    c.pairs_path = dir_ / "pairs.jsonl";
    c.out_dir = dir_ / "out";
    if (!metrics.empty()) c.metrics = parse_metric_list(metrics);
    return c;
  }

  fs::path dir_;
};

std::string pair_line(const std::string& id, const std::string& pred, const std::string& ref) {
  return nlohmann::json{{"id", id}, {"prediction", pred}, {"reference", ref}}.dump() + "\n";
}

const char* kPairs[][2] = {
    {"returns the name of the user", "gets the user name"},
    {"opens a file for reading", "open the given file"},
    {"sorts the list", "sorts the list in place"},
    {"closes the stream", "flush and close the output stream"},
    {"adds two numbers", "returns the sum of two numbers"},
    {"checks if empty", "returns true if the list is empty"},
};

std::string sample_pairs() {
  std::string out;
  for (std::size_t i = 0; i < std::size(kPairs); ++i) out += pair_line("m" + std::to_string(i), kPairs[i][0], kPairs[i][1]);
  return out;
}

}  // namespace

TEST(MetricSpecs, Parsing) {
  EXPECT_EQ(parse_metric_spec("rouge-w").family, MetricFamily::rouge_w);
  const auto e = parse_metric_spec("emb-cosine:sbert");
  EXPECT_EQ(e.family, MetricFamily::emb_cosine);
  EXPECT_EQ(e.model, "sbert");
  EXPECT_EQ(e.name(), "emb-cosine:sbert");
  EXPECT_TRUE(e.needs_embeddings());
  EXPECT_EQ(parse_metric_spec("tfidf-euclid").orientation(), Orientation::lower_is_more_similar);
  EXPECT_EQ(parse_metric_spec("emb-euclid:x").orientation(), Orientation::lower_is_more_similar);
  EXPECT_THROW(parse_metric_spec("bleu9"), ConfigError);
  EXPECT_THROW(parse_metric_spec("bertscore"), ConfigError);
  EXPECT_THROW(parse_metric_spec("jaccard:x"), ConfigError);
  EXPECT_EQ(parse_metric_list("jaccard, bleu ,meteor").size(), 3U);
  EXPECT_EQ(default_metrics().size(), 8U);
  for (const auto& m : default_metrics()) EXPECT_FALSE(m.needs_embeddings());
}

TEST(MetricSpecs, ConfigValidation) {
  RunConfig c;
  c.pairs_path = "p.jsonl";
  EXPECT_NO_THROW(c.validate());
  auto bad = c;
  bad.metrics.clear();
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.group_low = 3;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.bleu.weights = {0.5, 0.6};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.rouge_w_alpha = 0.5;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.meteor.gamma = 2;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.metrics = parse_metric_list("jaccard,jaccard");
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.metrics = parse_metric_list("emb-cosine:sbert");
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = c;
  bad.pairs_path.clear();
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Formatting, Numbers) {
  EXPECT_EQ(format_fixed(0.82281), "0.8228");
  EXPECT_EQ(format_fixed(-0.00001), "0.0000");
  EXPECT_EQ(format_fixed(std::nan("")), "-");
  EXPECT_EQ(format_full(0.1), "0.1");
  EXPECT_EQ(std::stod(format_full(1.0 / 3.0)), 1.0 / 3.0);
}

TEST_F(ReportTest, ScoreSingleIdenticalPair) {
  write("pairs.jsonl", pair_line("a", "Get the name", "get the name"));
  const auto run = cmd_score(config("jaccard"));
  ASSERT_EQ(run.scores.size(), 1U);
  EXPECT_EQ(run.scores[0].score.value, 1.0);
  const auto l = lines(dir_ / "out" / files::kScores);
  ASSERT_EQ(l.size(), 1U);
  const auto obj = nlohmann::json::parse(l[0]);
  EXPECT_EQ(obj["item_id"], "a");
  EXPECT_EQ(obj["metric"], "jaccard");
  EXPECT_EQ(obj["value"], 1.0);
  EXPECT_EQ(obj["orientation"], "higher_is_more_similar");
  EXPECT_EQ(lines(dir_ / "out" / files::kScoreSummary)[1], "jaccard,higher_is_more_similar,1,0,1");
}

TEST_F(ReportTest, ScoreCardinalityOrderAndDeterminism) {
  write("pairs.jsonl", sample_pairs());
  auto c = config();
  c.threads = 1;
  const auto run = cmd_score(c);
  EXPECT_EQ(run.scores.size(), std::size(kPairs) * c.metrics.size());
  EXPECT_TRUE(run.errors.empty());
  const auto l = lines(dir_ / "out" / files::kScores);
  EXPECT_EQ(l.size(), run.scores.size());
  for (std::size_t i = 1; i < run.scores.size(); ++i) {
    const auto& a = run.scores[i - 1].score;
    const auto& b = run.scores[i].score;
    EXPECT_LT(std::tie(a.item_id, a.metric_name), std::tie(b.item_id, b.metric_name));
  }
  const std::string first = read(dir_ / "out" / files::kScores);
  const std::string summary = read(dir_ / "out" / files::kScoreSummary);
  c.threads = 4;
  cmd_score(c);
  EXPECT_EQ(read(dir_ / "out" / files::kScores), first);
  EXPECT_EQ(read(dir_ / "out" / files::kScoreSummary), summary);
  const auto meta = nlohmann::json::parse(read(dir_ / "out" / files::kScoreMeta));
  EXPECT_EQ(meta["bleu"]["smoothing"], "none");
  EXPECT_EQ(meta["bleu"]["brevity_penalty"], true);
}

TEST_F(ReportTest, PairsValidation) {
  auto line_of = [&](const std::string& text) -> std::size_t {
    write("pairs.jsonl", text);
    try {
      load_pairs(dir_ / "pairs.jsonl", TokenizerMode::standard);
    } catch (const DataError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of(pair_line("a", "x", "y") + pair_line("a", "x", "y")), 2U);
  EXPECT_EQ(line_of(pair_line("a", "x", "y") + "\n{nope\n"), 3U);
  EXPECT_EQ(line_of(R"({"id":"a","prediction":"x"})"), 1U);
  EXPECT_EQ(line_of(R"({"id":"","prediction":"x","reference":"y"})"), 1U);
  EXPECT_EQ(line_of(pair_line("a", "", "")), 0U);
  EXPECT_THROW(load_pairs(dir_ / "missing.jsonl", TokenizerMode::standard), ConfigError);
}

TEST_F(ReportTest, EmbeddingMetricsAndPerItemErrors) {
  write("pairs.jsonl", sample_pairs());
  std::string sentence, tokens;
  for (std::size_t i = 0; i < std::size(kPairs); ++i) {
    for (int role = 0; role < 2; ++role) {
      const auto seq = normalize_tokenize(kPairs[i][role]);
      EmbeddingRecord s;
      s.item_id = "m" + std::to_string(i);
      s.role = role ? TextRole::reference : TextRole::prediction;
      s.model = "toy";
      s.vector = det_embed(seq, 8, 99);
      if (i != 2 || role != 1) sentence += format_embedding_record(s) + "\n";  // m2 reference missing
      EmbeddingRecord t = s;
      t.model = "tok";
      t.kind = EmbeddingKind::tokens;
      t.vector.resize(0);
      t.tokens = seq.tokens;
      t.matrix.resize(static_cast<Eigen::Index>(seq.size()), 8);
      for (std::size_t k = 0; k < seq.size(); ++k) t.matrix.row(static_cast<Eigen::Index>(k)) = det_token_vector(seq[k], 8, 5).transpose();
      tokens += format_embedding_record(t) + "\n";
    }
  }
  auto c = config("jaccard,emb-cosine:toy,emb-euclid:toy,bertscore:tok");
  c.embeddings_paths = {write("toy.jsonl", sentence), write("tok.jsonl", tokens)};
  const auto run = cmd_score(c);
  EXPECT_EQ(run.scores.size() + run.errors.size(), std::size(kPairs) * 4);
  ASSERT_EQ(run.errors.size(), 2U);
  EXPECT_EQ(run.errors[0].item_id, "m2");
  EXPECT_EQ(run.errors[0].metric_name, "emb-cosine:toy");
  EXPECT_EQ(lines(dir_ / "out" / files::kScoreErrors).size(), 2U);
  for (const auto& s : run.scores) {
    if (s.score.metric_name == "emb-euclid:toy") {
      EXPECT_EQ(s.score.orientation, Orientation::lower_is_more_similar);
      EXPECT_GE(s.score.value, 0.0);
    }
    if (s.score.metric_name == "bertscore:tok") {
      EXPECT_LE(s.score.value, 1.0 + 1e-12);
    }
  }

  auto missing = config("emb-cosine:other");
  missing.embeddings_paths = c.embeddings_paths;
  EXPECT_THROW(cmd_score(missing), ConfigError);
  auto dup = c;
  dup.embeddings_paths.push_back(c.embeddings_paths[0]);
  EXPECT_THROW(cmd_score(dup), ConfigError);
  auto wrong_kind = config("bertscore:toy");
  wrong_kind.embeddings_paths = c.embeddings_paths;
  const auto wk = cmd_score(wrong_kind);
  EXPECT_EQ(wk.errors.size(), std::size(kPairs));
}

TEST_F(ReportTest, TfIdfCorpusFile) {
  write("pairs.jsonl", pair_line("a", "open file", "open the file") + pair_line("b", "close file", "close"));
  auto c = config("tfidf-cosine");
  const double pooled = cmd_score(c).scores[0].score.value;
  c.tfidf_corpus_path = write("corpus.txt", "open the file\nopen\n\nthe the the\n");
  const double external = cmd_score(c).scores[0].score.value;
  EXPECT_NE(pooled, external);
  c.tfidf_corpus_path = write("empty.txt", "\n");
  EXPECT_THROW(cmd_score(c), DataError);
}

TEST_F(ReportTest, RatingsOutputs) {
  write("ratings.csv",
        "participant_id,item_id,shown_variant,criterion,answer\n"
        "p1,m0,generated,similarity,2\n"
        "p2,m0,generated,similarity,2\n"
        "p1,m0,generated,completeness,4\n");
  auto c = config();
  c.ratings_path = dir_ / "ratings.csv";
  const auto run = cmd_ratings(c);
  ASSERT_FALSE(run.aggregates.empty());
  EXPECT_EQ(run.aggregates[0].rating.mean, 2.0);
  EXPECT_EQ(run.aggregates[0].variant, "all");
  EXPECT_EQ(run.agreement[0].histogram.fractions().at(0), 1.0);
  const auto agg = load_aggregates(dir_ / "out" / files::kAggregates);
  EXPECT_EQ(agg.size(), run.aggregates.size());
  bool saw_completeness = false;
  for (const auto& a : agg) {
    EXPECT_NE(a.rating.criterion, Criterion::accuracy);
    if (a.rating.criterion == Criterion::completeness) {
      saw_completeness = true;
      EXPECT_EQ(a.rating.mean, 1.0);
    }
  }
  EXPECT_TRUE(saw_completeness);
  EXPECT_EQ(lines(dir_ / "out" / files::kAggregates)[1], "m0,similarity,all,2,2");
  EXPECT_NE(read(dir_ / "out" / files::kRatingsText).find("similarity"), std::string::npos);

  c.ratings_path.reset();
  EXPECT_THROW(cmd_ratings(c), ConfigError);
}

TEST_F(ReportTest, CorrelateCells) {
  std::string scores;
  std::string aggregates = "item_id,criterion,variant,mean,count\n";
  for (int i = 0; i < 8; ++i) {
    const std::string id = "i" + std::to_string(i);
    const double j = i / 8.0;
    const double mean = 4.0 - 3.0 * j;
    scores += nlohmann::json{{"item_id", id}, {"metric", "jaccard"}, {"value", j}, {"orientation", "higher_is_more_similar"}}.dump() + "\n";
    scores += nlohmann::json{{"item_id", id}, {"metric", "tfidf-euclid"}, {"value", 2.0 * j}, {"orientation", "lower_is_more_similar"}}.dump() + "\n";
    scores += nlohmann::json{{"item_id", id}, {"metric", "bleu"}, {"value", 0.0}, {"orientation", "higher_is_more_similar"}}.dump() + "\n";
    aggregates += id + ",similarity,all," + format_full(mean) + ",3\n";
    aggregates += id + ",accuracy,generated,1.5,2\n";
  }
  scores += nlohmann::json{{"item_id", "solo"}, {"metric", "meteor"}, {"value", 0.5}, {"orientation", "higher_is_more_similar"}}.dump() + "\n";
  const auto sf = write("scores.jsonl", scores);
  const auto af = write("aggregates.csv", aggregates);
  auto c = config();
  const auto report = cmd_correlate(sf, af, c);

  EXPECT_EQ(report.criteria, (std::vector<Criterion>{Criterion::similarity, Criterion::accuracy}));
  ASSERT_EQ(report.rows.size(), 4U);
  EXPECT_EQ(report.rows[0].metric_name, "jaccard");
  const auto& jac = report.find("jaccard")->cells.at(Criterion::similarity);
  EXPECT_EQ(jac.correlation_status, CellStatus::ok);
  EXPECT_NEAR(*jac.spearman, 1.0, 1e-12);
  EXPECT_NEAR(*jac.kendall, 1.0, 1e-12);
  EXPECT_EQ(jac.n, 8U);
  ASSERT_TRUE(jac.utest.has_value());
  EXPECT_EQ(jac.n_agree, 2U);
  EXPECT_EQ(jac.n_disagree, 3U);

  EXPECT_NEAR(*report.find("tfidf-euclid")->cells.at(Criterion::similarity).spearman, -1.0, 1e-12);

  const auto& flat = report.find("bleu")->cells.at(Criterion::similarity);
  EXPECT_EQ(flat.correlation_status, CellStatus::degenerate);
  EXPECT_FALSE(flat.spearman.has_value());

  // Accuracy is constant at 1.5: every item agrees, nobody disagrees.
  const auto& acc = report.find("jaccard")->cells.at(Criterion::accuracy);
  EXPECT_EQ(acc.correlation_status, CellStatus::degenerate);
  EXPECT_FALSE(acc.utest.has_value());
  EXPECT_EQ(acc.n_disagree, 0U);

  const auto& solo = report.find("meteor")->cells.at(Criterion::similarity);
  EXPECT_EQ(solo.correlation_status, CellStatus::insufficient);
  EXPECT_EQ(report.warnings, 2U);

  const auto text = read(dir_ / "out" / files::kCorrelationText);
  EXPECT_NE(text.find("degen"), std::string::npos);
  EXPECT_NE(text.find("1.0000"), std::string::npos);
  EXPECT_NE(text.find("# bleu: configuration unknown"), std::string::npos);
  const auto csv = lines(dir_ / "out" / files::kCorrelationCsv);
  EXPECT_EQ(csv.size(), 1U + 4U * 2U);
  for (const auto& l : csv) {
    if (l.rfind("bleu,", 0) == 0) { EXPECT_NE(l.find(",degenerate,,,"), std::string::npos) << l; }
  }

  auto refq = c;
  refq.quality_variant = QualityVariant::reference;
  EXPECT_EQ(cmd_correlate(sf, af, refq).criteria, (std::vector<Criterion>{Criterion::similarity}));
}

TEST_F(ReportTest, CrossMatrix) {
  std::string scores;
  std::string aggregates = "item_id,criterion,variant,mean,count\n";
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 12; ++i) {
    const std::string id = "i" + std::to_string(i);
    const double v = u(rng);
    for (const char* m : {"jaccard", "bleu1"}) {
      scores += nlohmann::json{{"item_id", id}, {"metric", m}, {"value", v}, {"orientation", "higher_is_more_similar"}}.dump() + "\n";
    }
    scores += nlohmann::json{{"item_id", id}, {"metric", "rouge-l"}, {"value", u(rng)}, {"orientation", "higher_is_more_similar"}}.dump() + "\n";
    scores += nlohmann::json{{"item_id", id}, {"metric", "bleu"}, {"value", 0.25}, {"orientation", "higher_is_more_similar"}}.dump() + "\n";
    aggregates += id + ",similarity,all," + format_full(1.0 + 3.0 * u(rng)) + ",2\n";
  }
  const auto m = cmd_cross(write("scores.jsonl", scores), write("aggregates.csv", aggregates), config());
  ASSERT_EQ(m.labels, (std::vector<std::string>{"jaccard", "bleu1", "bleu", "rouge-l", "human:similarity"}));
  for (Eigen::Index a = 0; a < 5; ++a) {
    for (Eigen::Index b = 0; b < 5; ++b) {
      if (a == 2 || b == 2) {
        EXPECT_TRUE(std::isnan(m.spearman(a, b)));
        continue;
      }
      EXPECT_NEAR(m.spearman(a, b), m.spearman(b, a), 1e-12);
      EXPECT_NEAR(m.kendall(a, b), m.kendall(b, a), 1e-12);
    }
    if (a != 2) { EXPECT_NEAR(m.spearman(a, a), 1.0, 1e-12); }
  }
  EXPECT_NEAR(m.spearman(0, 1), 1.0, 1e-12);
  EXPECT_NEAR(m.kendall(0, 1), 1.0, 1e-12);
  EXPECT_EQ(m.n(0, 4), 12);
  const auto csv = lines(dir_ / "out" / files::kCrossSpearman);
  EXPECT_EQ(csv.size(), 6U);
  EXPECT_EQ(csv[0], "series,jaccard,bleu1,bleu,rouge-l,human:similarity");
}

TEST_F(ReportTest, AggregatesValidation) {
  auto line_of = [&](const std::string& body) -> std::size_t {
    write("agg.csv", "item_id,criterion,variant,mean,count\n" + body);
    try {
      load_aggregates(dir_ / "agg.csv");
    } catch (const DataError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("a,similarity,all,2.5,2\n"), 0U);
  EXPECT_EQ(line_of("a,similarity,all,2.5,2\na,similarity,all,2,1\n"), 3U);
  EXPECT_EQ(line_of("a,similarity,all,4.5,2\n"), 2U);
  EXPECT_EQ(line_of("a,similarity,some,2,2\n"), 2U);
  EXPECT_EQ(line_of("a,similarity,all,x,2\n"), 2U);
  EXPECT_EQ(line_of("a,similarity,all,2\n"), 2U);
}

TEST_F(ReportTest, FullReportIsReproducible) {
  write("pairs.jsonl", sample_pairs());
  std::string ratings = "participant_id,item_id,shown_variant,criterion,answer\n";
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> ans(1, 4);
  for (int p = 0; p < 5; ++p) {
    for (std::size_t i = 0; i < std::size(kPairs); ++i) {
      for (const char* crit : {"similarity", "accuracy", "completeness", "conciseness"}) {
        ratings += "p" + std::to_string(p) + ",m" + std::to_string(i) + "," + (p % 2 ? "reference" : "generated") + "," +
                   crit + "," + std::to_string(ans(rng)) + "\n";
      }
    }
  }
  auto c = config();
  c.ratings_path = write("ratings.csv", ratings);
  cmd_report(c);
  std::map<std::string, std::string> first;
  for (const auto& e : fs::directory_iterator(dir_ / "out")) first[e.path().filename().string()] = read(e.path());
  EXPECT_EQ(first.size(), 13U);
  c.threads = 3;
  cmd_report(c);
  for (const auto& [name, text] : first) EXPECT_EQ(read(dir_ / "out" / name), text) << name;
  EXPECT_NE(first[files::kCorrelationText].find("# bleu: weights=0.25,0.25,0.25,0.25 smoothing=none brevity_penalty=on"),
            std::string::npos);
}
