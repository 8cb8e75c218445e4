#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("sumeval_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    write("pairs.jsonl",
          R"({"id":"a","prediction":"gets the name","reference":"returns the name"})"
          "\n"
          R"({"id":"b","prediction":"opens the file","reference":"open a file for reading"})"
          "\n"
          R"({"id":"c","prediction":"sorts items","reference":"sort the list of items"})"
          "\n");
    write("ratings.csv",
          "participant_id,item_id,shown_variant,criterion,answer\n"
          "p1,a,generated,similarity,1\n"
          "p2,a,generated,similarity,2\n"
          "p1,b,generated,similarity,3\n"
          "p1,c,reference,similarity,4\n"
          "p1,a,generated,completeness,2\n");
  }
  void TearDown() override { fs::remove_all(dir_); }

  void write(const std::string& name, const std::string& text) { std::ofstream(dir_ / name) << text; }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(const std::string& args) const {
    const std::string cmd = std::string(SUMEVAL_CLI) + " " + args + " > " + path("stdout.txt") + " 2> " + path("stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string stderr_text() const {
    std::ifstream in(dir_ / "stderr.txt");
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, ReportSucceeds) {
  EXPECT_EQ(run("report --pairs " + path("pairs.jsonl") + " --ratings " + path("ratings.csv") + " --out " + path("out")), 0)
      << stderr_text();
  EXPECT_TRUE(fs::exists(dir_ / "out" / "correlation.txt"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "cross_kendall.csv"));
}

TEST_F(CliTest, StagesChain) {
  const std::string out = " --out " + path("out");
  EXPECT_EQ(run("score --pairs " + path("pairs.jsonl") + " --metrics jaccard,rouge-l" + out), 0) << stderr_text();
  EXPECT_EQ(run("ratings --ratings " + path("ratings.csv") + " --invert none" + out), 0) << stderr_text();
  EXPECT_EQ(run("correlate" + out), 0) << stderr_text();
  EXPECT_EQ(run("cross" + out), 0) << stderr_text();
  EXPECT_EQ(run("correlate --scores " + path("out/scores.jsonl") + " --aggregates " + path("out/aggregates.csv") +
                " --out " + path("elsewhere")),
            0);
  EXPECT_TRUE(fs::exists(dir_ / "elsewhere" / "correlation.csv"));
}

TEST_F(CliTest, ConfigFileWithOverride) {
  write("run.conf", "pairs = \"" + path("pairs.jsonl") + "\"\nmetrics = \"jaccard\"\nout = \"" + path("conf_out") + "\"\n");
  EXPECT_EQ(run("score --config " + path("run.conf")), 0) << stderr_text();
  EXPECT_TRUE(fs::exists(dir_ / "conf_out" / "scores.jsonl"));
  EXPECT_EQ(run("score --config " + path("run.conf") + " --metrics nosuch"), 1);
}

TEST_F(CliTest, ConfigErrorsExitOne) {
  EXPECT_EQ(run("score --pairs " + path("pairs.jsonl") + " --metrics nosuch --out " + path("out")), 1);
  EXPECT_EQ(run("score --pairs " + path("pairs.jsonl") + " --metrics emb-cosine:sbert --out " + path("out")), 1);
  EXPECT_EQ(run("score --pairs " + path("missing.jsonl") + " --out " + path("out")), 1);
  EXPECT_EQ(run("score --out " + path("out")), 1);
  EXPECT_EQ(run("score --pairs " + path("pairs.jsonl") + " --tokenizer bpe"), 1);
  EXPECT_EQ(run("ratings --ratings " + path("ratings.csv") + " --group-low 3 --group-high 2"), 1);
  EXPECT_EQ(run("report --pairs " + path("pairs.jsonl") + " --out " + path("out")), 1);
  EXPECT_EQ(run("nosuch"), 1);
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("score --bogus-flag"), 1);
}

TEST_F(CliTest, DataErrorsExitTwo) {
  write("bad.jsonl", R"({"id":"a","prediction":"x","reference":"y"})"
                     "\n{broken\n");
  EXPECT_EQ(run("score --pairs " + path("bad.jsonl") + " --out " + path("out")), 2);
  EXPECT_NE(stderr_text().find("line 2"), std::string::npos) << stderr_text();
  write("bad.csv", "participant_id,item_id,shown_variant,criterion,answer\np1,a,generated,similarity,5\n");
  EXPECT_EQ(run("ratings --ratings " + path("bad.csv") + " --out " + path("out")), 2);
  EXPECT_NE(stderr_text().find("line 2"), std::string::npos);
  write("emb.jsonl", R"({"id":"a","role":"prediction","model":"m","kind":"sentence","vector":[1,2]})"
                     "\n"
                     R"({"id":"a","role":"reference","model":"m","kind":"sentence","vector":[1,2,3]})"
                     "\n");
  EXPECT_EQ(run("score --pairs " + path("pairs.jsonl") + " --metrics emb-cosine:m --embeddings " + path("emb.jsonl") +
                " --out " + path("out")),
            2);
}

TEST_F(CliTest, HelpExitsZero) { EXPECT_EQ(run("--help"), 0); }
