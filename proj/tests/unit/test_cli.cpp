#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

#include <json.hpp>

#include "aes/featureset.hpp"
#include "fixtures.hpp"

namespace fs = std::filesystem;
using aes::testing::data_file;
using aes::testing::fixture;
using aes::testing::slurp;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("aes_cli_" + std::string(info->name()) + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) {
    const std::string cmd = std::string(AES_CLI_PATH) + " " + args + " >" + (dir_ / "stdout.txt").string() + " 2>" +
                            (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string err() const { return slurp(dir_ / "stderr.txt"); }
  fs::path out(const std::string& name) const { return dir_ / name; }
  static std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, EvalReproducesGoldenTables) {
  ASSERT_EQ(run("eval --corpus " + q(data_file("synthetic/corpus.jsonl")) + " --scores " +
                q(data_file("synthetic/scores")) + " --out " + q(out("eval"))),
            0)
      << err();
  EXPECT_EQ(slurp(out("eval/table1.csv")), slurp(fixture("eval_golden/table1.csv")));
  EXPECT_EQ(slurp(out("eval/fig2.csv")), slurp(fixture("eval_golden/fig2.csv")));
  const auto m = nlohmann::json::parse(slurp(out("eval/manifest.json")));
  EXPECT_EQ(m["command"], "eval");
  EXPECT_EQ(m["exit_code"], 0);
  EXPECT_EQ(m["outputs"].size(), 3u);
  EXPECT_EQ(m["config_hashes"].size(), 2u);
}

TEST_F(Cli, ExtractFixtureMatchesGolden) {
  ASSERT_EQ(run("extract --corpus " + q(fixture("essay/corpus.jsonl")) + " --annotations " + q(fixture("essay")) +
                " --freq " + q(fixture("essay/freq.txt")) + " --abstr " + q(fixture("essay/abstractness.tsv")) +
                " --out " + q(out("x"))),
            0)
      << err();
  const auto& reg = aes::FeatureRegistry::builtin();
  const auto rows = aes::features_from_csv(slurp(out("x/features.csv")), reg);
  ASSERT_EQ(rows.size(), 1u);
  for (const auto& [name, value] : aes::testing::golden_features()) {
    EXPECT_NEAR(rows[0].at(reg, name), value, 1e-9) << name;
  }
}

TEST_F(Cli, ExtractThenCrossValidate) {
  fs::create_directories(out("ann"));
  ASSERT_EQ(run("extract --corpus " + q(data_file("synthetic/corpus.jsonl")) + " --annotations " + q(out("ann")) +
                " --freq " + q(fixture("essay/freq.txt")) + " --abstr " + q(fixture("essay/abstractness.tsv")) +
                " --out " + q(out("feat"))),
            0)
      << err();
  const std::string cv = "cv --features " + q(out("feat/features.csv")) + " --corpus " +
                         q(data_file("synthetic/corpus.jsonl")) +
                         " --aspect vocabulary --regressor ridge,tree --k 5 --folds 5 --seed 3 --out ";
  ASSERT_EQ(run(cv + q(out("cv1"))), 0) << err();
  ASSERT_EQ(run(cv + q(out("cv2"))), 0) << err();
  EXPECT_EQ(slurp(out("cv1/cv_report.json")), slurp(out("cv2/cv_report.json")));
  EXPECT_EQ(slurp(out("cv1/predictions.csv")), slurp(out("cv2/predictions.csv")));
  const auto rep = nlohmann::json::parse(slurp(out("cv1/cv_report.json")));
  EXPECT_EQ(rep["aspect"], "vocabulary");
  EXPECT_EQ(run(cv + q(out("bad")) + " --regressor svr"), 1);
  EXPECT_EQ(run("cv --features " + q(out("feat/features.csv")) + " --corpus " + q(data_file("synthetic/corpus.jsonl")) +
                " --aspect title_intro --out " + q(out("bad2"))),
            1);
}

TEST_F(Cli, GradeWithMockThenCacheRerun) {
  const std::string args = "grade --corpus " + q(data_file("synthetic/corpus.jsonl")) + " --rubric " +
                           q(data_file("rubric_9.json")) + " --endpoint " + q(data_file("endpoint_mock.json")) +
                           " --out " + q(out("g"));
  ASSERT_EQ(run(args), 0) << err();
  const auto first = nlohmann::json::parse(slurp(out("g/ledger.json")));
  EXPECT_EQ(first["calls"], 360);
  EXPECT_EQ(first["requests"], 360);
  const std::string scores = slurp(out("g/scores/mock.csv"));
  ASSERT_EQ(run(args), 0) << err();
  const auto second = nlohmann::json::parse(slurp(out("g/ledger.json")));
  EXPECT_EQ(second["requests"], 0);
  EXPECT_EQ(second["cache_hits"], 360);
  EXPECT_EQ(slurp(out("g/scores/mock.csv")), scores);
  EXPECT_EQ(slurp(out("g/review.csv")), "essay_id,aspect,reason\n");

  ASSERT_EQ(run("eval --corpus " + q(data_file("synthetic/corpus.jsonl")) + " --scores " + q(out("g/scores")) +
                " --out " + q(out("e"))),
            0)
      << err();
  EXPECT_NE(slurp(out("e/table1.csv")).find("9,mock,40,0,"), std::string::npos);
}

TEST_F(Cli, GradeBudgetPrecheckExitsTwo) {
  {
    std::ofstream(out("pricey.json")) << R"({"kind":"mock","price_in":1000000,"backoff_base_ms":0})";
  }
  EXPECT_EQ(run("grade --corpus " + q(data_file("synthetic/corpus.jsonl")) + " --rubric " +
                q(data_file("rubric_9.json")) + " --endpoint " + q(out("pricey.json")) + " --budget 1 --out " +
                q(out("g"))),
            2);
  EXPECT_NE(err().find("budget"), std::string::npos);
  EXPECT_EQ(nlohmann::json::parse(slurp(out("g/manifest.json")))["exit_code"], 2);
}

TEST_F(Cli, InjectWithInjectableMock) {
  ASSERT_EQ(run("inject --corpus " + q(data_file("synthetic/corpus.jsonl")) + " --rubric " +
                q(data_file("rubric_9.json")) + " --endpoint " + q(data_file("endpoint_mock_injectable.json")) +
                " --sample 10 --seed 1 --payload-file " + q(data_file("injection_payload.txt")) + " --out " +
                q(out("inj"))),
            0)
      << err();
  const auto s = nlohmann::json::parse(slurp(out("inj/delta_summary.json")));
  EXPECT_EQ(s["essays"], 10);
  EXPECT_EQ(s["mean_delta"], "9.000000");
  EXPECT_TRUE(fs::exists(out("inj/prompts/injected.jsonl")));
}

TEST_F(Cli, GenerateAndGrade) {
  ASSERT_EQ(run("generate --task " + q(data_file("generation/task.txt")) + " --guidance " +
                q(data_file("generation/guidance.txt")) + " --sources " + q(data_file("generation/source_1.txt")) +
                " " + q(data_file("generation/source_2.txt")) + " --n 3 --temp 1 --endpoint " +
                q(data_file("endpoint_echo.json")) + " --rubric " + q(data_file("rubric_9.json")) +
                " --grade-endpoint " + q(data_file("endpoint_mock.json")) + " --out " + q(out("gen"))),
            0)
      << err();
  EXPECT_TRUE(fs::exists(out("gen/essays/essay_2.txt")));
  const auto prov = nlohmann::json::parse(slurp(out("gen/provenance.json")));
  EXPECT_EQ(prov["essays"].size(), 3u);
  EXPECT_NE(slurp(out("gen/score_distribution.csv")).find("18,3\n"), std::string::npos);
}

TEST_F(Cli, ReportCollectsOutputs) {
  ASSERT_EQ(run("eval --corpus " + q(data_file("synthetic/corpus.jsonl")) + " --scores " +
                q(data_file("synthetic/scores")) + " --out " + q(out("runs/eval"))),
            0);
  ASSERT_EQ(run("report --in " + q(out("runs")) + " --out " + q(out("rep"))), 0) << err();
  const auto md = slurp(out("rep/report.md"));
  EXPECT_NE(md.find("## eval/table1.csv"), std::string::npos);
  EXPECT_NE(md.find("injection_mean_delta: 6.43"), std::string::npos);
  EXPECT_TRUE(fs::exists(out("rep/plots/eval_fig2.csv")));
  EXPECT_EQ(run("report --in " + q(out("runs")) + " --out " + q(out("runs"))), 1);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run("eval --corpus /nonexistent --scores /tmp --out " + q(out("x"))), 1);
  {
    std::ofstream(out("bad.jsonl")) << "{broken\n";
  }
  fs::create_directories(out("s"));
  {
    std::ofstream(out("s/a.csv")) << "essay_id,aspect,score,source\n";
  }
  EXPECT_EQ(run("eval --corpus " + q(out("bad.jsonl")) + " --scores " + q(out("s")) + " --out " + q(out("x"))), 1);
  EXPECT_NE(err().find("line 1"), std::string::npos);
  EXPECT_EQ(run("extract --corpus " + q(fixture("essay/corpus.jsonl")) + " --annotations " + q(fixture("essay")) +
                " --freq " + q(fixture("essay/freq.txt")) + " --abstr " + q(fixture("essay/abstractness.tsv")) +
                " --registry " + q(data_file("endpoint_mock.json")) + " --out " + q(out("y"))),
            1);
}
