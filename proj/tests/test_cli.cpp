#include <gtest/gtest.h>

#include <cstdlib>

#include "support/synthetic_files.hpp"

using testing_support::run_cli;
using testing_support::slurp;
using testing_support::TempDir;

namespace {

std::size_t count_lines(const std::string& s) { return std::count(s.begin(), s.end(), '\n'); }

class CliPipeline : public ::testing::Test {
 protected:
  void SetUp() override {
    synth::Params p;
    p.n_sentences = 200;
    p.n_queries = 20;
    setup_ = synth::make_setup(p);
    cfg_ = testing_support::write_synthetic(dir_, setup_);
  }

  TempDir dir_;
  synth::Setup setup_;
  std::filesystem::path cfg_;
};

}  // namespace

TEST_F(CliPipeline, TypeWritesOneRecordPerQuery) {
  auto r = testing_support::run_pipeline(dir_, cfg_);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(slurp(dir_ / "pred.jsonl")), setup_.queries.size());
}

TEST_F(CliPipeline, TypeThenEvaluateComposes) {
  ASSERT_EQ(testing_support::run_pipeline(dir_, cfg_).code, 0);
  auto r = run_cli({"evaluate", "--gold", (dir_ / "queries.jsonl").string(), "--pred",
                    (dir_ / "pred.jsonl").string(), "--per-type", (dir_ / "types.tsv").string(),
                    "--text"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto report = nlohmann::json::parse(r.out);
  EXPECT_EQ(report["n_mentions"], setup_.queries.size());
  EXPECT_GE(report["strict_acc"].get<double>(), 0.9);
  EXPECT_FALSE(r.err.empty());
  EXPECT_GT(count_lines(slurp(dir_ / "types.tsv")), 1u);
}

TEST_F(CliPipeline, PerfectPredictionsScoreOne) {
  std::ostringstream pred;
  for (const auto& q : setup_.queries) {
    entyper::TypePrediction p;
    auto split = entyper::split_coarse_fine(q.gold_types);
    p.coarse = *split.coarse.begin();
    p.fine = split.fine;
    pred << entyper::to_prediction_line(p) << "\n";
  }
  auto path = dir_.write("perfect.jsonl", pred.str());
  auto r = run_cli({"evaluate", "--gold", (dir_ / "queries.jsonl").string(), "--pred",
                    path.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto report = nlohmann::json::parse(r.out);
  EXPECT_EQ(report["strict_acc"], 1.0);
  EXPECT_EQ(report["macro"]["f1"], 1.0);
  EXPECT_EQ(report["micro"]["f1"], 1.0);
}

TEST_F(CliPipeline, RepeatedRunsAreByteIdentical) {
  ASSERT_EQ(testing_support::run_pipeline(dir_, cfg_, "a.jsonl").code, 0);
  const auto index = slurp(dir_ / "index.bin");
  const auto reps = slurp(dir_ / "reps.bin");
  ASSERT_EQ(testing_support::run_pipeline(dir_, cfg_, "b.jsonl").code, 0);
  EXPECT_EQ(slurp(dir_ / "a.jsonl"), slurp(dir_ / "b.jsonl"));
  EXPECT_EQ(index, slurp(dir_ / "index.bin"));
  EXPECT_EQ(reps, slurp(dir_ / "reps.bin"));
}

TEST_F(CliPipeline, JobsDoNotChangeOutput) {
  ASSERT_EQ(testing_support::run_pipeline(dir_, cfg_, "one.jsonl").code, 0);
  auto r = run_cli({"type", "--config", cfg_.string(), "--in", (dir_ / "queries.jsonl").string(),
                    "--out", (dir_ / "four.jsonl").string(), "--jobs", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir_ / "one.jsonl"), slurp(dir_ / "four.jsonl"));
}

TEST_F(CliPipeline, StdinAndStdout) {
  ASSERT_EQ(testing_support::run_pipeline(dir_, cfg_).code, 0);
  auto r = run_cli({"type", "--config", cfg_.string()}, slurp(dir_ / "queries.jsonl"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, slurp(dir_ / "pred.jsonl"));
}

TEST_F(CliPipeline, FlagsOverrideConfig) {
  ASSERT_EQ(testing_support::run_pipeline(dir_, cfg_).code, 0);
  auto r = run_cli({"type", "--config", cfg_.string(), "--in", (dir_ / "queries.jsonl").string(),
                    "--eta-c", "100"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto& line : entyper::split_view(r.out, '\n')) {
    if (line.empty()) continue;
    EXPECT_TRUE(nlohmann::json::parse(line)["fine"].empty());
  }
  EXPECT_EQ(run_cli({"type", "--config", cfg_.string(), "--lambda", "2"}).code, 2);
}

TEST_F(CliPipeline, ConfigFromEnvironment) {
  ASSERT_EQ(testing_support::run_pipeline(dir_, cfg_).code, 0);
  ::setenv(entyper::kConfigEnvVar, cfg_.string().c_str(), 1);
  auto r = run_cli({"type", "--in", (dir_ / "queries.jsonl").string()});
  ::unsetenv(entyper::kConfigEnvVar);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, slurp(dir_ / "pred.jsonl"));
}

TEST_F(CliPipeline, CoverageAndBaseline) {
  ASSERT_EQ(testing_support::run_pipeline(dir_, cfg_).code, 0);
  auto r = run_cli({"coverage", "--config", cfg_.string(), "--in",
                    (dir_ / "queries.jsonl").string(), "--max-ell", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(r.out), 6u);  // header + 5 rows

  auto b = run_cli({"baseline-elmonn", "--config", cfg_.string(), "--in",
                    (dir_ / "queries.jsonl").string(), "--k", "3"});
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(count_lines(b.out), setup_.queries.size());
}

TEST(CliErrors, ExitCodes) {
  TempDir dir;
  auto r = run_cli({});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(run_cli({"type", "--no-such-flag"}).code, 1);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 1);
  EXPECT_EQ(run_cli({"--help"}).code, 0);

  // Missing typedefs: input error with a one-line diagnostic.
  auto cfg = dir.write("c.cfg", "index = i.bin\npriors = p.tsv\nreps = r.bin\n"
                                "typedefs = nowhere.tdef\nconcept_types = ct.tsv\n");
  dir.write("i.bin", "");
  dir.write("p.tsv", "");
  dir.write("r.bin", "");
  dir.write("ct.tsv", "");
  auto missing = run_cli({"type", "--config", cfg.string()}, "");
  EXPECT_EQ(missing.code, 2);
  EXPECT_EQ(count_lines(missing.err), 1u);
  EXPECT_NE(missing.err.find("typedefs"), std::string::npos);

  auto bad_corpus = dir.write("bad.jsonl", "{not json\n");
  auto e = run_cli({"build-index", "--corpus", bad_corpus.string(), "--out",
                    (dir / "x.bin").string()});
  EXPECT_EQ(e.code, 2);
  EXPECT_NE(e.err.find("line 1"), std::string::npos);

  EXPECT_EQ(run_cli({"evaluate", "--gold", (dir / "none").string(), "--pred",
                     (dir / "none").string()}).code, 2);
}
