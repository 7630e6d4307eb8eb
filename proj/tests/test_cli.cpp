#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "cli.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args, const std::string& input = {}) {
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = paf::cli::run(args, in, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("paf_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string write(const std::string& name, const std::string& content) const {
    std::ofstream(path(name)) << content;
    return path(name);
  }

  fs::path dir_;
};

const std::string kHealthcare = paf::testing::source_path("workflows/healthcare_eligibility.json");

const std::string kChatInput =
    "Hi, I want to check coverage for a visit.\n"
    "Yes, my insurance provider is Acme.\n"
    "The member id is valid and in network, it is 12345.\n";

}  // namespace

TEST_F(CliTest, ValidateExitCodes) {
  auto r = run({"validate", kHealthcare});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("0 errors"), std::string::npos);

  const auto bad = write("bad.json", R"({"version": "1", "name": "b",
    "nodes": [{"id": "s", "kind": "start", "instruction": "hi"}],
    "edges": [{"from": "s", "to": "ghost", "condition": "c"}]})");
  r = run({"validate", bad});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("ghost"), std::string::npos) << r.out;

  r = run({"validate", path("missing.json")});
  EXPECT_EQ(r.code, 2);
  r = run({"validate", "--workflow", kHealthcare});
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST_F(CliTest, UsageErrorsAndHelp) {
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"chat", "--workflow", kHealthcare, "--mode", "fast"}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(CliTest, ChatTranscriptMatchesGolden) {
  const auto out = path("t.jsonl");
  const auto r = run({"chat", "--workflow", kHealthcare, "--out", out}, kChatInput);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(paf::testing::read_text(out),
            paf::testing::read_text(paf::testing::source_path("tests/fixtures/chat_healthcare.transcript.jsonl")));
  EXPECT_NE(r.err.find("[action] transfer on node transfer_scheduling"), std::string::npos) << r.err;
  EXPECT_NE(r.out.find("member ID"), std::string::npos);  // agent text streamed to stdout
}

TEST_F(CliTest, ChatWithNoInputWritesEmptyTranscript) {
  const auto out = path("t.jsonl");
  const auto r = run({"chat", "--workflow", kHealthcare, "--mode", "basic", "--out", out}, "");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(paf::testing::read_text(out), "");
}

TEST_F(CliTest, OptimizedChatFailsWhenEmbedderUnreachable) {
  ::setenv("PAF_BASE_URL", "http://127.0.0.1:1/v1", 1);
  ::setenv("PAF_API_KEY", "x", 1);
  const auto r = run({"chat", "--workflow", kHealthcare, "--provider", "remote"}, kChatInput);
  ::unsetenv("PAF_BASE_URL");
  ::unsetenv("PAF_API_KEY");
  EXPECT_EQ(r.code, 1) << r.err;
  EXPECT_FALSE(r.err.empty());
}

TEST_F(CliTest, SimulateEvalReport) {
  const auto data = path("d.jsonl");
  auto r = run({"simulate", "--workflow", kHealthcare, "--count", "12", "--seed", "7", "--out", data});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(paf::testing::read_text(data));
  EXPECT_EQ(paf::read_dataset(lines).size(), 12u);

  const auto report = path("r.json");
  r = run({"eval", "--workflow", kHealthcare, "--dataset", data, "--out", report});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("Baseline"), std::string::npos);
  EXPECT_NE(r.out.find("Optimized PAF"), std::string::npos);
  EXPECT_NE(r.out.find("Basic PAF vs Optimized PAF"), std::string::npos);

  const auto shown = run({"report", report});
  EXPECT_EQ(shown.code, 0);
  EXPECT_EQ(shown.out, r.out);

  r = run({"eval", "--workflow", kHealthcare, "--dataset", data, "--methods", "naive,optimized", "--out", report});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.find("Basic PAF"), std::string::npos);
}

TEST_F(CliTest, SimulateZeroAndEmptyDataset) {
  const auto data = path("d.jsonl");
  auto r = run({"simulate", "--workflow", kHealthcare, "--count", "0", "--out", data});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(paf::testing::read_text(data), "");
  r = run({"eval", "--workflow", kHealthcare, "--dataset", data, "--out", path("r.json")});
  EXPECT_EQ(r.code, 1);
  r = run({"eval", "--workflow", kHealthcare, "--dataset", path("nope.jsonl"), "--out", path("r.json")});
  EXPECT_EQ(r.code, 2);
}
