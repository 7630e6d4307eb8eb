#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "paf/report.hpp"
#include "support.hpp"

using namespace paf;

TEST(ReportTest, ReferenceTablesRoundTripByteExact) {
  const auto text = paf::testing::read_text(paf::testing::source_path("tests/fixtures/reference_tables.json"));
  const auto report = report_from_json(text);
  EXPECT_EQ(report_to_json(report), text);
  ASSERT_EQ(report.summaries.size(), 3u);
  EXPECT_EQ(report.summaries[2].mean, 0.594);
  EXPECT_EQ(report.summaries[2].median, 0.496);
  EXPECT_EQ(report.summaries[2].total_hits, 35u);
  ASSERT_EQ(report.tests.size(), 3u);
  EXPECT_EQ(report.tests[0].result.t_statistic, 2.9982);
  EXPECT_EQ(report.tests[1].result.t_statistic, 7.3077);
  EXPECT_EQ(report.tests[2].result.t_statistic, 4.2494);
}

TEST(ReportTest, ReferenceTablesRender) {
  const auto report =
      report_from_json(paf::testing::read_text(paf::testing::source_path("tests/fixtures/reference_tables.json")));
  EXPECT_EQ(render_report(report), paf::testing::read_text(paf::testing::source_path("tests/fixtures/reference_tables.txt")));
}

TEST(ReportTest, NonFiniteValuesSurvive) {
  EvalReport r;
  r.seed = 42;
  r.config_json = R"({"methods":["naive","basic"]})";
  r.summaries.push_back({"naive", 1, 2, 0.5, 0.25, 3});
  HypothesisTest inf{"H1", {}};
  inf.result.comparison = {"naive", "basic"};
  inf.result.t_statistic = std::numeric_limits<double>::infinity();
  inf.result.p_value = 0.0;
  inf.result.status = TTestStatus::ZeroVariance;
  HypothesisTest nan{"H2", {}};
  nan.result.comparison = {"naive", "optimized"};
  nan.result.t_statistic = -std::numeric_limits<double>::infinity();
  nan.result.p_value = std::numeric_limits<double>::quiet_NaN();
  nan.result.status = TTestStatus::InsufficientSamples;
  r.tests = {inf, nan};
  r.embedder_norm_stats = NormStats{4, 0.9, 1.1, 1.0};
  r.failures.push_back({"rec-1", "basic", "boom"});

  const auto text = report_to_json(r);
  EXPECT_NE(text.find("\"Infinity\""), std::string::npos);
  EXPECT_NE(text.find("\"-Infinity\""), std::string::npos);
  EXPECT_NE(text.find("null"), std::string::npos);
  const auto back = report_from_json(text);
  EXPECT_EQ(report_to_json(back), text);
  EXPECT_TRUE(std::isinf(back.tests[0].result.t_statistic));
  EXPECT_TRUE(std::isnan(back.tests[1].result.p_value));
  EXPECT_EQ(back.tests[1].result.status, TTestStatus::InsufficientSamples);
  EXPECT_EQ(back.failures, r.failures);
  EXPECT_EQ(back.embedder_norm_stats, r.embedder_norm_stats);

  const auto table = render_tests_table(back);
  EXPECT_NE(table.find("inf"), std::string::npos);
  EXPECT_NE(table.find("n/a"), std::string::npos);
}

TEST(ReportTest, DisplayNamesAndNegativeZero) {
  EXPECT_EQ(method_display_name("naive"), "Baseline");
  EXPECT_EQ(method_display_name("basic"), "Basic PAF");
  EXPECT_EQ(method_display_name("optimized"), "Optimized PAF");
  EXPECT_EQ(method_display_name("other"), "other");
  EvalReport r;
  r.summaries.push_back({"naive", 0, 0, -0.0001, 0.0, 2});
  EXPECT_EQ(render_metrics_table(r).find("-0.000"), std::string::npos);
}

TEST(ReportTest, MalformedInputIsRejected) {
  EXPECT_THROW(report_from_json("{"), std::invalid_argument);
  EXPECT_THROW(report_from_json(R"({"summaries": []})"), std::invalid_argument);
}
