#include "paf/report.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace paf {

using json = nlohmann::json;

namespace {

json real_to_json(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
  return v;
}

double real_from_json(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "Infinity") return std::numeric_limits<double>::infinity();
    if (s == "-Infinity") return -std::numeric_limits<double>::infinity();
    throw std::invalid_argument("bad real value '" + s + "'");
  }
  return j.get<double>();
}

std::string fixed(double v, int decimals) {
  if (std::isnan(v)) return "n/a";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s = buf;
  // Never print "-0.000".
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

std::string render_rows(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& row : rows) {
    widths.resize(std::max(widths.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
  }
  std::string out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      line += row[c];
      if (c + 1 < row.size()) line += std::string(widths[c] - row[c].size() + 2, ' ');
    }
    out += line + "\n";
  }
  return out;
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
  json summaries = json::array();
  for (const auto& s : report.summaries) {
    summaries.push_back({{"method", s.method},
                         {"total_hits", s.total_hits},
                         {"count_above_0_8", s.count_above_0_8},
                         {"mean", real_to_json(s.mean)},
                         {"median", real_to_json(s.median)},
                         {"n", s.n}});
  }
  json tests = json::array();
  for (const auto& t : report.tests) {
    const auto& r = t.result;
    tests.push_back({{"hypothesis", t.hypothesis},
                     {"comparison", {r.comparison.first, r.comparison.second}},
                     {"t_statistic", real_to_json(r.t_statistic)},
                     {"degrees_of_freedom", real_to_json(r.degrees_of_freedom)},
                     {"p_value", real_to_json(r.p_value)},
                     {"alpha", real_to_json(r.alpha)},
                     {"significant", r.significant},
                     {"status", std::string(to_string(r.status))},
                     {"n", r.n}});
  }
  json norms = nullptr;
  if (report.embedder_norm_stats) {
    const auto& n = *report.embedder_norm_stats;
    norms = {{"count", n.count}, {"min", real_to_json(n.min)}, {"max", real_to_json(n.max)},
             {"mean", real_to_json(n.mean)}};
  }
  json failures = json::array();
  for (const auto& f : report.failures) {
    failures.push_back({{"record_id", f.record_id}, {"method", f.method}, {"error", f.error}});
  }
  const json doc = {{"summaries", std::move(summaries)},
                    {"tests", std::move(tests)},
                    {"embedder_norm_stats", std::move(norms)},
                    {"seed", report.seed},
                    {"config", json::parse(report.config_json)},
                    {"failures", std::move(failures)}};
  return doc.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

EvalReport report_from_json(std::string_view text) {
  try {
    const json doc = json::parse(text.begin(), text.end());
    EvalReport report;
    for (const auto& s : doc.at("summaries")) {
      MetricsSummary m;
      m.method = s.at("method").get<std::string>();
      m.total_hits = s.at("total_hits").get<std::size_t>();
      m.count_above_0_8 = s.at("count_above_0_8").get<std::size_t>();
      m.mean = real_from_json(s.at("mean"));
      m.median = real_from_json(s.at("median"));
      m.n = s.at("n").get<std::size_t>();
      report.summaries.push_back(std::move(m));
    }
    for (const auto& t : doc.at("tests")) {
      HypothesisTest h;
      h.hypothesis = t.at("hypothesis").get<std::string>();
      const auto& cmp = t.at("comparison");
      h.result.comparison = {cmp.at(0).get<std::string>(), cmp.at(1).get<std::string>()};
      h.result.t_statistic = real_from_json(t.at("t_statistic"));
      h.result.degrees_of_freedom = real_from_json(t.at("degrees_of_freedom"));
      h.result.p_value = real_from_json(t.at("p_value"));
      h.result.alpha = real_from_json(t.at("alpha"));
      h.result.significant = t.at("significant").get<bool>();
      h.result.status = parse_ttest_status(t.at("status").get<std::string>());
      h.result.n = t.at("n").get<std::size_t>();
      report.tests.push_back(std::move(h));
    }
    if (const auto& n = doc.at("embedder_norm_stats"); !n.is_null()) {
      report.embedder_norm_stats = NormStats{n.at("count").get<std::size_t>(), real_from_json(n.at("min")),
                                             real_from_json(n.at("max")), real_from_json(n.at("mean"))};
    }
    report.seed = doc.at("seed").get<std::uint64_t>();
    report.config_json = doc.value("config", json::object()).dump();
    if (doc.contains("failures")) {
      for (const auto& f : doc["failures"]) {
        report.failures.push_back(
            {f.at("record_id").get<std::string>(), f.at("method").get<std::string>(), f.at("error").get<std::string>()});
      }
    }
    return report;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed report: ") + e.what());
  }
}

std::string method_display_name(std::string_view method) {
  if (method == "naive") return "Baseline";
  if (method == "basic") return "Basic PAF";
  if (method == "optimized") return "Optimized PAF";
  return std::string(method);
}

std::string render_metrics_table(const EvalReport& report) {
  std::vector<std::vector<std::string>> rows{{"Method", "Total Hits", "Count above 0.8", "Mean", "Median"}};
  for (const auto& s : report.summaries) {
    rows.push_back({method_display_name(s.method), std::to_string(s.total_hits), std::to_string(s.count_above_0_8),
                    fixed(s.mean, 3), fixed(s.median, 3)});
  }
  return render_rows(rows);
}

std::string render_tests_table(const EvalReport& report) {
  std::vector<std::vector<std::string>> rows{{"Comparison", "t-statistic", "p-value"}};
  for (const auto& t : report.tests) {
    const auto& r = t.result;
    rows.push_back({method_display_name(r.comparison.first) + " vs " + method_display_name(r.comparison.second),
                    fixed(r.t_statistic, 4), fixed(r.p_value, 4)});
  }
  return render_rows(rows);
}

std::string render_report(const EvalReport& report) {
  return render_metrics_table(report) + "\n" + render_tests_table(report);
}

}  // namespace paf
