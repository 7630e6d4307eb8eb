#pragma once

// Report file (JSON) and the two text tables printed after an evaluation.

#include <string>
#include <string_view>

#include "paf/eval.hpp"

namespace paf {

/// Canonical JSON: sorted keys, two-space indent, trailing newline. NaN is
/// written as null and infinities as the strings "Infinity" / "-Infinity".
std::string report_to_json(const EvalReport& report);

/// Inverse of report_to_json; report_to_json(report_from_json(s)) == s for any
/// canonical s. Throws std::invalid_argument on malformed input.
EvalReport report_from_json(std::string_view text);

/// "Baseline", "Basic PAF", "Optimized PAF"; unknown names pass through.
std::string method_display_name(std::string_view method);

/// Metrics table (3 decimals) followed by a blank line and the test table
/// (4 decimals).
std::string render_metrics_table(const EvalReport& report);
std::string render_tests_table(const EvalReport& report);
std::string render_report(const EvalReport& report);

}  // namespace paf
