#pragma once

// Student t distribution via the regularized incomplete beta function, and the
// paired one-sided t-test used to compare evaluation methods.

#include <span>
#include <stdexcept>
#include <string>
#include <utility>

namespace paf {

/// I_x(a, b) for a, b > 0 and x in [0, 1]. Throws std::domain_error otherwise.
double regularized_incomplete_beta(double a, double b, double x);

/// P(T > t) for Student's t with `df` > 0 degrees of freedom. Computed so that
/// upper_tail(t) + upper_tail(-t) == 1 up to one rounding.
double student_t_upper_tail(double t, double df);

/// P(T <= t).
double student_t_cdf(double t, double df);

enum class TTestStatus {
  Ok,
  ZeroVariance,         // all differences equal and non-zero: t = +-inf
  DegenerateIdentical,  // all differences zero: p = 0.5 by convention
  InsufficientSamples,  // fewer than two pairs (only produced by callers that catch TTestError)
};

std::string_view to_string(TTestStatus status);
TTestStatus parse_ttest_status(std::string_view text);

struct TTestResult {
  std::pair<std::string, std::string> comparison;
  double t_statistic = 0.0;
  /// n - 1
  double degrees_of_freedom = 0.0;
  double p_value = 0.5;
  double alpha = 0.05;
  bool significant = false;
  TTestStatus status = TTestStatus::Ok;
  std::size_t n = 0;
};

class TTestError : public std::invalid_argument {
 public:
  enum class Kind { LengthMismatch, InsufficientSamples };
  TTestError(Kind kind, const std::string& message) : std::invalid_argument(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Tests mean(b - a) > 0 with d = b - a, t = mean(d) / (sd(d) / sqrt(n)),
/// sample sd (n - 1 divisor), df = n - 1, p = P(T > t).
/// significant iff p < alpha.
/// Throws TTestError for unequal lengths or n < 2.
TTestResult paired_t_one_sided(std::span<const double> a, std::span<const double> b, double alpha = 0.05);

}  // namespace paf
