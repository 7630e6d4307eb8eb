#include "paf/stats.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace paf {

namespace {

// Continued fraction for I_x(a, b), modified Lentz evaluation.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 10000;
  constexpr double kEpsilon = 1e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEpsilon) return h;
  }
  throw std::runtime_error("incomplete beta continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0)) {
    throw std::domain_error("incomplete beta needs a, b > 0 and x in [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_upper_tail(double t, double df) {
  if (!(df > 0.0)) throw std::domain_error("degrees of freedom must be positive");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  const double x = df / (df + t * t);
  const double half_tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x);
  return t >= 0.0 ? half_tail : 1.0 - half_tail;
}

double student_t_cdf(double t, double df) {
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double x = df / (df + t * t);
  const double half_tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x);
  return t >= 0.0 ? 1.0 - half_tail : half_tail;
}

std::string_view to_string(TTestStatus status) {
  switch (status) {
    case TTestStatus::Ok: return "ok";
    case TTestStatus::ZeroVariance: return "zero_variance";
    case TTestStatus::DegenerateIdentical: return "degenerate_identical";
    case TTestStatus::InsufficientSamples: return "insufficient_samples";
  }
  return "ok";
}

TTestStatus parse_ttest_status(std::string_view text) {
  for (auto s : {TTestStatus::Ok, TTestStatus::ZeroVariance, TTestStatus::DegenerateIdentical,
                 TTestStatus::InsufficientSamples}) {
    if (to_string(s) == text) return s;
  }
  throw std::invalid_argument("unknown t-test status '" + std::string(text) + "'");
}

TTestResult paired_t_one_sided(std::span<const double> a, std::span<const double> b, double alpha) {
  if (a.size() != b.size()) {
    throw TTestError(TTestError::Kind::LengthMismatch, "paired samples differ in length: " +
                                                           std::to_string(a.size()) + " vs " +
                                                           std::to_string(b.size()));
  }
  if (a.size() < 2) {
    throw TTestError(TTestError::Kind::InsufficientSamples, "paired t-test needs at least two pairs");
  }

  const std::size_t n = a.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = b[i] - a[i];

  double sum = 0.0;
  for (double v : d) sum += v;
  const double mean = sum / static_cast<double>(n);
  double squares = 0.0;
  for (double v : d) squares += (v - mean) * (v - mean);
  const double sd = std::sqrt(squares / static_cast<double>(n - 1));

  TTestResult r;
  r.n = n;
  r.alpha = alpha;
  r.degrees_of_freedom = static_cast<double>(n - 1);
  if (sd == 0.0) {
    if (mean == 0.0) {
      r.status = TTestStatus::DegenerateIdentical;
      r.t_statistic = 0.0;
      r.p_value = 0.5;
    } else {
      r.status = TTestStatus::ZeroVariance;
      r.t_statistic = mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      r.p_value = mean > 0 ? 0.0 : 1.0;
    }
  } else {
    r.t_statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
    r.p_value = student_t_upper_tail(r.t_statistic, r.degrees_of_freedom);
  }
  r.significant = r.p_value < alpha;
  return r;
}

}  // namespace paf
