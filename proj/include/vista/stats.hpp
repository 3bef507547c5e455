#pragma once

#include <span>

namespace vista {

/// Regularized incomplete beta function I_x(a, b), a, b > 0, x in [0, 1].
double regularized_incomplete_beta(double a, double b, double x);

/// P(|T| >= |t|) for a Student t variable with `dof` degrees of freedom.
double student_t_two_tailed(double t, double dof);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  int dof = 0;
  double mean_difference = 0.0;
};

/// Paired t-test on a[i] - b[i]. Throws MetricError when n < 2 or when the
/// differences have zero variance but a non-zero mean; identical samples give
/// t = 0, p = 1.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace vista
