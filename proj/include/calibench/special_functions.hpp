#pragma once

namespace calibench::special {

/// Regularized incomplete beta I_x(a, b), continued fraction (modified Lentz).
double incomplete_beta(double a, double b, double x);

/// Regularized lower incomplete gamma P(a, x).
double lower_incomplete_gamma(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed without cancellation.
double upper_incomplete_gamma(double a, double x);

}  // namespace calibench::special
