#pragma once

namespace palmrt::special {

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
/// Absolute accuracy better than 1e-12 for a, b <= ~1e4.
double regularized_incomplete_beta(double x, double a, double b);

/// Regularized lower incomplete gamma P(a, x) (series / continued fraction).
double regularized_gamma_lower(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double regularized_gamma_upper(double a, double x);

/// Standard normal CDF and its inverse. The inverse is solved by a bracketed
/// Newton iteration on erfc and is accurate to ~1e-14 in the argument.
double normal_cdf(double x);
double normal_quantile(double p);

/// Upper-tail probability P(F > f) for the F(d1, d2) distribution,
/// via I_{d2/(d2 + d1 f)}(d2/2, d1/2).
double f_upper_tail(double f, double d1, double d2);

/// Upper-tail probability P(X > x) for the chi-square distribution with df
/// degrees of freedom: Q(df/2, x/2).
double chi_square_upper_tail(double x, double df);

/// Upper quantile: smallest f with P(F > f) <= alpha, bisection to ~1e-12.
double f_upper_quantile(double alpha, double d1, double d2);

/// CDF and quantile of the Student t distribution with 3 degrees of freedom
/// (closed-form CDF; quantile by bracketed Newton).
double student_t3_cdf(double t);
double student_t3_quantile(double p);

}  // namespace palmrt::special
