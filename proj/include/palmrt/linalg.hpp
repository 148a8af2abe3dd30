#pragma once

#include "palmrt/types.hpp"

namespace palmrt::linalg {

/// Relative tolerance for declaring a pivot (or a column) linearly dependent,
/// measured against the largest column norm of the factored matrix.
inline constexpr double kRankTolerance = 1e-10;

/// Residuals y - H(C)y of the orthogonal projection onto the column space of
/// C. Rank deficiency is handled by column-pivoted Householder QR; dependent
/// columns are dropped, which leaves the projection (and hence the residual)
/// unchanged.
Vector least_squares_residuals(const Eigen::Ref<const Vector>& y,
                               const Eigen::Ref<const Matrix>& C);

/// Minimum-norm-style basic solution b of min ||y - Cb||_2 from the same
/// column-pivoted QR (non-pivot coefficients are zero when C is
/// rank-deficient).
Vector least_squares_solution(const Eigen::Ref<const Vector>& y,
                              const Eigen::Ref<const Matrix>& C);

/// Residuals y - Cb where b minimizes sum_i w_i (y_i - C_i b)^2. Weights must
/// be nonnegative with at least one positive entry. Equivalent to
/// least_squares_residuals on rows rescaled by sqrt(w_i).
Vector weighted_least_squares_residuals(const Eigen::Ref<const Vector>& y,
                                        const Eigen::Ref<const Matrix>& C,
                                        const Eigen::Ref<const Vector>& w);

/// Median: mean of the two central order statistics for even length.
double median(const Eigen::Ref<const Vector>& v);

/// Type-1 (left-continuous inverse CDF) sample quantile: the k-th order
/// statistic with k = ceil(n*q), and the minimum for q = 0. Index products
/// within 1e-9 of an integer are snapped to it.
double quantile(const Eigen::Ref<const Vector>& v, double q);

/// Keeps the lexicographically earliest maximal independent subset of
/// columns: a column is dropped iff its component orthogonal to the kept
/// columns has norm <= kRankTolerance * (largest column norm of m).
Matrix drop_dependent_columns(const Eigen::Ref<const Matrix>& m);

}  // namespace palmrt::linalg
