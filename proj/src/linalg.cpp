#include "palmrt/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace palmrt::linalg {

namespace {

void check_finite_pair(const Eigen::Ref<const Vector>& y,
                       const Eigen::Ref<const Matrix>& C) {
  if (y.size() != C.rows())
    throw std::invalid_argument("linalg: y length does not match C rows");
  if (C.rows() < 1) throw std::invalid_argument("linalg: need at least 1 row");
  if (!y.allFinite() || !C.allFinite())
    throw std::invalid_argument("linalg: non-finite input");
}

}  // namespace

Vector least_squares_residuals(const Eigen::Ref<const Vector>& y,
                               const Eigen::Ref<const Matrix>& C) {
  check_finite_pair(y, C);
  if (C.cols() == 0) return y;

  Eigen::ColPivHouseholderQR<Matrix> qr(C);
  qr.setThreshold(kRankTolerance);
  const Index rank = qr.rank();

  // Split Q'y into column-space and orthogonal-complement parts; the
  // residual is Q * [0; (Q'y).tail(n - rank)].
  Vector qty = y;
  qty.applyOnTheLeft(qr.householderQ().transpose());
  qty.head(rank).setZero();
  qty.applyOnTheLeft(qr.householderQ());
  return qty;
}

Vector least_squares_solution(const Eigen::Ref<const Vector>& y,
                              const Eigen::Ref<const Matrix>& C) {
  check_finite_pair(y, C);
  Eigen::ColPivHouseholderQR<Matrix> qr(C);
  qr.setThreshold(kRankTolerance);
  return qr.solve(y);
}

Vector weighted_least_squares_residuals(const Eigen::Ref<const Vector>& y,
                                        const Eigen::Ref<const Matrix>& C,
                                        const Eigen::Ref<const Vector>& w) {
  check_finite_pair(y, C);
  if (w.size() != y.size())
    throw std::invalid_argument("linalg: weight length does not match");
  if (!w.allFinite() || (w.array() < 0.0).any())
    throw std::invalid_argument("linalg: weights must be finite and >= 0");
  if ((w.array() == 0.0).all())
    throw std::invalid_argument("linalg: weights must not all be zero");
  if (C.cols() == 0) return y;

  const Vector sw = w.array().sqrt();
  const Matrix Cs = sw.asDiagonal() * C;
  const Vector ys = sw.asDiagonal() * y;
  Eigen::ColPivHouseholderQR<Matrix> qr(Cs);
  qr.setThreshold(kRankTolerance);
  const Vector b = qr.solve(ys);
  return y - C * b;
}

double median(const Eigen::Ref<const Vector>& v) {
  if (v.size() == 0) throw std::invalid_argument("median: empty input");
  std::vector<double> s(v.data(), v.data() + v.size());
  const size_t n = s.size();
  const size_t hi = n / 2;
  std::nth_element(s.begin(), s.begin() + hi, s.end());
  if (n % 2 == 1) return s[hi];
  const double upper = s[hi];
  const double lower = *std::max_element(s.begin(), s.begin() + hi);
  return 0.5 * (lower + upper);
}

double quantile(const Eigen::Ref<const Vector>& v, double q) {
  if (v.size() == 0) throw std::invalid_argument("quantile: empty input");
  if (!(q >= 0.0 && q <= 1.0))
    throw std::invalid_argument("quantile: q must be in [0, 1]");
  const Index n = v.size();
  Index k = 1;
  if (q > 0.0) {
    // ceil(n*q) with a snap for products that are integers up to rounding
    k = static_cast<Index>(std::ceil(static_cast<double>(n) * q - 1e-9));
    k = std::clamp<Index>(k, 1, n);
  }
  std::vector<double> s(v.data(), v.data() + v.size());
  std::nth_element(s.begin(), s.begin() + (k - 1), s.end());
  return s[k - 1];
}

Matrix drop_dependent_columns(const Eigen::Ref<const Matrix>& m) {
  if (m.cols() == 0) return m;
  if (!m.allFinite())
    throw std::invalid_argument("linalg: non-finite input");
  const double scale = m.colwise().norm().maxCoeff();
  const double tol = kRankTolerance * scale;

  std::vector<Index> keep;
  Matrix basis(m.rows(), m.cols());  // orthonormal columns of the kept set
  Index nb = 0;
  for (Index j = 0; j < m.cols(); ++j) {
    Vector u = m.col(j);
    // Orthogonalize twice for stability.
    for (int pass = 0; pass < 2; ++pass)
      if (nb > 0) u -= basis.leftCols(nb) * (basis.leftCols(nb).transpose() * u);
    const double nrm = u.norm();
    if (nrm > tol) {
      basis.col(nb++) = u / nrm;
      keep.push_back(j);
    }
  }
  Matrix out(m.rows(), static_cast<Index>(keep.size()));
  for (size_t j = 0; j < keep.size(); ++j) out.col(static_cast<Index>(j)) = m.col(keep[j]);
  return out;
}

}  // namespace palmrt::linalg
