#include "palmrt/linalg.hpp"
#include "palmrt/regressors.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <vector>

namespace palmrt::regressors {

namespace {

// Greedy row selection in index order: returns p row indices of C (full
// column rank, n x p) forming a nonsingular p x p block. Lowest row index
// wins among candidates.
std::vector<Index> initial_basis_rows(const Matrix& C) {
  const Index p = C.cols();
  const double scale = C.rowwise().norm().maxCoeff();
  const double tol = linalg::kRankTolerance * std::max(scale, 1.0);
  Matrix basis(p, p);
  Index nb = 0;
  std::vector<Index> rows;
  for (Index i = 0; i < C.rows() && nb < p; ++i) {
    Vector u = C.row(i).transpose();
    for (int pass = 0; pass < 2; ++pass)
      if (nb > 0) u -= basis.leftCols(nb) * (basis.leftCols(nb).transpose() * u);
    const double nrm = u.norm();
    if (nrm > tol) {
      basis.col(nb++) = u / nrm;
      rows.push_back(i);
    }
  }
  if (nb < p)
    throw std::invalid_argument("quantile_fit: design loses rank over rows");
  return rows;
}

struct Breakpoint {
  double t;
  Index row;
  double jump;
};

}  // namespace

QuantileFit quantile_fit(const Eigen::Ref<const Vector>& y,
                         const Eigen::Ref<const Matrix>& C,
                         const QuantileConfig& cfg) {
  cfg.validate();
  if (y.size() != C.rows())
    throw std::invalid_argument("quantile_fit: y length does not match C rows");
  if (!y.allFinite() || !C.allFinite())
    throw std::invalid_argument("quantile_fit: non-finite input");

  const Matrix Cd = linalg::drop_dependent_columns(C);
  const Index n = y.size();
  const Index p = Cd.cols();
  const double q = cfg.q;

  QuantileFit out;
  if (p == 0) {
    out.residuals = y;
    out.coefficients = Vector(0);
    return out;
  }

  std::vector<Index> h = initial_basis_rows(Cd);

  Matrix Ch(p, p);
  Vector yh(p);
  auto gather = [&] {
    for (Index k = 0; k < p; ++k) {
      Ch.row(k) = Cd.row(h[k]);
      yh[k] = y[h[k]];
    }
  };
  gather();

  Eigen::PartialPivLU<Matrix> lu(Ch);
  Eigen::PartialPivLU<Matrix> lut(Ch.transpose());
  Vector b = lu.solve(yh);
  Vector r = y - Cd * b;

  const double slope_tol = cfg.tol * (1.0 + y.cwiseAbs().mean());

  std::vector<char> in_basis(n, 0);
  std::vector<Breakpoint> bps;
  bps.reserve(n);

  int it = 0;
  for (; it < cfg.max_iter; ++it) {
    std::fill(in_basis.begin(), in_basis.end(), 0);
    for (Index k = 0; k < p; ++k) in_basis[h[k]] = 1;

    // Dual screen: lambda = Ch^{-T} sum_{i off basis} g_i c_i must lie in
    // [-q, 1-q] componentwise at an optimum (g_i = q on r_i >= 0, q-1 below).
    Vector v = Vector::Zero(p);
    for (Index i = 0; i < n; ++i) {
      if (in_basis[i]) continue;
      v += (r[i] >= 0.0 ? q : q - 1.0) * Cd.row(i).transpose();
    }
    const Vector lambda = lut.solve(v);

    Index enter_pos = -1;
    double enter_sign = 0.0;
    Vector dir(p), rate(n);
    double slope0 = 0.0;

    for (Index pos = 0; pos < p && enter_pos < 0; ++pos) {
      for (const double sg : {+1.0, -1.0}) {
        const bool screened = (sg > 0.0) ? (lambda[pos] + q < -1e-14)
                                         : (1.0 - q - lambda[pos] < -1e-14);
        if (!screened) continue;
        // Exact one-sided derivative along the candidate direction.
        dir = lu.solve(Vector(-sg * Vector::Unit(p, pos)));
        rate = -(Cd * dir);
        double d0 = (sg > 0.0) ? q : 1.0 - q;  // the departing basis row
        for (Index i = 0; i < n; ++i) {
          if (in_basis[i]) continue;
          if (r[i] > 0.0)
            d0 += q * rate[i];
          else if (r[i] < 0.0)
            d0 += (q - 1.0) * rate[i];
          else
            d0 += (rate[i] > 0.0 ? q : q - 1.0) * rate[i];
        }
        if (d0 < -slope_tol) {
          enter_pos = pos;
          enter_sign = sg;
          slope0 = d0;
          break;
        }
      }
    }
    if (enter_pos < 0) {
      out.converged = true;
      break;
    }

    // Walk breakpoints of the 1-D piecewise-linear objective until its slope
    // turns nonnegative; the row whose crossing does so joins the basis.
    bps.clear();
    for (Index i = 0; i < n; ++i) {
      if (in_basis[i] || r[i] == 0.0 || rate[i] == 0.0) continue;
      const double t = -r[i] / rate[i];
      if (t > 0.0) bps.push_back({t, i, std::fabs(rate[i])});
    }
    std::sort(bps.begin(), bps.end(), [](const Breakpoint& a, const Breakpoint& b) {
      return a.t != b.t ? a.t < b.t : a.row < b.row;
    });

    double slope = slope0;
    Index enter_row = -1;
    for (const Breakpoint& bp : bps) {
      slope += bp.jump;
      if (slope >= 0.0) {
        enter_row = bp.row;
        break;
      }
    }
    if (enter_row < 0) {
      // Objective is coercive for a full-rank design; reaching this means the
      // arithmetic broke down.
      out.converged = false;
      break;
    }

    h[enter_pos] = enter_row;
    std::sort(h.begin(), h.end());
    gather();
    lu.compute(Ch);
    lut.compute(Ch.transpose());
    b = lu.solve(yh);
    r = y - Cd * b;
  }
  if (it == cfg.max_iter) out.converged = false;

  out.iterations = it;
  out.residuals = std::move(r);
  out.coefficients = std::move(b);
  return out;
}

}  // namespace palmrt::regressors
