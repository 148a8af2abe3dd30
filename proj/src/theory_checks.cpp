#include "palmrt/theory_checks.hpp"

#include "palmrt/linalg.hpp"

#include <cmath>

namespace palmrt::theory {

namespace {

Matrix hcat2(const Eigen::Ref<const Matrix>& a,
             const Eigen::Ref<const Matrix>& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

}  // namespace

TournamentMatrix::TournamentMatrix(Matrix m) : a(std::move(m)) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("TournamentMatrix: must be square");
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) {
      if (a(i, j) < 0.0 || a(i, j) > 1.0)
        throw std::invalid_argument("TournamentMatrix: entries outside [0,1]");
      if (std::fabs(a(i, j) + a(j, i) - 1.0) > 1e-12)
        throw std::invalid_argument(
            "TournamentMatrix: A_ij + A_ji = 1 violated");
    }
}

TournamentMatrix random_tournament(rng::PhiloxStream& stream, Index m) {
  Matrix a(m, m);
  for (Index i = 0; i < m; ++i) {
    a(i, i) = 0.5;
    for (Index j = i + 1; j < m; ++j) {
      const double u = stream.next_unit();
      a(i, j) = u;
      a(j, i) = 1.0 - u;
    }
  }
  return TournamentMatrix(std::move(a));
}

double weighted_small_column_mass(const TournamentMatrix& t,
                                  const Eigen::Ref<const Vector>& w,
                                  double alpha) {
  if (w.size() != t.size())
    throw std::invalid_argument("weighted_small_column_mass: size mismatch");
  if ((w.array() < 0.0).any() || std::fabs(w.sum() - 1.0) > 1e-12)
    throw std::invalid_argument(
        "weighted_small_column_mass: weights must be a probability vector");
  if (!(alpha >= 0.0 && alpha <= 0.5))
    throw std::invalid_argument(
        "weighted_small_column_mass: alpha outside [0, 1/2]");

  const Vector colsum = t.a.transpose() * w;  // colsum_i = sum_j w_j A_ji
  double mass = 0.0;
  for (Index i = 0; i < w.size(); ++i)
    if (colsum[i] <= alpha) mass += w[i];
  return mass;
}

bool comparison_array_symmetry_check_fn(
    const Dataset& data, const ComparisonScore& score, const Permutation& sigma,
    const std::vector<std::pair<Permutation, Permutation>>& pairs,
    double tol) {
  data.validate();
  const Permutation sigma_inv = sigma.inverse();
  const Vector e_sigma = sigma.apply(data.y);

  for (const auto& [pi1, pi2] : pairs) {
    const double lhs = score(e_sigma, pi2.apply_rows(data.x),
                             hcat2(pi1.apply_rows(data.z),
                                   pi2.apply_rows(data.z)));
    const Permutation p1 = Permutation::compose(pi1, sigma_inv);
    const Permutation p2 = Permutation::compose(pi2, sigma_inv);
    const double rhs = score(data.y, p2.apply_rows(data.x),
                             hcat2(p1.apply_rows(data.z),
                                   p2.apply_rows(data.z)));
    if (std::fabs(lhs - rhs) > tol * (1.0 + std::fabs(rhs))) return false;
  }
  return true;
}

bool comparison_array_symmetry_check(
    const Dataset& data, const FitterSpec& fitter, const EvaluatorSpec& eval,
    const Permutation& sigma,
    const std::vector<std::pair<Permutation, Permutation>>& pairs,
    double tol) {
  ComparisonScore score = [&fitter, &eval](const Vector& e, const Matrix& x_eff,
                                           const Matrix& controls) {
    const Matrix zz = linalg::drop_dependent_columns(controls);
    const Matrix design =
        linalg::drop_dependent_columns(hcat2(x_eff, zz));
    FitSummary summary;
    switch (fitter.kind) {
      case FitterKind::kOls:
        summary = regressors::ols_fit(e, design);
        if (eval.kind == EvaluatorKind::kHuberScaled)
          summary.scale = *regressors::huber_fit_mad(e, zz, fitter.huber).scale;
        break;
      case FitterKind::kHuberMadPrelim: {
        const double s_hat =
            *regressors::huber_fit_mad(e, zz, fitter.huber).scale;
        summary = regressors::huber_fit_fixed(e, design, s_hat, fitter.huber);
        break;
      }
      default:
        throw std::invalid_argument(
            "comparison_array_symmetry_check: unsupported fitter kind");
    }
    return evaluate(summary, eval);
  };
  return comparison_array_symmetry_check_fn(data, score, sigma, pairs, tol);
}

}  // namespace palmrt::theory
