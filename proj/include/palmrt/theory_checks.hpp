#pragma once

#include "palmrt/framework.hpp"
#include "palmrt/random.hpp"
#include "palmrt/types.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace palmrt::theory {

/// Square array with A_ij + A_ji = 1 for all i, j (so the diagonal is 1/2).
struct TournamentMatrix {
  Matrix a;

  explicit TournamentMatrix(Matrix m);
  Index size() const { return a.rows(); }
};

/// Uniform entries on the strict upper triangle, reflected to satisfy the
/// tournament identity; diagonal 1/2.
TournamentMatrix random_tournament(rng::PhiloxStream& stream, Index m);

/// sum_i w_i 1{ sum_j w_j A_ji <= alpha } for probability weights w.
/// The tournament identity forces this to be at most 2*alpha.
double weighted_small_column_mass(const TournamentMatrix& t,
                                  const Eigen::Ref<const Vector>& w,
                                  double alpha);

/// Comparison score T(pi1, pi2; e) = omega(M(e, x_{pi2}, [z_{pi1}, z_{pi2}]))
/// for a pluggable fit-and-score routine.
using ComparisonScore = std::function<double(
    const Vector& e, const Matrix& x_eff, const Matrix& controls)>;

/// Checks the group-action identity behind the validity proof: under the
/// gather convention (A_pi).row(i) = A.row(pi(i)) used in this library,
///   T(pi1, pi2; e_sigma) == T(pi1 o sigma^{-1}, pi2 o sigma^{-1}; e)
/// for every supplied pair, within tol. Requires the score to come from a
/// shift-invariant, symmetric fitting procedure; an asymmetric one fails.
bool comparison_array_symmetry_check_fn(
    const Dataset& data, const ComparisonScore& score, const Permutation& sigma,
    const std::vector<std::pair<Permutation, Permutation>>& pairs, double tol);

/// Same check with the score built from a framework fitter/evaluator pair.
bool comparison_array_symmetry_check(
    const Dataset& data, const FitterSpec& fitter, const EvaluatorSpec& eval,
    const Permutation& sigma,
    const std::vector<std::pair<Permutation, Permutation>>& pairs,
    double tol = 1e-8);

}  // namespace palmrt::theory
