#include "palmrt/theory_checks.hpp"

#include "palmrt/linalg.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace palmrt;

TEST_CASE("tournament matrix construction validates the identity") {
  Matrix bad = Matrix::Constant(2, 2, 0.3);
  CHECK_THROWS_AS(theory::TournamentMatrix{bad}, std::invalid_argument);
  Matrix good(2, 2);
  good << 0.5, 0.8, 0.2, 0.5;
  CHECK_NOTHROW(theory::TournamentMatrix{good});
}

TEST_CASE("all-ties tournament puts no mass below alpha < 1/2") {
  const theory::TournamentMatrix t{Matrix::Constant(5, 5, 0.5)};
  const Vector w = Vector::Constant(5, 0.2);
  CHECK(theory::weighted_small_column_mass(t, w, 0.3) == 0.0);
}

TEST_CASE("2x2 hand enumeration makes the bound tight") {
  Matrix a(2, 2);
  a << 0.5, 1.0, 0.0, 0.5;
  const theory::TournamentMatrix t{a};
  Vector w(2);
  w << 0.5, 0.5;
  // column sums: (0.25, 0.75); alpha = 0.25 captures exactly w_1 = 0.5 = 2a
  CHECK(theory::weighted_small_column_mass(t, w, 0.25) ==
        doctest::Approx(0.5));
}

TEST_CASE("randomized sweep: the 2-alpha bound never fails (m <= 8)") {
  rng::PhiloxStream s(71, 0);
  for (int rep = 0; rep < 10000; ++rep) {
    const Index m = 2 + static_cast<Index>(s.next_below(7));
    const auto t = theory::random_tournament(s, m);
    Vector w(m);
    for (Index i = 0; i < m; ++i) w[i] = s.next_unit_open();
    w /= w.sum();
    const double alpha = 0.5 * s.next_unit();
    CHECK(theory::weighted_small_column_mass(t, w, alpha) <= 2.0 * alpha);
  }
}

TEST_CASE("the two descriptions of the small-column set coincide") {
  rng::PhiloxStream s(72, 0);
  for (int rep = 0; rep < 500; ++rep) {
    const Index m = 2 + static_cast<Index>(s.next_below(7));
    const auto t = theory::random_tournament(s, m);
    Vector w(m);
    for (Index i = 0; i < m; ++i) w[i] = s.next_unit_open();
    w /= w.sum();
    const double alpha = 0.5 * s.next_unit();
    const Vector col = t.a.transpose() * w;
    const Vector row = t.a * w;
    for (Index i = 0; i < m; ++i) {
      const bool in_by_col = col[i] <= alpha;
      const bool in_by_row = row[i] >= 1.0 - alpha;
      // identical up to ties at the threshold, which have measure zero here
      CHECK(in_by_col == in_by_row);
    }
  }
}

TEST_CASE("comparison-array symmetry: identity relabeling is trivially true") {
  rng::PhiloxStream s(73, 0);
  const Dataset data = test::random_dataset(s, 16, 1, 3);
  std::vector<std::pair<Permutation, Permutation>> pairs;
  pairs.emplace_back(rng::random_permutation(s, 16),
                     rng::random_permutation(s, 16));
  FitterSpec f;
  f.kind = FitterKind::kOls;
  EvaluatorSpec e;
  e.kind = EvaluatorKind::kL2;
  CHECK(theory::comparison_array_symmetry_check(
      data, f, e, Permutation::identity(16), pairs));
}

TEST_CASE("comparison-array symmetry holds for the least-squares score") {
  rng::PhiloxStream s(74, 0);
  const Index n = 30;
  const Dataset data = test::random_dataset(s, n, 1, 4);
  const auto sigma = rng::random_permutation(s, n);
  std::vector<std::pair<Permutation, Permutation>> pairs;
  for (int k = 0; k < 20; ++k)
    pairs.emplace_back(rng::random_permutation(s, n),
                       rng::random_permutation(s, n));
  FitterSpec f;
  f.kind = FitterKind::kOls;
  EvaluatorSpec e;
  e.kind = EvaluatorKind::kL2;
  CHECK(theory::comparison_array_symmetry_check(data, f, e, sigma, pairs));
}

TEST_CASE("comparison-array symmetry holds for the robust score") {
  rng::PhiloxStream s(75, 0);
  const Index n = 20;
  const Dataset data = test::random_dataset(s, n, 1, 3);
  const auto sigma = rng::random_permutation(s, n);
  std::vector<std::pair<Permutation, Permutation>> pairs;
  for (int k = 0; k < 5; ++k)
    pairs.emplace_back(rng::random_permutation(s, n),
                       rng::random_permutation(s, n));
  FitterSpec f;
  f.kind = FitterKind::kHuberMadPrelim;
  EvaluatorSpec e;
  e.kind = EvaluatorKind::kHuberScaled;
  CHECK(theory::comparison_array_symmetry_check(data, f, e, sigma, pairs,
                                                1e-7));
}

TEST_CASE("an asymmetric score is caught by the check") {
  rng::PhiloxStream s(76, 0);
  const Index n = 18;
  const Dataset data = test::random_dataset(s, n, 1, 3);
  const auto sigma = rng::random_permutation(s, n);
  std::vector<std::pair<Permutation, Permutation>> pairs;
  for (int k = 0; k < 10; ++k)
    pairs.emplace_back(rng::random_permutation(s, n),
                       rng::random_permutation(s, n));
  // weights the first case double: breaks case symmetry
  theory::ComparisonScore biased = [](const Vector& e, const Matrix& x_eff,
                                      const Matrix& controls) {
    Matrix design(e.size(), x_eff.cols() + controls.cols());
    design << x_eff, controls;
    const Vector r = linalg::least_squares_residuals(
        e, linalg::drop_dependent_columns(design));
    return r.squaredNorm() + r[0] * r[0];
  };
  CHECK_FALSE(theory::comparison_array_symmetry_check_fn(data, biased, sigma,
                                                         pairs, 1e-8));
}
