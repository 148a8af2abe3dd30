#include "palmrt/regressors.hpp"

#include "palmrt/linalg.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

using namespace palmrt;
using regressors::QuantileConfig;

namespace {

double pinball_loss(const Vector& y, const Matrix& C, const Vector& b,
                    double q) {
  const Vector r = y - C * b;
  double acc = 0.0;
  for (Index i = 0; i < r.size(); ++i)
    acc += r[i] * (q - (r[i] <= 0.0 ? 1.0 : 0.0));
  return acc;
}

}  // namespace

TEST_CASE("median regression on an intercept recovers the sample median") {
  Vector y(7);
  y << 9, 1, 4, 6, 2, 8, 4;
  QuantileConfig cfg;
  cfg.q = 0.5;
  const auto fit = regressors::quantile_fit(y, Matrix::Ones(7, 1), cfg);
  CHECK(fit.converged);
  CHECK(fit.coefficients[0] == doctest::Approx(4.0));  // odd-length median
  CHECK((fit.residuals - (y.array() - 4.0).matrix()).cwiseAbs().maxCoeff() <
        1e-12);
}

TEST_CASE("even-length median regression attains the optimal pinball loss") {
  Vector y(6);
  y << 3, 1, 7, 5, 9, 11;
  QuantileConfig cfg;
  cfg.q = 0.5;
  const Matrix C = Matrix::Ones(6, 1);
  const auto fit = regressors::quantile_fit(y, C, cfg);
  // any value in the median interval is optimal; the solver must land on it
  const Vector mid = Vector::Constant(1, 6.0);
  CHECK(pinball_loss(y, C, fit.coefficients, 0.5) ==
        doctest::Approx(pinball_loss(y, C, mid, 0.5)).epsilon(1e-12));
}

TEST_CASE("0.9 quantile on 1..10 attains the grid-search minimum") {
  Vector y(10);
  for (int i = 0; i < 10; ++i) y[i] = i + 1;
  const Matrix C = Matrix::Ones(10, 1);
  QuantileConfig cfg;
  cfg.q = 0.9;
  const auto fit = regressors::quantile_fit(y, C, cfg);

  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 10; ++i) {
    const Vector cand = Vector::Constant(1, y[i]);
    best = std::min(best, pinball_loss(y, C, cand, 0.9));
  }
  CHECK(pinball_loss(y, C, fit.coefficients, 0.9) ==
        doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("vertex optimality beats every basic solution (n = 6, p = 2)") {
  rng::PhiloxStream s(31, 0);
  for (int rep = 0; rep < 100; ++rep) {
    const Index n = 6;
    Matrix C(n, 2);
    C.col(0).setOnes();
    C.col(1) = test::random_vector(s, n);
    const Vector y = test::random_vector(s, n);
    const double q = 0.1 + 0.8 * s.next_unit();
    QuantileConfig cfg;
    cfg.q = q;
    const auto fit = regressors::quantile_fit(y, C, cfg);
    REQUIRE(fit.converged);
    const double got = pinball_loss(y, C, fit.coefficients, q);

    // exhaustive sweep of the (n choose 2) interpolating pairs
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) {
        Matrix Ch(2, 2);
        Ch.row(0) = C.row(i);
        Ch.row(1) = C.row(j);
        if (std::fabs(Ch.determinant()) < 1e-12) continue;
        Vector yh(2);
        yh << y[i], y[j];
        const Vector b = Ch.inverse() * yh;
        best = std::min(best, pinball_loss(y, C, b, q));
      }
    CHECK(got <= best + 1e-9 * (1.0 + std::fabs(best)));

    // subgradient count condition at the intercept
    int strictly_neg = 0, non_pos = 0;
    for (Index i = 0; i < n; ++i) {
      if (fit.residuals[i] < -1e-10) ++strictly_neg;
      if (fit.residuals[i] <= 1e-10) ++non_pos;
    }
    CHECK(strictly_neg <= n * q + 1e-9);
    CHECK(n * q <= non_pos + 1e-9);
  }
}

TEST_CASE("quantile_fit shift invariance (condition 1)") {
  rng::PhiloxStream s(32, 0);
  for (int rep = 0; rep < 100; ++rep) {
    const Index n = 14, p = 3;
    const Matrix C = test::random_design(s, n, p);
    const Vector y = test::random_vector(s, n);
    const Vector gamma = test::random_vector(s, p);
    QuantileConfig cfg;
    cfg.q = 0.25;
    const auto f1 = regressors::quantile_fit(y, C, cfg);
    const auto f2 = regressors::quantile_fit(y + C * gamma, C, cfg);
    // within 10x solver tolerance, scaled to the data
    const double tol = 10.0 * cfg.tol * (1.0 + y.cwiseAbs().maxCoeff());
    CHECK((f1.residuals - f2.residuals).cwiseAbs().maxCoeff() < tol);
  }
}

TEST_CASE("quantile_fit case symmetry (condition 2, sorted residuals)") {
  rng::PhiloxStream s(33, 0);
  for (int rep = 0; rep < 100; ++rep) {
    const Index n = 12, p = 3;
    const Matrix C = test::random_design(s, n, p);
    const Vector y = test::random_vector(s, n);
    const auto sigma = rng::random_permutation(s, n);
    QuantileConfig cfg;
    cfg.q = 0.7;
    auto r1 = regressors::quantile_fit(y, C, cfg).residuals;
    auto r2 =
        regressors::quantile_fit(sigma.apply(y), sigma.apply_rows(C), cfg)
            .residuals;
    std::sort(r1.data(), r1.data() + n);
    std::sort(r2.data(), r2.data() + n);
    CHECK((r1 - r2).cwiseAbs().maxCoeff() <
          1e-8 * (1.0 + y.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("quantile_fit deduplicates dependent columns deterministically") {
  rng::PhiloxStream s(34, 0);
  const Index n = 10;
  Matrix C(n, 2);
  C.col(0).setOnes();
  C.col(1) = test::random_vector(s, n);
  Matrix Cdup(n, 4);
  Cdup << C.col(0), C.col(1), C.col(0), C.col(1) * 2.0;
  const Vector y = test::random_vector(s, n);
  QuantileConfig cfg;
  cfg.q = 0.4;
  const auto f1 = regressors::quantile_fit(y, C, cfg);
  const auto f2 = regressors::quantile_fit(y, Cdup, cfg);
  CHECK((f1.residuals - f2.residuals).cwiseAbs().maxCoeff() < 1e-10);
  // identical inputs give identical outputs, bit for bit
  const auto f3 = regressors::quantile_fit(y, Cdup, cfg);
  CHECK((f2.residuals - f3.residuals).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("quantile_fit validates its config") {
  Vector y(3);
  y << 1, 2, 3;
  QuantileConfig bad;
  bad.q = 1.0;
  CHECK_THROWS_AS(regressors::quantile_fit(y, Matrix::Ones(3, 1), bad),
                  std::invalid_argument);
}
