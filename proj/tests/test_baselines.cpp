#include "palmrt/baselines.hpp"

#include "palmrt/special_functions.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace palmrt;

namespace {

// Independent p-value oracle: P(F > f) as a quadrature over the beta
// variable x = d2/(d2 + d1 u), where the integrand stays smooth even for
// one numerator degree of freedom.
double f_tail_by_quadrature(double f, double d1, double d2) {
  const double a = 0.5 * d2, b = 0.5 * d1;
  const double x0 = d2 / (d2 + d1 * f);
  const double logb = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  auto pdf = [&](double t) {
    if (t <= 0.0) return 0.0;
    return std::exp((a - 1.0) * std::log(t) + (b - 1.0) * std::log1p(-t) -
                    logb);
  };
  const int panels = 40000;
  const double h = x0 / panels;
  double acc = pdf(0.0) + pdf(x0);
  for (int i = 1; i < panels; ++i) acc += pdf(i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

}  // namespace

TEST_CASE("partial F-test: interest orthogonal to the adjusted response") {
  rng::PhiloxStream s(61, 0);
  Dataset data;
  const Index n = 12;
  data.z = test::random_design(s, n, 2);
  data.y = test::random_vector(s, n);
  // make x orthogonal to both z and the residual of y on z
  Vector x = test::random_vector(s, n);
  auto project_out = [&](const Vector& v) {
    x -= v * (v.dot(x) / v.squaredNorm());
  };
  const Vector r0 = data.y - data.z * (data.z.transpose() * data.z)
                                          .ldlt()
                                          .solve(data.z.transpose() * data.y);
  project_out(data.z.col(0));
  project_out(data.z.col(1));
  project_out(r0);
  data.x = x;
  const auto rep = baselines::partial_f_test(data);
  CHECK(rep.statistic == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(rep.p_value == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("partial F-test equals the squared pooled t in the two-sample case") {
  rng::PhiloxStream s(62, 0);
  const Index n = 16, half = 8;
  Dataset data;
  data.x = Matrix::Zero(n, 1);
  for (Index i = half; i < n; ++i) data.x(i, 0) = 1.0;
  data.z = Matrix::Ones(n, 1);
  data.y = test::random_vector(s, n);

  double m0 = 0.0, m1 = 0.0;
  for (Index i = 0; i < half; ++i) m0 += data.y[i];
  for (Index i = half; i < n; ++i) m1 += data.y[i];
  m0 /= half;
  m1 /= half;
  double ss = 0.0;
  for (Index i = 0; i < half; ++i) ss += (data.y[i] - m0) * (data.y[i] - m0);
  for (Index i = half; i < n; ++i) ss += (data.y[i] - m1) * (data.y[i] - m1);
  const double sp2 = ss / (n - 2);
  const double t = (m1 - m0) / std::sqrt(sp2 * (1.0 / half + 1.0 / half));

  const auto rep = baselines::partial_f_test(data);
  CHECK(rep.statistic == doctest::Approx(t * t).epsilon(1e-10));
  CHECK(rep.df1 == 1.0);
  CHECK(rep.df2 == static_cast<double>(n - 2));
}

TEST_CASE("partial F-test against explicit RSS arithmetic on 10 rows") {
  Vector y(10);
  y << 2.1, 3.9, 6.2, 7.8, 10.1, 12.2, 13.8, 16.1, 18.0, 19.9;
  Matrix x(10, 1);
  x << 0.3, -0.1, 0.4, 0.2, -0.3, 0.1, -0.2, 0.5, -0.4, 0.0;
  Matrix z(10, 2);
  for (int i = 0; i < 10; ++i) {
    z(i, 0) = 1.0;
    z(i, 1) = i + 1.0;
  }
  Dataset data{y, x, z};

  // oracle: normal equations by explicit inverses
  const Matrix z2 = z.transpose() * z;
  const Vector bz = z2.inverse() * (z.transpose() * y);
  const double rss0 = (y - z * bz).squaredNorm();
  Matrix full(10, 3);
  full << x, z;
  const Matrix f2 = full.transpose() * full;
  const Vector bf = f2.inverse() * (full.transpose() * y);
  const double rss1 = (y - full * bf).squaredNorm();
  const double f_oracle = ((rss0 - rss1) / 1.0) / (rss1 / (10.0 - 1.0 - 2.0));

  const auto rep = baselines::partial_f_test(data);
  CHECK(rep.statistic == doctest::Approx(f_oracle).epsilon(1e-10));
  CHECK(rep.p_value ==
        doctest::Approx(f_tail_by_quadrature(f_oracle, 1.0, 7.0)).epsilon(1e-5));
}

TEST_CASE("partial F-test input guards") {
  rng::PhiloxStream s(63, 0);
  Dataset tiny = test::random_dataset(s, 3, 1, 2);
  CHECK_THROWS_AS(baselines::partial_f_test(tiny), std::invalid_argument);
  Dataset dup = test::random_dataset(s, 10, 1, 2);
  dup.x.col(0) = dup.z.col(1);
  CHECK_THROWS_AS(baselines::partial_f_test(dup), std::invalid_argument);
}

TEST_CASE("breusch-pagan: equal-magnitude residuals give statistic 0, p = 1") {
  const Index n = 8;
  Dataset data;
  data.z = Matrix::Ones(n, 1);
  data.x = Matrix::Zero(n, 1);
  Vector e(n);
  for (Index i = 0; i < n; ++i) {
    data.x(i, 0) = (i < n / 2) ? 1.0 : 0.0;
    e[i] = ((i % 2 == 0) ? 1.0 : -1.0) * 0.7;  // |e_i| constant
  }
  // e is orthogonal to [x, 1] by construction, so it is the OLS residual
  REQUIRE(std::fabs(e.sum()) < 1e-12);
  REQUIRE(std::fabs(e.dot(data.x.col(0))) < 1e-12);
  data.y = 5.0 * data.x.col(0) + Vector::Ones(n) * 2.0 + e;
  const auto rep = baselines::breusch_pagan_koenker(data);
  CHECK(rep.statistic == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(rep.p_value == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("breusch-pagan df = 1: statistic is n times the squared correlation") {
  rng::PhiloxStream s(64, 0);
  const Index n = 30;
  Dataset data;
  data.z = Matrix::Ones(n, 1);
  data.x = Matrix::Zero(n, 1);
  for (Index i = 0; i < n; i += 3) data.x(i, 0) = 1.0;
  data.y = test::random_vector(s, n);
  for (Index i = 0; i < n; ++i)
    if (data.x(i, 0) == 1.0) data.y[i] *= 2.5;

  const auto rep = baselines::breusch_pagan_koenker(data);

  // oracle: correlation between squared OLS residuals and the indicator
  Matrix full(n, 2);
  full << data.x, data.z;
  const Vector b =
      (full.transpose() * full).inverse() * (full.transpose() * data.y);
  const Vector e2 = (data.y - full * b).array().square();
  const Vector xc = data.x.col(0).array() - data.x.col(0).mean();
  const Vector ec = e2.array() - e2.mean();
  const double corr = xc.dot(ec) / std::sqrt(xc.squaredNorm() * ec.squaredNorm());
  CHECK(rep.statistic == doctest::Approx(n * corr * corr).epsilon(1e-10));
  CHECK(rep.df1 == 1.0);
}

TEST_CASE("both baselines ignore shifts along the control columns") {
  rng::PhiloxStream s(65, 0);
  Dataset data = test::random_dataset(s, 40, 1, 4);
  data.x.col(0) = data.x.col(0).unaryExpr(
      [](double v) { return v > 0 ? 1.0 : 0.0; });  // indicator for BP
  Dataset shifted = data;
  shifted.y = data.y + data.z * test::random_vector(s, 4);

  const auto f1 = baselines::partial_f_test(data);
  const auto f2 = baselines::partial_f_test(shifted);
  CHECK(f1.statistic == doctest::Approx(f2.statistic).epsilon(1e-8));
  CHECK(f1.p_value == doctest::Approx(f2.p_value).epsilon(1e-8));

  const auto b1 = baselines::breusch_pagan_koenker(data);
  const auto b2 = baselines::breusch_pagan_koenker(shifted);
  CHECK(b1.statistic == doctest::Approx(b2.statistic).epsilon(1e-8));
  CHECK(b1.p_value == doctest::Approx(b2.p_value).epsilon(1e-8));
}

TEST_CASE("F-test p-values are uniform under the normal null (KS < 0.06)") {
  const int reps = 1000;
  std::vector<double> pvals(reps);
  for (int r = 0; r < reps; ++r) {
    rng::PhiloxStream s(9000 + r, 0);
    const Dataset data = test::random_dataset(s, 50, 1, 4);
    pvals[r] = baselines::partial_f_test(data).p_value;
  }
  std::sort(pvals.begin(), pvals.end());
  double ks = 0.0;
  for (int i = 0; i < reps; ++i) {
    const double lo = static_cast<double>(i) / reps;
    const double hi = static_cast<double>(i + 1) / reps;
    ks = std::max({ks, std::fabs(pvals[i] - lo), std::fabs(pvals[i] - hi)});
  }
  CHECK(ks < 0.06);
}
