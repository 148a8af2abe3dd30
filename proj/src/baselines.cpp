#include "palmrt/baselines.hpp"

#include "palmrt/linalg.hpp"
#include "palmrt/special_functions.hpp"

#include <algorithm>
#include <cmath>

namespace palmrt::baselines {

namespace {

Matrix hcat2(const Eigen::Ref<const Matrix>& a,
             const Eigen::Ref<const Matrix>& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

}  // namespace

ClassicalReport partial_f_test(const Dataset& data) {
  data.validate();
  const Index n = data.n();
  const Index d = data.d();
  const Index p = data.p();
  if (n <= d + p)
    throw std::invalid_argument("partial_f_test: need n > d + p");

  const Matrix full = hcat2(data.x, data.z);
  if (linalg::drop_dependent_columns(full).cols() != d + p)
    throw std::invalid_argument("partial_f_test: combined design is rank-deficient");

  const double rss0 = linalg::least_squares_residuals(data.y, data.z).squaredNorm();
  const double rss1 = linalg::least_squares_residuals(data.y, full).squaredNorm();

  const double df1 = static_cast<double>(d);
  const double df2 = static_cast<double>(n - d - p);
  double f = ((rss0 - rss1) / df1) / (rss1 / df2);
  if (f < 0.0) f = 0.0;  // rounding guard; RSS0 >= RSS1 by nesting

  ClassicalReport rep;
  rep.label = "f-test";
  rep.statistic = f;
  rep.df1 = df1;
  rep.df2 = df2;
  rep.p_value = special::f_upper_tail(f, df1, df2);
  return rep;
}

ClassicalReport breusch_pagan_koenker(const Dataset& data) {
  data.validate();
  const Index n = data.n();
  const Matrix full = hcat2(data.x, data.z);
  const Matrix aux = linalg::drop_dependent_columns(full);
  if (n <= aux.cols())
    throw std::invalid_argument("breusch_pagan: need n > number of covariates");

  const Vector e = linalg::least_squares_residuals(data.y, full);
  const Vector e2 = e.array().square();

  const double tss = (e2.array() - e2.mean()).matrix().squaredNorm();
  const Vector aux_res = linalg::least_squares_residuals(e2, aux);
  const double rss = aux_res.squaredNorm();

  // Centered R^2 of the auxiliary regression; the design carries the
  // intercept through z by convention. A total sum of squares at rounding
  // scale means the squared residuals are constant, so R^2 is 0.
  const double e2_scale = e2.mean();
  const double tss_floor = 1e-14 * static_cast<double>(n) * e2_scale * e2_scale;
  double r2 = tss > tss_floor ? 1.0 - rss / tss : 0.0;
  r2 = std::clamp(r2, 0.0, 1.0);

  const double df = static_cast<double>(aux.cols() - 1);
  if (df < 1.0)
    throw std::invalid_argument("breusch_pagan: no non-intercept covariates");

  ClassicalReport rep;
  rep.label = "breusch-pagan";
  rep.statistic = static_cast<double>(n) * r2;
  rep.df1 = df;
  rep.p_value = special::chi_square_upper_tail(rep.statistic, df);
  return rep;
}

}  // namespace palmrt::baselines
