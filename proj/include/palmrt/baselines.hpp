#pragma once

#include "palmrt/types.hpp"

#include <string>

namespace palmrt::baselines {

struct ClassicalReport {
  double statistic = 0.0;
  double df1 = 0.0;
  double df2 = 0.0;  // 0 when the reference law needs a single df
  double p_value = 1.0;
  std::string label;
};

/// Partial F-test of y ~ z against y ~ x + z:
/// F = [(RSS0 - RSS1)/d] / [RSS1/(n - d - p)], upper tail of F(d, n-d-p).
ClassicalReport partial_f_test(const Dataset& data);

/// Breusch-Pagan test with the studentizing correction: squared residuals of
/// the OLS fit y ~ [x, z] regressed on [x, z]; statistic n * R^2 against the
/// chi-square law with one df per non-intercept auxiliary covariate.
ClassicalReport breusch_pagan_koenker(const Dataset& data);

}  // namespace palmrt::baselines
