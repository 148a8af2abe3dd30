#pragma once

#include "palmrt/types.hpp"

#include <functional>
#include <optional>

namespace palmrt::regressors {

/// Output of a model fit: residuals as ascending order statistics plus the
/// robust scale when the fitting algorithm produces one. group_spreads is
/// populated only by the paired-quantile fitter (mean inter-quantile spread
/// of the control and case groups, in that order).
struct FitSummary {
  Vector sorted_residuals;
  std::optional<double> scale;
  std::optional<std::pair<double, double>> group_spreads;
  bool converged = true;
  bool scale_clamped = false;
};

struct HuberConfig {
  double delta = 1.345;
  double mad_factor = 1.4826;
  double rel_tol = 1e-8;
  int max_iter = 200;

  void validate() const;
};

struct QuantileConfig {
  double q = 0.5;
  double tol = 1e-9;
  int max_iter = 500;

  void validate() const;
};

/// Huber loss: t^2/2 inside [-delta, delta], linear continuation outside.
inline double huber_rho(double t, double delta) {
  const double a = t < 0 ? -t : t;
  return a <= delta ? 0.5 * t * t : a * delta - 0.5 * delta * delta;
}

/// Plain least-squares fit; residuals sorted ascending, no scale.
FitSummary ols_fit(const Eigen::Ref<const Vector>& y,
                   const Eigen::Ref<const Matrix>& C);

/// Observation-aligned residual snapshots: called with the initial
/// least-squares residuals and after every reweighted update.
using IterationObserver = std::function<void(const Vector& residuals)>;

/// Iteratively reweighted Huber regression with MAD scale re-estimated from
/// the current residuals each sweep: s = mad_factor * median(|R|), weights
/// w_i = min(1, delta / (|R_i| / s)), residual update by weighted least
/// squares of R on C, until the relative residual change drops below
/// rel_tol. Returns the final scale and the sorted residuals.
FitSummary huber_fit_mad(const Eigen::Ref<const Vector>& y,
                         const Eigen::Ref<const Matrix>& C,
                         const HuberConfig& cfg = {},
                         const IterationObserver& observer = {});

/// Same sweep with the scale held fixed at s; the summary echoes s.
FitSummary huber_fit_fixed(const Eigen::Ref<const Vector>& y,
                           const Eigen::Ref<const Matrix>& C, double s,
                           const HuberConfig& cfg = {},
                           const IterationObserver& observer = {});

/// Quantile-regression result. Residuals are observation-aligned (unsorted):
/// downstream consumers pair them per case index.
struct QuantileFit {
  Vector residuals;
  Vector coefficients;  // for the deduplicated design
  bool converged = true;
  int iterations = 0;
};

/// Minimizes the pinball loss sum_i (q - 1{y_i - C_i b <= 0}) (y_i - C_i b)
/// by a finite exchange (simplex) method over interpolation bases, with
/// lowest-index pivot preferences so ties are resolved identically on every
/// call. C is deduplicated to full column rank internally; residuals do not
/// depend on which dependent columns were dropped.
QuantileFit quantile_fit(const Eigen::Ref<const Vector>& y,
                         const Eigen::Ref<const Matrix>& C,
                         const QuantileConfig& cfg);

}  // namespace palmrt::regressors
