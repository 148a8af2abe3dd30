#include "palmrt/regressors.hpp"

#include "palmrt/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace palmrt::regressors {

namespace {

Vector sorted_ascending(Vector v) {
  std::sort(v.data(), v.data() + v.size());
  return v;
}

// One IRLS run. mad_scale=true re-estimates s each sweep; otherwise fixed_s
// is used throughout. Writes the last scale used and the convergence flag.
void irls_huber(const Eigen::Ref<const Vector>& y,
                const Eigen::Ref<const Matrix>& C, const HuberConfig& cfg,
                bool mad_scale, double fixed_s, Vector& residuals,
                double& scale_out, bool& converged, bool& clamped,
                const IterationObserver& observer) {
  Vector r = linalg::least_squares_residuals(y, C);
  if (observer) observer(r);
  const double clamp_floor =
      std::max(1e-12, 1e-8 * r.cwiseAbs().mean());

  converged = false;
  clamped = false;
  scale_out = fixed_s;
  Vector w(r.size());
  for (int k = 0; k < cfg.max_iter; ++k) {
    double s = fixed_s;
    if (mad_scale) {
      s = cfg.mad_factor * linalg::median(r.cwiseAbs());
      if (s <= clamp_floor) {
        s = clamp_floor;
        clamped = true;
      }
    }
    scale_out = s;

    for (Index i = 0; i < r.size(); ++i) {
      const double a = std::fabs(r[i]);
      w[i] = (a <= cfg.delta * s) ? 1.0 : cfg.delta * s / a;
    }

    const double rnorm = r.norm();
    if (rnorm == 0.0) {
      converged = true;
      break;
    }
    Vector r_next = linalg::weighted_least_squares_residuals(r, C, w);
    const double change = (r_next - r).norm() / rnorm;
    r = std::move(r_next);
    if (observer) observer(r);
    if (change < cfg.rel_tol) {
      converged = true;
      break;
    }
  }
  residuals = std::move(r);
}

}  // namespace

void HuberConfig::validate() const {
  if (!(delta > 0.0) || !(mad_factor > 0.0) || !(rel_tol > 0.0) ||
      max_iter < 1)
    throw std::invalid_argument("HuberConfig: invalid field");
}

void QuantileConfig::validate() const {
  if (!(q > 0.0 && q < 1.0) || !(tol > 0.0) || max_iter < 1)
    throw std::invalid_argument("QuantileConfig: invalid field");
}

FitSummary ols_fit(const Eigen::Ref<const Vector>& y,
                   const Eigen::Ref<const Matrix>& C) {
  FitSummary out;
  out.sorted_residuals = sorted_ascending(linalg::least_squares_residuals(y, C));
  return out;
}

FitSummary huber_fit_mad(const Eigen::Ref<const Vector>& y,
                         const Eigen::Ref<const Matrix>& C,
                         const HuberConfig& cfg,
                         const IterationObserver& observer) {
  cfg.validate();
  if (y.size() < 2) throw std::invalid_argument("huber_fit_mad: need n >= 2");
  FitSummary out;
  Vector r;
  double s = 0.0;
  irls_huber(y, C, cfg, /*mad_scale=*/true, 0.0, r, s, out.converged,
             out.scale_clamped, observer);
  out.sorted_residuals = sorted_ascending(std::move(r));
  out.scale = s;
  return out;
}

FitSummary huber_fit_fixed(const Eigen::Ref<const Vector>& y,
                           const Eigen::Ref<const Matrix>& C, double s,
                           const HuberConfig& cfg,
                           const IterationObserver& observer) {
  cfg.validate();
  if (!(s > 0.0)) throw std::invalid_argument("huber_fit_fixed: need s > 0");
  FitSummary out;
  Vector r;
  double s_echo = s;
  irls_huber(y, C, cfg, /*mad_scale=*/false, s, r, s_echo, out.converged,
             out.scale_clamped, observer);
  out.sorted_residuals = sorted_ascending(std::move(r));
  out.scale = s;
  return out;
}

}  // namespace palmrt::regressors
