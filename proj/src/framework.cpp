#include "palmrt/framework.hpp"

#include "palmrt/linalg.hpp"
#include "palmrt/parallel.hpp"
#include "palmrt/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace palmrt {

namespace {

constexpr const char* kGuaranteeNote =
    "level note: rejecting when p_value <= alpha has finite-sample size at "
    "most 2*alpha; observed rates in simulations track alpha itself";

Matrix hcat2(const Eigen::Ref<const Matrix>& a,
             const Eigen::Ref<const Matrix>& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

// Augmented control block [z, z_pi] with duplicate columns removed
// (lowest column index wins, so the identity permutation collapses to z).
Matrix augmented_controls(const Matrix& z, const Permutation& pi) {
  return linalg::drop_dependent_columns(hcat2(z, pi.apply_rows(z)));
}

FitSummary quantile_pair_summary(const Dataset& data, const Vector& x_eff,
                                 const Matrix& controls,
                                 const QuantileConfig& q_low,
                                 const QuantileConfig& q_high) {
  const Matrix design =
      linalg::drop_dependent_columns(hcat2(x_eff, controls));
  const auto lo = regressors::quantile_fit(data.y, design, q_low);
  const auto hi = regressors::quantile_fit(data.y, design, q_high);

  const Vector spread = (hi.residuals - lo.residuals).cwiseAbs();
  double sum0 = 0.0, sum1 = 0.0;
  Index n0 = 0, n1 = 0;
  for (Index i = 0; i < x_eff.size(); ++i) {
    if (x_eff[i] == 0.0) {
      sum0 += spread[i];
      ++n0;
    } else {
      sum1 += spread[i];
      ++n1;
    }
  }
  if (n0 == 0 || n1 == 0)
    throw std::invalid_argument("dispersion: a group is empty");

  FitSummary out;
  out.converged = lo.converged && hi.converged;
  double s0 = sum0 / static_cast<double>(n0);
  double s1 = sum1 / static_cast<double>(n1);
  double floor = 1e-12 * spread.mean();
  if (floor <= 0.0) floor = 1e-12;
  if (s0 < floor) {
    s0 = floor;
    out.scale_clamped = true;
  }
  if (s1 < floor) {
    s1 = floor;
    out.scale_clamped = true;
  }
  out.group_spreads = {s0, s1};
  Vector sorted = spread;
  std::sort(sorted.data(), sorted.data() + sorted.size());
  out.sorted_residuals = std::move(sorted);
  return out;
}

double indicator(double w_orig, double w_perm, TieRule ties) {
  if (ties == TieRule::kConservative) return w_orig >= w_perm ? 1.0 : 0.0;
  if (w_orig > w_perm) return 1.0;
  return w_orig == w_perm ? 0.5 : 0.0;
}

bool same_fitter(const FitterSpec& a, const FitterSpec& b) {
  return a.kind == b.kind && a.huber.delta == b.huber.delta &&
         a.huber.mad_factor == b.huber.mad_factor &&
         a.huber.rel_tol == b.huber.rel_tol &&
         a.huber.max_iter == b.huber.max_iter && a.q_low.q == b.q_low.q &&
         a.q_high.q == b.q_high.q;
}

}  // namespace

std::string FitterSpec::label() const {
  switch (kind) {
    case FitterKind::kOls: return "ols";
    case FitterKind::kHuberMadPrelim: return "huber-mad";
    case FitterKind::kQuantilePair: return "quantile-pair";
  }
  return "?";
}

std::string EvaluatorSpec::label() const {
  switch (kind) {
    case EvaluatorKind::kL1: return "l1";
    case EvaluatorKind::kL2: return "l2";
    case EvaluatorKind::kHuberScaled: return "huber";
    case EvaluatorKind::kIqrLogRatio: return "iqr-log-ratio";
  }
  return "?";
}

std::vector<Permutation> sample_permutations(Index n, int B,
                                             std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("sample_permutations: need n >= 2");
  if (B < 1) throw std::invalid_argument("sample_permutations: need B >= 1");
  std::vector<Permutation> out;
  out.reserve(B);
  for (int b = 0; b < B; ++b) {
    rng::PhiloxStream stream(seed, 1 + static_cast<std::uint64_t>(b));
    out.push_back(rng::random_permutation(stream, n));
  }
  return out;
}

std::pair<FitSummary, FitSummary> paired_fit(const Dataset& data,
                                             const Permutation& pi,
                                             const FitterSpec& fitter) {
  data.validate();
  if (pi.size() != data.n())
    throw std::invalid_argument("paired_fit: permutation size mismatch");

  const Matrix controls = augmented_controls(data.z, pi);
  const Matrix x_perm = pi.apply_rows(data.x);

  switch (fitter.kind) {
    case FitterKind::kOls: {
      FitSummary orig = regressors::ols_fit(
          data.y, linalg::drop_dependent_columns(hcat2(data.x, controls)));
      FitSummary perm = regressors::ols_fit(
          data.y, linalg::drop_dependent_columns(hcat2(x_perm, controls)));
      return {std::move(orig), std::move(perm)};
    }
    case FitterKind::kHuberMadPrelim: {
      const FitSummary prelim =
          regressors::huber_fit_mad(data.y, controls, fitter.huber);
      const double s_hat = *prelim.scale;
      FitSummary orig = regressors::huber_fit_fixed(
          data.y, linalg::drop_dependent_columns(hcat2(data.x, controls)),
          s_hat, fitter.huber);
      FitSummary perm = regressors::huber_fit_fixed(
          data.y, linalg::drop_dependent_columns(hcat2(x_perm, controls)),
          s_hat, fitter.huber);
      orig.scale_clamped = orig.scale_clamped || prelim.scale_clamped;
      perm.scale_clamped = perm.scale_clamped || prelim.scale_clamped;
      return {std::move(orig), std::move(perm)};
    }
    case FitterKind::kQuantilePair: {
      if (data.d() != 1)
        throw std::invalid_argument("paired_fit: quantile pair needs d == 1");
      FitSummary orig = quantile_pair_summary(data, data.x.col(0), controls,
                                              fitter.q_low, fitter.q_high);
      FitSummary perm = quantile_pair_summary(data, x_perm.col(0), controls,
                                              fitter.q_low, fitter.q_high);
      return {std::move(orig), std::move(perm)};
    }
  }
  throw std::logic_error("paired_fit: unknown fitter kind");
}

double evaluate(const FitSummary& summary, const EvaluatorSpec& eval) {
  switch (eval.kind) {
    case EvaluatorKind::kL1:
      return summary.sorted_residuals.cwiseAbs().sum();
    case EvaluatorKind::kL2:
      return summary.sorted_residuals.squaredNorm();
    case EvaluatorKind::kHuberScaled: {
      if (!summary.scale.has_value())
        throw std::invalid_argument(
            "evaluate: huber evaluator needs a summary with a scale");
      const double s = *summary.scale;
      double acc = 0.0;
      for (Index i = 0; i < summary.sorted_residuals.size(); ++i)
        acc += regressors::huber_rho(summary.sorted_residuals[i] / s,
                                     eval.delta);
      return acc;
    }
    case EvaluatorKind::kIqrLogRatio: {
      if (!summary.group_spreads.has_value())
        throw std::invalid_argument(
            "evaluate: iqr evaluator needs paired-quantile group spreads");
      const auto& [s0, s1] = *summary.group_spreads;
      return -std::fabs(std::log(s1 / s0));
    }
  }
  throw std::logic_error("evaluate: unknown evaluator kind");
}

std::vector<TestReport> palmrt_test_multi(
    const Dataset& data,
    const std::vector<std::pair<FitterSpec, EvaluatorSpec>>& methods, int B,
    std::uint64_t seed, int workers, TieRule ties) {
  data.validate();
  if (B < 1) throw std::invalid_argument("palmrt_test: need B >= 1");
  if (methods.empty()) return {};

  // Unique fitters; a least-squares fitter whose evaluator needs a scale is
  // upgraded to carry the preliminary robust scale.
  std::vector<FitterSpec> fitters;
  std::vector<size_t> which(methods.size());
  std::vector<bool> needs_scale;
  for (size_t m = 0; m < methods.size(); ++m) {
    const auto& f = methods[m].first;
    size_t j = 0;
    for (; j < fitters.size(); ++j)
      if (same_fitter(fitters[j], f)) break;
    if (j == fitters.size()) {
      fitters.push_back(f);
      needs_scale.push_back(false);
    }
    which[m] = j;
    if (methods[m].second.kind == EvaluatorKind::kHuberScaled)
      needs_scale[j] = true;
  }

  const auto perms = sample_permutations(data.n(), B, seed);

  Matrix ind(static_cast<Index>(methods.size()), B);
  parallel_for(B, workers, [&](std::int64_t b) {
    std::vector<std::pair<FitSummary, FitSummary>> pairs(fitters.size());
    std::optional<double> prelim_scale;
    for (size_t j = 0; j < fitters.size(); ++j) {
      pairs[j] = paired_fit(data, perms[b], fitters[j]);
      if (fitters[j].kind == FitterKind::kOls && needs_scale[j]) {
        if (!prelim_scale) {
          const auto prelim = regressors::huber_fit_mad(
              data.y, augmented_controls(data.z, perms[b]),
              fitters[j].huber);
          prelim_scale = *prelim.scale;
        }
        pairs[j].first.scale = prelim_scale;
        pairs[j].second.scale = prelim_scale;
      }
    }
    for (size_t m = 0; m < methods.size(); ++m) {
      const auto& pr = pairs[which[m]];
      const double wo = evaluate(pr.first, methods[m].second);
      const double wp = evaluate(pr.second, methods[m].second);
      ind(static_cast<Index>(m), b) = indicator(wo, wp, ties);
    }
  });

  std::vector<TestReport> reports(methods.size());
  for (size_t m = 0; m < methods.size(); ++m) {
    TestReport& rep = reports[m];
    rep.B = B;
    rep.seed = seed;
    rep.fitter_label = methods[m].first.label();
    rep.evaluator_label = methods[m].second.label();
    rep.alpha_note = kGuaranteeNote;
    rep.indicators.resize(B);
    double sum = 0.0;
    for (int b = 0; b < B; ++b) {
      rep.indicators[b] = ind(static_cast<Index>(m), b);
      sum += rep.indicators[b];
    }
    rep.p_value = (1.0 + sum) / (1.0 + B);
  }
  return reports;
}

TestReport palmrt_test(const Dataset& data, const FitterSpec& fitter,
                       const EvaluatorSpec& eval, int B, std::uint64_t seed,
                       int workers, TieRule ties) {
  return palmrt_test_multi(data, {{fitter, eval}}, B, seed, workers, ties)
      .front();
}

TestReport dispersion_test(const Dataset& data, const QuantileConfig& q_low,
                           const QuantileConfig& q_high, int B,
                           std::uint64_t seed, int workers) {
  data.validate();
  if (data.d() != 1)
    throw std::invalid_argument("dispersion_test: x must be one column");
  Index ones = 0;
  for (Index i = 0; i < data.n(); ++i) {
    const double v = data.x(i, 0);
    if (v != 0.0 && v != 1.0)
      throw std::invalid_argument("dispersion_test: x must be 0/1 valued");
    if (v == 1.0) ++ones;
  }
  if (ones == 0 || ones == data.n())
    throw std::invalid_argument("dispersion_test: both groups must be present");
  if (!(q_low.q < q_high.q))
    throw std::invalid_argument("dispersion_test: need q_low < q_high");

  FitterSpec fitter;
  fitter.kind = FitterKind::kQuantilePair;
  fitter.q_low = q_low;
  fitter.q_high = q_high;
  EvaluatorSpec eval;
  eval.kind = EvaluatorKind::kIqrLogRatio;
  return palmrt_test(data, fitter, eval, B, seed, workers);
}

ConfidenceInterval invert_ci(const Dataset& data, const FitterSpec& fitter,
                             const EvaluatorSpec& eval, int B,
                             std::uint64_t seed, double alpha,
                             const std::vector<double>& beta_grid,
                             int workers) {
  data.validate();
  if (data.d() != 1)
    throw std::invalid_argument("invert_ci: x must be one column");
  if (beta_grid.empty())
    throw std::invalid_argument("invert_ci: empty grid");
  if (!std::is_sorted(beta_grid.begin(), beta_grid.end()))
    throw std::invalid_argument("invert_ci: grid must be sorted");

  ConfidenceInterval ci;
  ci.alpha = alpha;
  ci.grid = beta_grid;
  ci.p_values.resize(beta_grid.size());

  Dataset shifted = data;
  for (size_t g = 0; g < beta_grid.size(); ++g) {
    shifted.y = data.y - data.x.col(0) * beta_grid[g];
    ci.p_values[g] =
        palmrt_test(shifted, fitter, eval, B, seed, workers).p_value;
  }

  Index first = -1, last = -1;
  Index accepted = 0;
  for (size_t g = 0; g < beta_grid.size(); ++g) {
    if (ci.p_values[g] > alpha) {
      if (first < 0) first = static_cast<Index>(g);
      last = static_cast<Index>(g);
      ++accepted;
    }
  }
  if (accepted == 0) {
    ci.empty = true;
    ci.beta_lo = ci.beta_hi = std::numeric_limits<double>::quiet_NaN();
    return ci;
  }
  ci.beta_lo = beta_grid[first];
  ci.beta_hi = beta_grid[last];
  ci.contiguous = (last - first + 1 == accepted);
  return ci;
}

}  // namespace palmrt
