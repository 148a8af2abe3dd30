#pragma once

#include "palmrt/regressors.hpp"
#include "palmrt/types.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace palmrt {

using regressors::FitSummary;
using regressors::HuberConfig;
using regressors::QuantileConfig;

enum class FitterKind {
  kOls,             // least-squares residual fits
  kHuberMadPrelim,  // scale from a preliminary robust fit of y ~ [z, z_pi],
                    // then fixed-scale robust fits of the augmented models
  kQuantilePair,    // paired low/high quantile fits per group (dispersion)
};

struct FitterSpec {
  FitterKind kind = FitterKind::kOls;
  HuberConfig huber{};
  QuantileConfig q_low{0.10};
  QuantileConfig q_high{0.90};

  std::string label() const;
};

enum class EvaluatorKind {
  kL1,           // sum |r_i|
  kL2,           // sum r_i^2
  kHuberScaled,  // sum rho(r_i / s), requires a summary with a scale
  kIqrLogRatio,  // -|log(s1/s0)| of the paired-quantile group spreads
};

struct EvaluatorSpec {
  EvaluatorKind kind = EvaluatorKind::kL2;
  double delta = 1.345;

  std::string label() const;
};

/// How equal fit quality between the original and permuted models counts.
/// The conservative rule scores a tie as a full success for the permuted
/// model; the half-weight rule splits it.
enum class TieRule { kConservative, kHalfWeight };

struct TestReport {
  double p_value = 1.0;
  int B = 0;
  std::vector<double> indicators;  // one per permutation; {0,1} under the
                                   // conservative tie rule
  std::uint64_t seed = 0;
  std::string fitter_label;
  std::string evaluator_label;
  std::string alpha_note;  // records the finite-sample guarantee level
};

struct ConfidenceInterval {
  double beta_lo = 0.0;
  double beta_hi = 0.0;
  double alpha = 0.0;
  std::vector<double> grid;
  std::vector<double> p_values;
  bool empty = false;       // no grid point accepted
  bool contiguous = true;   // accepted set has no interior rejection
};

/// B permutations of {0,...,n-1}; permutation b depends only on (seed, b),
/// via Fisher-Yates on the counter-based stream (seed, 1 + b).
std::vector<Permutation> sample_permutations(Index n, int B,
                                             std::uint64_t seed);

/// The original/permuted pair of augmented fits for one permutation:
/// M_orig fits y against [x, z, z_pi], M_perm against [x_pi, z, z_pi].
std::pair<FitSummary, FitSummary> paired_fit(const Dataset& data,
                                             const Permutation& pi,
                                             const FitterSpec& fitter);

/// Scalar fit quality; smaller is better.
double evaluate(const FitSummary& summary, const EvaluatorSpec& eval);

/// The permutation test: p = (1 + sum_b A_b) / (1 + B) with
/// A_b = 1{evaluate(M_orig) >= evaluate(M_perm)}.
TestReport palmrt_test(const Dataset& data, const FitterSpec& fitter,
                       const EvaluatorSpec& eval, int B, std::uint64_t seed,
                       int workers = 1, TieRule ties = TieRule::kConservative);

/// Same permutations and shared preliminary fits across several
/// (fitter, evaluator) methods; one report per method, in order. Within a
/// permutation, methods with the same fitter kind reuse the fitted pair.
std::vector<TestReport> palmrt_test_multi(
    const Dataset& data,
    const std::vector<std::pair<FitterSpec, EvaluatorSpec>>& methods, int B,
    std::uint64_t seed, int workers = 1,
    TieRule ties = TieRule::kConservative);

/// Two-group dispersion test: paired quantile fits at q_low/q_high for
/// tau in {identity, pi_b}, group mean inter-quantile spreads, statistic
/// -|log(s1/s0)|. x must be a single 0/1 column with both groups present.
TestReport dispersion_test(const Dataset& data, const QuantileConfig& q_low,
                           const QuantileConfig& q_high, int B,
                           std::uint64_t seed, int workers = 1);

/// Confidence interval by test inversion over beta_grid: each grid point is
/// tested on the shifted response y - x * beta0 with the same seed (common
/// random numbers), and the interval spans the accepted points.
ConfidenceInterval invert_ci(const Dataset& data, const FitterSpec& fitter,
                             const EvaluatorSpec& eval, int B,
                             std::uint64_t seed, double alpha,
                             const std::vector<double>& beta_grid,
                             int workers = 1);

}  // namespace palmrt
