#pragma once

#include "palmrt/framework.hpp"
#include "palmrt/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace palmrt::sim {

enum class DesignKind { kNormal, kT3, kCauchy, kBalancedAnova };
enum class ErrorKind { kNormal, kT3, kCauchy, kLogNormal, kMultinomialOutlier };

std::string to_string(DesignKind k);
std::string to_string(ErrorKind k);
DesignKind design_from_string(const std::string& s);
ErrorKind error_from_string(const std::string& s);

/// One simulation cell. p counts the intercept as one of z's columns. In
/// dispersion mode x is a balanced 0/1 indicator and the response is
/// y_i = (1 + beta * x_i) * e_i; otherwise y = x*beta + e (theta = 0
/// throughout, which no tested method can distinguish from any other theta).
struct SimSetting {
  std::string id;
  DesignKind design = DesignKind::kNormal;
  ErrorKind error = ErrorKind::kNormal;
  Index n = 100;
  int p = 6;
  int d = 1;
  std::optional<double> beta;
  std::optional<double> target_power;
  int trials = 200;
  int B = 99;
  std::uint64_t seed0 = 1;
  std::uint64_t seed_step = 1;
  bool dispersion = false;

  std::uint64_t trial_seed(int trial) const {
    return seed0 + static_cast<std::uint64_t>(trial) * seed_step;
  }
  /// Balanced-ANOVA designs round n down to a multiple of the group count.
  Index effective_n() const;
  void validate() const;
};

/// Deterministic function of (setting, trial): all draws come from the
/// counter-based stream keyed by trial_seed(trial), stream 0, in a fixed
/// order (x columns, then z columns, then errors).
Dataset generate(const SimSetting& setting, int trial);

/// Monte-Carlo F-test power at the setting's n/p/design/error for a given
/// beta, using `reps` datasets drawn from the setting's seed progression.
/// Common random numbers: the same datasets are reused for every beta, and
/// only the response shift changes.
class FPowerCurve {
 public:
  FPowerCurve(const SimSetting& setting, int reps, double alpha = 0.05);
  double power(double beta) const;
  int reps() const { return reps_; }

 private:
  struct Piece {
    double a, b, c, rss1;
  };
  std::vector<Piece> pieces_;
  double df1_, df2_, fcrit_;
  int reps_;
};

/// Root of (F-test power - target) by bracketed bisection with secant
/// acceleration on the common-random-numbers power curve. Stops when the
/// residual power gap is below 2 Monte-Carlo standard errors or the bracket
/// collapses to 1e-3 relative width.
double calibrate_beta(const SimSetting& setting, int reps);

struct MethodSpec {
  enum class Kind { kPalmrt, kDispersion, kFTest, kBreuschPagan };
  std::string label;
  Kind kind = Kind::kPalmrt;
  FitterSpec fitter{};
  EvaluatorSpec eval{};
  QuantileConfig q_low{0.10};
  QuantileConfig q_high{0.90};
};

/// Parses labels of the form "<fitter>-<evaluator>" (e.g. "ols-l2",
/// "huber-huber", "ols-l1"), plus "f-test", "breusch-pagan", "dispersion".
MethodSpec method_from_label(const std::string& label);

struct TrialRecord {
  std::string setting_id;
  int trial = 0;
  std::uint64_t seed = 0;
  std::vector<double> p_values;  // one per method, in method order
};

struct PowerRow {
  std::string setting_id;
  std::string method;
  double rejection_rate = 0.0;
  double mc_stderr = 0.0;
  int trials = 0;
  double rel_power_vs_f = std::numeric_limits<double>::quiet_NaN();
};

struct StudyResult {
  std::vector<std::string> method_labels;
  std::vector<SimSetting> resolved_settings;  // target_power replaced by beta
  std::vector<TrialRecord> records;
  std::vector<PowerRow> rows;
};

/// Blocked study: within a trial every method sees the identical dataset and
/// the same permutation stream. Settings with target_power are calibrated
/// first (with `calibration_reps` common-random-numbers replicates on the
/// calibration_seed0 progression).
StudyResult run_power_study(const std::vector<SimSetting>& settings,
                            const std::vector<MethodSpec>& methods,
                            double alpha, int workers,
                            int calibration_reps = 5000,
                            std::uint64_t calibration_seed0 = 777001);

struct CdfRow {
  std::string setting_id;
  std::string method;
  double alpha = 0.0;
  double fraction_at_or_below = 0.0;
  int trials = 0;
};

/// Empirical CDF of the p-values at each alpha; settings are run at their
/// stored beta (use 0 for null behavior).
std::vector<CdfRow> run_null_cdf_study(const std::vector<SimSetting>& settings,
                                       const std::vector<MethodSpec>& methods,
                                       const std::vector<double>& alphas,
                                       int workers);

/// Tidy outputs: one CSV row per (setting, method, trial), an aggregate CSV,
/// and a JSON manifest echoing every setting field including seeds.
void write_trials_csv(std::ostream& os, const StudyResult& result);
void write_power_csv(std::ostream& os, const StudyResult& result,
                     double alpha);
std::string manifest_json(const std::vector<SimSetting>& settings,
                          const std::vector<MethodSpec>& methods, double alpha,
                          int workers);

}  // namespace palmrt::sim
