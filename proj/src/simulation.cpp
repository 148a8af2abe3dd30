#include "palmrt/simulation.hpp"

#include "palmrt/baselines.hpp"
#include "palmrt/linalg.hpp"
#include "palmrt/parallel.hpp"
#include "palmrt/random.hpp"
#include "palmrt/special_functions.hpp"
#include "palmrt/table_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace palmrt::sim {

namespace {

using ordered_json = nlohmann::ordered_json;

double draw_design(rng::PhiloxStream& s, DesignKind kind) {
  switch (kind) {
    case DesignKind::kNormal: return rng::draw_normal(s);
    case DesignKind::kT3: return rng::draw_t3(s);
    case DesignKind::kCauchy: return rng::draw_cauchy(s);
    case DesignKind::kBalancedAnova: break;
  }
  throw std::logic_error("draw_design: balanced-anova columns are not drawn");
}

struct Parts {
  Matrix x;
  Matrix z;
  Vector e;
};

// Fixed draw order: x columns, then non-intercept z columns, then errors.
Parts generate_parts(const SimSetting& s, int trial) {
  const Index n = s.effective_n();
  rng::PhiloxStream stream(s.trial_seed(trial), 0);

  Parts parts;
  parts.x = Matrix::Zero(n, s.d);
  parts.z = Matrix::Ones(n, s.p);

  if (s.dispersion) {
    // balanced 0/1 indicator: the later half of the rows are cases
    const Index n1 = n / 2;
    for (Index i = n - n1; i < n; ++i) parts.x(i, 0) = 1.0;
    for (int j = 1; j < s.p; ++j)
      for (Index i = 0; i < n; ++i) parts.z(i, j) = draw_design(stream, s.design);
  } else if (s.design == DesignKind::kBalancedAnova) {
    // Reference-coded one-way layout: group 0 is intercept-only, groups
    // 1..d are the x indicators, groups d+1..d+p-1 the z indicators.
    const Index groups = s.d + s.p;
    const Index block = n / groups;
    if (s.p > 1) parts.z.rightCols(s.p - 1).setZero();
    for (Index i = 0; i < n; ++i) {
      const Index g = i / block;
      if (g >= 1 && g <= s.d) parts.x(i, g - 1) = 1.0;
      if (g > s.d) parts.z(i, g - s.d) = 1.0;
    }
  } else {
    for (int j = 0; j < s.d; ++j)
      for (Index i = 0; i < n; ++i) parts.x(i, j) = draw_design(stream, s.design);
    for (int j = 1; j < s.p; ++j)
      for (Index i = 0; i < n; ++i) parts.z(i, j) = draw_design(stream, s.design);
  }

  parts.e.resize(n);
  switch (s.error) {
    case ErrorKind::kNormal:
      for (Index i = 0; i < n; ++i) parts.e[i] = rng::draw_normal(stream);
      break;
    case ErrorKind::kT3:
      for (Index i = 0; i < n; ++i) parts.e[i] = rng::draw_t3(stream);
      break;
    case ErrorKind::kCauchy:
      for (Index i = 0; i < n; ++i) parts.e[i] = rng::draw_cauchy(stream);
      break;
    case ErrorKind::kLogNormal:
      for (Index i = 0; i < n; ++i) parts.e[i] = rng::draw_lognormal(stream);
      break;
    case ErrorKind::kMultinomialOutlier: {
      for (Index i = 0; i < n; ++i) parts.e[i] = rng::draw_normal(stream);
      const auto k = static_cast<Index>(
          stream.next_below(static_cast<std::uint64_t>(n)));
      const double sign = stream.next_unit() < 0.5 ? 1.0 : -1.0;
      parts.e[k] += sign * 1e4;
      break;
    }
  }
  return parts;
}

}  // namespace

std::string to_string(DesignKind k) {
  switch (k) {
    case DesignKind::kNormal: return "normal";
    case DesignKind::kT3: return "t3";
    case DesignKind::kCauchy: return "cauchy";
    case DesignKind::kBalancedAnova: return "balanced-anova";
  }
  return "?";
}

std::string to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::kNormal: return "normal";
    case ErrorKind::kT3: return "t3";
    case ErrorKind::kCauchy: return "cauchy";
    case ErrorKind::kLogNormal: return "lognormal";
    case ErrorKind::kMultinomialOutlier: return "multinomial-outlier";
  }
  return "?";
}

DesignKind design_from_string(const std::string& s) {
  if (s == "normal") return DesignKind::kNormal;
  if (s == "t3") return DesignKind::kT3;
  if (s == "cauchy") return DesignKind::kCauchy;
  if (s == "balanced-anova") return DesignKind::kBalancedAnova;
  throw std::invalid_argument("unknown design kind: " + s);
}

ErrorKind error_from_string(const std::string& s) {
  if (s == "normal") return ErrorKind::kNormal;
  if (s == "t3") return ErrorKind::kT3;
  if (s == "cauchy") return ErrorKind::kCauchy;
  if (s == "lognormal") return ErrorKind::kLogNormal;
  if (s == "multinomial-outlier") return ErrorKind::kMultinomialOutlier;
  throw std::invalid_argument("unknown error kind: " + s);
}

Index SimSetting::effective_n() const {
  if (design != DesignKind::kBalancedAnova) return n;
  const Index groups = d + p;
  return (n / groups) * groups;
}

void SimSetting::validate() const {
  if (n < 2) throw std::invalid_argument("SimSetting: need n >= 2");
  if (p < 1 || d < 1) throw std::invalid_argument("SimSetting: need p, d >= 1");
  if (beta.has_value() == target_power.has_value())
    throw std::invalid_argument(
        "SimSetting: exactly one of beta / target_power must be set");
  if (trials < 1) throw std::invalid_argument("SimSetting: need trials >= 1");
  if (B < 1) throw std::invalid_argument("SimSetting: need B >= 1");
  if (design == DesignKind::kBalancedAnova && effective_n() < d + p)
    throw std::invalid_argument("SimSetting: n too small for the group count");
  if (dispersion) {
    if (d != 1)
      throw std::invalid_argument("SimSetting: dispersion mode needs d == 1");
    if (design == DesignKind::kBalancedAnova)
      throw std::invalid_argument(
          "SimSetting: dispersion mode draws z columns, pick a random design");
  }
}

Dataset generate(const SimSetting& setting, int trial) {
  setting.validate();
  if (!setting.beta.has_value())
    throw std::invalid_argument("generate: beta must be resolved first");
  Parts parts = generate_parts(setting, trial);
  Dataset data;
  if (setting.dispersion) {
    data.y = (1.0 + *setting.beta * parts.x.col(0).array()) * parts.e.array();
  } else {
    data.y = parts.x * Vector::Constant(setting.d, *setting.beta) + parts.e;
  }
  data.x = std::move(parts.x);
  data.z = std::move(parts.z);
  return data;
}

FPowerCurve::FPowerCurve(const SimSetting& setting, int reps, double alpha)
    : reps_(reps) {
  SimSetting s = setting;
  s.beta = 0.0;
  s.target_power.reset();
  s.validate();
  if (s.d != 1)
    throw std::invalid_argument("FPowerCurve: calibration needs d == 1");
  if (s.dispersion)
    throw std::invalid_argument("FPowerCurve: not defined in dispersion mode");
  const Index n = s.effective_n();
  if (n <= 1 + s.p)
    throw std::invalid_argument("FPowerCurve: need n > d + p");

  df1_ = 1.0;
  df2_ = static_cast<double>(n - 1 - s.p);
  fcrit_ = special::f_upper_quantile(alpha, df1_, df2_);

  pieces_.resize(reps);
  parallel_for(reps, 2, [&](std::int64_t r) {
    const Parts parts = generate_parts(s, static_cast<int>(r));
    const Vector xt = linalg::least_squares_residuals(parts.x.col(0), parts.z);
    const Vector et = linalg::least_squares_residuals(parts.e, parts.z);
    Matrix full(n, 1 + s.p);
    full << parts.x, parts.z;
    Piece& pc = pieces_[r];
    pc.a = xt.squaredNorm();
    pc.b = 2.0 * xt.dot(et);
    pc.c = et.squaredNorm();
    pc.rss1 = linalg::least_squares_residuals(parts.e, full).squaredNorm();
  });
}

double FPowerCurve::power(double beta) const {
  int rejects = 0;
  for (const Piece& pc : pieces_) {
    const double rss0 = pc.a * beta * beta + pc.b * beta + pc.c;
    if (pc.rss1 <= 0.0) {
      ++rejects;
      continue;
    }
    const double f = ((rss0 - pc.rss1) / df1_) / (pc.rss1 / df2_);
    if (f > fcrit_) ++rejects;
  }
  return static_cast<double>(rejects) / static_cast<double>(reps_);
}

double calibrate_beta(const SimSetting& setting, int reps) {
  if (!setting.target_power.has_value())
    throw std::invalid_argument("calibrate_beta: target_power is not set");
  const double target = *setting.target_power;
  if (!(target >= 0.05 && target < 1.0))
    throw std::invalid_argument("calibrate_beta: target_power outside [0.05, 1)");
  if (reps < 1000)
    throw std::invalid_argument("calibrate_beta: need reps >= 1000");

  const FPowerCurve curve(setting, reps);
  const double mc_err = std::sqrt(target * (1.0 - target) / reps);

  double lo = 0.0;
  double g_lo = curve.power(lo) - target;
  if (std::fabs(g_lo) < 2.0 * mc_err) return lo;
  if (g_lo > 0.0)
    throw std::invalid_argument(
        "calibrate_beta: F-test power at beta = 0 already exceeds the target");

  double hi = 1.0;
  double g_hi = curve.power(hi) - target;
  while (g_hi < 0.0) {
    lo = hi;
    g_lo = g_hi;
    hi *= 2.0;
    if (hi > 1e9) {
      std::ostringstream msg;
      msg << "calibrate_beta: failed to bracket target " << target
          << " within beta <= 1e9 (power there: " << (g_hi + target) << ")";
      throw std::runtime_error(msg.str());
    }
    g_hi = curve.power(hi) - target;
  }

  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    // secant proposal, clamped into the middle of the bracket
    double cand = (g_hi > g_lo)
                      ? lo - g_lo * (hi - lo) / (g_hi - g_lo)
                      : 0.5 * (lo + hi);
    const double margin = 0.05 * (hi - lo);
    if (!(cand > lo + margin && cand < hi - margin)) cand = 0.5 * (lo + hi);
    mid = cand;

    const double g_mid = curve.power(mid) - target;
    if (std::fabs(g_mid) < 2.0 * mc_err) return mid;
    if (g_mid < 0.0) {
      lo = mid;
      g_lo = g_mid;
    } else {
      hi = mid;
      g_hi = g_mid;
    }
    if (hi - lo < 1e-3 * std::max(std::fabs(mid), 1e-12))
      return 0.5 * (lo + hi);
  }
  return mid;
}

MethodSpec method_from_label(const std::string& label) {
  MethodSpec m;
  m.label = label;
  if (label == "f-test") {
    m.kind = MethodSpec::Kind::kFTest;
    return m;
  }
  if (label == "breusch-pagan") {
    m.kind = MethodSpec::Kind::kBreuschPagan;
    return m;
  }
  if (label == "dispersion") {
    m.kind = MethodSpec::Kind::kDispersion;
    return m;
  }
  const auto dash = label.find('-');
  if (dash == std::string::npos)
    throw std::invalid_argument("unknown method label: " + label);
  const std::string fit = label.substr(0, dash);
  const std::string ev = label.substr(dash + 1);
  m.kind = MethodSpec::Kind::kPalmrt;
  if (fit == "ols") m.fitter.kind = FitterKind::kOls;
  else if (fit == "huber") m.fitter.kind = FitterKind::kHuberMadPrelim;
  else throw std::invalid_argument("unknown fitter in method label: " + label);
  if (ev == "l1") m.eval.kind = EvaluatorKind::kL1;
  else if (ev == "l2") m.eval.kind = EvaluatorKind::kL2;
  else if (ev == "huber") m.eval.kind = EvaluatorKind::kHuberScaled;
  else throw std::invalid_argument("unknown evaluator in method label: " + label);
  return m;
}

namespace {

std::vector<TrialRecord> run_setting_trials(const SimSetting& setting,
                                            const std::vector<MethodSpec>& methods,
                                            int workers) {
  std::vector<std::pair<FitterSpec, EvaluatorSpec>> palmrt_methods;
  std::vector<size_t> palmrt_slot;
  for (size_t m = 0; m < methods.size(); ++m)
    if (methods[m].kind == MethodSpec::Kind::kPalmrt) {
      palmrt_methods.emplace_back(methods[m].fitter, methods[m].eval);
      palmrt_slot.push_back(m);
    }

  std::vector<TrialRecord> records(setting.trials);
  parallel_for(setting.trials, workers, [&](std::int64_t t) {
    const auto trial = static_cast<int>(t);
    const Dataset data = generate(setting, trial);
    TrialRecord rec;
    rec.setting_id = setting.id;
    rec.trial = trial;
    rec.seed = setting.trial_seed(trial);
    rec.p_values.assign(methods.size(), 0.0);

    if (!palmrt_methods.empty()) {
      const auto reports =
          palmrt_test_multi(data, palmrt_methods, setting.B, rec.seed);
      for (size_t k = 0; k < palmrt_slot.size(); ++k)
        rec.p_values[palmrt_slot[k]] = reports[k].p_value;
    }
    for (size_t m = 0; m < methods.size(); ++m) {
      switch (methods[m].kind) {
        case MethodSpec::Kind::kPalmrt:
          break;  // handled above
        case MethodSpec::Kind::kDispersion:
          rec.p_values[m] = dispersion_test(data, methods[m].q_low,
                                            methods[m].q_high, setting.B,
                                            rec.seed)
                                .p_value;
          break;
        case MethodSpec::Kind::kFTest:
          rec.p_values[m] = baselines::partial_f_test(data).p_value;
          break;
        case MethodSpec::Kind::kBreuschPagan:
          rec.p_values[m] = baselines::breusch_pagan_koenker(data).p_value;
          break;
      }
    }
    records[t] = std::move(rec);
  });
  return records;
}

}  // namespace

StudyResult run_power_study(const std::vector<SimSetting>& settings,
                            const std::vector<MethodSpec>& methods,
                            double alpha, int workers, int calibration_reps,
                            std::uint64_t calibration_seed0) {
  StudyResult result;
  for (const auto& m : methods) result.method_labels.push_back(m.label);

  for (const SimSetting& raw : settings) {
    SimSetting setting = raw;
    if (setting.target_power.has_value()) {
      SimSetting cal = raw;
      cal.seed0 = calibration_seed0;
      cal.seed_step = 1;
      setting.beta = calibrate_beta(cal, calibration_reps);
      setting.target_power.reset();
    }

    result.resolved_settings.push_back(setting);
    auto records = run_setting_trials(setting, methods, workers);

    int f_index = -1;
    for (size_t m = 0; m < methods.size(); ++m)
      if (methods[m].kind == MethodSpec::Kind::kFTest) f_index = static_cast<int>(m);

    std::vector<double> rates(methods.size(), 0.0);
    for (const auto& rec : records)
      for (size_t m = 0; m < methods.size(); ++m)
        if (rec.p_values[m] <= alpha) rates[m] += 1.0;
    for (auto& r : rates) r /= static_cast<double>(setting.trials);

    for (size_t m = 0; m < methods.size(); ++m) {
      PowerRow row;
      row.setting_id = setting.id;
      row.method = methods[m].label;
      row.rejection_rate = rates[m];
      row.mc_stderr =
          std::sqrt(rates[m] * (1.0 - rates[m]) / setting.trials);
      row.trials = setting.trials;
      if (f_index >= 0 && rates[f_index] > 0.0)
        row.rel_power_vs_f = rates[m] / rates[f_index];
      result.rows.push_back(std::move(row));
    }
    for (auto& rec : records) result.records.push_back(std::move(rec));
  }
  return result;
}

std::vector<CdfRow> run_null_cdf_study(const std::vector<SimSetting>& settings,
                                       const std::vector<MethodSpec>& methods,
                                       const std::vector<double>& alphas,
                                       int workers) {
  std::vector<CdfRow> rows;
  for (const SimSetting& setting : settings) {
    const auto records = run_setting_trials(setting, methods, workers);
    for (size_t m = 0; m < methods.size(); ++m) {
      for (double a : alphas) {
        CdfRow row;
        row.setting_id = setting.id;
        row.method = methods[m].label;
        row.alpha = a;
        int count = 0;
        for (const auto& rec : records)
          if (rec.p_values[m] <= a) ++count;
        row.fraction_at_or_below =
            static_cast<double>(count) / static_cast<double>(setting.trials);
        row.trials = setting.trials;
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

void write_trials_csv(std::ostream& os, const StudyResult& result) {
  io::write_csv_row(os, {"setting", "method", "trial", "seed", "p_value"});
  for (const auto& rec : result.records)
    for (size_t m = 0; m < result.method_labels.size(); ++m)
      io::write_csv_row(os, {rec.setting_id, result.method_labels[m],
                             io::format_number(rec.trial),
                             std::to_string(rec.seed),
                             io::format_number(rec.p_values[m])});
}

void write_power_csv(std::ostream& os, const StudyResult& result,
                     double alpha) {
  io::write_csv_row(os, {"setting", "method", "trials", "alpha",
                         "rejection_rate", "mc_stderr", "rel_power_vs_f"});
  for (const auto& row : result.rows)
    io::write_csv_row(os, {row.setting_id, row.method,
                           io::format_number(row.trials),
                           io::format_number(alpha),
                           io::format_number(row.rejection_rate),
                           io::format_number(row.mc_stderr),
                           io::format_number(row.rel_power_vs_f)});
}

std::string manifest_json(const std::vector<SimSetting>& settings,
                          const std::vector<MethodSpec>& methods, double alpha,
                          int workers) {
  ordered_json root;
  root["alpha"] = alpha;
  root["workers"] = workers;
  root["methods"] = ordered_json::array();
  for (const auto& m : methods) root["methods"].push_back(m.label);
  root["settings"] = ordered_json::array();
  for (const auto& s : settings) {
    ordered_json j;
    j["id"] = s.id;
    j["design"] = to_string(s.design);
    j["error"] = to_string(s.error);
    j["n"] = s.n;
    j["effective_n"] = s.effective_n();
    j["p"] = s.p;
    j["d"] = s.d;
    if (s.beta.has_value()) j["beta"] = *s.beta;
    if (s.target_power.has_value()) j["target_power"] = *s.target_power;
    j["trials"] = s.trials;
    j["B"] = s.B;
    j["seed0"] = s.seed0;
    j["seed_step"] = s.seed_step;
    j["dispersion"] = s.dispersion;
    root["settings"].push_back(std::move(j));
  }
  return root.dump(2) + "\n";
}

}  // namespace palmrt::sim
