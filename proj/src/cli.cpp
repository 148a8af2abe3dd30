#include "palmrt/cli.hpp"

#include "palmrt/baselines.hpp"
#include "palmrt/framework.hpp"
#include "palmrt/linalg.hpp"
#include "palmrt/random.hpp"
#include "palmrt/regressors.hpp"
#include "palmrt/simulation.hpp"
#include "palmrt/table_io.hpp"
#include "palmrt/theory_checks.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace palmrt::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

FitterSpec fitter_from_name(const std::string& name, double delta) {
  FitterSpec f;
  if (name == "ols") f.kind = FitterKind::kOls;
  else if (name == "huber") f.kind = FitterKind::kHuberMadPrelim;
  else throw std::invalid_argument("unknown fitter: " + name);
  f.huber.delta = delta;
  return f;
}

EvaluatorSpec evaluator_from_name(const std::string& name, double delta) {
  EvaluatorSpec e;
  if (name == "l1") e.kind = EvaluatorKind::kL1;
  else if (name == "l2") e.kind = EvaluatorKind::kL2;
  else if (name == "huber") e.kind = EvaluatorKind::kHuberScaled;
  else throw std::invalid_argument("unknown evaluator: " + name);
  e.delta = delta;
  return e;
}

void emit(const std::string& text, const std::string& out_path,
          std::ostream& fallback) {
  if (out_path.empty()) {
    fallback << text;
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw io::TableError("cannot open output file " + out_path);
  f << text;
}

ordered_json report_json(const TestReport& rep, const io::LoadedDataset& ds,
                         const std::string& input, const std::string& command) {
  ordered_json j;
  j["command"] = command;
  j["input"] = input;
  j["fitter"] = rep.fitter_label;
  j["evaluator"] = rep.evaluator_label;
  j["n"] = ds.data.n();
  j["d"] = ds.data.d();
  j["p"] = ds.data.p();
  j["intercept_added"] = ds.intercept_added;
  j["B"] = rep.B;
  j["seed"] = rep.seed;
  j["p_value"] = rep.p_value;
  j["alpha_note"] = rep.alpha_note;
  j["indicators"] = rep.indicators;
  return j;
}

std::string report_csv(const TestReport& rep, const io::LoadedDataset& ds,
                       const std::string& input, const std::string& command) {
  std::ostringstream os;
  io::write_csv_row(os, {"command", "input", "fitter", "evaluator", "n", "d",
                         "p", "B", "seed", "p_value", "alpha_note"});
  io::write_csv_row(
      os, {command, input, rep.fitter_label, rep.evaluator_label,
           io::format_number(static_cast<int>(ds.data.n())),
           io::format_number(static_cast<int>(ds.data.d())),
           io::format_number(static_cast<int>(ds.data.p())),
           io::format_number(rep.B), std::to_string(rep.seed),
           io::format_number(rep.p_value), rep.alpha_note});
  return os.str();
}

sim::SimSetting setting_from_json(const ordered_json& j) {
  sim::SimSetting s;
  s.id = j.at("id").get<std::string>();
  s.design = sim::design_from_string(j.at("design").get<std::string>());
  s.error = sim::error_from_string(j.at("error").get<std::string>());
  s.n = j.at("n").get<Index>();
  s.p = j.at("p").get<int>();
  if (j.contains("d")) s.d = j.at("d").get<int>();
  if (j.contains("beta")) s.beta = j.at("beta").get<double>();
  if (j.contains("target_power"))
    s.target_power = j.at("target_power").get<double>();
  s.trials = j.at("trials").get<int>();
  s.B = j.at("B").get<int>();
  s.seed0 = j.at("seed0").get<std::uint64_t>();
  if (j.contains("seed_step")) s.seed_step = j.at("seed_step").get<std::uint64_t>();
  if (j.contains("dispersion")) s.dispersion = j.at("dispersion").get<bool>();
  s.validate();
  return s;
}

int cmd_check(std::ostream& out);

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"finite-sample permutation tests for linear-model association "
               "and dispersion"};
  app.require_subcommand(1);

  // --- test / dispersion / ci shared state
  std::string input, out_path, format = "json";
  std::string fitter_name = "huber", evaluator_name = "huber";
  double delta = 1.345;
  int B = 999;
  std::uint64_t seed = 1;
  int workers = 0;
  double alpha = 0.05;
  double qlow = 0.10, qhigh = 0.90;
  double grid_min = 0.0, grid_max = 0.0;
  int grid_points = 0;
  bool half_weight_ties = false;

  auto add_io = [&](CLI::App* c) {
    c->add_option("--input", input, "delimited table with y, x*, z* columns")
        ->required();
    c->add_option("--out", out_path, "output file (default: stdout)");
    c->add_option("--format", format, "report format")
        ->check(CLI::IsMember({"json", "csv"}));
    c->add_option("--seed", seed, "seed for the permutation streams");
    c->add_option("--B", B, "number of permutations")->check(CLI::PositiveNumber);
    c->add_option("--workers", workers,
                  "worker threads (0 = hardware concurrency)");
  };

  CLI::App* c_test = app.add_subcommand(
      "test", "association test of the x columns adjusted for z");
  add_io(c_test);
  c_test->add_option("--fitter", fitter_name, "ols | huber")
      ->check(CLI::IsMember({"ols", "huber"}));
  c_test->add_option("--evaluator", evaluator_name, "l1 | l2 | huber")
      ->check(CLI::IsMember({"l1", "l2", "huber"}));
  c_test->add_option("--delta", delta, "huber threshold");
  c_test->add_flag("--half-weight-ties", half_weight_ties,
                   "score ties as 1/2 instead of the conservative 1");

  CLI::App* c_disp = app.add_subcommand(
      "dispersion", "two-group dispersion test (x must be a 0/1 column)");
  add_io(c_disp);
  c_disp->add_option("--qlow", qlow, "lower quantile");
  c_disp->add_option("--qhigh", qhigh, "upper quantile");

  CLI::App* c_ci = app.add_subcommand(
      "ci", "confidence interval for the effect of a single x column");
  add_io(c_ci);
  c_ci->add_option("--fitter", fitter_name, "ols | huber")
      ->check(CLI::IsMember({"ols", "huber"}));
  c_ci->add_option("--evaluator", evaluator_name, "l1 | l2 | huber")
      ->check(CLI::IsMember({"l1", "l2", "huber"}));
  c_ci->add_option("--delta", delta, "huber threshold");
  c_ci->add_option("--alpha", alpha, "test level for the inversion");
  c_ci->add_option("--grid-min", grid_min, "smallest beta on the grid")
      ->required();
  c_ci->add_option("--grid-max", grid_max, "largest beta on the grid")
      ->required();
  c_ci->add_option("--grid-points", grid_points, "number of grid points")
      ->required()
      ->check(CLI::PositiveNumber);

  // --- simulate
  std::string manifest_path, out_dir;
  CLI::App* c_sim = app.add_subcommand(
      "simulate", "run the settings of a manifest and write power tables");
  c_sim->add_option("--manifest", manifest_path, "JSON manifest of settings")
      ->required();
  c_sim->add_option("--out-dir", out_dir, "directory for csv/json outputs")
      ->required();
  c_sim->add_option("--workers", workers,
                    "worker threads (0 = hardware concurrency)");

  // --- calibrate
  std::string cal_design = "normal", cal_error = "normal";
  Index cal_n = 100;
  int cal_p = 6, cal_reps = 5000;
  double cal_target = 0.6;
  CLI::App* c_cal = app.add_subcommand(
      "calibrate", "find beta giving the F-test a target power");
  c_cal->add_option("--design", cal_design, "covariate law")
      ->check(CLI::IsMember({"normal", "t3", "cauchy", "balanced-anova"}));
  c_cal->add_option("--error", cal_error, "error law")
      ->check(CLI::IsMember(
          {"normal", "t3", "cauchy", "lognormal", "multinomial-outlier"}));
  c_cal->add_option("--n", cal_n, "sample size");
  c_cal->add_option("--p", cal_p, "control columns including the intercept");
  c_cal->add_option("--target", cal_target, "target F-test power")->required();
  c_cal->add_option("--reps", cal_reps, "calibration replicates");
  c_cal->add_option("--seed", seed, "seed0 of the replicate progression");
  c_cal->add_option("--out", out_path, "output file (default: stdout)");

  CLI::App* c_check = app.add_subcommand(
      "check", "run the library's validity property checks");
  (void)c_check;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (app.got_subcommand(c_test)) {
      const auto ds = io::load_dataset_table(input);
      const auto fitter = fitter_from_name(fitter_name, delta);
      const auto eval = evaluator_from_name(evaluator_name, delta);
      const auto rep = palmrt_test(
          ds.data, fitter, eval, B, seed, resolve_workers(workers),
          half_weight_ties ? TieRule::kHalfWeight : TieRule::kConservative);
      emit(format == "json" ? report_json(rep, ds, input, "test").dump(2) + "\n"
                            : report_csv(rep, ds, input, "test"),
           out_path, out);
      return 0;
    }

    if (app.got_subcommand(c_disp)) {
      const auto ds = io::load_dataset_table(input);
      QuantileConfig lo, hi;
      lo.q = qlow;
      hi.q = qhigh;
      const auto rep = dispersion_test(ds.data, lo, hi, B, seed,
                                       resolve_workers(workers));
      emit(format == "json"
               ? report_json(rep, ds, input, "dispersion").dump(2) + "\n"
               : report_csv(rep, ds, input, "dispersion"),
           out_path, out);
      return 0;
    }

    if (app.got_subcommand(c_ci)) {
      const auto ds = io::load_dataset_table(input);
      if (ds.data.d() != 1)
        throw io::TableError(input + ": ci needs exactly one x column, found " +
                             std::to_string(ds.data.d()));
      const auto fitter = fitter_from_name(fitter_name, delta);
      const auto eval = evaluator_from_name(evaluator_name, delta);
      if (grid_points < 2 || !(grid_max > grid_min))
        throw std::invalid_argument("ci: need grid-max > grid-min and >= 2 points");
      std::vector<double> grid(grid_points);
      for (int g = 0; g < grid_points; ++g)
        grid[g] = grid_min + (grid_max - grid_min) * g / (grid_points - 1);
      const auto ci = invert_ci(ds.data, fitter, eval, B, seed, alpha, grid,
                                resolve_workers(workers));
      if (format == "json") {
        ordered_json j;
        j["command"] = "ci";
        j["input"] = input;
        j["fitter"] = fitter.label();
        j["evaluator"] = eval.label();
        j["B"] = B;
        j["seed"] = seed;
        j["alpha"] = ci.alpha;
        j["beta_lo"] = ci.beta_lo;
        j["beta_hi"] = ci.beta_hi;
        j["empty"] = ci.empty;
        j["contiguous"] = ci.contiguous;
        j["grid"] = ci.grid;
        j["p_values"] = ci.p_values;
        emit(j.dump(2) + "\n", out_path, out);
      } else {
        std::ostringstream os;
        io::write_csv_row(os, {"beta", "p_value", "accepted"});
        for (size_t g = 0; g < ci.grid.size(); ++g)
          io::write_csv_row(os, {io::format_number(ci.grid[g]),
                                 io::format_number(ci.p_values[g]),
                                 ci.p_values[g] > ci.alpha ? "1" : "0"});
        emit(os.str(), out_path, out);
      }
      return 0;
    }

    if (app.got_subcommand(c_sim)) {
      std::ifstream mf(manifest_path);
      if (!mf) throw io::TableError(manifest_path + ": cannot open manifest");
      ordered_json root;
      try {
        root = ordered_json::parse(mf);
      } catch (const nlohmann::json::exception& e) {
        throw io::TableError(manifest_path + ": " + e.what());
      }
      try {
        const double m_alpha = root.value("alpha", 0.05);
        std::vector<sim::MethodSpec> methods;
        for (const auto& name : root.at("methods"))
          methods.push_back(sim::method_from_label(name.get<std::string>()));
        std::vector<sim::SimSetting> settings;
        for (const auto& js : root.at("settings"))
          settings.push_back(setting_from_json(js));
        const int creps = root.value("calibration_reps", 5000);
        const std::uint64_t cseed =
            root.value("calibration_seed0", std::uint64_t{777001});

        const auto result =
            sim::run_power_study(settings, methods, m_alpha,
                                 resolve_workers(workers), creps, cseed);

        std::filesystem::create_directories(out_dir);
        std::ofstream trials(out_dir + "/trials.csv", std::ios::binary);
        sim::write_trials_csv(trials, result);
        std::ofstream power(out_dir + "/power.csv", std::ios::binary);
        sim::write_power_csv(power, result, m_alpha);
        std::ofstream manifest(out_dir + "/manifest.json", std::ios::binary);
        manifest << sim::manifest_json(result.resolved_settings, methods,
                                       m_alpha, resolve_workers(workers));
        out << "wrote " << out_dir << "/trials.csv, power.csv, manifest.json\n";
        return 0;
      } catch (const nlohmann::json::exception& e) {
        throw io::TableError(manifest_path + ": " + e.what());
      }
    }

    if (app.got_subcommand(c_cal)) {
      sim::SimSetting s;
      s.id = "calibration";
      s.design = sim::design_from_string(cal_design);
      s.error = sim::error_from_string(cal_error);
      s.n = cal_n;
      s.p = cal_p;
      s.target_power = cal_target;
      s.trials = 1;
      s.B = 1;
      s.seed0 = seed;
      const double beta = sim::calibrate_beta(s, cal_reps);
      ordered_json j;
      j["command"] = "calibrate";
      j["design"] = cal_design;
      j["error"] = cal_error;
      j["n"] = cal_n;
      j["p"] = cal_p;
      j["target_power"] = cal_target;
      j["reps"] = cal_reps;
      j["seed0"] = seed;
      j["beta"] = beta;
      emit(j.dump(2) + "\n", out_path, out);
      return 0;
    }

    if (app.got_subcommand(c_check)) return cmd_check(out);
  } catch (const io::TableError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 2;
}

namespace {

int cmd_check(std::ostream& out) {
  int failures = 0;
  auto report = [&](const char* name, bool ok) {
    out << (ok ? "PASS" : "FAIL") << "  " << name << "\n";
    if (!ok) ++failures;
  };

  {  // tournament lemma sweep
    rng::PhiloxStream stream(20240601, 0);
    bool ok = true;
    for (int rep = 0; rep < 10000 && ok; ++rep) {
      const Index m = 2 + static_cast<Index>(stream.next_below(7));
      const auto t = theory::random_tournament(stream, m);
      Vector w(m);
      for (Index i = 0; i < m; ++i) w[i] = stream.next_unit_open();
      w /= w.sum();
      const double a = 0.5 * stream.next_unit();
      ok = theory::weighted_small_column_mass(t, w, a) <= 2.0 * a;
    }
    report("tournament weighted-column lemma (10000 random instances)", ok);
  }

  {  // conditions 1 and 2 spot checks per fitter
    rng::PhiloxStream stream(20240602, 0);
    auto rand_mat = [&](Index r, Index c) {
      Matrix m(r, c);
      for (Index j = 0; j < c; ++j)
        for (Index i = 0; i < r; ++i) m(i, j) = rng::draw_normal(stream);
      return m;
    };
    const Index n = 24, p = 4;
    bool shift_ok = true, symm_ok = true;
    for (int rep = 0; rep < 20; ++rep) {
      Matrix C(n, p);
      C.col(0).setOnes();
      C.rightCols(p - 1) = rand_mat(n, p - 1);
      Vector y(n);
      for (Index i = 0; i < n; ++i) y[i] = rng::draw_normal(stream);
      Vector gamma(p);
      for (Index i = 0; i < p; ++i) gamma[i] = rng::draw_normal(stream);
      const Vector y_shift = y + C * gamma;
      const auto perm = rng::random_permutation(stream, n);

      const auto base = regressors::huber_fit_mad(y, C);
      const auto shifted = regressors::huber_fit_mad(y_shift, C);
      shift_ok = shift_ok &&
                 (base.sorted_residuals - shifted.sorted_residuals)
                         .cwiseAbs()
                         .maxCoeff() < 1e-6 * (1.0 + y.cwiseAbs().maxCoeff());
      const auto permuted =
          regressors::huber_fit_mad(perm.apply(y), perm.apply_rows(C));
      symm_ok = symm_ok &&
                (base.sorted_residuals - permuted.sorted_residuals)
                        .cwiseAbs()
                        .maxCoeff() < 1e-8 * (1.0 + y.cwiseAbs().maxCoeff());
    }
    report("shift invariance of the robust fitter (20 random instances)",
           shift_ok);
    report("case symmetry of the robust fitter (20 random instances)", symm_ok);
  }

  {  // comparison-array symmetry for the least-squares score
    rng::PhiloxStream stream(20240603, 0);
    const Index n = 18;
    Dataset data;
    data.y.resize(n);
    data.x.resize(n, 1);
    data.z.resize(n, 3);
    data.z.col(0).setOnes();
    for (Index i = 0; i < n; ++i) {
      data.y[i] = rng::draw_normal(stream);
      data.x(i, 0) = rng::draw_normal(stream);
      data.z(i, 1) = rng::draw_normal(stream);
      data.z(i, 2) = rng::draw_normal(stream);
    }
    const auto sigma = rng::random_permutation(stream, n);
    std::vector<std::pair<Permutation, Permutation>> pairs;
    for (int k = 0; k < 8; ++k)
      pairs.emplace_back(rng::random_permutation(stream, n),
                         rng::random_permutation(stream, n));
    FitterSpec f;
    f.kind = FitterKind::kOls;
    EvaluatorSpec e;
    e.kind = EvaluatorKind::kL2;
    report("comparison-array group symmetry (least squares, 8 pairs)",
           theory::comparison_array_symmetry_check(data, f, e, sigma, pairs));
  }

  out << (failures == 0 ? "all checks passed\n"
                        : "some checks failed\n");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int run(int argc, const char* const* argv) {
  return run(argc, argv, std::cout, std::cerr);
}

}  // namespace palmrt::cli
