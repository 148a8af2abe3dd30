#include "palmrt/simulation.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace palmrt;

namespace {

sim::SimSetting base_setting() {
  sim::SimSetting s;
  s.id = "cell";
  s.design = sim::DesignKind::kNormal;
  s.error = sim::ErrorKind::kNormal;
  s.n = 100;
  s.p = 6;
  s.beta = 0.0;
  s.trials = 4;
  s.B = 9;
  s.seed0 = 100;
  s.seed_step = 10;
  return s;
}

}  // namespace

TEST_CASE("generate: normal design has an intercept and drawn columns") {
  const auto setting = base_setting();
  const Dataset data = sim::generate(setting, 0);
  REQUIRE(data.n() == 100);
  REQUIRE(data.d() == 1);
  REQUIRE(data.p() == 6);
  CHECK((data.z.col(0).array() == 1.0).all());
  for (int j = 1; j < 6; ++j)
    CHECK(data.z.col(j).maxCoeff() > data.z.col(j).minCoeff());
  CHECK(data.x.col(0).maxCoeff() > data.x.col(0).minCoeff());
  // null data: y equals the error draw
  CHECK(data.y.allFinite());
}

TEST_CASE("generate is a pure function of (setting, trial)") {
  const auto setting = base_setting();
  const Dataset a = sim::generate(setting, 3);
  const Dataset b = sim::generate(setting, 3);
  CHECK((a.y - b.y).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.x - b.x).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.z - b.z).cwiseAbs().maxCoeff() == 0.0);
  const Dataset c = sim::generate(setting, 4);
  CHECK((a.y - c.y).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("multinomial-outlier errors place exactly one huge entry") {
  auto setting = base_setting();
  setting.error = sim::ErrorKind::kMultinomialOutlier;
  for (int trial = 0; trial < 20; ++trial) {
    const Dataset data = sim::generate(setting, trial);
    int big = 0;
    for (Index i = 0; i < data.n(); ++i)
      if (std::fabs(data.y[i]) > 100.0) ++big;
    CHECK(big == 1);
    // and the big entry is within a few sigma of +-10^4
    const double mx = data.y.cwiseAbs().maxCoeff();
    CHECK(mx > 1e4 - 5.0);
    CHECK(mx < 1e4 + 5.0);
  }
}

TEST_CASE("balanced-anova design rounds n down to full blocks") {
  auto setting = base_setting();
  setting.design = sim::DesignKind::kBalancedAnova;
  setting.n = 100;
  setting.p = 6;  // 7 groups with d = 1
  CHECK(setting.effective_n() == 98);
  const Dataset data = sim::generate(setting, 0);
  REQUIRE(data.n() == 98);
  // every row: intercept plus at most one treatment indicator
  for (Index i = 0; i < data.n(); ++i) {
    double row_sum = data.x(i, 0);
    for (int j = 1; j < 6; ++j) row_sum += data.z(i, j);
    CHECK(data.z(i, 0) == 1.0);
    CHECK((row_sum == 0.0 || row_sum == 1.0));
  }
  // balanced: each treatment column sums to the block size
  CHECK(data.x.col(0).sum() == doctest::Approx(14.0));
  for (int j = 1; j < 6; ++j)
    CHECK(data.z.col(j).sum() == doctest::Approx(14.0));
}

TEST_CASE("dispersion mode: model with scaled noise in the case group") {
  auto setting = base_setting();
  setting.dispersion = true;
  setting.design = sim::DesignKind::kCauchy;
  setting.error = sim::ErrorKind::kNormal;
  setting.beta = 1.0;
  setting.n = 50;
  const Dataset data = sim::generate(setting, 1);
  // balanced indicator
  CHECK(data.x.col(0).sum() == doctest::Approx(25.0));
  for (Index i = 0; i < 50; ++i)
    CHECK((data.x(i, 0) == 0.0 || data.x(i, 0) == 1.0));
}

TEST_CASE("setting validation") {
  auto s = base_setting();
  s.beta.reset();
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);  // neither beta nor target
  s.beta = 0.0;
  s.target_power = 0.5;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);  // both set
  s.target_power.reset();
  s.trials = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("calibrate_beta: target at the test level returns zero") {
  auto s = base_setting();
  s.beta.reset();
  s.target_power = 0.05;
  s.n = 60;
  s.p = 3;
  CHECK(sim::calibrate_beta(s, 1500) == 0.0);
}

TEST_CASE("calibrate_beta is monotone in the target") {
  auto s = base_setting();
  s.beta.reset();
  s.n = 80;
  s.p = 4;
  s.seed0 = 5000;
  s.target_power = 0.4;
  const double b40 = sim::calibrate_beta(s, 2000);
  s.target_power = 0.8;
  const double b80 = sim::calibrate_beta(s, 2000);
  CHECK(b40 > 0.0);
  CHECK(b80 > b40);
}

TEST_CASE("power study: blocked, seeded, and self-consistent") {
  auto s = base_setting();
  s.trials = 6;
  s.B = 19;
  s.n = 40;
  s.p = 3;
  const std::vector<sim::MethodSpec> methods = {
      sim::method_from_label("ols-l2"), sim::method_from_label("f-test")};
  const auto r1 = sim::run_power_study({s}, methods, 0.05, 2);
  const auto r2 = sim::run_power_study({s}, methods, 0.05, 1);

  REQUIRE(r1.records.size() == 6);
  REQUIRE(r1.rows.size() == 2);
  for (size_t i = 0; i < r1.records.size(); ++i) {
    CHECK(r1.records[i].p_values == r2.records[i].p_values);
    CHECK(r1.records[i].seed == s.seed0 + r1.records[i].trial * s.seed_step);
  }
  for (const auto& row : r1.rows) {
    const double expect_se =
        std::sqrt(row.rejection_rate * (1.0 - row.rejection_rate) / row.trials);
    CHECK(row.mc_stderr == doctest::Approx(expect_se));
  }
}

TEST_CASE("null cdf study self-test: uniform p-values track the diagonal") {
  // feed the study the F-test under a normal null, which is exactly uniform
  auto s = base_setting();
  s.trials = 400;
  s.B = 1;
  s.n = 30;
  s.p = 3;
  const std::vector<sim::MethodSpec> methods = {
      sim::method_from_label("f-test")};
  const auto rows =
      sim::run_null_cdf_study({s}, methods, {0.1, 0.25, 0.5, 0.9}, 2);
  REQUIRE(rows.size() == 4);
  for (const auto& row : rows) {
    const double slack = 3.5 * std::sqrt(row.alpha * (1 - row.alpha) / 400.0);
    CHECK(std::fabs(row.fraction_at_or_below - row.alpha) < slack);
  }
}

TEST_CASE("method labels parse into specs") {
  const auto hh = sim::method_from_label("huber-huber");
  CHECK(hh.fitter.kind == FitterKind::kHuberMadPrelim);
  CHECK(hh.eval.kind == EvaluatorKind::kHuberScaled);
  const auto ol1 = sim::method_from_label("ols-l1");
  CHECK(ol1.fitter.kind == FitterKind::kOls);
  CHECK(ol1.eval.kind == EvaluatorKind::kL1);
  CHECK(sim::method_from_label("dispersion").kind ==
        sim::MethodSpec::Kind::kDispersion);
  CHECK_THROWS_AS(sim::method_from_label("wat"), std::invalid_argument);
}

TEST_CASE("csv writers are deterministic and carry the seeds") {
  auto s = base_setting();
  s.trials = 3;
  s.B = 9;
  s.n = 30;
  s.p = 3;
  const std::vector<sim::MethodSpec> methods = {
      sim::method_from_label("ols-l2")};
  const auto result = sim::run_power_study({s}, methods, 0.05, 1);
  std::ostringstream t1, t2, p1;
  sim::write_trials_csv(t1, result);
  sim::write_trials_csv(t2, result);
  sim::write_power_csv(p1, result, 0.05);
  CHECK(t1.str() == t2.str());
  CHECK(t1.str().find("setting,method,trial,seed,p_value") == 0);
  CHECK(t1.str().find("100") != std::string::npos);  // seed0 appears
  CHECK(p1.str().find("rejection_rate") != std::string::npos);
  const auto manifest = sim::manifest_json({s}, methods, 0.05, 2);
  CHECK(manifest.find("\"seed0\": 100") != std::string::npos);
  CHECK(manifest.find("\"seed_step\": 10") != std::string::npos);
}
