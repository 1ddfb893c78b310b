#include <doctest.h>

#include <algorithm>
#include <set>

#include "calibench/harness.hpp"
#include "calibench/rng.hpp"
#include "calibench/serialization.hpp"
#include "support/helpers.hpp"
#include "support/oracles.hpp"

using namespace calibench;
using testing::code_of;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.source = SyntheticConfig(300, 4, 9);
  c.features.mode = FeatureMode::Informative;
  c.folds = 3;
  c.repeats = 2;
  c.threads = 2;
  return c;
}

}  // namespace

TEST_CASE("repeated cross-validation") {
  const auto config = small_config();
  const auto table = run_repeated_cv(config);
  CHECK(table.records.size() == 3 * 2 * 3);
  CHECK(table.records.front().method_name == "uncalibrated");
  CHECK(table.records.front().model_name == "logreg");

  SUBCASE("deterministic across thread counts") {
    auto serial = config;
    serial.threads = 1;
    CHECK(to_json(run_repeated_cv(serial)).dump() == to_json(table).dump());
  }
  SUBCASE("aggregates recomputable from records") {
    for (const auto& agg : table.aggregates) {
      std::vector<double> values;
      for (const auto& r : table.records)
        if (r.model_name == agg.model_name && r.method_name == agg.method_name) {
          const double v = metric_value(r.metrics, agg.metric);
          if (std::isfinite(v)) values.push_back(v);
        }
      REQUIRE(values.size() == agg.n);
      if (values.size() < 2) continue;
      const auto s = summarize(values);
      CHECK(std::abs(s.mean - agg.mean) <= 1e-12);
      CHECK(std::abs(s.sd - agg.sd) <= 1e-12);
      const auto ci = mean_ci(values);
      CHECK(std::abs(ci.lower - agg.ci_lower) <= 1e-12);
      CHECK(std::abs(ci.upper - agg.ci_upper) <= 1e-12);
    }
  }
  SUBCASE("uncalibrated records use raw scores") {
    // identity map: uncalibrated and identity-applied scores agree, so AUC equals the platt AUC
    for (std::size_t k = 0; k + 2 < table.records.size(); k += 3) {
      CHECK(table.records[k].method_name == "uncalibrated");
      CHECK(table.records[k + 1].method_name == "platt");
      CHECK(table.records[k].metrics.auc == doctest::Approx(table.records[k + 1].metrics.auc).epsilon(1e-12));
    }
  }
  SUBCASE("comparisons") {
    const auto cmp = compare_methods(table, {"ece", "brier"}, 0.05);
    CHECK(cmp.size() == 6);
    for (const auto& c : cmp) CHECK(c.corrected_alpha == doctest::Approx(0.05 / 6));
    const auto self = compare_pair(table, "logreg", "ece", "platt", "platt");
    CHECK(self.t_statistic == 0.0);
    CHECK_FALSE(self.significant_at_corrected_alpha);
    CHECK(code_of([&] { compare_pair(table, "logreg", "ece", "platt", "beta"); }) == ErrorCode::IncompleteRecords);
  }
  SUBCASE("config validation") {
    auto bad = config;
    bad.folds = 1;
    CHECK(code_of([&] { bad.validate(); }) == ErrorCode::InvalidArgument);
    bad = config;
    bad.methods.clear();
    CHECK(code_of([&] { bad.validate(); }) == ErrorCode::InvalidArgument);
  }
}

TEST_CASE("default protocol yields 150 records") {
  ExperimentConfig c;
  c.features.mode = FeatureMode::Informative;
  const auto table = run_repeated_cv(c);
  CHECK(table.records.size() == 150);
  const auto cmp = compare_pair(table, "logreg", "ece", "uncalibrated", "isotonic");
  CHECK(cmp.mean_diff > 0.0);
  CHECK(cmp.p_value < 0.001);
  CHECK(cmp.cohens_d > 2.0);
}

TEST_CASE("single-split pipeline with method selection") {
  const auto data = generate_synthetic(SyntheticConfig(1000, 10, 42));
  const auto artifact = run_enhanced_calibration(data, LogisticSpec{}, 42);
  CHECK(artifact.trace.branch == SelectionBranch::SmallCalibrationSet);
  CHECK(artifact.trace.description == "platt: cal size 200 < 500");
  CHECK(artifact.method == CalibrationMethod::Platt);
  CHECK(artifact.train_indices.size() == 600);
  CHECK(artifact.calibration_indices.size() == 200);
  CHECK(artifact.test_indices.size() == 200);
  std::set<Index> all(artifact.train_indices.begin(), artifact.train_indices.end());
  all.insert(artifact.calibration_indices.begin(), artifact.calibration_indices.end());
  all.insert(artifact.test_indices.begin(), artifact.test_indices.end());
  CHECK(all.size() == 1000);
  CHECK(artifact.ece_interval.lower <= artifact.test_report.ece);
  CHECK(artifact.ece_interval.upper >= artifact.test_report.ece);

  SUBCASE("method selection branches on scores directly") {
    Rng rng(1);
    std::vector<double> bimodal;
    std::vector<int> labels;
    for (int i = 0; i < 1000; ++i) {
      const int y = i % 2;
      bimodal.push_back(std::clamp((y ? 0.85 : 0.15) + 0.05 * rng.normal(), 0.0, 1.0));
      labels.push_back(y);
    }
    const auto trace = select_calibration_method(ScoreSet(bimodal, labels), 3);
    CHECK(trace.branch == SelectionBranch::NonNormalScores);
    CHECK(selected_method(trace) == CalibrationMethod::Isotonic);
    REQUIRE(trace.shapiro_p.has_value());
    CHECK(*trace.shapiro_p < 0.05);

    std::vector<double> normal;
    labels.clear();
    for (int i = 0; i < 1000; ++i) {
      const double x = rng.normal();
      normal.push_back(oracle::sigmoid(0.25 * x));
      labels.push_back(rng.bernoulli(oracle::sigmoid(0.25 * x)) ? 1 : 0);
    }
    const auto cv = select_calibration_method(ScoreSet(normal, labels), 3);
    if (cv.branch == SelectionBranch::CrossValidation) {
      const auto expected = *cv.cv_ece_isotonic < *cv.cv_ece_platt ? CalibrationMethod::Isotonic : CalibrationMethod::Platt;
      CHECK(selected_method(cv) == expected);
    } else {
      CHECK(cv.branch == SelectionBranch::NonNormalScores);
    }
  }
  SUBCASE("too few samples") {
    Eigen::MatrixXd x(6, 2);
    x.setRandom();
    const Dataset tiny(x, {1, 1, 0, 0, 0, 0}, {}, SeedProvenance{});
    CHECK(code_of([&] { run_enhanced_calibration(tiny, LogisticSpec{}, 0); }) == ErrorCode::TooFewSamples);
  }
}

TEST_CASE("convergence study") {
  SUBCASE("ground-truth parsing") {
    CHECK(GroundTruth::parse("identity")(0.3) == 0.3);
    CHECK(GroundTruth::parse("constant:0.5")(0.9) == 0.5);
    CHECK(GroundTruth::parse("power:2")(0.5) == doctest::Approx(0.25));
    CHECK(code_of([] { GroundTruth::parse("wiggly"); }) == ErrorCode::InvalidSpec);
    CHECK(code_of([] { GroundTruth::parse("constant:2"); }) == ErrorCode::InvalidSpec);
  }
  SUBCASE("constant ground truth decays at parametric rate") {
    ConvergenceConfig c;
    c.ground_truth = "constant:0.5";
    c.sample_sizes = {100, 1000, 10000, 30000};
    c.trials = 10;
    c.eval_size = 2000;
    const auto r = run_convergence_study(c);
    CHECK(r.slope <= -0.3);
    CHECK(r.mean_errors.size() == 4);
  }
  SUBCASE("doubling trials stays within two standard errors") {
    ConvergenceConfig c;
    c.sample_sizes = {100, 300, 1000, 10000};
    c.trials = 10;
    c.eval_size = 2000;
    const auto base = run_convergence_study(c);
    c.trials = 20;
    const auto doubled = run_convergence_study(c);
    for (std::size_t k = 0; k < base.mean_errors.size(); ++k) {
      const double se = std::hypot(base.standard_errors[k], doubled.standard_errors[k]);
      CHECK(std::abs(base.mean_errors[k] - doubled.mean_errors[k]) <= 2.0 * se);
    }
  }
  SUBCASE("validation") {
    ConvergenceConfig c;
    c.sample_sizes = {100, 1000, 10000};
    CHECK(code_of([&] { run_convergence_study(c); }) == ErrorCode::InvalidSpec);
    c.sample_sizes = {100, 200, 300, 400};
    CHECK(code_of([&] { run_convergence_study(c); }) == ErrorCode::InvalidSpec);
    c.sample_sizes = {100, 1000, 10000, 100000};
    c.trials = 5;
    CHECK(code_of([&] { run_convergence_study(c); }) == ErrorCode::InvalidSpec);
  }
}
