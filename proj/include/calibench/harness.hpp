#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "calibench/calibrators.hpp"
#include "calibench/datasets.hpp"
#include "calibench/metrics.hpp"
#include "calibench/models.hpp"
#include "calibench/stats.hpp"

namespace calibench {

// ---------------------------------------------------------------------------
// Repeated cross-validation benchmark

struct CsvSource {
  std::string path;
  std::string label_column = "y";
};

/// Pre-computed scores for one (repeat, fold): the calibration file fits the
/// maps, the test file is evaluated. Both use the score-file CSV format.
struct ExternalScoreFold {
  Index repeat = 0;
  Index fold = 0;
  std::string calibration_path;
  std::string test_path;
};

struct ExternalScoresSource {
  std::vector<ExternalScoreFold> folds;
  std::string model_name = "external";
};

using DataSource = std::variant<SyntheticConfig, CsvSource, ExternalScoresSource>;

enum class FeatureMode { Informative, Full, Explicit };

struct FeatureSelection {
  FeatureMode mode = FeatureMode::Full;
  IndexList indices;  // used when mode == Explicit
};

struct ExperimentConfig {
  DataSource source = SyntheticConfig(1000, 10, 42);
  FeatureSelection features;
  std::vector<ModelSpec> models{LogisticSpec{}};
  std::vector<CalibrationMethod> methods{CalibrationMethod::Uncalibrated, CalibrationMethod::Platt,
                                         CalibrationMethod::Isotonic};
  Index folds = 5;
  Index repeats = 10;
  Index bins = 10;
  Index hl_groups = 10;
  std::uint64_t base_seed = 42;
  double family_alpha = 0.05;
  /// Share of each training fold held out for fitting the calibration maps.
  double calibration_fraction = 0.25;
  bool platt_target_smoothing = true;
  std::vector<std::string> compare_metrics{"ece"};
  /// Worker threads; 0 picks the hardware concurrency. Results do not depend on it.
  unsigned threads = 0;

  void validate() const;
};

struct RunRecord {
  Index repeat = 0;
  Index fold = 0;
  std::string model_name;
  std::string method_name;
  MetricReport metrics;
};

struct Aggregate {
  std::string model_name;
  std::string method_name;
  std::string metric;
  std::size_t n = 0;  // finite values used
  double mean = 0.0;
  double sd = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
};

struct ResultTable {
  ExperimentConfig config;
  std::vector<RunRecord> records;
  std::vector<Aggregate> aggregates;
  std::vector<PairedComparison> comparisons;
  double bonferroni_threshold = 0.0;
};

ResultTable run_repeated_cv(const ExperimentConfig& config);

/// Mean, sd and 95% t-interval per (model, method, metric), recomputed from records.
std::vector<Aggregate> aggregate_records(const std::vector<RunRecord>& records);

/// Paired test of method a against method b for one model and metric; values are
/// paired by (repeat, fold). a == b is allowed.
PairedComparison compare_pair(const ResultTable& table, const std::string& model, const std::string& metric,
                              const std::string& method_a, const std::string& method_b);

/// All distinct method pairs for every model and every requested metric. The
/// Bonferroni family is the whole emitted list.
std::vector<PairedComparison> compare_methods(const ResultTable& table, const std::vector<std::string>& metrics,
                                              double family_alpha = 0.05);

// ---------------------------------------------------------------------------
// Single-split calibration pipeline with automatic method selection

enum class SelectionBranch { SmallCalibrationSet, NonNormalScores, CrossValidation };

std::string_view branch_name(SelectionBranch branch);

struct SelectionTrace {
  SelectionBranch branch = SelectionBranch::SmallCalibrationSet;
  std::string description;
  std::size_t calibration_size = 0;
  std::optional<double> shapiro_p;
  std::optional<double> cv_ece_platt;
  std::optional<double> cv_ece_isotonic;
};

struct PipelineOptions {
  CalibrationOptions calibration;
  std::size_t bins = 10;
  std::size_t hl_groups = 10;
  std::size_t small_calibration_threshold = 500;
  double normality_alpha = 0.05;
  Index cv_folds = 5;
  std::size_t bootstrap_resamples = 1000;
  double ci_level = 0.95;
};

struct PipelineArtifact {
  std::string model_name;
  Model model;
  CalibrationMethod method = CalibrationMethod::Platt;
  CalibrationMap map;
  MetricReport test_report;
  BinStats reliability;
  SelectionTrace trace;
  IndexList train_indices;
  IndexList calibration_indices;
  IndexList test_indices;
  /// Percentile bootstrap intervals over test rows.
  IntervalEstimate ece_interval;
  IntervalEstimate brier_interval;
};

/// 60/20/20 stratified partition, base model on the training part, then:
/// calibration set below the size threshold -> Platt; else Shapiro-Wilk
/// rejects normality of the calibration scores -> isotonic; else 5-fold CV on
/// the calibration set picks the lower mean ECE. The chosen map is fit on the
/// whole calibration set and evaluated on the test part.
PipelineArtifact run_enhanced_calibration(const Dataset& data, const ModelSpec& model_spec, std::uint64_t seed,
                                          const PipelineOptions& options = {});

/// The selection step alone, on calibration scores.
SelectionTrace select_calibration_method(const ScoreSet& calibration_scores, std::uint64_t seed,
                                         const PipelineOptions& options = {});

CalibrationMethod selected_method(const SelectionTrace& trace);

// ---------------------------------------------------------------------------
// Finite-sample convergence of isotonic calibration

/// Monotone ground-truth calibration curve g*: "identity", "constant:c",
/// "power:k" (s^k) or "logistic:k" (sigmoid(k (s - 1/2))).
class GroundTruth {
 public:
  static GroundTruth parse(const std::string& spec);

  double operator()(double s) const;
  const std::string& spec() const { return spec_; }

 private:
  enum class Kind { Identity, Constant, Power, Logistic };
  GroundTruth(Kind kind, double parameter, std::string spec) : kind_(kind), parameter_(parameter), spec_(std::move(spec)) {}

  Kind kind_;
  double parameter_;
  std::string spec_;
};

struct ConvergenceConfig {
  std::string ground_truth = "identity";
  std::vector<std::size_t> sample_sizes{100, 1000, 10000, 100000};
  std::size_t trials = 20;
  std::uint64_t seed = 0;
  std::size_t eval_size = 10000;
};

struct ConvergenceResult {
  std::string ground_truth;
  std::vector<std::size_t> sample_sizes;
  std::vector<double> mean_errors;
  std::vector<double> standard_errors;
  std::size_t trials = 0;
  double slope = 0.0;  // least squares of log(error) on log(n)
  double intercept = 0.0;
};

/// For each n and trial: s ~ U[0,1], y ~ Bernoulli(g*(s)), fit isotonic, and
/// measure mean |g_hat - g*| on a fresh uniform sample of eval_size points.
ConvergenceResult run_convergence_study(const ConvergenceConfig& config);

}  // namespace calibench
