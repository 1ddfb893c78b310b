#pragma once

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "calibench/score_set.hpp"

namespace calibench {

struct PlattOptions {
  double ridge = 1e-6;  // adds ridge * (A^2 + B^2) / 2 to the negative log-likelihood
  double tol = 1e-8;
  int max_iter = 100;
  /// Replace 0/1 targets by 1/(N- + 2) and (N+ + 1)/(N+ + 2).
  bool target_smoothing = false;
};

struct PlattMap {
  double A = 1.0;
  double B = 0.0;
  int iterations_used = 0;
  double final_gradient_norm = 0.0;
  bool degenerate_labels = false;  // single-class fit kept finite only by the ridge
  std::vector<double> loss_trace;
};

/// Maximum-likelihood fit of sigmoid(A s + B) by Newton-Raphson with step halving.
PlattMap fit_platt(const ScoreSet& data, const PlattOptions& options = {});

double platt_loss(const ScoreSet& data, double A, double B, const PlattOptions& options = {});

struct IsotonicOptions {
  bool interpolate = false;  // linear interpolation between knots instead of steps
};

struct IsotonicMap {
  std::vector<double> knots;   // distinct training scores, strictly increasing
  std::vector<double> values;  // non-decreasing fitted values, one per knot
  bool interpolate = false;
};

/// Pool-adjacent-violators on weighted, already-ordered observations.
/// Returns one fitted value per input position. Linear in the input size.
std::vector<double> pav_sorted(std::span<const double> y, std::span<const double> weights);

/// Same as pav_sorted, but takes per-position weighted sums (w * y) instead
/// of values. With integer sums and weights every fitted value is exactly
/// its block's sum divided by its block's weight.
std::vector<double> pav_sums(std::span<const double> sums, std::span<const double> weights);

/// Least-squares non-decreasing fit of labels on scores. Tied scores are
/// pooled to their label mean before PAV.
IsotonicMap fit_isotonic(const ScoreSet& data, const IsotonicOptions& options = {});

struct IdentityMap {};

enum class CalibrationMethod { Uncalibrated, Platt, Isotonic };

std::string_view method_name(CalibrationMethod method);
CalibrationMethod parse_method(std::string_view name);

using CalibrationMap = std::variant<IdentityMap, PlattMap, IsotonicMap>;

double apply_map(const PlattMap& map, double score);
/// Right-continuous step lookup, clamped to the end values outside the knot range.
double apply_map(const IsotonicMap& map, double score);
double apply_map(const IdentityMap& map, double score);
double apply_map(const CalibrationMap& map, double score);

std::vector<double> apply_map(const CalibrationMap& map, std::span<const double> scores);

CalibrationMethod map_method(const CalibrationMap& map);

struct CalibrationOptions {
  PlattOptions platt;
  IsotonicOptions isotonic;
};

CalibrationMap fit_calibrated_pipeline(const ScoreSet& base_scores, CalibrationMethod method,
                                       const CalibrationOptions& options = {});

}  // namespace calibench
