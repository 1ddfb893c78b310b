#include "calibench/calibrators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "calibench/error.hpp"

namespace calibench {

namespace {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct PlattTargets {
  double positive = 1.0;
  double negative = 0.0;
};

PlattTargets platt_targets(const ScoreSet& data, const PlattOptions& options) {
  if (!options.target_smoothing) return {};
  const auto pos = static_cast<double>(data.positive_count());
  const auto neg = static_cast<double>(data.size()) - pos;
  return {(pos + 1.0) / (pos + 2.0), 1.0 / (neg + 2.0)};
}

double platt_objective(const ScoreSet& data, const PlattTargets& t, double ridge, double a, double b) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double z = a * data.scores()[i] + b;
    const double target = data.labels()[i] == 1 ? t.positive : t.negative;
    total += softplus(z) - target * z;
  }
  return total + 0.5 * ridge * (a * a + b * b);
}

}  // namespace

double platt_loss(const ScoreSet& data, double A, double B, const PlattOptions& options) {
  return platt_objective(data, platt_targets(data, options), options.ridge, A, B);
}

PlattMap fit_platt(const ScoreSet& data, const PlattOptions& options) {
  if (data.empty()) throw Error(ErrorCode::TooFewSamples, "Platt fit on empty score set");
  if (options.ridge < 0.0) throw Error(ErrorCode::InvalidArgument, "ridge must be >= 0");
  PlattMap map;
  if (!data.has_both_classes()) {
    if (options.ridge == 0.0)
      throw Error(ErrorCode::DegenerateLabels, "single-class calibration data has no finite Platt optimum");
    map.degenerate_labels = true;
  }

  const PlattTargets t = platt_targets(data, options);
  const auto pos = static_cast<double>(data.positive_count());
  const auto neg = static_cast<double>(data.size()) - pos;
  double a = 0.0;
  double b = std::log((pos + 1.0) / (neg + 1.0));
  double f = platt_objective(data, t, options.ridge, a, b);
  map.loss_trace.push_back(f);

  auto gradient = [&](double& ga, double& gb, double& haa, double& hab, double& hbb) {
    ga = options.ridge * a;
    gb = options.ridge * b;
    haa = hbb = options.ridge;
    hab = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double s = data.scores()[i];
      const double p = sigmoid(a * s + b);
      const double r = p - (data.labels()[i] == 1 ? t.positive : t.negative);
      const double w = p * (1.0 - p);
      ga += r * s;
      gb += r;
      haa += w * s * s;
      hab += w * s;
      hbb += w;
    }
  };

  double ga = 0.0, gb = 0.0, haa = 0.0, hab = 0.0, hbb = 0.0;
  gradient(ga, gb, haa, hab, hbb);
  int iter = 0;
  while (std::max(std::abs(ga), std::abs(gb)) > options.tol && iter < options.max_iter) {
    ++iter;
    const double det = haa * hbb - hab * hab;
    double da = 0.0;
    double db = 0.0;
    if (det > std::numeric_limits<double>::epsilon() * haa * hbb && det > 0.0) {
      da = -(hbb * ga - hab * gb) / det;
      db = -(haa * gb - hab * ga) / det;
    }
    if (!(std::isfinite(da) && std::isfinite(db)) || da * ga + db * gb >= 0.0) {
      const double scale = std::max({1.0, std::abs(ga), std::abs(gb)});
      da = -ga / scale;
      db = -gb / scale;
    }
    bool accepted = false;
    double step = 1.0;
    for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
      const double na = a + step * da;
      const double nb = b + step * db;
      const double fn = platt_objective(data, t, options.ridge, na, nb);
      if (std::isfinite(fn) && fn <= f + 4.0 * std::numeric_limits<double>::epsilon() * std::abs(f)) {
        a = na;
        b = nb;
        f = fn;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    map.loss_trace.push_back(f);
    gradient(ga, gb, haa, hab, hbb);
  }

  map.A = a;
  map.B = b;
  map.iterations_used = iter;
  map.final_gradient_norm = std::max(std::abs(ga), std::abs(gb));
  if (map.final_gradient_norm > options.tol)
    throw Error(ErrorCode::NotConverged, "Platt gradient norm " + std::to_string(map.final_gradient_norm) + " after " +
                                             std::to_string(iter) + " iterations");
  return map;
}

std::vector<double> pav_sums(std::span<const double> sums, std::span<const double> weights) {
  if (sums.size() != weights.size()) throw Error(ErrorCode::LengthMismatch, "PAV sums and weights differ in length");
  const std::size_t n = sums.size();
  // block stack: weighted label sum, total weight, one-past-last position.
  // Block values are always sum / weight so they equal the block mean exactly.
  std::vector<double> sum(n);
  std::vector<double> weight(n);
  std::vector<std::size_t> end(n);
  std::size_t blocks = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sum[blocks] = sums[i];
    weight[blocks] = weights[i];
    end[blocks] = i + 1;
    ++blocks;
    while (blocks > 1 && sum[blocks - 2] / weight[blocks - 2] >= sum[blocks - 1] / weight[blocks - 1]) {
      sum[blocks - 2] += sum[blocks - 1];
      weight[blocks - 2] += weight[blocks - 1];
      end[blocks - 2] = end[blocks - 1];
      --blocks;
    }
  }
  std::vector<double> fitted(n);
  std::size_t start = 0;
  for (std::size_t b = 0; b < blocks; ++b) {
    std::fill(fitted.begin() + static_cast<std::ptrdiff_t>(start), fitted.begin() + static_cast<std::ptrdiff_t>(end[b]),
              sum[b] / weight[b]);
    start = end[b];
  }
  return fitted;
}

std::vector<double> pav_sorted(std::span<const double> y, std::span<const double> weights) {
  if (y.size() != weights.size()) throw Error(ErrorCode::LengthMismatch, "PAV values and weights differ in length");
  std::vector<double> sums(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) sums[i] = y[i] * weights[i];
  return pav_sums(sums, weights);
}

IsotonicMap fit_isotonic(const ScoreSet& data, const IsotonicOptions& options) {
  if (data.empty()) throw Error(ErrorCode::TooFewSamples, "isotonic fit on empty score set");
  const auto& s = data.scores();
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return s[i] < s[j]; });

  IsotonicMap map;
  map.interpolate = options.interpolate;
  std::vector<double> positives;
  std::vector<double> weight;
  for (std::size_t k = 0; k < order.size();) {
    const double score = s[order[k]];
    double sum = 0.0;
    std::size_t count = 0;
    for (; k < order.size() && s[order[k]] == score; ++k, ++count) sum += data.labels()[order[k]];
    map.knots.push_back(score);
    positives.push_back(sum);
    weight.push_back(static_cast<double>(count));
  }
  map.values = pav_sums(positives, weight);
  for (auto& v : map.values) v = std::clamp(v, 0.0, 1.0);
  return map;
}

std::string_view method_name(CalibrationMethod method) {
  switch (method) {
    case CalibrationMethod::Uncalibrated: return "uncalibrated";
    case CalibrationMethod::Platt: return "platt";
    case CalibrationMethod::Isotonic: return "isotonic";
  }
  return "unknown";
}

CalibrationMethod parse_method(std::string_view name) {
  if (name == "uncalibrated") return CalibrationMethod::Uncalibrated;
  if (name == "platt") return CalibrationMethod::Platt;
  if (name == "isotonic") return CalibrationMethod::Isotonic;
  throw Error(ErrorCode::InvalidArgument,
              "unknown calibration method '" + std::string(name) + "' (valid: uncalibrated, platt, isotonic)");
}

double apply_map(const PlattMap& map, double score) { return sigmoid(map.A * score + map.B); }

double apply_map(const IsotonicMap& map, double score) {
  if (map.knots.empty()) throw Error(ErrorCode::InvalidArgument, "isotonic map has no knots");
  const auto it = std::upper_bound(map.knots.begin(), map.knots.end(), score);
  if (it == map.knots.begin()) return map.values.front();
  const auto j = static_cast<std::size_t>(it - map.knots.begin()) - 1;
  if (!map.interpolate || j + 1 == map.knots.size()) return map.values[j];
  const double t = (score - map.knots[j]) / (map.knots[j + 1] - map.knots[j]);
  return map.values[j] + t * (map.values[j + 1] - map.values[j]);
}

double apply_map(const IdentityMap&, double score) { return std::clamp(score, 0.0, 1.0); }

double apply_map(const CalibrationMap& map, double score) {
  return std::visit([score](const auto& m) { return apply_map(m, score); }, map);
}

std::vector<double> apply_map(const CalibrationMap& map, std::span<const double> scores) {
  std::vector<double> out(scores.size());
  std::transform(scores.begin(), scores.end(), out.begin(), [&](double s) { return apply_map(map, s); });
  return out;
}

CalibrationMethod map_method(const CalibrationMap& map) {
  if (std::holds_alternative<PlattMap>(map)) return CalibrationMethod::Platt;
  if (std::holds_alternative<IsotonicMap>(map)) return CalibrationMethod::Isotonic;
  return CalibrationMethod::Uncalibrated;
}

CalibrationMap fit_calibrated_pipeline(const ScoreSet& base_scores, CalibrationMethod method,
                                       const CalibrationOptions& options) {
  switch (method) {
    case CalibrationMethod::Platt: return fit_platt(base_scores, options.platt);
    case CalibrationMethod::Isotonic: return fit_isotonic(base_scores, options.isotonic);
    case CalibrationMethod::Uncalibrated: break;
  }
  return IdentityMap{};
}

}  // namespace calibench
