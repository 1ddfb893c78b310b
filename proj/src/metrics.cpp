#include "calibench/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "calibench/error.hpp"
#include "calibench/stats.hpp"

namespace calibench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_inputs(std::span<const double> probs, std::span<const int> labels, bool probabilities = true) {
  if (probs.size() != labels.size())
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(probs.size()) + " predictions vs " + std::to_string(labels.size()) + " labels");
  if (probs.empty()) throw Error(ErrorCode::TooFewSamples, "metric on empty input");
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw Error(ErrorCode::NonBinaryLabel, "position " + std::to_string(i));
    if (probabilities && !(probs[i] >= 0.0 && probs[i] <= 1.0))
      throw Error(ErrorCode::ProbabilityOutOfRange, "value " + std::to_string(probs[i]) + " at " + std::to_string(i));
    if (!std::isfinite(probs[i])) throw Error(ErrorCode::InvalidArgument, "non-finite score at " + std::to_string(i));
  }
}

}  // namespace

std::size_t bin_index(double prob, std::size_t bins) {
  const auto m = static_cast<std::size_t>(std::floor(prob * static_cast<double>(bins)));
  return std::min(m, bins - 1);
}

double BinStats::ece() const {
  double total = 0.0;
  for (const auto& b : bins)
    if (!b.empty()) total += static_cast<double>(b.count) * std::abs(b.accuracy - b.mean_confidence);
  if (n == 0) return 0.0;
  // a weighted mean of gaps can round one ulp past the largest gap
  return std::min(total / static_cast<double>(n), mce());
}

double BinStats::mce() const {
  double worst = 0.0;
  for (const auto& b : bins)
    if (!b.empty()) worst = std::max(worst, std::abs(b.accuracy - b.mean_confidence));
  return worst;
}

BinStats reliability_bins(std::span<const double> probs, std::span<const int> labels, std::size_t bins) {
  if (bins < 1) throw Error(ErrorCode::InvalidArgument, "need at least one bin");
  check_inputs(probs, labels);
  BinStats out;
  out.n = probs.size();
  for (std::size_t m = 0; m <= bins; ++m) out.edges.push_back(static_cast<double>(m) / static_cast<double>(bins));
  std::vector<double> conf_sum(bins, 0.0);
  std::vector<double> pos(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const auto m = bin_index(probs[i], bins);
    conf_sum[m] += probs[i];
    pos[m] += labels[i];
    ++count[m];
  }
  for (std::size_t m = 0; m < bins; ++m) {
    Bin b{out.edges[m], out.edges[m + 1], count[m], kNaN, kNaN};
    if (count[m] > 0) {
      b.mean_confidence = conf_sum[m] / static_cast<double>(count[m]);
      b.accuracy = pos[m] / static_cast<double>(count[m]);
    }
    out.bins.push_back(b);
  }
  return out;
}

void write_reliability_csv(const BinStats& stats, const std::string& path) {
  // shortest round-trip formatting keeps edges like 0.9 readable
  auto real = [](double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  };
  std::ostringstream out;
  out << "bin_lo,bin_hi,count,confidence,accuracy\n";
  for (const auto& b : stats.bins) {
    out << real(b.lo) << ',' << real(b.hi) << ',' << b.count << ',';
    if (!b.empty()) out << real(b.mean_confidence) << ',' << real(b.accuracy);
    else out << ',';
    out << '\n';
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorCode::IoError, "cannot write " + path);
  file << out.str();
}

double ece(std::span<const double> probs, std::span<const int> labels, std::size_t bins) {
  return reliability_bins(probs, labels, bins).ece();
}

double mce(std::span<const double> probs, std::span<const int> labels, std::size_t bins) {
  return reliability_bins(probs, labels, bins).mce();
}

double brier(std::span<const double> probs, std::span<const int> labels) {
  check_inputs(probs, labels);
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) total += (probs[i] - labels[i]) * (probs[i] - labels[i]);
  return total / static_cast<double>(probs.size());
}

double log_loss(std::span<const double> probs, std::span<const int> labels, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw Error(ErrorCode::InvalidArgument, "epsilon must lie in (0, 0.5)");
  check_inputs(probs, labels);
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], epsilon, 1.0 - epsilon);
    total -= labels[i] == 1 ? std::log(p) : std::log1p(-p);
  }
  return total / static_cast<double>(probs.size());
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels, false);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return scores[i] < scores[j]; });
  // sum of (doubled) midranks of the positives keeps the arithmetic exact
  double doubled_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t k = 0; k < n;) {
    std::size_t e = k;
    while (e < n && scores[order[e]] == scores[order[k]]) ++e;
    const auto doubled_midrank = static_cast<double>(k + 1 + e);  // 2 * (k+1 + e)/2
    for (std::size_t t = k; t < e; ++t) {
      if (labels[order[t]] == 1) {
        doubled_rank_sum += doubled_midrank;
        ++positives;
      }
    }
    k = e;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) throw Error(ErrorCode::SingleClass, "AUC needs both classes");
  const auto np = static_cast<double>(positives);
  const double u = 0.5 * (doubled_rank_sum - np * (np + 1.0));
  return u / (np * static_cast<double>(negatives));
}

HosmerLemeshow hosmer_lemeshow(std::span<const double> probs, std::span<const int> labels, std::size_t groups) {
  check_inputs(probs, labels);
  if (groups < 3 || probs.size() < groups)
    throw Error(ErrorCode::TooFewGroups,
                "need n >= groups >= 3, got n = " + std::to_string(probs.size()) + ", groups = " + std::to_string(groups));
  const std::size_t n = probs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return probs[i] < probs[j]; });

  struct Cell {
    double observed = 0.0;
    double expected = 0.0;
    double count = 0.0;
  };
  std::vector<Cell> cells;
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t lo = g * n / groups;
    const std::size_t hi = (g + 1) * n / groups;
    Cell c;
    for (std::size_t k = lo; k < hi; ++k) {
      c.observed += labels[order[k]];
      c.expected += probs[order[k]];
      c.count += 1.0;
    }
    cells.push_back(c);
  }

  constexpr double tiny = 1e-9;
  auto small = [](const Cell& c) { return c.expected < tiny || c.count - c.expected < tiny; };
  for (std::size_t g = 0; g < cells.size() && cells.size() >= 3;) {
    if (!small(cells[g])) {
      ++g;
      continue;
    }
    const std::size_t into = g + 1 < cells.size() ? g + 1 : g - 1;
    cells[into].observed += cells[g].observed;
    cells[into].expected += cells[g].expected;
    cells[into].count += cells[g].count;
    cells.erase(cells.begin() + static_cast<std::ptrdiff_t>(g));
    if (into < g) --g;
  }
  if (cells.size() < 3 || std::any_of(cells.begin(), cells.end(), small))
    throw Error(ErrorCode::DegenerateGrouping, std::to_string(cells.size()) + " effective groups");

  HosmerLemeshow out;
  for (const auto& c : cells) {
    const double e0 = c.count - c.expected;
    const double o0 = c.count - c.observed;
    out.statistic += (c.observed - c.expected) * (c.observed - c.expected) / c.expected + (o0 - e0) * (o0 - e0) / e0;
  }
  out.groups_used = cells.size();
  out.degrees_of_freedom = static_cast<int>(cells.size()) - 2;
  out.p_value = std::clamp(chi2_sf(out.statistic, out.degrees_of_freedom), 0.0, 1.0);
  return out;
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names{"ece",         "mce",         "brier",        "log_loss",
                                              "auc",         "reliability", "hl_statistic", "hl_p_value"};
  return names;
}

double metric_value(const MetricReport& r, const std::string& name) {
  if (name == "ece") return r.ece;
  if (name == "mce") return r.mce;
  if (name == "brier") return r.brier;
  if (name == "log_loss") return r.log_loss;
  if (name == "auc") return r.auc;
  if (name == "reliability") return r.reliability;
  if (name == "hl_statistic") return r.hl_statistic;
  if (name == "hl_p_value") return r.hl_p_value;
  std::string valid;
  for (const auto& m : metric_names()) valid += (valid.empty() ? "" : ", ") + m;
  throw Error(ErrorCode::InvalidArgument, "unknown metric '" + name + "' (available: " + valid + ")");
}

MetricReport evaluate(std::span<const double> probs, std::span<const int> labels, std::size_t bins,
                      std::size_t hl_groups) {
  const BinStats stats = reliability_bins(probs, labels, bins);
  MetricReport r;
  r.ece = stats.ece();
  r.mce = stats.mce();
  r.reliability = 1.0 - r.ece;
  r.brier = brier(probs, labels);
  r.log_loss = log_loss(probs, labels);
  r.auc = auc(probs, labels);
  r.n = probs.size();
  r.bin_count = bins;
  try {
    const auto hl = hosmer_lemeshow(probs, labels, hl_groups);
    r.hl_statistic = hl.statistic;
    r.hl_p_value = hl.p_value;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateGrouping && e.code() != ErrorCode::TooFewGroups) throw;
    r.hl_statistic = kNaN;
    r.hl_p_value = kNaN;
  }
  return r;
}

}  // namespace calibench
