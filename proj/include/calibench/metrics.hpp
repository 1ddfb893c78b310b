#pragma once

#include <span>
#include <string>
#include <vector>

namespace calibench {

struct Bin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double mean_confidence = 0.0;  // NaN when empty
  double accuracy = 0.0;         // NaN when empty

  bool empty() const { return count == 0; }
};

/// Equal-width reliability bins. Bin m covers [m/M, (m+1)/M); the last bin is closed at 1.
struct BinStats {
  std::vector<double> edges;  // M + 1 values from 0 to 1
  std::vector<Bin> bins;
  std::size_t n = 0;

  double ece() const;
  double mce() const;
};

std::size_t bin_index(double prob, std::size_t bins);

BinStats reliability_bins(std::span<const double> probs, std::span<const int> labels, std::size_t bins = 10);
/// CSV with header bin_lo,bin_hi,count,confidence,accuracy; empty bins leave the last two fields blank.
void write_reliability_csv(const BinStats& stats, const std::string& path);

double ece(std::span<const double> probs, std::span<const int> labels, std::size_t bins = 10);
double mce(std::span<const double> probs, std::span<const int> labels, std::size_t bins = 10);
double brier(std::span<const double> probs, std::span<const int> labels);
double log_loss(std::span<const double> probs, std::span<const int> labels, double epsilon = 1e-15);

/// Rank-sum AUC with ties counted one half. Scores need not be probabilities.
double auc(std::span<const double> scores, std::span<const int> labels);

struct HosmerLemeshow {
  double statistic = 0.0;
  double p_value = 1.0;
  int degrees_of_freedom = 0;
  std::size_t groups_used = 0;
};

/// Equal-count risk groups after sorting by probability; groups whose expected
/// count is below 1e-9 in either cell are merged into a neighbour; df = groups - 2.
HosmerLemeshow hosmer_lemeshow(std::span<const double> probs, std::span<const int> labels, std::size_t groups = 10);

struct MetricReport {
  double ece = 0.0;
  double mce = 0.0;
  double brier = 0.0;
  double log_loss = 0.0;
  double auc = 0.0;
  double reliability = 0.0;   // 1 - ece
  double hl_statistic = 0.0;  // NaN when the grouping is degenerate
  double hl_p_value = 0.0;
  std::size_t n = 0;
  std::size_t bin_count = 0;

};

const std::vector<std::string>& metric_names();
/// Looks up a metric by name; throws InvalidArgument listing valid names.
double metric_value(const MetricReport& report, const std::string& name);

MetricReport evaluate(std::span<const double> probs, std::span<const int> labels, std::size_t bins = 10,
                      std::size_t hl_groups = 10);

}  // namespace calibench
