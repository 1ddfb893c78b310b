#pragma once

#include <span>
#include <string>
#include <vector>

namespace calibench {

// Distribution functions. Degrees of freedom must be >= 1 (InvalidDF otherwise).
double t_cdf(double x, int df);
/// P(|T| >= |t|) computed directly from the incomplete beta, accurate for tiny tails.
double t_two_sided_p(double t, int df);
double t_quantile(double p, int df);
double chi2_cdf(double x, int df);
double chi2_sf(double x, int df);
double normal_cdf(double x);
double normal_sf(double x);
double normal_quantile(double p);

struct SampleSummary {
  double mean = 0.0;
  double sd = 0.0;  // n - 1 denominator
  std::size_t n = 0;
};

SampleSummary summarize(std::span<const double> samples);

struct PairedComparison {
  std::string name_a;
  std::string name_b;
  std::string metric;
  std::string model;
  double mean_diff = 0.0;
  double t_statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
  double cohens_d = 0.0;
  bool degenerate_variance = false;
  bool significant_at_corrected_alpha = false;
  double corrected_alpha = 0.0;
};

/// Two-sided paired t-test on a - b.
/// Zero spread: mean 0 gives t = 0, p = 1; otherwise t = +-inf, p = 0, both flagged.
PairedComparison paired_t_test(std::span<const double> a, std::span<const double> b);

struct EffectSize {
  double d = 0.0;
  bool degenerate = false;
};

/// Paired d_z = mean(a - b) / sd(a - b). Equal samples give 0 flagged as
/// degenerate; zero spread with a nonzero mean throws DegenerateVariance.
EffectSize cohens_d_paired(std::span<const double> a, std::span<const double> b);

struct BonferroniResult {
  double threshold = 0.0;
  std::vector<bool> decisions;
};

BonferroniResult bonferroni(std::span<const double> p_values, double family_alpha);

struct IntervalEstimate {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
};

/// Student-t interval mean +- t_{(1+level)/2, n-1} sd / sqrt(n).
IntervalEstimate mean_ci(std::span<const double> samples, double level = 0.95);

struct NormalityReport {
  double w_statistic = 1.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

/// Shapiro-Wilk W with Royston's (1995) coefficient and p-value approximations; 3 <= n <= 5000.
NormalityReport shapiro_wilk(std::span<const double> samples);

}  // namespace calibench
