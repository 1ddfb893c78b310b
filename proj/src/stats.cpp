#include "calibench/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "calibench/error.hpp"
#include "calibench/special_functions.hpp"

namespace calibench {

namespace {

void check_df(int df) {
  if (df < 1) throw Error(ErrorCode::InvalidDF, "degrees of freedom " + std::to_string(df));
}

// polynomial c[0] + c[1] x + ... in Horner form
template <std::size_t N>
double poly(const double (&c)[N], double x) {
  double r = c[N - 1];
  for (std::size_t i = N - 1; i-- > 0;) r = r * x + c[i];
  return r;
}

}  // namespace

double t_two_sided_p(double t, int df) {
  check_df(df);
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  const double nu = df;
  return special::incomplete_beta(0.5 * nu, 0.5, nu / (nu + t * t));
}

double t_cdf(double x, int df) {
  const double tail = 0.5 * t_two_sided_p(x, df);
  return x > 0.0 ? 1.0 - tail : tail;
}

double t_quantile(double p, int df) {
  check_df(df);
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::InvalidArgument, "quantile probability must lie in (0,1)");
  if (p == 0.5) return 0.0;
  // bracket then bisect on the monotone cdf
  double lo = -1.0;
  double hi = 1.0;
  while (t_cdf(lo, df) > p) lo *= 2.0;
  while (t_cdf(hi, df) < p) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++i) {
    const double mid = 0.5 * (lo + hi);
    (t_cdf(mid, df) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double chi2_cdf(double x, int df) {
  check_df(df);
  if (!(x >= 0.0)) throw Error(ErrorCode::InvalidArgument, "chi-square argument must be >= 0");
  return special::lower_incomplete_gamma(0.5 * df, 0.5 * x);
}

double chi2_sf(double x, int df) {
  check_df(df);
  if (!(x >= 0.0)) throw Error(ErrorCode::InvalidArgument, "chi-square argument must be >= 0");
  return special::upper_incomplete_gamma(0.5 * df, 0.5 * x);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::InvalidArgument, "quantile probability must lie in (0,1)");
  // bisection on the side with the small tail keeps relative accuracy there
  const bool upper = p > 0.5;
  const double target = upper ? 1.0 - p : p;
  double lo = -40.0;
  double hi = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < target ? lo : hi) = mid;
    if (hi - lo < 1e-16 * std::max(1.0, std::abs(mid))) break;
  }
  double z = 0.5 * (lo + hi);
  // two Newton polish steps
  for (int i = 0; i < 2; ++i) {
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    if (pdf <= 0.0) break;
    z -= (normal_cdf(z) - target) / pdf;
  }
  return upper ? -z : z;
}

SampleSummary summarize(std::span<const double> samples) {
  SampleSummary s;
  s.n = samples.size();
  if (s.n == 0) return s;
  if (std::all_of(samples.begin(), samples.end(), [&](double v) { return v == samples[0]; })) {
    s.mean = samples[0];
    return s;
  }
  s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (const double v : samples) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

namespace {

std::vector<double> differences(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw Error(ErrorCode::LengthMismatch, std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  if (a.size() < 2) throw Error(ErrorCode::TooFewSamples, "paired comparison needs n >= 2");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

}  // namespace

PairedComparison paired_t_test(std::span<const double> a, std::span<const double> b) {
  const auto d = differences(a, b);
  const auto s = summarize(d);
  PairedComparison out;
  out.mean_diff = s.mean;
  out.df = static_cast<int>(s.n) - 1;
  if (s.sd == 0.0) {
    out.degenerate_variance = true;
    if (s.mean == 0.0) {
      out.t_statistic = 0.0;
      out.p_value = 1.0;
      out.cohens_d = 0.0;
    } else {
      out.t_statistic = std::copysign(std::numeric_limits<double>::infinity(), s.mean);
      out.p_value = 0.0;
      out.cohens_d = out.t_statistic;
    }
    return out;
  }
  out.t_statistic = s.mean / (s.sd / std::sqrt(static_cast<double>(s.n)));
  out.p_value = std::clamp(t_two_sided_p(out.t_statistic, out.df), 0.0, 1.0);
  out.cohens_d = s.mean / s.sd;
  return out;
}

EffectSize cohens_d_paired(std::span<const double> a, std::span<const double> b) {
  const auto s = summarize(differences(a, b));
  if (s.sd == 0.0) {
    if (s.mean == 0.0) return {0.0, true};
    throw Error(ErrorCode::DegenerateVariance, "paired differences are constant and nonzero");
  }
  return {s.mean / s.sd, false};
}

BonferroniResult bonferroni(std::span<const double> p_values, double family_alpha) {
  if (p_values.empty()) throw Error(ErrorCode::EmptyFamily, "no p-values to correct");
  if (!(family_alpha > 0.0 && family_alpha < 1.0))
    throw Error(ErrorCode::InvalidArgument, "family alpha must lie in (0,1)");
  BonferroniResult out;
  out.threshold = family_alpha / static_cast<double>(p_values.size());
  for (const double p : p_values) out.decisions.push_back(p < out.threshold);
  return out;
}

IntervalEstimate mean_ci(std::span<const double> samples, double level) {
  if (samples.size() < 2) throw Error(ErrorCode::TooFewSamples, "confidence interval needs n >= 2");
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::InvalidArgument, "level must lie in (0,1)");
  const auto s = summarize(samples);
  const double half = t_quantile(0.5 * (1.0 + level), static_cast<int>(s.n) - 1) * s.sd /
                      std::sqrt(static_cast<double>(s.n));
  return {s.mean, s.mean - half, s.mean + half, level};
}

NormalityReport shapiro_wilk(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n < 3 || n > 5000)
    throw Error(ErrorCode::SampleSizeOutOfRange, "Shapiro-Wilk needs 3 <= n <= 5000, got " + std::to_string(n));
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double range = x.back() - x.front();
  if (!(range > 0.0)) throw Error(ErrorCode::DegenerateVariance, "all samples are identical");

  static constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
  static constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
  static constexpr double c3[] = {0.544, -0.39978, 0.025054, -6.714e-4};
  static constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
  static constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};
  static constexpr double g[] = {-2.273, 0.459};

  // coefficients for the upper half: a[i] pairs x[n-1-i] with x[i]
  const std::size_t half = n / 2;
  const double an = static_cast<double>(n);
  std::vector<double> a(half);
  if (n == 3) {
    a[0] = std::numbers::sqrt2 / 2.0;
  } else {
    std::vector<double> m(half);
    double summ2 = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
      m[i] = normal_quantile((static_cast<double>(i + 1) - 0.375) / (an + 0.25));
      summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = poly(c1, rsn) - m[0] / ssumm2;
    std::size_t first_plain;
    double fac;
    if (n > 5) {
      const double a2 = -m[1] / ssumm2 + poly(c2, rsn);
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[1] = a2;
      first_plain = 2;
    } else {
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
      first_plain = 1;
    }
    a[0] = a1;
    for (std::size_t i = first_plain; i < half; ++i) a[i] = -m[i] / fac;
  }

  // W = (sum a_i (x_(n-i) - x_(i)))^2 / SS, on range-scaled data for conditioning
  double numerator = 0.0;
  for (std::size_t i = 0; i < half; ++i) numerator += a[i] * (x[n - 1 - i] - x[i]) / range;
  double mean = 0.0;
  for (const double v : x) mean += v / range;
  mean /= an;
  double ss = 0.0;
  for (const double v : x) ss += (v / range - mean) * (v / range - mean);
  double w = numerator * numerator / ss;
  w = std::min(w, 1.0);

  NormalityReport out{w, 1.0, n};
  if (n == 3) {
    const double pw = 6.0 / std::numbers::pi * (std::asin(std::sqrt(w)) - std::numbers::pi / 3.0);
    out.p_value = std::clamp(pw, 0.0, 1.0);
    return out;
  }
  double y = std::log1p(-w);
  double mu;
  double sigma;
  if (n <= 11) {
    const double gamma = poly(g, an);
    if (y >= gamma) {
      out.p_value = 1e-99;
      return out;
    }
    y = -std::log(gamma - y);
    mu = poly(c3, an);
    sigma = std::exp(poly(c4, an));
  } else {
    const double ln = std::log(an);
    mu = poly(c5, ln);
    sigma = std::exp(poly(c6, ln));
  }
  out.p_value = std::isinf(y) ? 1.0 : std::clamp(normal_sf((y - mu) / sigma), 0.0, 1.0);
  return out;
}

}  // namespace calibench
