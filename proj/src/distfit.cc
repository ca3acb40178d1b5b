#include "tracelens/distfit.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tracelens/errors.h"

namespace tracelens::distfit {

namespace {

void RequireFinite(std::span<const double> samples, const char* what) {
  for (double x : samples) {
    if (!std::isfinite(x)) throw ArgumentError(std::string(what) + ": non-finite sample");
  }
}

void CheckWeibullArgs(double x, double shape, double scale) {
  if (!(shape > 0.0) || !std::isfinite(shape)) {
    throw ArgumentError("Weibull shape must be positive and finite");
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw ArgumentError("Weibull scale must be positive and finite");
  }
  if (std::isnan(x) || x < 0.0) throw ArgumentError("Weibull support is x >= 0");
}

// Profile score of the Weibull likelihood in the shape, written on
// y_i = ln x_i - max ln x so the weights exp(shape * y) never overflow:
//   g(a) = sum(w y) / sum(w) - 1/a - mean(y),   w = exp(a y).
// g is increasing in a; its root is the MLE shape.
struct ProfileScore {
  double value;
  double derivative;
};

ProfileScore EvaluateProfile(std::span<const double> y, double mean_y, double a) {
  double sw = 0.0;
  double swy = 0.0;
  double swyy = 0.0;
  for (double v : y) {
    const double w = std::exp(a * v);
    sw += w;
    swy += w * v;
    swyy += w * v * v;
  }
  const double m1 = swy / sw;
  const double m2 = swyy / sw;
  return {m1 - 1.0 / a - mean_y, std::max(0.0, m2 - m1 * m1) + 1.0 / (a * a)};
}

}  // namespace

Ecdf::Ecdf(std::span<const double> samples) : sorted_(samples.begin(), samples.end()) {
  if (sorted_.empty()) throw ArgumentError("ECDF needs at least one sample");
  RequireFinite(samples, "ECDF");
  std::sort(sorted_.begin(), sorted_.end());
}

double Ecdf::Evaluate(double x) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double Ecdf::Quantile(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("quantile level must lie in [0, 1]");
  const double n = static_cast<double>(sorted_.size());
  const auto idx = static_cast<std::size_t>(std::max(0.0, std::ceil(p * n) - 1.0));
  return sorted_[std::min(idx, sorted_.size() - 1)];
}

double WeibullPdf(double x, double shape, double scale) {
  CheckWeibullArgs(x, shape, scale);
  if (x == 0.0) {
    if (shape < 1.0) return std::numeric_limits<double>::infinity();
    if (shape == 1.0) return 1.0 / scale;
    return 0.0;
  }
  const double z = x / scale;
  return (shape / scale) * std::pow(z, shape - 1.0) * std::exp(-std::pow(z, shape));
}

double WeibullCdf(double x, double shape, double scale) {
  CheckWeibullArgs(x, shape, scale);
  if (std::isinf(x)) return 1.0;
  return -std::expm1(-std::pow(x / scale, shape));
}

double WeibullQuantile(double p, double shape, double scale) {
  if (!(p >= 0.0 && p < 1.0)) throw ArgumentError("Weibull quantile needs p in [0, 1)");
  CheckWeibullArgs(0.0, shape, scale);
  return scale * std::pow(-std::log1p(-p), 1.0 / shape);
}

double WeibullLogLikelihood(std::span<const double> samples, double shape, double scale) {
  CheckWeibullArgs(0.0, shape, scale);
  const double n = static_cast<double>(samples.size());
  double sum_log = 0.0;
  double sum_pow = 0.0;
  for (double x : samples) {
    const double lz = std::log(x / scale);
    sum_log += lz;
    sum_pow += std::exp(shape * lz);
  }
  return n * std::log(shape / scale) + (shape - 1.0) * sum_log - sum_pow;
}

Gradient2 WeibullLogLikelihoodGradient(std::span<const double> samples, double shape,
                                       double scale) {
  CheckWeibullArgs(0.0, shape, scale);
  const double n = static_cast<double>(samples.size());
  double sum_log = 0.0;
  double sum_pow = 0.0;
  double sum_pow_log = 0.0;
  for (double x : samples) {
    const double lz = std::log(x / scale);
    const double p = std::exp(shape * lz);
    sum_log += lz;
    sum_pow += p;
    sum_pow_log += p * lz;
  }
  return {n / shape + sum_log - sum_pow_log, (shape / scale) * (sum_pow - n)};
}

FittedDistribution FitWeibull(std::span<const double> samples) {
  constexpr double kLo = 1e-3;
  constexpr double kHi = 1e3;
  constexpr double kResidualTol = 1e-9;
  if (samples.size() < 10) throw ArgumentError("Weibull fit needs at least 10 samples");
  RequireFinite(samples, "Weibull fit");

  std::vector<double> x(samples.begin(), samples.end());
  std::uint64_t shifted = 0;
  for (double& v : x) {
    if (v < 0.0) throw ArgumentError("Weibull fit needs non-negative samples");
    if (v == 0.0) {
      v = std::numeric_limits<double>::denorm_min();
      ++shifted;
    }
  }
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::log(x[i]);
  const double max_log = *std::max_element(y.begin(), y.end());
  double mean_y = 0.0;
  for (double& v : y) {
    v -= max_log;
    mean_y += v;
  }
  mean_y /= static_cast<double>(y.size());

  double lo = kLo;
  double hi = kHi;
  if (EvaluateProfile(y, mean_y, lo).value > 0.0 || EvaluateProfile(y, mean_y, hi).value < 0.0) {
    throw FitError(
        "Weibull profile likelihood has no root in shape bracket [1e-3, 1e3] "
        "(zero-variance or pathological sample)");
  }

  // Method-of-moments start: sd(ln x) = pi / (shape * sqrt(6)).
  double var_y = 0.0;
  for (double v : y) var_y += (v - mean_y) * (v - mean_y);
  var_y /= static_cast<double>(y.size());
  double a = var_y > 0.0 ? 1.2825498301618641 / std::sqrt(var_y) : 1.0;
  a = std::clamp(a, lo, hi);

  bool converged = false;
  for (int iter = 0; iter < 500; ++iter) {
    const ProfileScore g = EvaluateProfile(y, mean_y, a);
    if (std::abs(g.value) <= kResidualTol) {
      converged = true;
      break;
    }
    if (g.value < 0.0) {
      lo = a;
    } else {
      hi = a;
    }
    double next = a - g.value / g.derivative;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == a) break;
    a = next;
  }

  double sum_w = 0.0;
  for (double v : y) sum_w += std::exp(a * v);
  const double log_scale =
      max_log + std::log(sum_w / static_cast<double>(y.size())) / a;

  FittedDistribution fit;
  fit.params = WeibullParams{a, std::exp(log_scale)};
  fit.sample_count = samples.size();
  fit.shifted_zeros = shifted;
  const WeibullParams params = std::get<WeibullParams>(fit.params);
  fit.ks_statistic = KsStatistic(x, [&](double v) {
    return WeibullCdf(v, params.shape, params.scale);
  });
  if (shifted > 0) fit.flags.push_back("zeros_shifted");
  if (!converged) fit.flags.push_back("residual_tolerance_not_met");
  return fit;
}

FittedDistribution FitZipf(std::span<const double> values) {
  if (values.size() < 10) throw ArgumentError("Zipf fit needs at least 10 values");
  RequireFinite(values, "Zipf fit");
  for (double v : values) {
    if (!(v > 0.0)) throw ArgumentError("Zipf fit needs strictly positive values");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const std::size_t n = sorted.size();
  std::vector<double> lx(n);
  std::vector<double> ly(n);
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lx[i] = std::log(static_cast<double>(i + 1));
    ly[i] = std::log(sorted[i]);
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = lx[i] - mx;
    const double dy = ly[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }

  FittedDistribution fit;
  fit.sample_count = n;
  if (syy == 0.0) {
    fit.params = ZipfParams{0.0, n};
    fit.r_squared = 0.0;
    fit.flags.push_back("degenerate");
    return fit;
  }
  fit.params = ZipfParams{-sxy / sxx, n};
  fit.r_squared = std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
  return fit;
}

double ParetoTailCdf(double x, double exponent, double xmin) {
  if (!(exponent > 0.0) || !(xmin > 0.0)) {
    throw ArgumentError("Pareto parameters must be positive");
  }
  if (x <= xmin) return 0.0;
  return -std::expm1(-exponent * std::log(x / xmin));
}

double HillEstimator(std::span<const double> samples, double xmin) {
  if (!(xmin > 0.0)) throw ArgumentError("xmin must be positive");
  std::size_t k = 0;
  double sum = 0.0;
  for (double x : samples) {
    if (x > xmin) {
      ++k;
      sum += std::log(x / xmin);
    }
  }
  if (k == 0 || sum <= 0.0) throw FitError("no samples above xmin");
  return static_cast<double>(k) / sum;
}

FittedDistribution FitParetoTail(std::span<const double> samples) {
  constexpr std::size_t kMinTail = 10;
  if (samples.size() < 50) throw ArgumentError("tail fit needs at least 50 samples");
  RequireFinite(samples, "tail fit");
  for (double v : samples) {
    if (!(v > 0.0)) throw ArgumentError("tail fit needs strictly positive samples");
  }
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  std::vector<double> logs(n);
  for (std::size_t i = 0; i < n; ++i) logs[i] = std::log(x[i]);
  // suffix[i] = sum of logs[i..n).
  std::vector<double> suffix(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] + logs[i];

  double best_d = std::numeric_limits<double>::infinity();
  std::size_t best_last = n;  // index of the last copy of the chosen xmin
  // Value where the previous candidate peaked or was abandoned. Neighbouring
  // candidates tend to peak at the same place, so probing there first lets
  // most of them be rejected without a full pass.
  double probe_x = x[n - 1];
  for (std::size_t i = n / 2; i < n;) {
    std::size_t last = i;
    while (last + 1 < n && x[last + 1] == x[i]) ++last;
    const std::size_t first_tail = last + 1;
    const std::size_t k = n - first_tail;
    if (k < kMinTail) break;
    const double log_xmin = logs[i];
    const double denom = suffix[first_tail] - static_cast<double>(k) * log_xmin;
    if (denom > 0.0) {
      const double alpha = static_cast<double>(k) / denom;
      const double inv_k = 1.0 / static_cast<double>(k);
      const auto gap = [&](std::size_t j) {
        const double f = -std::expm1(-alpha * (logs[first_tail + j] - log_xmin));
        return std::max(std::abs(static_cast<double>(j + 1) * inv_k - f),
                        std::abs(static_cast<double>(j) * inv_k - f));
      };
      const std::size_t p = static_cast<std::size_t>(
          std::lower_bound(x.begin() + static_cast<std::ptrdiff_t>(first_tail), x.end(), probe_x) -
          x.begin() - static_cast<std::ptrdiff_t>(first_tail));
      double d = 0.0;
      std::size_t peak = 0;
      for (std::size_t j = p > 8 ? p - 8 : 0; j < std::min(k, p + 8) && d < best_d; ++j) {
        const double g = gap(j);
        if (g >= d) {
          d = g;
          peak = j;
        }
      }
      // Full KS of the tail, abandoned once it cannot beat the best so far.
      for (std::size_t j = 0; j < k && d < best_d; ++j) {
        const double g = gap(j);
        if (g >= d) {
          d = g;
          peak = j;
        }
      }
      probe_x = x[first_tail + peak];
      if (d < best_d) {
        best_d = d;
        best_last = last;
      }
    }
    i = last + 1;
  }
  if (best_last == n) {
    throw FitError("fewer than 10 tail samples above every xmin candidate");
  }

  const double xmin = x[best_last];
  const std::span<const double> tail(x.data() + best_last + 1, n - best_last - 1);
  const double alpha = HillEstimator(tail, xmin);
  FittedDistribution fit;
  fit.params = ParetoTailParams{alpha, xmin};
  fit.sample_count = tail.size();
  fit.ks_statistic = KsStatistic(tail, [&](double v) { return ParetoTailCdf(v, alpha, xmin); });
  if (!(alpha > 0.0 && alpha <= 2.0)) fit.flags.push_back("alpha_outside_(0,2]");
  return fit;
}

double KsStatistic(std::span<const double> samples,
                   const std::function<double(double)>& cdf) {
  if (samples.empty()) throw ArgumentError("KS statistic needs at least one sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    if (!(f >= 0.0 && f <= 1.0)) {
      throw ContractError("CDF returned a value outside [0, 1]");
    }
    const double above = static_cast<double>(i + 1) / n - f;
    const double below = f - static_cast<double>(i) / n;
    d = std::max({d, std::abs(above), std::abs(below)});
  }
  return d;
}

double KsCritical95(std::size_t n) {
  return 1.36 / std::sqrt(static_cast<double>(n));
}

double InterpolatedQuantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw ArgumentError("quantile of an empty sample");
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

TailSummary TailSkewnessReport(std::span<const double> samples) {
  if (samples.empty()) throw ArgumentError("summary needs at least one sample");
  RequireFinite(samples, "summary");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  TailSummary s;
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) /
           static_cast<double>(sorted.size());
  s.median = InterpolatedQuantile(sorted, 0.5);
  s.p90 = InterpolatedQuantile(sorted, 0.9);
  s.p99 = InterpolatedQuantile(sorted, 0.99);
  s.max = sorted.back();
  s.mean_median_ratio = s.median != 0.0 ? s.mean / s.median
                                        : std::numeric_limits<double>::infinity();
  return s;
}

}  // namespace tracelens::distfit
