// Empirical and parametric distribution fitting for workload features.
//
//   ECDF            F(x) = #{samples <= x} / n
//   Weibull         f(x) = (a/b)(x/b)^(a-1) exp(-(x/b)^a),  F(x) = 1 - exp(-(x/b)^a)
//   Zipf-like       Pr(rank i) ~ i^-theta, fitted on log(value) vs log(rank)
//   Pareto tail     Pr(X > x) = (x / xmin)^-alpha for x >= xmin
//
// Every function is pure; nothing here holds state between calls.

#ifndef TRACELENS_DISTFIT_H_
#define TRACELENS_DISTFIT_H_

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "tracelens/trace_model.h"

namespace tracelens::distfit {

class Ecdf {
 public:
  // Throws ArgumentError on empty or non-finite input.
  explicit Ecdf(std::span<const double> samples);

  // Right-continuous step function in [0, 1].
  double Evaluate(double x) const;
  // Smallest sample x with F(x) >= p, for p in [0, 1].
  double Quantile(double p) const;

  std::size_t size() const { return sorted_.size(); }
  const std::vector<double>& sorted_samples() const { return sorted_; }

 private:
  std::vector<double> sorted_;
};

// Returns +infinity at x = 0 when shape < 1. Throws ArgumentError for x < 0
// or non-positive parameters.
double WeibullPdf(double x, double shape, double scale);
double WeibullCdf(double x, double shape, double scale);
// Inverse CDF, p in [0, 1).
double WeibullQuantile(double p, double shape, double scale);

double WeibullLogLikelihood(std::span<const double> samples, double shape, double scale);

struct Gradient2 {
  double d_shape = 0.0;
  double d_scale = 0.0;
};
Gradient2 WeibullLogLikelihoodGradient(std::span<const double> samples, double shape,
                                       double scale);

// Two-parameter Weibull maximum likelihood. The shape solves the profile
// likelihood equation by Newton steps guarded by bisection on
// [1e-3, 1e3] (residual tolerance 1e-9); the scale follows in closed form.
// Needs n >= 10 non-negative samples; zeros are moved to the smallest
// positive double and counted in shifted_zeros. Throws FitError when the
// profile equation has no root in the bracket (e.g. constant samples).
FittedDistribution FitWeibull(std::span<const double> samples);

// Zipf-like rank fit: values sorted descending, least squares of log(value)
// on log(rank); exponent = -slope, support_size = n, r_squared attached.
// Needs n >= 10 positive values. Constant input returns exponent 0 with
// R^2 = 0 and a "degenerate" flag.
FittedDistribution FitZipf(std::span<const double> values);

// Power-law tail: xmin is the distinct value from the upper half of the
// sample minimizing the KS distance of the tail to its fitted Pareto; the
// exponent is the Hill estimate k / sum(ln(x_i / xmin)) over the k samples
// above xmin. Flags "alpha_outside_(0,2]" when the exponent leaves the
// range heavy-tail models allow. Needs n >= 50 positive samples and at least
// 10 tail samples at the chosen xmin.
FittedDistribution FitParetoTail(std::span<const double> samples);

// Hill estimate for a fixed threshold. Throws when nothing exceeds xmin.
double HillEstimator(std::span<const double> samples, double xmin);

double ParetoTailCdf(double x, double exponent, double xmin);

// D = max_i max(|i/n - F(x_i)|, |(i-1)/n - F(x_i)|) over sorted samples.
// Throws ContractError when cdf leaves [0, 1].
double KsStatistic(std::span<const double> samples,
                   const std::function<double(double)>& cdf);

// Distribution-free 95% critical value 1.36 / sqrt(n).
double KsCritical95(std::size_t n);

struct TailSummary {
  double mean = 0.0;
  double median = 0.0;
  double p90 = 0.0;
  double p99 = 0.0;
  double max = 0.0;
  // +infinity when the median is 0.
  double mean_median_ratio = 0.0;
};

// Quantiles use linear interpolation between order statistics. Needs n >= 1.
TailSummary TailSkewnessReport(std::span<const double> samples);

// Linear-interpolation quantile of ascending data, p in [0, 1].
double InterpolatedQuantile(std::span<const double> sorted, double p);

}  // namespace tracelens::distfit

#endif  // TRACELENS_DISTFIT_H_
