#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "tracelens/distfit.h"
#include "tracelens/errors.h"
#include "tracelens/random.h"
#include "tracelens/synth.h"

namespace tracelens::distfit {
namespace {

// Inverse-CDF samplers written directly from the closed forms.
std::vector<double> WeibullSamples(std::size_t n, double shape, double scale, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = scale * std::pow(-std::log(1.0 - rng.Uniform()), 1.0 / shape);
  return x;
}

std::vector<double> ParetoSamples(std::size_t n, double alpha, double xmin, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = xmin * std::pow(1.0 - rng.Uniform(), -1.0 / alpha);
  return x;
}

// --- ECDF ------------------------------------------------------------------

TEST(Ecdf, Examples) {
  const Ecdf e(std::vector<double>{1, 2, 3});
  EXPECT_DOUBLE_EQ(e.Evaluate(2), 2.0 / 3);
  EXPECT_EQ(e.Evaluate(0.5), 0.0);
  EXPECT_EQ(e.Evaluate(3), 1.0);
  EXPECT_EQ(e.Evaluate(1e9), 1.0);
  EXPECT_THROW(Ecdf(std::vector<double>{}), ArgumentError);
  EXPECT_THROW(Ecdf(std::vector<double>{1, NAN}), ArgumentError);
}

TEST(Ecdf, PropertiesAndBruteForce) {
  Rng rng(1);
  std::vector<double> s(500);
  for (auto& v : s) v = std::floor(rng.Normal() * 10) / 4;  // plenty of ties
  const Ecdf e(s);
  EXPECT_EQ(e.Evaluate(*std::max_element(s.begin(), s.end())), 1.0);
  double prev = 0;
  for (int q = 0; q < 1000; ++q) {
    const double x = (rng.Uniform() - 0.5) * 80;
    const double f = e.Evaluate(x);
    const auto count = std::count_if(s.begin(), s.end(), [&](double v) { return v <= x; });
    EXPECT_EQ(f, static_cast<double>(count) / s.size());
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
  }
  for (double x = -40; x <= 40; x += 0.01) {
    const double f = e.Evaluate(x);
    EXPECT_GE(f, prev);
    prev = f;
  }
  // Right-continuity at every jump.
  for (double v : s) EXPECT_EQ(e.Evaluate(v), e.Evaluate(std::nextafter(v, INFINITY)));
}

TEST(Ecdf, DkwBoundOnWeibullSamples) {
  const auto x = WeibullSamples(10000, 1.5, 2.0, 2);
  const Ecdf e(x);
  double sup = 0;
  for (double v : e.sorted_samples()) {
    const double f = WeibullCdf(v, 1.5, 2.0);
    sup = std::max({sup, std::abs(e.Evaluate(v) - f),
                    std::abs(e.Evaluate(std::nextafter(v, -INFINITY)) - f)});
  }
  EXPECT_LE(sup, 1.36 / std::sqrt(10000.0));
}

// --- Weibull closed forms -------------------------------------------------

TEST(WeibullForms, ExponentialReduction) {
  for (double x : {0.0, 0.3, 1.0, 7.5}) {
    EXPECT_NEAR(WeibullPdf(x, 1.0, 2.5), std::exp(-x / 2.5) / 2.5, 1e-15);
  }
}

TEST(WeibullForms, ValuesAtZeroAndEdges) {
  EXPECT_EQ(WeibullPdf(0, 1.5, 2), 0.0);
  EXPECT_TRUE(std::isinf(WeibullPdf(0, 0.5, 2)));
  EXPECT_EQ(WeibullCdf(0, 1.5, 2), 0.0);
  EXPECT_NEAR(WeibullCdf(2.0, 1.5, 2.0), 1 - std::exp(-1.0), 1e-15);
  EXPECT_NEAR(WeibullCdf(3.7, 0.8, 3.7), 0.6321205588285577, 1e-15);
  EXPECT_EQ(WeibullCdf(1e6, 1.5, 2.0), 1.0);
  EXPECT_THROW(WeibullPdf(-1, 1, 1), ArgumentError);
  EXPECT_THROW(WeibullCdf(1, 0, 1), ArgumentError);
  EXPECT_THROW(WeibullPdf(1, 1, -2), ArgumentError);
  EXPECT_NEAR(WeibullQuantile(1 - std::exp(-1.0), 1.5, 2.0), 2.0, 1e-12);
}

TEST(WeibullForms, PdfIntegratesToOne) {
  boost::math::quadrature::exp_sinh<double> integrator;
  for (auto [a, b] : {std::pair{1.5, 2.0}, std::pair{1.0, 1.0}, std::pair{3.0, 0.5},
                      std::pair{0.7, 4.0}}) {
    const double area =
        integrator.integrate([&](double x) { return WeibullPdf(x, a, b); }, 1e-12);
    EXPECT_NEAR(area, 1.0, 1e-6) << a << " " << b;
  }
}

TEST(WeibullForms, PdfIsDerivativeOfCdf) {
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const double a = 0.5 + 3 * rng.Uniform();
    const double b = 0.5 + 4 * rng.Uniform();
    const double x = b * (0.05 + 2 * rng.Uniform());
    const double h = 1e-5 * x;
    const double numeric = (WeibullCdf(x + h, a, b) - WeibullCdf(x - h, a, b)) / (2 * h);
    const double pdf = WeibullPdf(x, a, b);
    EXPECT_NEAR(numeric, pdf, 1e-5 * pdf) << a << " " << b << " " << x;
  }
}

// --- Weibull MLE ----------------------------------------------------------

TEST(FitWeibull, RecoversGeneratorParameters) {
  const auto fit = FitWeibull(WeibullSamples(100000, 1.5, 2.0, 4));
  const auto p = std::get<WeibullParams>(fit.params);
  EXPECT_GE(p.shape, 1.47);
  EXPECT_LE(p.shape, 1.53);
  EXPECT_GE(p.scale, 1.96);
  EXPECT_LE(p.scale, 2.04);
  EXPECT_EQ(fit.sample_count, 100000u);
  ASSERT_TRUE(fit.ks_statistic);
  EXPECT_LE(*fit.ks_statistic, KsCritical95(100000));
}

TEST(FitWeibull, ExponentialShapeNearOne) {
  const auto p = std::get<WeibullParams>(FitWeibull(WeibullSamples(100000, 1.0, 3.0, 5)).params);
  EXPECT_NEAR(p.shape, 1.0, 0.02);
}

TEST(FitWeibull, Pathologies) {
  EXPECT_THROW(FitWeibull(std::vector<double>(50, 3.0)), FitError);
  EXPECT_THROW(FitWeibull(std::vector<double>(9, 1.0)), ArgumentError);
  EXPECT_THROW(FitWeibull(std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, -1}), ArgumentError);
  auto x = WeibullSamples(1000, 0.8, 1.0, 6);
  x[0] = x[1] = 0.0;
  const auto fit = FitWeibull(x);
  EXPECT_EQ(fit.shifted_zeros, 2u);
  EXPECT_NE(std::find(fit.flags.begin(), fit.flags.end(), "zeros_shifted"), fit.flags.end());
}

TEST(FitWeibull, ScaleEquivariance) {
  const auto x = WeibullSamples(5000, 2.2, 1.3, 7);
  const auto base = std::get<WeibullParams>(FitWeibull(x).params);
  for (double c : {0.001, 3.0, 1e5}) {
    std::vector<double> y = x;
    for (auto& v : y) v *= c;
    const auto p = std::get<WeibullParams>(FitWeibull(y).params);
    EXPECT_NEAR(p.shape, base.shape, 1e-9);
    EXPECT_NEAR(p.scale, base.scale * c, 1e-9 * base.scale * c);
  }
}

TEST(FitWeibull, GradientVanishesAtOptimum) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 200 + rng.UniformIndex(5000);
    const double a = 0.4 + 4 * rng.Uniform();
    const double b = 0.1 + 10 * rng.Uniform();
    const auto x = WeibullSamples(n, a, b, 100 + trial);
    const auto p = std::get<WeibullParams>(FitWeibull(x).params);
    const auto g = WeibullLogLikelihoodGradient(x, p.shape, p.scale);
    const double ha = 1e-6 * p.shape;
    const double hb = 1e-6 * p.scale;
    const double da = (WeibullLogLikelihood(x, p.shape + ha, p.scale) -
                       WeibullLogLikelihood(x, p.shape - ha, p.scale)) / (2 * ha);
    const double db = (WeibullLogLikelihood(x, p.shape, p.scale + hb) -
                       WeibullLogLikelihood(x, p.shape, p.scale - hb)) / (2 * hb);
    const double tol = 1e-6 * static_cast<double>(n);
    EXPECT_LE(std::abs(g.d_shape - da), tol);
    EXPECT_LE(std::abs(g.d_scale - db), tol);
    EXPECT_LE(std::abs(g.d_shape), tol);
    EXPECT_LE(std::abs(g.d_scale), tol);
  }
}

// --- Zipf -----------------------------------------------------------------

TEST(FitZipf, ExactPowerLaws) {
  for (double theta : {1.0, 0.8, 2.3}) {
    std::vector<double> v;
    for (int i = 1; i <= 100; ++i) v.push_back(7.0 / std::pow(i, theta));
    std::reverse(v.begin(), v.end());  // input order is irrelevant
    const auto fit = FitZipf(v);
    const auto p = std::get<ZipfParams>(fit.params);
    EXPECT_NEAR(p.exponent, theta, 1e-9);
    EXPECT_EQ(p.support_size, 100u);
    EXPECT_NEAR(*fit.r_squared, 1.0, 1e-12);
  }
}

TEST(FitZipf, SampledFrequencies) {
  const synth::ZipfSampler sampler(1.2, 1000);
  Rng rng(9);
  std::map<std::uint64_t, double> freq;
  for (int i = 0; i < 100000; ++i) freq[sampler.Sample(rng)] += 1;
  std::vector<double> counts;
  for (const auto& [rank, c] : freq) counts.push_back(c);
  const auto p = std::get<ZipfParams>(FitZipf(counts).params);
  EXPECT_GE(p.exponent, 1.1);
  EXPECT_LE(p.exponent, 1.3);
}

TEST(FitZipf, ErrorsAndDegenerateInput) {
  EXPECT_THROW(FitZipf(std::vector<double>{1, 2, 3}), ArgumentError);
  std::vector<double> v(20, 1.0);
  v[3] = 0.0;
  EXPECT_THROW(FitZipf(v), ArgumentError);
  const auto fit = FitZipf(std::vector<double>(20, 0.25));
  EXPECT_EQ(std::get<ZipfParams>(fit.params).exponent, 0.0);
  EXPECT_EQ(fit.r_squared, 0.0);
  EXPECT_EQ(fit.flags, std::vector<std::string>{"degenerate"});
}

// --- Pareto tail -----------------------------------------------------------

TEST(FitParetoTail, RecoversExponent) {
  for (auto [alpha, tol] : {std::pair{1.5, 0.05}, std::pair{1.0, 0.05}}) {
    const auto fit = FitParetoTail(ParetoSamples(100000, alpha, 1.0, 10));
    const auto p = std::get<ParetoTailParams>(fit.params);
    EXPECT_NEAR(p.exponent, alpha, tol * alpha);
    EXPECT_TRUE(fit.flags.empty());
    EXPECT_GE(fit.sample_count, 10u);
  }
}

TEST(FitParetoTail, FlagsExponentOutsideRange) {
  const auto fit = FitParetoTail(ParetoSamples(20000, 3.0, 1.0, 11));
  EXPECT_NEAR(std::get<ParetoTailParams>(fit.params).exponent, 3.0, 0.3);
  EXPECT_EQ(fit.flags, std::vector<std::string>{"alpha_outside_(0,2]"});
}

TEST(FitParetoTail, ExponentialDataFitsWorse) {
  const std::size_t n = 20000;
  const auto pareto = FitParetoTail(ParetoSamples(n, 1.5, 1.0, 12));
  const auto expo = FitParetoTail(WeibullSamples(n, 1.0, 1.0, 13));
  const bool flagged = !expo.flags.empty();
  EXPECT_TRUE(flagged || *expo.ks_statistic > 2 * *pareto.ks_statistic);
}

TEST(FitParetoTail, Preconditions) {
  EXPECT_THROW(FitParetoTail(ParetoSamples(49, 1.5, 1.0, 1)), ArgumentError);
  auto x = ParetoSamples(100, 1.5, 1.0, 1);
  x[5] = 0;
  EXPECT_THROW(FitParetoTail(x), ArgumentError);
}

TEST(Hill, ExampleAndScaleInvariance) {
  // ln(e/1) + ln(e^2/1) = 3 over k = 2.
  const std::vector<double> s{1.0, std::exp(1.0), std::exp(2.0)};
  EXPECT_NEAR(HillEstimator(s, 1.0), 2.0 / 3.0, 1e-15);
  EXPECT_THROW(HillEstimator(s, 100.0), FitError);
  const auto x = ParetoSamples(1000, 1.2, 2.0, 14);
  std::vector<double> y = x;
  for (auto& v : y) v *= 37.5;
  EXPECT_NEAR(HillEstimator(x, 3.0), HillEstimator(y, 3.0 * 37.5), 1e-12);
  const auto fx = std::get<ParetoTailParams>(FitParetoTail(x).params);
  const auto fy = std::get<ParetoTailParams>(FitParetoTail(y).params);
  EXPECT_NEAR(fx.exponent, fy.exponent, 1e-9);
}

// --- KS ------------------------------------------------------------------

TEST(KsStatistic, Examples) {
  const auto identity = [](double x) { return std::clamp(x, 0.0, 1.0); };
  EXPECT_DOUBLE_EQ(KsStatistic(std::vector<double>{0.5}, identity), 0.5);
  const std::size_t n = 40;
  std::vector<double> q;
  for (std::size_t i = 1; i <= n; ++i) q.push_back((i - 0.5) / n);
  EXPECT_NEAR(KsStatistic(q, identity), 0.5 / n, 1e-15);
  EXPECT_THROW(KsStatistic(q, [](double) { return 1.5; }), ContractError);
  EXPECT_THROW(KsStatistic(std::vector<double>{}, identity), ArgumentError);
}

TEST(KsStatistic, OwnDistributionWithinDkwBound) {
  int within = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    const auto x = WeibullSamples(10000, 1.5, 2.0, 1000 + t);
    const double d = KsStatistic(x, [](double v) { return WeibullCdf(v, 1.5, 2.0); });
    within += d <= KsCritical95(x.size()) ? 1 : 0;
  }
  EXPECT_GE(within, 95 - 5);  // 95% level with binomial slack
}

// --- tail summary ----------------------------------------------------------

TEST(TailSkewnessReport, Examples) {
  const auto sym = TailSkewnessReport(std::vector<double>{1, 2, 3});
  EXPECT_EQ(sym.mean, 2.0);
  EXPECT_EQ(sym.median, 2.0);
  const auto c = TailSkewnessReport(std::vector<double>(25, 4.0));
  EXPECT_EQ(c.median, 4.0);
  EXPECT_EQ(c.p90, 4.0);
  EXPECT_EQ(c.p99, 4.0);
  EXPECT_EQ(c.max, 4.0);
  EXPECT_EQ(c.mean_median_ratio, 1.0);
  const auto p = TailSkewnessReport(ParetoSamples(50000, 1.5, 1.0, 15));
  EXPECT_GT(p.mean_median_ratio, 1.0);
  EXPECT_GT(p.mean, p.median);
  EXPECT_THROW(TailSkewnessReport(std::vector<double>{}), ArgumentError);
}

TEST(InterpolatedQuantile, LinearBetweenOrderStatistics) {
  const std::vector<double> s{0, 10, 20, 30};
  EXPECT_EQ(InterpolatedQuantile(s, 0.0), 0.0);
  EXPECT_EQ(InterpolatedQuantile(s, 1.0), 30.0);
  EXPECT_NEAR(InterpolatedQuantile(s, 0.5), 15.0, 1e-12);
}

}  // namespace
}  // namespace tracelens::distfit
