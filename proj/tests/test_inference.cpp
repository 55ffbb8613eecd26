#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "evd/inference.hpp"

using namespace evd;

namespace {

const ModelSpec kGev{Family::Gev, Parametrization::natural(), std::nullopt};
const ModelSpec kGumbel{Family::Gumbel, Parametrization::natural(), std::nullopt};

ModelSpec quantile_spec(Family f, double alpha) { return {f, Parametrization::quantile(alpha), std::nullopt}; }

ObservedSample draw(const Model& m, std::size_t n, std::uint64_t seed, double h = 1e-6) {
  return {sample(m, n, seed), h};
}

double ll(const ModelSpec& spec, const std::vector<double>& theta, const ObservedSample& s, LikelihoodKind k) {
  return loglik_reparam(theta, spec, s, k).value;
}

// Gumbel mle oracle: sigma solves sigma = mean - sum x w / sum w with w = exp(-x/sigma);
// mu = -sigma log(mean w). Solved by bisection on sigma.
std::pair<double, double> gumbel_mle_oracle(std::span<const double> xs) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x / n;
  auto g = [&](double s) {
    double sw = 0, sxw = 0;
    for (double x : xs) {
      const double w = std::exp(-(x - mean) / s);
      sw += w;
      sxw += x * w;
    }
    return s - mean + sxw / sw;
  };
  double lo = 1e-4, hi = 100.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0 ? lo : hi) = mid;
  }
  const double s = 0.5 * (lo + hi);
  double sw = 0;
  for (double x : xs) sw += std::exp(-(x - mean) / s);
  return {mean - s * std::log(sw / n), s};
}

}  // namespace

TEST(Fit, ConsistentOnLargeSample) {
  const auto s = draw(GevParams(1, 1, 0.2), 10000, 11);
  const FitResult f = fit_mle(kGev, s);
  EXPECT_TRUE(f.converged);
  EXPECT_NEAR(f.mle[2], 0.2, 0.05);
  EXPECT_NEAR(f.mle[0], 1.0, 0.05);
  EXPECT_NEAR(f.mle[1], 1.0, 0.05);
}

TEST(Fit, GumbelThreePointsMatchesOracle) {
  const ObservedSample s({0.9, 1.0, 1.1}, 0.1);
  const FitResult f = fit_mle(kGumbel, s);
  ASSERT_TRUE(f.converged);
  const auto [mu, sigma] = gumbel_mle_oracle(s.values());
  EXPECT_NEAR(f.mle[0], mu, 1e-6);
  EXPECT_NEAR(f.mle[1], sigma, 1e-6);
  const FitResult again = refit(f, kGumbel, s);
  EXPECT_LT(std::abs(again.loglik_max - f.loglik_max), 1e-8);
}

TEST(Fit, LoglikMaxIsValueAtMle) {
  const auto s = draw(GevParams(1, 1, -0.2), 50, 3);
  const FitResult f = fit_mle(kGev, s);
  EXPECT_DOUBLE_EQ(f.loglik_max, ll(kGev, f.mle, s, f.kind_used));
}

TEST(Fit, ExactOnlyUsesExact) {
  const auto s = draw(GevParams(1, 1, 0.0), 40, 5, 0.01);
  FitOptions o;
  o.policy = KindPolicy::ExactOnly;
  const FitResult f = fit_mle(kGev, s, o);
  EXPECT_EQ(f.kind_used, LikelihoodKind::Exact);
  EXPECT_FALSE(f.used_exact_fallback);
}

TEST(Fit, SingularSampleFallsBackToExact) {
  // Search for a sample whose continuous likelihood climbs into the singularity.
  int found = 0;
  for (std::uint64_t seed = 1; seed < 400 && found < 3; ++seed) {
    const auto s = draw(GevParams(1, 1, -0.5), 25, seed);
    FitOptions only;
    only.policy = KindPolicy::ContinuousOnly;
    bool singular = false;
    try {
      (void)fit_mle(kGev, s, only);
    } catch (const SingularLikelihoodError&) {
      singular = true;
    }
    if (!singular) continue;
    ++found;
    const FitResult f = fit_mle(kGev, s);
    EXPECT_TRUE(f.converged);
    EXPECT_TRUE(f.used_exact_fallback);
    EXPECT_EQ(f.kind_used, LikelihoodKind::Exact);
    EXPECT_TRUE(std::isfinite(f.loglik_max));
    EXPECT_LT(f.mle[2], -0.9);
  }
  EXPECT_GE(found, 3);
}

TEST(Fit, RejectsDegenerateAndSmallSamples) {
  EXPECT_THROW((void)fit_mle(kGev, ObservedSample({2.0, 2.0, 2.0, 2.0}, 0.1)), DegenerateSampleError);
  EXPECT_THROW((void)fit_mle(kGev, ObservedSample({1.0, 2.0}, 0.1)), DomainError);
  EXPECT_NO_THROW((void)fit_mle(kGumbel, ObservedSample({1.0, 2.0}, 0.1)));
  const ModelSpec two{Family::Frechet, Parametrization::natural(), 5.0};
  EXPECT_THROW((void)fit_mle(two, ObservedSample({1.0, 7.0, 9.0}, 0.1)), DomainError);
}

TEST(Fit, SubmodelFamilies) {
  const auto sw = draw(GevParams(1, 1, -0.3), 200, 17);
  const FitResult fw = fit_mle(ModelSpec{Family::Weibull, Parametrization::natural(), std::nullopt}, sw);
  const GevParams gw = ev_to_gev(std::get<EvParams>(fw.model()));
  EXPECT_NEAR(gw.c, -0.3, 0.15);
  const FitResult gev = fit_mle(kGev, sw);
  // The submodel is the GEV restricted to c < 0, so it cannot beat the GEV.
  EXPECT_LE(fw.loglik_max, gev.loglik_max + 1e-6);
  if (gev.mle[2] < -1e-3) EXPECT_NEAR(fw.loglik_max, gev.loglik_max, 1e-6);

  const auto sf = draw(GevParams(1, 1, 0.3), 200, 18);
  const FitResult ff = fit_mle(ModelSpec{Family::Frechet, Parametrization::natural(), std::nullopt}, sf);
  EXPECT_NEAR(ev_to_gev(std::get<EvParams>(ff.model())).c, 0.3, 0.15);
}

TEST(Fit, FixedThresholdFrechet) {
  const auto s = draw(EvParams::frechet(0, 37, 4.6), 58, 99, 0.1);
  const ModelSpec two{Family::Frechet, Parametrization::natural(), 0.0};
  const FitResult f = fit_mle(two, s);
  ASSERT_TRUE(f.converged);
  EXPECT_NEAR(f.mle[0], 37, 6);
  EXPECT_NEAR(f.mle[1], 4.6, 1.8);
  const ModelSpec three{Family::Frechet, Parametrization::natural(), std::nullopt};
  EXPECT_LE(f.loglik_max, fit_mle(three, s).loglik_max + 1e-6);
}

TEST(Invariance, QuantileMleMatchesMappedNatural) {
  const auto s = draw(GevParams(1, 1, 0.1), 60, 21);
  const FitResult nat = fit_mle(kGev, s);
  for (double alpha : {0.95, 0.99}) {
    const FitResult q = fit_mle(quantile_spec(Family::Gev, alpha), s);
    const double mapped = quantile(nat.model(), alpha);
    EXPECT_NEAR(q.mle[0], mapped, 1e-6 * (1 + std::abs(mapped)));
    EXPECT_NEAR(q.loglik_max, nat.loglik_max, 1e-8);
    const FitResult r = refit(nat, quantile_spec(Family::Gev, alpha), s);
    EXPECT_NEAR(r.mle[0], mapped, 1e-6 * (1 + std::abs(mapped)));
  }
}

TEST(Gradient, VanishesAtMle) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto s = draw(GevParams(1, 1, 0.0), 50, seed);
    for (const ModelSpec& spec : {kGev, quantile_spec(Family::Gev, 0.99), kGumbel}) {
      const FitResult f = fit_mle(spec, s);
      const auto g = loglik_gradient(f, s);
      double norm = 0;
      for (double v : g) norm += v * v;
      EXPECT_LT(std::sqrt(norm), 1e-4 * (1 + std::abs(f.loglik_max))) << spec.label() << " seed " << seed;
    }
  }
}

// Profiles ---------------------------------------------------------------------

TEST(Profile, UnitAtMle) {
  const auto s = draw(GevParams(1, 1, 0.0), 50, 4);
  const FitResult f = fit_mle(quantile_spec(Family::Gev, 0.95), s);
  Profiler p(f, s, 0);
  EXPECT_NEAR(p.evaluate(f.mle[0]).r, 1.0, 1e-8);
}

TEST(Profile, GumbelLocationAgainstOneDimensionalSearch) {
  const auto s = draw(EvParams::gumbel(1, 1), 30, 8);
  const FitResult f = fit_mle(kGumbel, s);
  Profiler p(f, s, 0);
  for (double dt : {-0.4, -0.1, 0.2, 0.5}) {
    const double t = f.mle[0] + dt;
    // Oracle: golden-section search over log sigma.
    auto neg = [&](double ls) { return -ll(kGumbel, {t, std::exp(ls)}, s, f.kind_used); };
    double a = std::log(f.mle[1]) - 2, b = std::log(f.mle[1]) + 2;
    const double g = (std::sqrt(5.0) - 1) / 2;
    for (int i = 0; i < 200; ++i) {
      const double x1 = b - g * (b - a), x2 = a + g * (b - a);
      (neg(x1) < neg(x2) ? b : a) = (neg(x1) < neg(x2) ? x2 : x1);
    }
    const double oracle = relative_likelihood(-neg(0.5 * (a + b)), f.loglik_max);
    EXPECT_NEAR(p.evaluate(t).r, oracle, 1e-7) << dt;
  }
}

TEST(Profile, GumbelPlausibilityAgainstBruteForceGrid) {
  const auto s = draw(GevParams(1, 1, 0.0), 50, 31);
  const FitResult f = fit_mle(kGev, s);
  // Dense (a, b) grid at c = 0, refined by repeated zooming.
  double best = -std::numeric_limits<double>::infinity();
  double ca = f.mle[0], cb = std::log(f.mle[1]), wa = 1.0, wb = 1.0;
  for (int zoom = 0; zoom < 12; ++zoom) {
    double ba = ca, bb = cb;
    for (int i = -40; i <= 40; ++i)
      for (int j = -40; j <= 40; ++j) {
        const double a = ca + wa * i / 40.0, lb = cb + wb * j / 40.0;
        const double v = ll(kGev, {a, std::exp(lb), 0.0}, s, f.kind_used);
        if (v > best) {
          best = v;
          ba = a;
          bb = lb;
        }
      }
    ca = ba;
    cb = bb;
    wa /= 4;
    wb /= 4;
  }
  const double oracle = relative_likelihood(best, f.loglik_max);
  EXPECT_NEAR(gumbel_plausibility(f, s), oracle, 1e-4);
  Profiler p(f, s, 2);
  EXPECT_NEAR(p.evaluate(0.0).r, oracle, 1e-4);
}

TEST(Profile, CurveShape) {
  const auto s = draw(GevParams(1, 1, 0.1), 50, 12);
  const FitResult f = fit_mle(kGev, s);
  const ProfileCurve c = profile_curve(f, s, 2, GridSpec{41, std::nullopt, 0.02});
  EXPECT_EQ(c.parameter_name, "c");
  ASSERT_GE(c.grid.size(), 41u);
  double mx = 0;
  for (std::size_t i = 0; i < c.grid.size(); ++i) {
    if (i > 0) EXPECT_GT(c.grid[i], c.grid[i - 1]);
    EXPECT_GE(c.r_values[i], 0.0);
    EXPECT_LE(c.r_values[i], 1.0);
    mx = std::max(mx, c.r_values[i]);
  }
  EXPECT_NEAR(mx, 1.0, 1e-6);
  EXPECT_NEAR(c.r_values.front(), 0.02, 2e-3);
  EXPECT_NEAR(c.r_values.back(), 0.02, 2e-3);
  EXPECT_NO_THROW((void)gumbel_plausibility(c, f, s));
}

TEST(Profile, PlausibilityNearOneForGumbelData) {
  const auto s = draw(EvParams::gumbel(1, 1), 2000, 77);
  const FitResult f = fit_mle(kGev, s);
  EXPECT_GT(gumbel_plausibility(f, s), 0.5);
}

TEST(Profile, PlausibilityLowWhenIntervalExcludesZero) {
  const auto s = draw(GevParams(1, 1, 0.5), 100, 6);
  const FitResult f = fit_mle(kGev, s);
  const IntervalResult iv = likelihood_interval(f, s, 2, 0.15);
  ASSERT_TRUE(iv.ok());
  ASSERT_GT(iv.lower, 0.0);
  EXPECT_LT(gumbel_plausibility(f, s), 0.15);
}

// Intervals --------------------------------------------------------------------

TEST(Interval, GaussianRelativeLikelihood) {
  const double m = 3.0, sd = 0.7;
  auto r = [&](double t) { return std::exp(-0.5 * (t - m) * (t - m) / (sd * sd)); };
  for (double k : {0.15, 0.5, 0.02}) {
    const IntervalResult iv = likelihood_interval(r, m, k);
    ASSERT_TRUE(iv.ok());
    const double hw = std::sqrt(-2 * std::log(k)) * sd;
    EXPECT_NEAR(iv.lower, m - hw, 1e-4 * sd);
    EXPECT_NEAR(iv.upper, m + hw, 1e-4 * sd);
    EXPECT_LT(std::abs(iv.endpoint_residuals.first), 1e-4);
  }
}

TEST(Interval, UnboundedSideReported) {
  auto r = [](double t) { return t < 0 ? std::exp(-t * t) : 1.0 / (1.0 + 1e-3 * t); };
  IntervalOptions o;
  o.initial_halfwidth = 0.5;
  o.max_doublings = 10;
  const IntervalResult iv = likelihood_interval(r, 0.0, 0.15, o);
  EXPECT_EQ(iv.lower_status, EndpointStatus::Found);
  EXPECT_EQ(iv.upper_status, EndpointStatus::Unbounded);
  EXPECT_FALSE(iv.ok());
}

TEST(Interval, RejectsBadLevel) {
  auto r = [](double) { return 1.0; };
  EXPECT_THROW((void)likelihood_interval(r, 0.0, 1.5), DomainError);
}

TEST(Interval, AmlQuadratic) {
  EXPECT_NEAR(normal_quantile(0.975), 1.959964, 1e-6);
  auto loglik = [](std::span<const double> x) { return -0.5 * (x[0] - 2) * (x[0] - 2) - 0.5 * 4 * x[1] * x[1]; };
  const std::vector<double> mle{2.0, 0.0}, steps{1e-3, 1e-3};
  const IntervalResult iv = aml_interval(loglik, mle, steps, 0, 0.95);
  EXPECT_NEAR(iv.lower, 2 - 1.959964, 1e-6);
  EXPECT_NEAR(iv.upper, 2 + 1.959964, 1e-6);
  EXPECT_EQ(iv.method, IntervalMethod::Aml);
}

TEST(Interval, AmlNonPositiveDefinite) {
  auto saddle = [](std::span<const double> x) { return -x[0] * x[0] + x[1] * x[1]; };
  const std::vector<double> mle{0.0, 0.0}, steps{1e-3, 1e-3};
  try {
    (void)aml_interval(saddle, mle, steps, 0, 0.95);
    FAIL() << "expected NonPositiveDefiniteError";
  } catch (const NonPositiveDefiniteError& e) {
    ASSERT_EQ(e.eigenvalues().size(), 2u);
    EXPECT_LT(std::min(e.eigenvalues()[0], e.eigenvalues()[1]), 0.0);
  }
}

TEST(Interval, AmlAgainstFiniteDifferenceOracle) {
  const auto s = draw(GevParams(1, 1, 0.0), 60, 44);
  const ModelSpec spec = quantile_spec(Family::Gev, 0.95);
  const FitResult f = fit_mle(spec, s);
  // Oracle: plain 3x3 Hessian in natural quantile coordinates, inverted by cofactors.
  const std::vector<double> h{1e-3, 1e-4, 1e-4};
  auto L = [&](std::vector<double> x) { return ll(spec, x, s, f.kind_used); };
  double H[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      auto x = f.mle;
      auto at = [&](double di, double dj) {
        auto y = x;
        y[i] += di;
        y[j] += dj;
        return L(y);
      };
      H[i][j] = -(at(h[i], h[j]) - at(h[i], -h[j]) - at(-h[i], h[j]) + at(-h[i], -h[j])) / (4 * h[i] * h[j]);
    }
  const double det = H[0][0] * (H[1][1] * H[2][2] - H[1][2] * H[2][1]) -
                     H[0][1] * (H[1][0] * H[2][2] - H[1][2] * H[2][0]) +
                     H[0][2] * (H[1][0] * H[2][1] - H[1][1] * H[2][0]);
  const double var = (H[1][1] * H[2][2] - H[1][2] * H[2][1]) / det;
  const IntervalResult iv = aml_interval(f, s, 0, 0.95);
  EXPECT_NEAR(iv.upper - iv.estimate, 1.959964 * std::sqrt(var), 1e-3 * std::sqrt(var));
}

TEST(Submodel, Thresholds) {
  EXPECT_EQ(select_submodel(-0.3), Family::Weibull);
  EXPECT_EQ(select_submodel(0.0), Family::Gumbel);
  EXPECT_EQ(select_submodel(2e-5), Family::Frechet);
  EXPECT_EQ(select_submodel(-2e-5), Family::Weibull);
  EXPECT_EQ(select_submodel(5e-6), Family::Gumbel);
  EXPECT_THROW((void)select_submodel(std::nan("")), DomainError);
}

TEST(Lrt, Values) {
  const LrtResult a = lrt_nested(std::log(0.9983), 0.0);
  EXPECT_NEAR(a.minus_two_log_w, 0.0034, 5e-5);
  EXPECT_NEAR(a.p_value, 0.9535, 5e-4);
  EXPECT_NEAR(a.w, 0.9983, 1e-12);
  const LrtResult b = lrt_nested(-5.0, -5.0);
  EXPECT_EQ(b.minus_two_log_w, 0.0);
  EXPECT_EQ(b.p_value, 1.0);
  const LrtResult c = lrt_nested(-1.92073, 0.0);
  EXPECT_NEAR(c.minus_two_log_w, 3.8415, 1e-4);
  EXPECT_NEAR(c.p_value, 0.05, 1e-4);
  EXPECT_THROW((void)lrt_nested(1.0, 0.0), ConvergenceError);
}

// Properties -------------------------------------------------------------------

class IntervalProperties : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(IntervalProperties, EndpointsSymmetryNesting) {
  const std::uint64_t seed = GetParam();
  const double c_true = -0.3 + 0.15 * static_cast<double>(seed % 5);
  const auto s = draw(GevParams(1, 1, c_true), 50, seed);
  for (std::size_t target : {0u, 2u}) {
    const double alpha = seed % 2 ? 0.99 : 0.95;
    const ModelSpec spec = quantile_spec(Family::Gev, alpha);
    const FitResult f = fit_mle(spec, s);
    Profiler p(f, s, target);
    const IntervalResult iv = likelihood_interval(p, 0.15);
    if (!iv.ok()) continue;  // e.g. the shape hitting the regular-branch edge
    EXPECT_LT(iv.lower, f.mle[target]);
    EXPECT_GT(iv.upper, f.mle[target]);
    Profiler fresh(f, s, target);
    EXPECT_LT(std::abs(fresh.evaluate(iv.lower).r - 0.15), 1e-4);
    EXPECT_LT(std::abs(fresh.evaluate(iv.upper).r - 0.15), 1e-4);
    const IntervalResult inner = likelihood_interval(f, s, target, 0.5);
    ASSERT_TRUE(inner.ok());
    EXPECT_LE(iv.lower, inner.lower);
    EXPECT_GE(iv.upper, inner.upper);

    const IntervalResult aml = aml_interval(f, s, target, 0.95);
    EXPECT_EQ(aml.upper - aml.estimate, aml.estimate - aml.lower);
    EXPECT_EQ(aml.estimate, f.mle[target]);
  }
}

TEST_P(IntervalProperties, ProfileDominatesSlice) {
  const std::uint64_t seed = GetParam();
  const auto s = draw(GevParams(1, 1, 0.1), 40, seed + 100);
  const ModelSpec spec = quantile_spec(Family::Gev, 0.95);
  const FitResult f = fit_mle(spec, s);
  Profiler p(f, s, 0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 10; ++i) {
    const double t = f.mle[0] + 1.5 * u(rng);
    const double rp = p.evaluate(t).r;
    for (int j = 0; j < 20; ++j) {
      const std::vector<double> probe{t, f.mle[1] * std::exp(0.5 * u(rng)), f.mle[2] + 0.3 * u(rng)};
      const double v = ll(spec, probe, s, f.kind_used);
      const double rs = relative_likelihood(std::min(v, f.loglik_max), f.loglik_max);
      EXPECT_GE(rp, rs - 1e-9);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, IntervalProperties, ::testing::Values(1, 2, 3, 4, 5, 6, 7, 8));
