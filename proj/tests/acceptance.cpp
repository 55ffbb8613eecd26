// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero when any fails. Coverage frequencies use the replicate count
// as denominator, so failed intervals count as misses.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "evd/coverage.hpp"
#include "evd/io.hpp"

using namespace evd;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail, double secs) {
  std::printf("%s [%d] %s: %s (%.1f s)\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str(), secs);
  std::fflush(stdout);
  if (!ok) ++failures;
}

class Timer {
 public:
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Scenario scenario(double c, int n, int reps = 1000) {
  Scenario s;
  s.c_true = c;
  s.n = n;
  s.replicates = reps;
  return s;
}

double freq(int count, const CoverageSummary& s) { return static_cast<double>(count) / s.replicates; }

const ModelSpec kGev{Family::Gev, Parametrization::natural(), std::nullopt};

void coverage_profile_gev() {
  Timer t;
  const Scenario s = scenario(0.0, 50);
  const auto sum = summarize(run_scenario(s), s);
  const auto& q95 = sum.row(Target::Q95, IntervalMethod::ProfileLikelihood, Variant::Gev);
  const auto& q99 = sum.row(Target::Q99, IntervalMethod::ProfileLikelihood, Variant::Gev);
  const double f95 = freq(q95.cover, sum), f99 = freq(q99.cover, sum);
  report(1, f95 >= 0.925 && f95 <= 0.965 && f99 >= 0.92 && f99 <= 0.965,
         "profile GEV coverage, c=0 n=50",
         fmt("Q.95 %.3f in [0.925,0.965], Q.99 %.3f in [0.92,0.965], failures %g/%g", f95, f99, q95.failures,
             q99.failures),
         t.seconds());
}

void aml_undercoverage() {
  Timer t;
  const Scenario s = scenario(0.0, 25);
  const auto sum = summarize(run_scenario(s), s);
  const auto& r = sum.row(Target::Q95, IntervalMethod::Aml, Variant::Gev);
  const double f = freq(r.cover, sum);
  report(2, f <= 0.88 && r.under > 20 * r.over, "AML undercoverage, c=0 n=25 Q.95",
         fmt("coverage %.3f <= 0.88, under %g vs over %g, failures %g", f, r.under, r.over, r.failures),
         t.seconds());
}

void snp_rate() {
  Timer t;
  const Scenario s = scenario(-0.5, 25);
  const auto sum = summarize(run_scenario(s), s);
  const double p = freq(sum.snp, sum);
  report(3, p >= 0.03 && p <= 0.08, "SNP rate, c=-0.5 n=25",
         fmt("%.3f in [0.03,0.08] (%g fit failures)", p, sum.fit_failures), t.seconds());
}

void shape_coverage() {
  Timer t;
  const Scenario s = scenario(0.0, 100);
  const auto sum = summarize(run_scenario(s), s);
  const auto& r = sum.row(Target::Shape, IntervalMethod::ProfileLikelihood, Variant::Gev);
  const double f = freq(r.cover, sum), neg = freq(sum.negative, sum);
  report(4, f >= 0.925 && f <= 0.965 && neg >= 0.92 && neg <= 0.97, "shape coverage, c=0 n=100",
         fmt("coverage %.3f in [0.925,0.965], straddles zero %.3f in [0.92,0.97]", f, neg), t.seconds());
}

void length_ordering() {
  Timer t;
  const Scenario s = scenario(-0.05, 50);
  const auto recs = run_scenario(s);
  std::vector<double> ratios;
  for (const auto& r : length_ratio_table(recs))
    if (r.target == Target::Q99) ratios.push_back(r.ratio);
  const double med = ratios.empty() ? std::numeric_limits<double>::quiet_NaN() : five_number(ratios).median;
  report(5, med < 1.0, "length ratio submodel/GEV, c=-0.05 n=50 Q.99",
         fmt("median %.4f < 1 over %g covered-by-both replicates", med, static_cast<double>(ratios.size())),
         t.seconds());
}

void lrt_arithmetic() {
  Timer t;
  const LrtResult r = lrt_nested(std::log(0.9983), 0.0);
  const bool ok = std::abs(r.minus_two_log_w - 0.0034) < 5e-5 && std::abs(r.p_value - 0.9535) < 5e-5;
  report(6, ok, "LRT arithmetic", fmt("-2 log W = %.4f (0.0034), p = %.4f (0.9535)", r.minus_two_log_w, r.p_value),
         t.seconds());
}

void rain_pipeline() {
  Timer t;
  std::string detail;
  bool ok = true;
  const auto fail = [&](const std::string& why) {
    ok = false;
    detail += (detail.empty() ? "" : "; ") + why;
  };
  try {
    const ObservedSample s = parse_sample_csv(std::string(EVD_DATA_DIR) + "/rain_synthetic.csv");
    const FitResult gev = fit_mle(kGev, s);
    const double c_hat = gev.mle[2];
    if (!(c_hat > 0.0)) fail("c_hat <= 0");
    const FitResult fr =
        refit(gev, {Family::Frechet, Parametrization::natural(), std::nullopt}, s);
    Profiler mu(fr, s, 0);
    const double rp0 = mu.evaluate(0.0).r;
    if (!(rp0 > 0.15)) fail("R_p(mu=0) <= 0.15");
    const FitResult two = fit_mle({Family::Frechet, Parametrization::natural(), 0.0}, s);
    if (!two.converged) fail("two-parameter Frechet fit did not converge");
    const auto qq = emit_qq_data(two, s, 0.15);
    int inside = 0;
    for (const auto& r : qq)
      if (r.band_lo && r.band_hi && r.observed >= *r.band_lo && r.observed <= *r.band_hi) ++inside;
    const double share = static_cast<double>(inside) / static_cast<double>(qq.size());
    if (share < 0.95) fail("Q-Q bands hold fewer than 95% of points");
    const auto periods = default_return_periods();
    const auto rp = emit_return_period_data(two, s, 0.15, periods);
    const auto path = std::filesystem::path(EVD_OUT_DIR) / "rain_return_periods.csv";
    {
      std::ofstream out(path);
      write_return_period_csv(out, rp);
    }
    std::ifstream back(path);
    const auto lines = std::count(std::istreambuf_iterator<char>(back), std::istreambuf_iterator<char>(), '\n');
    if (lines != static_cast<long>(periods.size()) + 1) fail("return-period CSV incomplete");
    detail = fmt("c_hat %.3f, R_p(mu=0) %.3f, Q-Q inside %.3f, two-parameter loglik %.2f", c_hat, rp0, share,
                 two.loglik_max) +
             (detail.empty() ? "" : "; " + detail);
  } catch (const std::exception& e) {
    fail(e.what());
  }
  report(7, ok, "synthetic rain pipeline", detail, t.seconds());
}

// ---------------------------------------------------------------------------
// Property suites

struct Check {
  bool ok = true;
  std::string first_failure;
  void require(bool cond, const std::string& what) {
    if (!cond && ok) first_failure = what;
    ok = ok && cond;
  }
};

void properties() {
  Timer t;
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> loc(-5, 5), lsc(-2, 2), shp(-0.9, 0.9), prob(1e-6, 1 - 1e-6);
  Check chk;
  double worst_inv = 0, worst_rt = 0, worst_lim = 0, worst_res = 0;

  for (int i = 0; i < 2000; ++i) {
    const GevParams g(loc(rng), std::exp(lsc(rng)), shp(rng));
    const double a = prob(rng);
    const double d = std::abs(cdf(g, quantile(g, a)) - a);
    worst_inv = std::max(worst_inv, d);
    const EvParams ev = gev_to_ev(g);
    const double d2 = std::abs(cdf(ev, quantile(ev, a)) - a);
    worst_inv = std::max(worst_inv, d2);
    if (!g.is_gumbel()) {
      const GevParams back = ev_to_gev(ev);
      for (auto [x, y] : {std::pair{back.a, g.a}, {back.b, g.b}, {back.c, g.c}})
        worst_rt = std::max(worst_rt, std::abs(x - y) / std::max(1.0, std::abs(y)));
    }
  }
  chk.require(worst_inv < 1e-10, "cdf(quantile) identity");
  chk.require(worst_rt < 1e-12, "GEV <-> EV parameter round trip");

  for (double c : {1e-8, -1e-8}) {
    const GevParams g(1.0, 2.0, c), z(1.0, 2.0, 0.0);
    for (double x : {-2.0, 0.0, 1.0, 3.0, 8.0}) {
      worst_lim = std::max(worst_lim, std::abs(cdf(g, x) - cdf(z, x)));
      worst_lim = std::max(worst_lim, std::abs(pdf(g, x).value - pdf(z, x).value));
    }
    for (double a : {0.01, 0.5, 0.95, 0.99})
      worst_lim = std::max(worst_lim, std::abs(quantile(g, a) - quantile(z, a)));
  }
  chk.require(worst_lim < 1e-6, "Gumbel limit");

  {
    const std::vector<double> xs{0.4, 1.1, 1.9, 2.6, 3.8, 0.95};
    for (const Model& m : {Model(GevParams(1, 1, -0.2)), Model(GevParams(1, 1, 0)), Model(GevParams(1, 1, 0.3))}) {
      const double cont = loglik(m, ObservedSample(xs, 1.0), LikelihoodKind::Continuous).value;
      double prev = std::numeric_limits<double>::infinity();
      for (double h : {1e-2, 1e-4, 1e-6}) {
        const double ex = loglik(m, ObservedSample(xs, h), LikelihoodKind::Exact).value;
        const double err = std::abs(ex - static_cast<double>(xs.size()) * std::log(h) - cont);
        chk.require(err < prev, "exact->continuous decay");
        prev = err;
      }
    }
  }

  {
    const ObservedSample s({0.2, 0.6, 1.0}, 0.01);
    for (double beta : {0.9, 0.5, 0.1}) {
      const EvParams w = EvParams::weibull(1.0, 1.0, beta);
      const LogLik e = loglik(w, s, LikelihoodKind::Exact);
      chk.require(loglik(w, s, LikelihoodKind::Continuous).singular && !e.singular && std::isfinite(e.value) &&
                      e.value <= 0.0,
                  "exact bounded at singularity");
    }
  }

  bool aml_symmetric = true;
  for (int seed = 0; seed < 8; ++seed) {
    const double c = -0.3 + 0.6 * seed / 7.0;
    const ObservedSample s(sample(GevParams(1, 1, c), 50, 1000 + seed), 1e-6);
    const FitResult fit = fit_mle(kGev, s);
    for (double alpha : {0.95, 0.99}) {
      const FitResult q = refit(fit, {Family::Gev, Parametrization::quantile(alpha), std::nullopt}, s);
      const IntervalResult iv = likelihood_interval(q, s, 0, 0.15);
      Profiler check(q, s, 0);
      if (iv.lower_status == EndpointStatus::Found)
        worst_res = std::max(worst_res, std::abs(check.evaluate(iv.lower).r - 0.15));
      if (iv.upper_status == EndpointStatus::Found)
        worst_res = std::max(worst_res, std::abs(check.evaluate(iv.upper).r - 0.15));
      try {
        const IntervalResult a = aml_interval(q, s, 0, 0.95);
        aml_symmetric = aml_symmetric && (a.upper - a.estimate) == (a.estimate - a.lower);
      } catch (const NonPositiveDefiniteError&) {
      }
    }
    // Profile dominates the slice through the mle.
    std::uniform_real_distribution<double> off(-0.3, 0.3);
    Profiler prof(fit, s, 2);
    for (int k = 0; k < 5; ++k) {
      const double t = fit.mle[2] + off(rng);
      std::vector<double> slice = fit.mle;
      slice[2] = t;
      const LogLik sl = loglik_reparam(slice, kGev, s, fit.kind_used);
      const double r_slice = sl.singular ? 0.0 : relative_likelihood(sl.value, fit.loglik_max);
      chk.require(prof.evaluate(t).r >= r_slice - 1e-9, "profile dominates slice");
    }
  }
  chk.require(worst_res < 1e-4, "endpoint residuals");
  chk.require(aml_symmetric, "AML symmetry");

  const double secs = t.seconds();
  chk.require(secs < 120.0, "runtime under 2 min");
  report(8, chk.ok, "property suites",
         fmt("cdf(Q) %.1e, round trip %.1e, Gumbel limit %.1e, residual %.1e", worst_inv, worst_rt, worst_lim,
             worst_res) +
             (chk.ok ? "" : "; first failure: " + chk.first_failure),
         secs);
}

}  // namespace

int main(int argc, char** argv) {
  // Optional criterion ids select a subset, e.g. "acceptance 6 8".
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  const auto want = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
  const std::vector<std::pair<int, std::function<void()>>> all{
      {6, lrt_arithmetic}, {8, properties},        {7, rain_pipeline},   {1, coverage_profile_gev},
      {2, aml_undercoverage}, {4, shape_coverage}, {5, length_ordering}, {3, snp_rate}};
  for (const auto& [id, fn] : all)
    if (want(id)) fn();
  std::printf("%s: %d criterion(s) failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
