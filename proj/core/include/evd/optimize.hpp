#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace evd {

struct SimplexOptions {
  double ftol_abs = 1e-11;
  double ftol_rel = 1e-13;
  double xtol = 1e-9;
  std::size_t max_evaluations = 20000;
  /// Fresh simplexes built around the incumbent after convergence.
  int restarts = 2;
  /// A simplex whose best value has not improved by ftol for this many
  /// evaluations per dimension also counts as converged. Lets the search stop
  /// on a cusp, where vertices one ulp apart still differ by more than ftol.
  std::size_t stall_evaluations_per_dim = 200;
};

struct SimplexResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;
  bool converged = false;
};

/// Nelder-Mead minimization. Non-finite objective values are treated as
/// +1e300 so infeasible probes simply lose every comparison.
template <class Objective>
SimplexResult nelder_mead(Objective&& f, std::span<const double> start, std::span<const double> step,
                          const SimplexOptions& opt = {}) {
  const std::size_t d = start.size();
  SimplexResult res;
  auto eval = [&](const std::vector<double>& x) {
    ++res.evaluations;
    const double v = f(std::span<const double>(x));
    return std::isfinite(v) ? std::min(v, 1e300) : 1e300;
  };

  std::vector<std::vector<double>> simplex(d + 1, std::vector<double>(start.begin(), start.end()));
  std::vector<double> fv(d + 1);
  std::vector<double> centroid(d), xr(d), xe(d), xc(d);
  std::vector<std::size_t> order(d + 1);

  res.x.assign(start.begin(), start.end());
  res.value = eval(res.x);

  for (int round = 0; round <= opt.restarts; ++round) {
    const double value_before = res.value;
    simplex[0] = res.x;
    fv[0] = res.value;
    for (std::size_t i = 0; i < d; ++i) {
      simplex[i + 1] = res.x;
      simplex[i + 1][i] += step[i];
      fv[i + 1] = eval(simplex[i + 1]);
    }
    bool converged = false;
    double best_seen = *std::min_element(fv.begin(), fv.end());
    std::size_t last_gain = res.evaluations;
    const std::size_t stall = opt.stall_evaluations_per_dim * (d + 1);
    while (res.evaluations < opt.max_evaluations) {
      for (std::size_t i = 0; i <= d; ++i) order[i] = i;
      std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return fv[l] < fv[r]; });
      const std::size_t best = order.front();
      const std::size_t worst = order.back();
      const std::size_t second = order[d - (d > 0 ? 1 : 0)];

      double spread = 0.0;
      for (std::size_t i = 0; i <= d; ++i)
        for (std::size_t j = 0; j < d; ++j) spread = std::max(spread, std::abs(simplex[i][j] - simplex[best][j]));
      const double fspread = fv[worst] - fv[best];
      const double ftol = opt.ftol_abs + opt.ftol_rel * std::abs(fv[best]);
      if (fv[best] < best_seen - ftol) {
        best_seen = fv[best];
        last_gain = res.evaluations;
      }
      if ((fspread <= ftol && spread <= opt.xtol) || res.evaluations - last_gain > stall) {
        converged = true;
        break;
      }

      std::fill(centroid.begin(), centroid.end(), 0.0);
      for (std::size_t i = 0; i <= d; ++i) {
        if (i == worst) continue;
        for (std::size_t j = 0; j < d; ++j) centroid[j] += simplex[i][j] / static_cast<double>(d);
      }
      for (std::size_t j = 0; j < d; ++j) xr[j] = centroid[j] + (centroid[j] - simplex[worst][j]);
      const double fr = eval(xr);
      if (fr < fv[best]) {
        for (std::size_t j = 0; j < d; ++j) xe[j] = centroid[j] + 2.0 * (centroid[j] - simplex[worst][j]);
        const double fe = eval(xe);
        if (fe < fr) {
          simplex[worst] = xe;
          fv[worst] = fe;
        } else {
          simplex[worst] = xr;
          fv[worst] = fr;
        }
        continue;
      }
      if (fr < fv[second]) {
        simplex[worst] = xr;
        fv[worst] = fr;
        continue;
      }
      const bool outside = fr < fv[worst];
      for (std::size_t j = 0; j < d; ++j)
        xc[j] = outside ? centroid[j] + 0.5 * (xr[j] - centroid[j]) : centroid[j] + 0.5 * (simplex[worst][j] - centroid[j]);
      const double fc = eval(xc);
      if (fc < (outside ? fr : fv[worst])) {
        simplex[worst] = xc;
        fv[worst] = fc;
        continue;
      }
      for (std::size_t i = 0; i <= d; ++i) {
        if (i == best) continue;
        for (std::size_t j = 0; j < d; ++j) simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
        fv[i] = eval(simplex[i]);
      }
    }
    const auto best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
    if (fv[best] <= res.value) {
      res.x = simplex[best];
      res.value = fv[best];
    }
    res.converged = converged;
    if (!converged) break;
    // Stop restarting once a fresh simplex no longer improves the incumbent.
    if (round > 0 && value_before - res.value <= opt.ftol_abs + opt.ftol_rel * std::abs(res.value)) break;
  }
  return res;
}

struct RootResult {
  double root = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Brent's bracketing root finder (inverse quadratic interpolation with a
/// bisection safeguard). Requires f(lo) and f(hi) of opposite sign. Stops
/// when |f| <= ftol or the bracket is narrower than xtol.
template <class Function>
RootResult brent_root(Function&& f, double lo, double hi, double f_lo, double f_hi, double ftol, double xtol,
                      int max_iterations = 100) {
  RootResult r;
  double a = lo, b = hi, fa = f_lo, fb = f_hi;
  if (std::abs(fa) < std::abs(fb)) {
    std::swap(a, b);
    std::swap(fa, fb);
  }
  double c = a, fc = fa, d = b - a, e = d;
  for (r.iterations = 0; r.iterations < max_iterations; ++r.iterations) {
    if (std::abs(fb) <= ftol) {
      r.root = b;
      r.residual = fb;
      r.converged = true;
      return r;
    }
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * xtol;
    const double m = 0.5 * (c - b);
    if (std::abs(m) <= tol) {
      r.root = b;
      r.residual = fb;
      return r;
    }
    if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
      double p, q;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * m * s;
        q = 1.0 - s;
      } else {
        const double qa = fa / fc;
        const double rr = fb / fc;
        p = s * (2.0 * m * qa * (qa - rr) - (b - a) * (rr - 1.0));
        q = (qa - 1.0) * (rr - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::abs(p);
      if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = m;
        e = m;
      }
    } else {
      d = m;
      e = m;
    }
    a = b;
    fa = fb;
    b += std::abs(d) > tol ? d : (m > 0.0 ? tol : -tol);
    fb = f(b);
  }
  r.root = b;
  r.residual = fb;
  return r;
}

}  // namespace evd
