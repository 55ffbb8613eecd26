#include "evd/inference.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "working_coords.hpp"

namespace evd {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEulerGamma = 0.5772156649015329;

void check_sample_for(const ModelSpec& spec, const ObservedSample& sample) {
  const std::size_t need = spec.arity() >= 3 ? 3 : 2;
  if (sample.size() < need)
    throw DomainError("fitting " + spec.label() + " needs at least " + std::to_string(need) + " observations");
  if (sample.min() == sample.max()) throw DegenerateSampleError("all observations are equal; scale is not identifiable");
  if (spec.fixed_threshold) {
    const double mu = *spec.fixed_threshold;
    const bool ok = spec.family == Family::Weibull ? sample.max() < mu : sample.min() > mu;
    if (!ok) throw DomainError("fixed threshold " + std::to_string(mu) + " excludes observed values");
  }
}

LikelihoodKind initial_kind(KindPolicy p) {
  return p == KindPolicy::ExactOnly ? LikelihoodKind::Exact : LikelihoodKind::Continuous;
}

// Moment-style starting models for a family.
std::vector<Model> moment_starts(const ModelSpec& spec, const ObservedSample& sample, int count,
                                 std::uint64_t jitter_seed) {
  const double sd = sample.stddev();
  const double sigma0 = sd * std::sqrt(6.0) / std::numbers::pi;
  const double mu0 = sample.mean() - kEulerGamma * sigma0;

  std::vector<Model> out;
  if (spec.fixed_threshold) {
    // log|x - mu| is Gumbel distributed under a two-parameter Weibull/Frechet.
    const double mu = *spec.fixed_threshold;
    const bool weibull = spec.family == Family::Weibull;
    std::vector<double> logs;
    for (double x : sample.values()) logs.push_back(weibull ? -std::log(mu - x) : std::log(x - mu));
    const ObservedSample ls(logs, 1.0);
    const double s = std::max(ls.stddev() * std::sqrt(6.0) / std::numbers::pi, 1e-6);
    const double m = ls.mean() - kEulerGamma * s;
    const double beta = std::clamp(1.0 / s, 1.05, 1e5);
    const double sigma = weibull ? std::exp(-m) : std::exp(m);
    out.emplace_back(EvParams(spec.family, mu, sigma, beta));
    for (double f : {0.5, 2.0}) out.emplace_back(EvParams(spec.family, mu, sigma, std::clamp(beta * f, 1.05, 1e5)));
    out.resize(std::min<std::size_t>(out.size(), static_cast<std::size_t>(std::max(count, 1))));
    return out;
  }

  std::vector<double> shapes;
  switch (spec.family) {
    case Family::Gev: shapes = {-0.1, 0.0, 0.1}; break;
    case Family::Weibull: shapes = {-0.1, -0.3, -0.02}; break;
    case Family::Frechet: shapes = {0.1, 0.3, 0.02}; break;
    case Family::Gumbel: shapes = {0.0}; break;
  }
  UniformStream jitter(jitter_seed);
  for (int i = 0; i < count; ++i) {
    double a = mu0;
    double b = sigma0;
    double c = 0.0;
    if (static_cast<std::size_t>(i) < shapes.size()) {
      c = shapes[static_cast<std::size_t>(i)];
    } else {
      a += 0.3 * sigma0 * (2.0 * jitter.next() - 1.0);
      b *= std::exp(0.4 * (2.0 * jitter.next() - 1.0));
      const double u = jitter.next();
      switch (spec.family) {
        case Family::Gev: c = 0.6 * u - 0.3; break;
        case Family::Weibull: c = -0.01 - 0.4 * u; break;
        case Family::Frechet: c = 0.01 + 0.4 * u; break;
        case Family::Gumbel: c = 0.0; break;
      }
    }
    // Widen the scale until the start's support covers the data.
    GevParams g(a, b, c);
    for (int k = 0; k < 40; ++k) {
      const Support s = support(g);
      if (s.lower < sample.min() && s.upper > sample.max()) break;
      g = GevParams(g.a, g.b * 1.3, g.c);
    }
    if (spec.family == Family::Gev) {
      out.emplace_back(g);
    } else if (spec.family == Family::Gumbel) {
      out.emplace_back(EvParams::gumbel(g.a, g.b));
    } else {
      out.emplace_back(gev_to_ev(g));
    }
  }
  return out;
}

struct StartOutcome {
  SimplexResult simplex;
  bool on_edge = false;
};

StartOutcome run_start(const WorkingMap& map, const ObservedSample& sample, std::span<const double> theta0,
                       const SimplexOptions& opt) {
  std::vector<double> u0 = map.to_working(theta0);
  const auto steps = map.steps();
  auto objective = [&](std::span<const double> u) { return map.negative_loglik(u, sample); };
  StartOutcome out;
  out.simplex = nelder_mead(objective, u0, steps, opt);
  out.on_edge = map.on_regular_edge(out.simplex.x);
  return out;
}

FitResult fit_with_kind(const ModelSpec& spec, const ObservedSample& sample, LikelihoodKind kind,
                        const std::vector<std::vector<double>>& start_thetas, const SimplexOptions& opt,
                        bool& all_on_edge, std::vector<std::vector<double>>& edge_thetas, int& evaluations) {
  const WorkingMap map(spec, kind, scale_hint(spec, sample));
  std::optional<StartOutcome> best_interior;
  std::optional<StartOutcome> best_edge;
  for (const auto& theta0 : start_thetas) {
    if (!map.feasible(map.to_working(theta0), sample)) continue;
    StartOutcome o = run_start(map, sample, theta0, opt);
    evaluations += static_cast<int>(o.simplex.evaluations);
    if (!(o.simplex.value < 1e300)) continue;
    auto& slot = o.on_edge ? best_edge : best_interior;
    if (!slot || o.simplex.value < slot->simplex.value) slot = std::move(o);
  }
  all_on_edge = !best_interior && best_edge.has_value();
  if (best_edge) edge_thetas.push_back(map.to_theta(best_edge->simplex.x));
  FitResult res;
  res.spec = spec;
  res.kind_used = kind;
  if (!best_interior) {
    if (kind == LikelihoodKind::Exact && best_edge) {
      best_interior = best_edge;
    } else {
      return res;
    }
  }
  StartOutcome chosen = *best_interior;
  std::vector<double> theta_best = map.to_theta(chosen.simplex.x);
  if (kind == LikelihoodKind::Exact) {
    if (const auto anchored = WorkingMap::anchored(spec, scale_hint(spec, sample))) {
      if (anchored->feasible(anchored->to_working(theta_best), sample)) {
        StartOutcome a = run_start(*anchored, sample, theta_best, opt);
        evaluations += static_cast<int>(a.simplex.evaluations);
        if (a.simplex.value <= chosen.simplex.value) {
          theta_best = anchored->to_theta(a.simplex.x);
          chosen = a;
        }
      }
    }
  }
  if (!chosen.simplex.converged) {
    SimplexOptions longer = opt;
    longer.max_evaluations *= 4;
    StartOutcome again = run_start(map, sample, theta_best, longer);
    evaluations += static_cast<int>(again.simplex.evaluations);
    if (again.simplex.value <= chosen.simplex.value) {
      theta_best = map.to_theta(again.simplex.x);
      chosen = again;
    }
  }
  res.mle = theta_best;
  res.loglik_max = -chosen.simplex.value;
  res.converged = chosen.simplex.converged;
  res.iterations = evaluations;
  return res;
}

std::vector<std::vector<double>> start_thetas(const ModelSpec& spec, const ObservedSample& sample,
                                              const FitOptions& options) {
  std::vector<std::vector<double>> out = options.extra_starts;
  for (const Model& m : moment_starts(spec, sample, options.starts, options.jitter_seed)) {
    try {
      out.push_back(theta_from_model(spec, m));
    } catch (const DomainError&) {
    }
  }
  return out;
}

}  // namespace

Model FitResult::model() const {
  auto m = model_from_theta(spec, mle);
  if (!m) throw DomainError("fit result holds an infeasible parameter vector");
  return *m;
}

FitResult fit_mle(const ModelSpec& spec, const ObservedSample& sample, const FitOptions& options) {
  check_sample_for(spec, sample);
  const auto starts = start_thetas(spec, sample, options);
  if (starts.empty()) throw DomainError("no starting values for " + spec.label());

  int evaluations = 0;
  bool all_on_edge = false;
  std::vector<std::vector<double>> edge_thetas;
  const LikelihoodKind kind = initial_kind(options.policy);
  FitResult res = fit_with_kind(spec, sample, kind, starts, options.simplex, all_on_edge, edge_thetas, evaluations);

  if (kind == LikelihoodKind::Continuous && all_on_edge) {
    if (options.policy == KindPolicy::ContinuousOnly)
      throw SingularLikelihoodError("continuous likelihood of " + spec.label() +
                                    " is unbounded: the maximizer runs into the density singularity");
    auto exact_starts = starts;
    exact_starts.insert(exact_starts.end(), edge_thetas.begin(), edge_thetas.end());
    bool unused = false;
    std::vector<std::vector<double>> unused_edges;
    res = fit_with_kind(spec, sample, LikelihoodKind::Exact, exact_starts, options.simplex, unused, unused_edges,
                        evaluations);
    res.used_exact_fallback = true;
  }
  if (res.mle.empty()) throw ConvergenceError("no start produced a finite likelihood for " + spec.label());
  if (!res.converged) throw ConvergenceError("simplex search for " + spec.label() + " did not meet its tolerance");
  return res;
}

FitResult refit(const FitResult& fit, const ModelSpec& spec, const ObservedSample& sample,
                const SimplexOptions& simplex) {
  FitOptions opt;
  opt.simplex = simplex;
  opt.policy = fit.kind_used == LikelihoodKind::Exact ? KindPolicy::ExactOnly : KindPolicy::ContinuousWithExactFallback;
  opt.starts = 0;
  Model m = fit.model();
  if (spec.family == Family::Gumbel && std::holds_alternative<GevParams>(m)) {
    const auto& g = std::get<GevParams>(m);
    m = EvParams::gumbel(g.a, g.b);
  }
  try {
    opt.extra_starts.push_back(theta_from_model(spec, m));
  } catch (const DomainError&) {
    opt.starts = 5;
  }
  FitResult out = fit_mle(spec, sample, opt);
  out.used_exact_fallback = out.used_exact_fallback || fit.used_exact_fallback;
  return out;
}

// ---------------------------------------------------------------------------
// Profiles

Profiler::Profiler(const FitResult& fit, const ObservedSample& sample, std::size_t target)
    : fit_(fit), sample_(sample), target_(target), max_seen_(fit.loglik_max) {
  if (target >= fit.spec.arity()) throw DomainError("profile target index out of range");
  if (fit.mle.size() != fit.spec.arity()) throw DomainError("fit result has no mle");
}

const std::vector<double>& Profiler::warm_start(double t) const {
  const auto& side = t >= estimate() ? above_ : below_;
  const Point* best = nullptr;
  for (const auto& p : side) {
    if (!p.ok || p.theta.empty()) continue;
    if (!best || std::abs(p.t - t) < std::abs(best->t - t)) best = &p;
  }
  return best ? best->theta : fit_.mle;
}

Profiler::Point Profiler::evaluate(double t) {
  Point pt;
  pt.t = t;
  const WorkingMap map(fit_.spec, fit_.kind_used, scale_hint(fit_.spec, sample_), target_);
  const std::size_t d = fit_.spec.arity();

  std::vector<double> theta = warm_start(t);
  theta[target_] = t;
  std::vector<double> u_full = map.to_working(theta);
  const double fixed = u_full[target_];

  std::vector<std::size_t> free_idx;
  for (std::size_t j = 0; j < d; ++j)
    if (j != target_) free_idx.push_back(j);

  std::vector<double> work(d);
  auto objective = [&](std::span<const double> v) {
    for (std::size_t j = 0; j < free_idx.size(); ++j) work[free_idx[j]] = v[j];
    work[target_] = fixed;
    return map.negative_loglik(work, sample_);
  };
  auto nuisance_of = [&](const std::vector<double>& u) {
    std::vector<double> v;
    for (std::size_t j : free_idx) v.push_back(u[j]);
    return v;
  };

  // Candidate starts: warm start, then mle nuisance, then perturbations of
  // the scale and shape coordinates until one is feasible.
  std::vector<std::vector<double>> candidates{nuisance_of(u_full)};
  {
    std::vector<double> m = fit_.mle;
    m[target_] = t;
    candidates.push_back(nuisance_of(map.to_working(m)));
  }
  const auto steps_full = map.steps();
  for (int k = 1; k <= 12; ++k) {
    const double f = (k % 2 ? 1.0 : -1.0) * 0.5 * ((k + 1) / 2);
    auto v = candidates.front();
    for (std::size_t j = 0; j < free_idx.size(); ++j)
      if (map.role(free_idx[j]) != WorkingMap::Role::Location) v[j] += f * 10.0 * steps_full[free_idx[j]];
    candidates.push_back(std::move(v));
  }

  std::vector<double> start;
  for (auto& c : candidates) {
    if (objective(c) < 1e300) {
      start = c;
      break;
    }
  }
  ++evaluations_;
  auto& side = t >= estimate() ? above_ : below_;
  if (start.empty()) {
    // No feasible nuisance: e.g. a threshold that excludes observations.
    pt.loglik = -kInf;
    pt.r = 0.0;
    pt.ok = map.target_excludes_data(t, sample_);
    side.push_back(pt);
    return pt;
  }

  std::vector<double> step;
  for (std::size_t j : free_idx) step.push_back(steps_full[j]);
  SimplexOptions opt;
  opt.restarts = 1;
  SimplexResult r = free_idx.empty() ? SimplexResult{start, objective(start), 1, true} : nelder_mead(objective, start, step, opt);

  for (std::size_t j = 0; j < free_idx.size(); ++j) work[free_idx[j]] = r.x[j];
  work[target_] = fixed;
  pt.theta = map.to_theta(work);
  pt.theta[target_] = t;
  pt.loglik = r.value < 1e300 ? -r.value : -kInf;
  pt.ok = r.converged;

  // Exact likelihood on the bounded side: re-run with the endpoint as a
  // coordinate, which resolves maxima sitting on the top cell's kink.
  if (fit_.kind_used == LikelihoodKind::Exact && !free_idx.empty() && r.value < 1e300) {
    const auto anchored = WorkingMap::anchored(fit_.spec, scale_hint(fit_.spec, sample_), target_);
    if (anchored) {
      const std::vector<double> ua = anchored->to_working(pt.theta);
      if (anchored->feasible(ua, sample_)) {
        std::vector<double> wa(d);
        auto obj_a = [&](std::span<const double> v) {
          for (std::size_t j = 0; j < free_idx.size(); ++j) wa[free_idx[j]] = v[j];
          wa[target_] = ua[target_];
          return anchored->negative_loglik(wa, sample_);
        };
        std::vector<double> va, sa;
        const auto steps_a = anchored->steps();
        for (std::size_t j : free_idx) {
          va.push_back(ua[j]);
          sa.push_back(steps_a[j]);
        }
        const SimplexResult ra = nelder_mead(obj_a, va, sa, opt);
        if (ra.value < r.value) {
          for (std::size_t j = 0; j < free_idx.size(); ++j) wa[free_idx[j]] = ra.x[j];
          wa[target_] = ua[target_];
          pt.theta = anchored->to_theta(wa);
          pt.theta[target_] = t;
          pt.loglik = -ra.value;
          pt.ok = ra.converged;
        }
      }
    }
  }
  max_seen_ = std::max(max_seen_, pt.loglik);
  pt.r = relative_likelihood(std::min(pt.loglik, fit_.loglik_max), fit_.loglik_max);
  side.push_back(pt);
  return pt;
}

ProfileCurve profile_curve(const FitResult& fit, const ObservedSample& sample, std::size_t target,
                           const GridSpec& grid) {
  if (grid.points < 2) throw DomainError("profile grid needs at least two points");
  Profiler profiler(fit, sample, target);
  const double est = profiler.estimate();

  double lo, hi;
  if (grid.range) {
    std::tie(lo, hi) = *grid.range;
    if (!(lo < hi)) throw DomainError("profile grid range must be increasing");
  } else {
    const IntervalResult bracket = likelihood_interval(profiler, grid.bracket_level);
    lo = bracket.lower;
    hi = bracket.upper;
    // A side that never drops to the bracket level (e.g. a threshold whose
    // profile flattens toward the Gumbel limit) would stretch the grid over
    // a plateau. Cap it relative to the other side.
    const bool lo_found = bracket.lower_status == EndpointStatus::Found;
    const bool hi_found = bracket.upper_status == EndpointStatus::Found;
    if (!lo_found && hi_found) lo = std::max(lo, est - 3.0 * (hi - est));
    if (!hi_found && lo_found) hi = std::min(hi, est + 3.0 * (est - lo));
  }

  std::vector<double> ts;
  for (std::size_t i = 0; i < grid.points; ++i)
    ts.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid.points - 1));
  if (est > lo && est < hi) ts.push_back(est);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());

  // Fresh profiler so the warm-start chain walks outward from the mle.
  Profiler walk(fit, sample, target);
  std::map<double, Profiler::Point> pts;
  for (double t : ts)
    if (t >= est) pts.emplace(t, walk.evaluate(t));
  for (auto it = ts.rbegin(); it != ts.rend(); ++it)
    if (*it < est) pts.emplace(*it, walk.evaluate(*it));

  ProfileCurve curve;
  curve.parameter_name = fit.spec.coordinate_names()[target];
  curve.target_index = target;
  curve.spec = fit.spec;
  curve.estimate = est;
  curve.loglik_max = fit.loglik_max;
  std::size_t good = 0;
  for (const auto& [t, p] : pts) {
    curve.grid.push_back(t);
    curve.r_values.push_back(t == est ? 1.0 : p.r);
    std::vector<double> nuisance;
    for (std::size_t j = 0; j < p.theta.size(); ++j)
      if (j != target) nuisance.push_back(p.theta[j]);
    curve.nuisance_trace.push_back(std::move(nuisance));
    curve.ok.push_back(t == est || p.ok);
    good += curve.ok.back() ? 1 : 0;
  }
  if (static_cast<double>(good) < 0.8 * static_cast<double>(curve.grid.size()))
    throw ConvergenceError("profile of " + curve.parameter_name + ": fewer than 80% of grid points converged");
  return curve;
}

// ---------------------------------------------------------------------------
// Intervals

std::string_view to_string(IntervalMethod m) { return m == IntervalMethod::Aml ? "aml" : "profile"; }

std::string_view to_string(EndpointStatus s) {
  switch (s) {
    case EndpointStatus::Found: return "found";
    case EndpointStatus::Unbounded: return "unbounded";
    case EndpointStatus::Boundary: return "boundary";
    case EndpointStatus::Failed: return "failed";
  }
  return "failed";
}

bool IntervalResult::ok() const {
  return lower_status == EndpointStatus::Found && upper_status == EndpointStatus::Found && lower < upper;
}

namespace {

struct SideResult {
  double endpoint;
  double residual;
  EndpointStatus status;
};

SideResult search_side(const std::function<double(double)>& relative, double mle, double level_k, double dir,
                       double halfwidth, const IntervalOptions& opt, std::optional<double> limit) {
  std::map<double, double> memo;
  auto r_at = [&](double t) {
    auto it = memo.find(t);
    if (it != memo.end()) return it->second;
    const double r = relative(t);
    memo.emplace(t, r);
    return r;
  };
  const double log_k = std::log(level_k);
  auto g = [&](double t) { return std::max(std::log(std::max(r_at(t), 1e-300)), -700.0) - log_k; };

  double inner = mle;
  double step = halfwidth;
  double outer = mle;
  bool bracketed = false;
  for (int i = 0; i <= opt.max_doublings; ++i) {
    outer = mle + dir * step;
    if (limit && dir * (outer - *limit) >= 0.0) {
      outer = *limit;
      if (r_at(outer) >= level_k) return {outer, r_at(outer) - level_k, EndpointStatus::Unbounded};
      bracketed = true;
      break;
    }
    if (r_at(outer) < level_k) {
      bracketed = true;
      break;
    }
    inner = outer;
    step *= 2.0;
  }
  if (!bracketed) return {outer, r_at(outer) - level_k, EndpointStatus::Unbounded};

  const double g_in = g(inner);
  const double g_out = g(outer);
  const double ftol = 0.25 * opt.residual_tol / level_k;
  const double xtol = 1e-12 * (1.0 + std::abs(mle) + std::abs(outer - mle));
  const RootResult root = brent_root(g, inner, outer, g_in, g_out, ftol, xtol, 200);
  const double residual = r_at(root.root) - level_k;
  if (std::abs(residual) < opt.residual_tol) return {root.root, residual, EndpointStatus::Found};
  // Bracket collapsed on a jump in R (a support boundary).
  double best_in = mle;
  for (const auto& [t, r] : memo)
    if (r >= level_k && dir * (t - best_in) > 0.0) best_in = t;
  return {best_in, r_at(best_in) - level_k, EndpointStatus::Boundary};
}

}  // namespace

IntervalResult likelihood_interval(const std::function<double(double)>& relative, double mle, double level_k,
                                   const IntervalOptions& options) {
  if (!(level_k > 0.0 && level_k < 1.0)) throw DomainError("likelihood level must lie in (0, 1)");
  double hw = options.initial_halfwidth;
  if (!(hw > 0.0) || !std::isfinite(hw)) hw = std::max(0.1 * std::abs(mle), 1e-3);
  const SideResult lo = search_side(relative, mle, level_k, -1.0, hw, options, options.lower_limit);
  const SideResult hi = search_side(relative, mle, level_k, +1.0, hw, options, options.upper_limit);
  IntervalResult out;
  out.lower = lo.endpoint;
  out.upper = hi.endpoint;
  out.estimate = mle;
  out.level = level_k;
  out.method = IntervalMethod::ProfileLikelihood;
  out.endpoint_residuals = {lo.residual, hi.residual};
  out.lower_status = lo.status;
  out.upper_status = hi.status;
  return out;
}

IntervalResult likelihood_interval(Profiler& profiler, double level_k, const IntervalOptions& options) {
  IntervalOptions opt = options;
  const FitResult& fit = profiler.fit();
  const std::size_t target = profiler.target();
  if (!(opt.initial_halfwidth > 0.0)) {
    const auto hw = aml_halfwidth(fit, profiler.sample(), target, 0.95);
    opt.initial_halfwidth = hw ? *hw : 0.1 * (std::abs(fit.mle[target]) + scale_hint(fit.spec, profiler.sample()));
  }
  auto relative = [&](double t) { return profiler.evaluate(t).r; };
  return likelihood_interval(relative, profiler.estimate(), level_k, opt);
}

IntervalResult likelihood_interval(const FitResult& fit, const ObservedSample& sample, std::size_t target,
                                   double level_k, const IntervalOptions& options) {
  Profiler profiler(fit, sample, target);
  return likelihood_interval(profiler, level_k, options);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal quantile needs p in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

namespace {

Eigen::MatrixXd observed_information(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> x0, std::span<const double> h) {
  const auto d = static_cast<Eigen::Index>(x0.size());
  Eigen::MatrixXd info(d, d);
  std::vector<double> x(x0.begin(), x0.end());
  const double f0 = f(x);
  auto at = [&](Eigen::Index i, double di, Eigen::Index j, double dj) {
    x.assign(x0.begin(), x0.end());
    x[static_cast<std::size_t>(i)] += di;
    x[static_cast<std::size_t>(j)] += dj;
    return f(x);
  };
  for (Eigen::Index i = 0; i < d; ++i) {
    const double hi = h[static_cast<std::size_t>(i)];
    info(i, i) = -(at(i, hi, i, 0.0) - 2.0 * f0 + at(i, -hi, i, 0.0)) / (hi * hi);
    for (Eigen::Index j = 0; j < i; ++j) {
      const double hj = h[static_cast<std::size_t>(j)];
      const double v = -(at(i, hi, j, hj) - at(i, hi, j, -hj) - at(i, -hi, j, hj) + at(i, -hi, j, -hj)) / (4.0 * hi * hj);
      info(i, j) = v;
      info(j, i) = v;
    }
  }
  return info;
}

// Variance of coordinate `target` from the inverse information; throws when
// the information is not positive definite.
double inverse_information_entry(const Eigen::MatrixXd& info, Eigen::Index target) {
  if (!info.allFinite()) {
    throw NonPositiveDefiniteError("observed information has non-finite entries", {});
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
  const Eigen::VectorXd ev = eig.eigenvalues();
  if (ev.minCoeff() <= 0.0) {
    std::vector<double> vals(ev.data(), ev.data() + ev.size());
    std::ostringstream os;
    os << "observed information is not positive definite (eigenvalues:";
    for (double v : vals) os << ' ' << v;
    os << ")";
    throw NonPositiveDefiniteError(os.str(), vals);
  }
  const Eigen::MatrixXd inv = eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  return inv(target, target);
}

IntervalResult wald(double est, double se, double confidence) {
  const double z = normal_quantile(0.5 * (1.0 + confidence));
  // Round the half-width to one representable on both sides of est so the
  // interval is symmetric in floating point, not just algebraically.
  double hw = (est + z * se) - est;
  for (int i = 0; i < 64 && ((est + hw) - est != hw || est - (est - hw) != hw); ++i) hw = std::nextafter(hw, 2.0 * hw);
  IntervalResult out;
  out.estimate = est;
  out.lower = est - hw;
  out.upper = est + hw;
  out.level = confidence;
  out.method = IntervalMethod::Aml;
  return out;
}

double fit_se(const FitResult& fit, const ObservedSample& sample, std::size_t target) {
  const WorkingMap map(fit.spec, fit.kind_used, scale_hint(fit.spec, sample), target);
  const std::vector<double> u0 = map.to_working(fit.mle);
  auto f = [&](std::span<const double> u) {
    const double v = map.negative_loglik(u, sample, /*regular_branch=*/false);
    return v < 1e300 ? -v : -kInf;
  };
  auto h = map.steps();
  for (auto& s : h) s *= 0.02;
  const Eigen::MatrixXd info = observed_information(f, u0, h);
  const double var_u = inverse_information_entry(info, static_cast<Eigen::Index>(target));
  return std::sqrt(var_u) * std::abs(map.dtheta_du(target, u0[target]));
}

}  // namespace

IntervalResult aml_interval(const FitResult& fit, const ObservedSample& sample, std::size_t target,
                            double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) throw DomainError("confidence must lie in (0, 1)");
  if (target >= fit.spec.arity()) throw DomainError("AML target index out of range");
  return wald(fit.mle[target], fit_se(fit, sample, target), confidence);
}

IntervalResult aml_interval(const std::function<double(std::span<const double>)>& loglik,
                            std::span<const double> mle, std::span<const double> steps, std::size_t target,
                            double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) throw DomainError("confidence must lie in (0, 1)");
  if (target >= mle.size() || steps.size() != mle.size()) throw DomainError("AML target or steps out of range");
  const Eigen::MatrixXd info = observed_information(loglik, mle, steps);
  const double var = inverse_information_entry(info, static_cast<Eigen::Index>(target));
  return wald(mle[target], std::sqrt(var), confidence);
}

std::optional<double> aml_halfwidth(const FitResult& fit, const ObservedSample& sample, std::size_t target,
                                    double confidence) {
  try {
    const double se = fit_se(fit, sample, target);
    if (!std::isfinite(se) || !(se > 0.0)) return std::nullopt;
    return normal_quantile(0.5 * (1.0 + confidence)) * se;
  } catch (const NonPositiveDefiniteError&) {
    return std::nullopt;
  }
}

std::vector<double> loglik_gradient(const FitResult& fit, const ObservedSample& sample) {
  std::vector<double> grad(fit.mle.size());
  std::vector<double> x = fit.mle;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(fit.mle[i]));
    x[i] = fit.mle[i] + h;
    const double up = loglik_reparam(x, fit.spec, sample, fit.kind_used).value;
    x[i] = fit.mle[i] - h;
    const double dn = loglik_reparam(x, fit.spec, sample, fit.kind_used).value;
    x[i] = fit.mle[i];
    grad[i] = (up - dn) / (2.0 * h);
  }
  return grad;
}

Family select_submodel(double c_hat) {
  if (!std::isfinite(c_hat)) throw DomainError("shape estimate must be finite");
  if (c_hat < -1e-5) return Family::Weibull;
  if (c_hat > 1e-5) return Family::Frechet;
  return Family::Gumbel;
}

double gumbel_plausibility(const FitResult& gev_fit, const ObservedSample& sample) {
  if (gev_fit.spec.family != Family::Gev) throw DomainError("Gumbel plausibility needs a GEV fit");
  const std::size_t c_idx = gev_fit.spec.index_of("c");
  Profiler profiler(gev_fit, sample, c_idx);
  const Profiler::Point p = profiler.evaluate(0.0);
  double best = p.loglik;
  // Independent conditional fit: the Gumbel model is the GEV at c = 0.
  FitOptions opt;
  opt.policy = gev_fit.kind_used == LikelihoodKind::Exact ? KindPolicy::ExactOnly : KindPolicy::ContinuousOnly;
  try {
    const FitResult g = fit_mle(ModelSpec{Family::Gumbel, Parametrization::natural(), std::nullopt}, sample, opt);
    best = std::max(best, g.loglik_max);
  } catch (const ConvergenceError&) {
    if (!p.ok) throw;
  }
  if (!std::isfinite(best)) throw ConvergenceError("conditional fit at c = 0 failed");
  return relative_likelihood(std::min(best, gev_fit.loglik_max), gev_fit.loglik_max);
}

double gumbel_plausibility(const ProfileCurve& c_profile, const FitResult& gev_fit, const ObservedSample& sample) {
  if (c_profile.parameter_name != "c" || c_profile.spec.family != Family::Gev)
    throw DomainError("Gumbel plausibility needs a profile of the GEV shape c");
  if (c_profile.grid.empty() || c_profile.grid.front() > 0.0 || c_profile.grid.back() < 0.0)
    throw DomainError("shape profile grid does not bracket c = 0");
  return gumbel_plausibility(gev_fit, sample);
}

LrtResult lrt_nested(double loglik_restricted, double loglik_full) {
  if (!std::isfinite(loglik_full) || std::isnan(loglik_restricted))
    throw DomainError("likelihood ratio needs finite log-likelihoods");
  const double tol = 1e-6 * (1.0 + std::abs(loglik_full));
  if (loglik_restricted > loglik_full + tol)
    throw ConvergenceError("restricted model fits better than the full model; the full fit did not converge");
  const double diff = std::min(loglik_restricted - loglik_full, 0.0);
  LrtResult out;
  out.w = std::exp(diff);
  out.minus_two_log_w = -2.0 * diff;
  out.p_value = out.minus_two_log_w > 0.0
                    ? boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(1.0),
                                                               out.minus_two_log_w))
                    : 1.0;
  return out;
}

}  // namespace evd
