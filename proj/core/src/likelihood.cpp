#include "evd/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace evd {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// log(F(u) - F(l)) for F = exp(-t) with t decreasing; t_u = t(u) and
// dt = t(l) - t(u) > 0, both computed by the caller without cancellation.
double log_cell(double t_u, double dt) { return -t_u + std::log(-std::expm1(-dt)); }

// log(1 - F(l)) when the cell's upper edge is clamped to the upper support bound.
double log_upper_cell(double t_l) { return std::log(-std::expm1(-t_l)); }

double gumbel_cell(double mu, double sigma, double x, double h) {
  const double t_u = std::exp(-(x + 0.5 * h - mu) / sigma);
  return log_cell(t_u, t_u * std::expm1(h / sigma));
}

double gev_cell(const GevParams& p, double x, double h) {
  if (p.is_gumbel()) return gumbel_cell(p.a, p.b, x, h);
  // t = s^(-1/c) with s = 1 + c z. Both the cell's t values and their ratio
  // are taken from the edge farther from the endpoint, whose s carries no
  // cancellation, so a cell touching the endpoint stays consistent.
  const double inv_c = 1.0 / p.c;
  const double ch = p.c * (h / p.b);
  const double cz_l = p.c * (x - 0.5 * h - p.a) / p.b;
  const double cz_u = p.c * (x + 0.5 * h - p.a) / p.b;
  if (p.c > 0.0) {
    if (cz_u <= -1.0) return -kInf;
    const double t_u = std::exp(-std::log1p(cz_u) * inv_c);
    if (cz_l <= -1.0) return -t_u;
    const double lr = -inv_c * std::log1p(-ch / (1.0 + cz_u));  // log(t_l / t_u)
    return log_cell(t_u, t_u * std::expm1(lr));
  }
  if (cz_l <= -1.0) return -kInf;
  const double t_l = std::exp(-std::log1p(cz_l) * inv_c);
  if (cz_u <= -1.0) return log_upper_cell(t_l);
  const double lr = -inv_c * std::log1p(ch / (1.0 + cz_l));  // log(t_u / t_l)
  return log_cell(t_l * std::exp(lr), -t_l * std::expm1(lr));
}

double ev_cell(const EvParams& p, double x, double h) {
  const double l = x - 0.5 * h;
  const double u = x + 0.5 * h;
  switch (p.family) {
    case Family::Gumbel: return gumbel_cell(p.mu, p.sigma, x, h);
    case Family::Frechet: {
      const double beta = *p.beta;
      if (u <= p.mu) return -kInf;
      const double w_u = (u - p.mu) / p.sigma;
      const double t_u = std::pow(w_u, -beta);
      if (l <= p.mu) return -t_u;
      const double w_l = (l - p.mu) / p.sigma;
      return log_cell(t_u, t_u * std::expm1(beta * std::log1p((h / p.sigma) / w_l)));
    }
    case Family::Weibull: {
      const double beta = *p.beta;
      if (l >= p.mu) return -kInf;
      const double w_l = (p.mu - l) / p.sigma;
      if (u >= p.mu) return log_upper_cell(std::pow(w_l, beta));
      const double w_u = (p.mu - u) / p.sigma;
      const double t_u = std::pow(w_u, beta);
      return log_cell(t_u, t_u * std::expm1(beta * std::log1p((h / p.sigma) / w_u)));
    }
    case Family::Gev: break;
  }
  return -kInf;
}

template <class Params, class Cell>
LogLik accumulate(const Params& p, const ObservedSample& sample, LikelihoodKind kind, Cell cell) {
  LogLik out;
  if (kind == LikelihoodKind::Exact) {
    const double h = sample.precision();
    if (!(h > 0.0)) throw DomainError("exact likelihood needs a positive precision h");
    for (double x : sample.values()) {
      const double v = cell(p, x, h);
      if (v == -kInf || std::isnan(v)) return LogLik::minus_infinity();
      out.value += v;
    }
    return out;
  }
  for (double x : sample.values()) {
    const Density d = log_pdf(p, x);
    if (d.singular) {
      out.singular = true;
      continue;
    }
    if (d.value == -kInf) return LogLik::minus_infinity();
    out.value += d.value;
  }
  if (out.singular) out.value = kInf;
  return out;
}

bool positive_finite(double v) { return v > 0.0 && std::isfinite(v); }

bool all_finite(std::span<const double> theta) {
  return std::all_of(theta.begin(), theta.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

double detect_precision(std::span<const double> values) {
  for (int d = 0; d <= 10; ++d) {
    const double scale = std::pow(10.0, d);
    const bool resolved = std::all_of(values.begin(), values.end(), [scale](double x) {
      const double s = x * scale;
      const double tol = std::max(1e-6, 8.0 * std::numeric_limits<double>::epsilon() * std::abs(s));
      return std::abs(s - std::round(s)) <= tol;
    });
    if (resolved) return 1.0 / scale;
  }
  return 1e-10;
}

ObservedSample::ObservedSample(std::vector<double> values, double precision_h)
    : values_(std::move(values)), precision_h_(precision_h) {
  if (values_.empty()) throw DomainError("sample must be nonempty");
  if (!std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); }))
    throw DomainError("sample values must be finite");
  if (!positive_finite(precision_h_)) throw DomainError("precision h must be positive");
  const auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
  min_ = *lo;
  max_ = *hi;
}

ObservedSample ObservedSample::with_detected_precision(std::vector<double> values) {
  const double h = detect_precision(values);
  return {std::move(values), h};
}

double ObservedSample::mean() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(values_.size());
}

double ObservedSample::stddev() const {
  if (values_.size() < 2) return 0.0;
  const double m = mean();
  double ss = 0.0;
  for (double v : values_) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values_.size() - 1));
}

std::string_view to_string(LikelihoodKind k) { return k == LikelihoodKind::Exact ? "exact" : "continuous"; }

Parametrization Parametrization::quantile(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("quantile probability must lie in (0, 1)");
  return Parametrization{alpha};
}

std::size_t ModelSpec::arity() const {
  switch (family) {
    case Family::Gumbel: return 2;
    case Family::Gev: return 3;
    default: return fixed_threshold ? 2 : 3;
  }
}

std::vector<std::string> ModelSpec::coordinate_names() const {
  const bool q = coords.is_quantile();
  switch (family) {
    case Family::Gev: return {q ? "Q" : "a", "b", "c"};
    case Family::Gumbel: return {q ? "Q" : "mu", "sigma"};
    default:
      if (fixed_threshold) return {q ? "Q" : "sigma", "beta"};
      return {q ? "Q" : "mu", "sigma", "beta"};
  }
}

std::size_t ModelSpec::index_of(std::string_view name) const {
  const auto names = coordinate_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  throw DomainError("model " + label() + " has no coordinate '" + std::string(name) + "'");
}

std::string ModelSpec::label() const {
  std::ostringstream os;
  os << to_string(family);
  if (fixed_threshold) os << "(mu=" << *fixed_threshold << ")";
  return os.str();
}

std::optional<Model> model_from_theta(const ModelSpec& spec, std::span<const double> theta) {
  if (theta.size() != spec.arity()) throw DomainError("parameter vector has the wrong arity for " + spec.label());
  if (!all_finite(theta)) return std::nullopt;
  const std::optional<double> alpha = spec.coords.alpha;
  const double y = alpha ? -std::log(*alpha) : 0.0;

  if (spec.family == Family::Gev) {
    const double b = theta[1];
    const double c = theta[2];
    if (!positive_finite(b)) return std::nullopt;
    double a = theta[0];
    if (alpha) {
      const double ly = std::log(y);
      a = (c < kGumbelShapeEps && c > -kGumbelShapeEps) ? theta[0] + b * ly : theta[0] - (b / c) * std::expm1(-c * ly);
    }
    if (!std::isfinite(a)) return std::nullopt;
    return GevParams(a, b, c);
  }
  if (spec.family == Family::Gumbel) {
    const double sigma = theta[1];
    if (!positive_finite(sigma)) return std::nullopt;
    const double mu = alpha ? theta[0] + sigma * std::log(y) : theta[0];
    return EvParams::gumbel(mu, sigma);
  }

  const bool weibull = spec.family == Family::Weibull;
  double mu = 0.0;
  double sigma = 0.0;
  double beta = 0.0;
  if (spec.fixed_threshold) {
    mu = *spec.fixed_threshold;
    beta = theta[1];
    if (!positive_finite(beta)) return std::nullopt;
    if (alpha) {
      const double dist = weibull ? mu - theta[0] : theta[0] - mu;
      sigma = weibull ? dist / std::pow(y, 1.0 / beta) : dist * std::pow(y, 1.0 / beta);
    } else {
      sigma = theta[0];
    }
  } else {
    sigma = theta[1];
    beta = theta[2];
    if (!positive_finite(beta)) return std::nullopt;
    if (alpha) {
      mu = weibull ? theta[0] + sigma * std::pow(y, 1.0 / beta) : theta[0] - sigma * std::pow(y, -1.0 / beta);
    } else {
      mu = theta[0];
    }
  }
  if (!positive_finite(sigma) || !positive_finite(beta) || !std::isfinite(mu)) return std::nullopt;
  return EvParams(spec.family, mu, sigma, beta);
}

std::vector<double> theta_from_model(const ModelSpec& spec, const Model& model) {
  const std::optional<double> alpha = spec.coords.alpha;
  if (spec.family == Family::Gev) {
    const GevParams p = std::holds_alternative<GevParams>(model) ? std::get<GevParams>(model)
                                                                  : ev_to_gev(std::get<EvParams>(model));
    return {alpha ? quantile(p, *alpha) : p.a, p.b, p.c};
  }
  const EvParams p =
      std::holds_alternative<EvParams>(model) ? std::get<EvParams>(model) : gev_to_ev(std::get<GevParams>(model));
  if (p.family != spec.family)
    throw DomainError("cannot express a " + std::string(to_string(p.family)) + " model in " + spec.label() +
                      " coordinates");
  const double loc = alpha ? quantile(p, *alpha) : p.mu;
  if (spec.family == Family::Gumbel) return {loc, p.sigma};
  if (spec.fixed_threshold) return {alpha ? loc : p.sigma, *p.beta};
  return {loc, p.sigma, *p.beta};
}

LogLik LogLik::minus_infinity() { return {-kInf, false}; }

bool LogLik::is_minus_infinity() const { return !singular && !(value > kLogLikFloor); }

LogLik loglik(const GevParams& model, const ObservedSample& sample, LikelihoodKind kind) {
  return accumulate(model, sample, kind, gev_cell);
}

LogLik loglik(const EvParams& model, const ObservedSample& sample, LikelihoodKind kind) {
  return accumulate(model, sample, kind, ev_cell);
}

LogLik loglik(const Model& model, const ObservedSample& sample, LikelihoodKind kind) {
  return std::visit([&](const auto& p) { return loglik(p, sample, kind); }, model);
}

LogLik loglik_reparam(std::span<const double> theta, const ModelSpec& spec, const ObservedSample& sample,
                      LikelihoodKind kind) {
  const auto model = model_from_theta(spec, theta);
  if (!model) return LogLik::minus_infinity();
  return loglik(*model, sample, kind);
}

double relative_likelihood(double loglik_value, double loglik_max) {
  if (!std::isfinite(loglik_max)) throw DomainError("maximum log-likelihood must be finite");
  if (loglik_value == -kInf || loglik_value <= kLogLikFloor) return 0.0;
  if (!std::isfinite(loglik_value)) throw DomainError("log-likelihood value must be finite or -inf");
  return std::clamp(std::exp(loglik_value - loglik_max), 0.0, 1.0);
}

}  // namespace evd
