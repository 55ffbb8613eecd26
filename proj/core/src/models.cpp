#include "evd/models.hpp"

#include <cmath>
#include <limits>

namespace evd {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw DomainError(std::string(what) + " must be finite");
}

void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("quantile probability must lie in (0, 1)");
}

Density from_log(Density ld) {
  if (ld.singular) return ld;
  return {std::exp(ld.value), false};
}

// Gumbel kernel shared by GEV c=0 and the EV Gumbel family.
double gumbel_log_pdf(double mu, double sigma, double x) {
  const double z = (x - mu) / sigma;
  return -std::log(sigma) - z - std::exp(-z);
}

double gumbel_cdf(double mu, double sigma, double x) { return std::exp(-std::exp(-(x - mu) / sigma)); }

}  // namespace

std::string_view to_string(Family f) {
  switch (f) {
    case Family::Weibull: return "weibull";
    case Family::Gumbel: return "gumbel";
    case Family::Frechet: return "frechet";
    case Family::Gev: return "gev";
  }
  return "unknown";
}

Family family_from_string(std::string_view name) {
  if (name == "weibull") return Family::Weibull;
  if (name == "gumbel") return Family::Gumbel;
  if (name == "frechet") return Family::Frechet;
  if (name == "gev") return Family::Gev;
  throw DomainError("unknown family '" + std::string(name) + "'");
}

GevParams::GevParams(double location, double scale, double shape) : a(location), b(scale), c(shape) {
  require_finite(a, "GEV location");
  require_finite(c, "GEV shape");
  if (!(b > 0.0) || !std::isfinite(b)) throw DomainError("GEV scale must be positive and finite");
}

std::optional<double> GevParams::endpoint() const {
  if (is_gumbel()) return std::nullopt;
  return a - b / c;
}

EvParams::EvParams(Family fam, double location, double scale, std::optional<double> shape)
    : family(fam), mu(location), sigma(scale), beta(shape) {
  if (family == Family::Gev) throw DomainError("EvParams cannot carry the GEV family");
  require_finite(mu, "EV location");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("EV scale must be positive and finite");
  if (family == Family::Gumbel) {
    if (beta) throw DomainError("Gumbel parameters take no shape");
  } else {
    if (!beta) throw DomainError("Weibull and Frechet parameters need a shape");
    if (!(*beta > 0.0) || !std::isfinite(*beta)) throw DomainError("EV shape must be positive and finite");
  }
}

Support support(const GevParams& p) {
  if (p.is_gumbel()) return {-kInf, kInf};
  const double e = p.a - p.b / p.c;
  return p.c < 0.0 ? Support{-kInf, e} : Support{e, kInf};
}

Support support(const EvParams& p) {
  switch (p.family) {
    case Family::Weibull: return {-kInf, p.mu};
    case Family::Frechet: return {p.mu, kInf};
    default: return {-kInf, kInf};
  }
}

Support support(const Model& m) {
  return std::visit([](const auto& p) { return support(p); }, m);
}

Density log_pdf(const GevParams& p, double x) {
  require_finite(x, "density argument");
  if (p.is_gumbel()) return {gumbel_log_pdf(p.a, p.b, x), false};
  const double cz = p.c * (x - p.a) / p.b;
  if (cz < -1.0) return {-kInf, false};
  if (cz == -1.0) {
    // At the finite endpoint.
    if (p.c < -1.0) return Density::singular_point();
    if (p.c == -1.0) return {-std::log(p.b), false};
    return {-kInf, false};
  }
  const double l = std::log1p(cz);
  return {-std::log(p.b) - (1.0 + 1.0 / p.c) * l - std::exp(-l / p.c), false};
}

Density log_pdf(const EvParams& p, double x) {
  require_finite(x, "density argument");
  switch (p.family) {
    case Family::Gumbel: return {gumbel_log_pdf(p.mu, p.sigma, x), false};
    case Family::Frechet: {
      if (x <= p.mu) return {-kInf, false};
      const double beta = *p.beta;
      const double w = (x - p.mu) / p.sigma;
      const double lw = std::log(w);
      return {std::log(beta / p.sigma) - (beta + 1.0) * lw - std::exp(-beta * lw), false};
    }
    case Family::Weibull: {
      const double beta = *p.beta;
      if (x > p.mu) return {-kInf, false};
      if (x == p.mu) {
        if (beta < 1.0) return Density::singular_point();
        if (beta == 1.0) return {-std::log(p.sigma), false};
        return {-kInf, false};
      }
      const double w = (p.mu - x) / p.sigma;
      const double lw = std::log(w);
      return {std::log(beta / p.sigma) + (beta - 1.0) * lw - std::exp(beta * lw), false};
    }
    case Family::Gev: break;
  }
  throw DomainError("invalid EV family");
}

Density log_pdf(const Model& m, double x) {
  return std::visit([x](const auto& p) { return log_pdf(p, x); }, m);
}

Density pdf(const GevParams& p, double x) { return from_log(log_pdf(p, x)); }
Density pdf(const EvParams& p, double x) { return from_log(log_pdf(p, x)); }
Density pdf(const Model& m, double x) { return from_log(log_pdf(m, x)); }

double cdf(const GevParams& p, double x) {
  require_finite(x, "distribution argument");
  if (p.is_gumbel()) return gumbel_cdf(p.a, p.b, x);
  const double cz = p.c * (x - p.a) / p.b;
  if (cz <= -1.0) return p.c < 0.0 ? 1.0 : 0.0;
  return std::exp(-std::exp(-std::log1p(cz) / p.c));
}

double cdf(const EvParams& p, double x) {
  require_finite(x, "distribution argument");
  switch (p.family) {
    case Family::Gumbel: return gumbel_cdf(p.mu, p.sigma, x);
    case Family::Frechet:
      if (x <= p.mu) return 0.0;
      return std::exp(-std::pow((x - p.mu) / p.sigma, -*p.beta));
    case Family::Weibull:
      if (x >= p.mu) return 1.0;
      return std::exp(-std::pow((p.mu - x) / p.sigma, *p.beta));
    case Family::Gev: break;
  }
  throw DomainError("invalid EV family");
}

double cdf(const Model& m, double x) {
  return std::visit([x](const auto& p) { return cdf(p, x); }, m);
}

double quantile(const GevParams& p, double alpha) {
  require_alpha(alpha);
  const double ly = std::log(-std::log(alpha));
  if (p.is_gumbel()) return p.a - p.b * ly;
  // a - (b/c)(1 - y^{-c}) written to stay accurate as c -> 0.
  return p.a + (p.b / p.c) * std::expm1(-p.c * ly);
}

double quantile(const EvParams& p, double alpha) {
  require_alpha(alpha);
  const double y = -std::log(alpha);
  switch (p.family) {
    case Family::Gumbel: return p.mu - p.sigma * std::log(y);
    case Family::Frechet: return p.mu + p.sigma * std::pow(y, -1.0 / *p.beta);
    case Family::Weibull: return p.mu - p.sigma * std::pow(y, 1.0 / *p.beta);
    case Family::Gev: break;
  }
  throw DomainError("invalid EV family");
}

double quantile(const Model& m, double alpha) {
  return std::visit([alpha](const auto& p) { return quantile(p, alpha); }, m);
}

QuantileSpec::QuantileSpec(const Model& m, double probability) : alpha(probability), q(quantile(m, probability)) {}

UniformStream::UniformStream(std::uint64_t seed) : engine_(seed) {}

double UniformStream::next() {
  // 53 random bits, offset by half a step so the result is never 0 or 1.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

std::vector<double> sample_from_uniforms(const Model& m, std::span<const double> uniforms) {
  std::vector<double> out;
  out.reserve(uniforms.size());
  for (double u : uniforms) out.push_back(quantile(m, u));
  return out;
}

std::vector<double> sample(const Model& m, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw DomainError("sample size must be positive");
  UniformStream stream(seed);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(quantile(m, stream.next()));
  return out;
}

EvParams gev_to_ev(const GevParams& p) {
  if (p.is_gumbel()) return EvParams::gumbel(p.a, p.b);
  if (p.c < 0.0) return EvParams::weibull(p.a - p.b / p.c, -p.b / p.c, -1.0 / p.c);
  return EvParams::frechet(p.a - p.b / p.c, p.b / p.c, 1.0 / p.c);
}

GevParams ev_to_gev(const EvParams& p) {
  switch (p.family) {
    case Family::Gumbel: return {p.mu, p.sigma, 0.0};
    case Family::Weibull: return {p.mu - p.sigma, p.sigma / *p.beta, -1.0 / *p.beta};
    case Family::Frechet: return {p.mu + p.sigma, p.sigma / *p.beta, 1.0 / *p.beta};
    case Family::Gev: break;
  }
  throw DomainError("invalid EV family");
}

}  // namespace evd
