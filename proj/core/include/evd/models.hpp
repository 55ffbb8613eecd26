#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace evd {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class Family { Weibull, Gumbel, Frechet, Gev };

[[nodiscard]] std::string_view to_string(Family f);
[[nodiscard]] Family family_from_string(std::string_view name);

/// Shape values with |c| below this evaluate the Gumbel branch.
inline constexpr double kGumbelShapeEps = 1e-12;

/// Generalized extreme value parameters: location a, scale b > 0, shape c.
struct GevParams {
  double a = 0.0;
  double b = 1.0;
  double c = 0.0;

  GevParams() = default;
  GevParams(double location, double scale, double shape);

  [[nodiscard]] bool is_gumbel() const { return c == 0.0 || (c < kGumbelShapeEps && c > -kGumbelShapeEps); }
  /// Finite support endpoint a - b/c (upper for c < 0, lower for c > 0).
  [[nodiscard]] std::optional<double> endpoint() const;

  friend bool operator==(const GevParams&, const GevParams&) = default;
};

/// Weibull / Gumbel / Frechet parameters for maxima. beta is absent for Gumbel.
struct EvParams {
  Family family = Family::Gumbel;
  double mu = 0.0;
  double sigma = 1.0;
  std::optional<double> beta;

  EvParams() = default;
  EvParams(Family fam, double location, double scale, std::optional<double> shape = std::nullopt);

  static EvParams weibull(double mu, double sigma, double beta) { return {Family::Weibull, mu, sigma, beta}; }
  static EvParams gumbel(double mu, double sigma) { return {Family::Gumbel, mu, sigma, std::nullopt}; }
  static EvParams frechet(double mu, double sigma, double beta) { return {Family::Frechet, mu, sigma, beta}; }

  friend bool operator==(const EvParams&, const EvParams&) = default;
};

using Model = std::variant<GevParams, EvParams>;

/// Density value that can also carry the "singular" signal: the Weibull
/// density with beta < 1 (GEV c < -1) is unbounded at its upper endpoint.
struct Density {
  double value = 0.0;
  bool singular = false;

  static Density singular_point() { return {0.0, true}; }
};

struct Support {
  double lower;
  double upper;
  [[nodiscard]] bool contains(double x) const { return x >= lower && x <= upper; }
};

[[nodiscard]] Support support(const GevParams& p);
[[nodiscard]] Support support(const EvParams& p);
[[nodiscard]] Support support(const Model& m);

[[nodiscard]] Density pdf(const GevParams& p, double x);
[[nodiscard]] Density pdf(const EvParams& p, double x);
[[nodiscard]] Density pdf(const Model& m, double x);

/// log density; -inf outside the support. Singular flag as for pdf.
[[nodiscard]] Density log_pdf(const GevParams& p, double x);
[[nodiscard]] Density log_pdf(const EvParams& p, double x);
[[nodiscard]] Density log_pdf(const Model& m, double x);

[[nodiscard]] double cdf(const GevParams& p, double x);
[[nodiscard]] double cdf(const EvParams& p, double x);
[[nodiscard]] double cdf(const Model& m, double x);

[[nodiscard]] double quantile(const GevParams& p, double alpha);
[[nodiscard]] double quantile(const EvParams& p, double alpha);
[[nodiscard]] double quantile(const Model& m, double alpha);

/// Quantile of probability alpha. Constructing one checks alpha in (0,1).
struct QuantileSpec {
  double alpha;
  double q;

  QuantileSpec(const Model& m, double probability);
};

/// Inverse-CDF draws from a caller-supplied uniform stream; every u must be in (0,1).
[[nodiscard]] std::vector<double> sample_from_uniforms(const Model& m, std::span<const double> uniforms);

/// n inverse-CDF draws; deterministic in seed on every platform.
[[nodiscard]] std::vector<double> sample(const Model& m, std::size_t n, std::uint64_t seed);

[[nodiscard]] EvParams gev_to_ev(const GevParams& p);
[[nodiscard]] GevParams ev_to_gev(const EvParams& p);

/// Uniform (0,1) stream built on mt19937_64 with a fixed 53-bit mapping.
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed);
  double next();

 private:
  std::mt19937_64 engine_;
};

}  // namespace evd
