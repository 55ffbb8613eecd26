#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evd/models.hpp"

namespace evd {

/// Stand-in for -inf inside optimizer arithmetic; compares as -inf.
inline constexpr double kLogLikFloor = -1e300;

/// Smallest power of ten 10^-d, d in [0, 10], at which every value is
/// recorded exactly. Falls back to 1e-10.
[[nodiscard]] double detect_precision(std::span<const double> values);

/// Block maxima as recorded, plus the measurement precision h.
class ObservedSample {
 public:
  ObservedSample(std::vector<double> values, double precision_h);
  /// Precision inferred with detect_precision.
  static ObservedSample with_detected_precision(std::vector<double> values);

  [[nodiscard]] std::span<const double> values() const { return values_; }
  [[nodiscard]] std::size_t size() const { return values_.size(); }
  [[nodiscard]] double precision() const { return precision_h_; }
  [[nodiscard]] double min() const { return min_; }
  [[nodiscard]] double max() const { return max_; }
  [[nodiscard]] double mean() const;
  [[nodiscard]] double stddev() const;

 private:
  std::vector<double> values_;
  double precision_h_;
  double min_;
  double max_;
};

enum class LikelihoodKind { Continuous, Exact };

[[nodiscard]] std::string_view to_string(LikelihoodKind k);

/// Natural coordinates, or the location replaced by the quantile Q_alpha.
struct Parametrization {
  std::optional<double> alpha;

  static Parametrization natural() { return {}; }
  static Parametrization quantile(double alpha);
  [[nodiscard]] bool is_quantile() const { return alpha.has_value(); }

  friend bool operator==(const Parametrization&, const Parametrization&) = default;
};

/// Family plus coordinate system of a free-parameter vector.
///
/// Coordinates (natural units):
///   GEV            natural (a, b, c)          quantile (Q, b, c)
///   Gumbel         natural (mu, sigma)        quantile (Q, sigma)
///   Weibull/Frechet natural (mu, sigma, beta) quantile (Q, sigma, beta)
/// With fixed_threshold set (Weibull/Frechet only) mu is held constant and
/// the free coordinates become (sigma, beta) or (Q, beta).
struct ModelSpec {
  Family family = Family::Gev;
  Parametrization coords;
  std::optional<double> fixed_threshold;

  [[nodiscard]] std::size_t arity() const;
  [[nodiscard]] std::vector<std::string> coordinate_names() const;
  /// Index of the named coordinate ("a", "Q", "c", "mu", ...); throws if absent.
  [[nodiscard]] std::size_t index_of(std::string_view name) const;
  [[nodiscard]] std::string label() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Model recovered from a free-parameter vector by closed-form inversion of
/// the quantile formula. nullopt when theta is infeasible.
[[nodiscard]] std::optional<Model> model_from_theta(const ModelSpec& spec, std::span<const double> theta);

/// Free-parameter vector of a model in the spec's coordinates. GEV
/// parameters are mapped to the spec's EV family when needed, and vice versa.
[[nodiscard]] std::vector<double> theta_from_model(const ModelSpec& spec, const Model& model);

/// Log-likelihood value; value may be -inf. singular marks a density
/// factor that is unbounded (continuous likelihood only).
struct LogLik {
  double value = 0.0;
  bool singular = false;

  static LogLik minus_infinity();
  [[nodiscard]] bool is_minus_infinity() const;
};

[[nodiscard]] LogLik loglik(const GevParams& model, const ObservedSample& sample, LikelihoodKind kind);
[[nodiscard]] LogLik loglik(const EvParams& model, const ObservedSample& sample, LikelihoodKind kind);
[[nodiscard]] LogLik loglik(const Model& model, const ObservedSample& sample, LikelihoodKind kind);

/// loglik of the model recovered from theta; infeasible theta gives -inf.
[[nodiscard]] LogLik loglik_reparam(std::span<const double> theta, const ModelSpec& spec, const ObservedSample& sample,
                                    LikelihoodKind kind);

/// exp(value - max) clamped to [0, 1]; value = -inf gives 0.
[[nodiscard]] double relative_likelihood(double loglik_value, double loglik_max);

}  // namespace evd
