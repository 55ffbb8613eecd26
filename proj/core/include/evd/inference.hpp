#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "evd/likelihood.hpp"
#include "evd/optimize.hpp"

namespace evd {

class SingularLikelihoodError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// All observations equal: the scale is not identifiable.
class DegenerateSampleError : public DomainError {
 public:
  using DomainError::DomainError;
};

class NonPositiveDefiniteError : public std::runtime_error {
 public:
  NonPositiveDefiniteError(const std::string& what, std::vector<double> eigenvalues)
      : std::runtime_error(what), eigenvalues_(std::move(eigenvalues)) {}
  [[nodiscard]] const std::vector<double>& eigenvalues() const { return eigenvalues_; }

 private:
  std::vector<double> eigenvalues_;
};

enum class KindPolicy { ContinuousWithExactFallback, ContinuousOnly, ExactOnly };

/// Maximizer closer than this to the regular-branch edge (GEV c = -1,
/// Weibull beta = 1) means the continuous likelihood has no interior
/// maximum and is climbing toward the density singularity.
inline constexpr double kSingularBoundaryTol = 1e-3;

struct FitOptions {
  KindPolicy policy = KindPolicy::ContinuousWithExactFallback;
  /// Moment-based starts plus jitter; extra_starts are tried in addition.
  int starts = 5;
  std::vector<std::vector<double>> extra_starts;
  std::uint64_t jitter_seed = 0x5eed;
  SimplexOptions simplex;
};

struct FitResult {
  ModelSpec spec;
  std::vector<double> mle;
  double loglik_max = 0.0;
  LikelihoodKind kind_used = LikelihoodKind::Continuous;
  bool converged = false;
  bool used_exact_fallback = false;
  int iterations = 0;

  [[nodiscard]] Model model() const;
};

/// Maximum likelihood fit by multi-start Nelder-Mead. Scale parameters are
/// optimized on the log scale; shape on the GEV c scale.
///
/// Under the continuous likelihood only the regular branch (GEV c >= -1,
/// Weibull beta >= 1) is searched, where every density is bounded. If every
/// start ends on that edge the sample is treated as singular: ContinuousOnly
/// throws SingularLikelihoodError, ContinuousWithExactFallback refits with
/// the exact likelihood and sets used_exact_fallback.
[[nodiscard]] FitResult fit_mle(const ModelSpec& spec, const ObservedSample& sample, const FitOptions& options = {});

/// Refit in other coordinates (e.g. quantile) starting from an existing mle
/// mapped through the invariance of the likelihood. Keeps the likelihood kind.
[[nodiscard]] FitResult refit(const FitResult& fit, const ModelSpec& spec, const ObservedSample& sample,
                              const SimplexOptions& simplex = {});

/// Conditional maximisation with one coordinate held fixed; the engine
/// behind profile curves and likelihood intervals. Nuisance parameters are
/// warm-started from the nearest previously evaluated point on the same side
/// of the mle, so evaluation order matters and is kept sequential.
class Profiler {
 public:
  struct Point {
    double t = 0.0;
    double loglik = 0.0;
    double r = 0.0;
    std::vector<double> theta;
    bool ok = false;
  };

  Profiler(const FitResult& fit, const ObservedSample& sample, std::size_t target);

  Point evaluate(double t);
  [[nodiscard]] double estimate() const { return fit_.mle[target_]; }
  [[nodiscard]] double loglik_max() const { return fit_.loglik_max; }
  [[nodiscard]] std::size_t target() const { return target_; }
  [[nodiscard]] const FitResult& fit() const { return fit_; }
  [[nodiscard]] const ObservedSample& sample() const { return sample_; }
  /// Largest conditional maximum seen, which exceeds loglik_max only when
  /// the global fit stopped short of the true maximum.
  [[nodiscard]] double max_seen() const { return max_seen_; }
  [[nodiscard]] int evaluations() const { return evaluations_; }

 private:
  const std::vector<double>& warm_start(double t) const;

  FitResult fit_;
  const ObservedSample& sample_;
  std::size_t target_;
  std::vector<Point> below_;
  std::vector<Point> above_;
  double max_seen_;
  int evaluations_ = 0;
};

struct ProfileCurve {
  std::string parameter_name;
  std::size_t target_index = 0;
  ModelSpec spec;
  double estimate = 0.0;
  double loglik_max = 0.0;
  std::vector<double> grid;
  std::vector<double> r_values;
  std::vector<std::vector<double>> nuisance_trace;
  std::vector<bool> ok;
};

struct GridSpec {
  std::size_t points = 101;
  /// Explicit range; when absent the grid spans the interval at bracket_level.
  std::optional<std::pair<double, double>> range;
  double bracket_level = 0.02;
};

/// Relative profile likelihood on a grid. The mle is inserted into the grid.
/// Points whose conditional optimisation failed are flagged in ok; throws
/// ConvergenceError when fewer than 80% succeed.
[[nodiscard]] ProfileCurve profile_curve(const FitResult& fit, const ObservedSample& sample, std::size_t target,
                                         const GridSpec& grid = {});

enum class IntervalMethod { ProfileLikelihood, Aml };
enum class EndpointStatus { Found, Unbounded, Boundary, Failed };

[[nodiscard]] std::string_view to_string(IntervalMethod m);
[[nodiscard]] std::string_view to_string(EndpointStatus s);

struct IntervalResult {
  double lower = 0.0;
  double upper = 0.0;
  double estimate = 0.0;
  /// Likelihood level k (profile) or confidence (AML).
  double level = 0.0;
  IntervalMethod method = IntervalMethod::ProfileLikelihood;
  std::pair<double, double> endpoint_residuals{0.0, 0.0};
  EndpointStatus lower_status = EndpointStatus::Found;
  EndpointStatus upper_status = EndpointStatus::Found;

  [[nodiscard]] bool ok() const;
  [[nodiscard]] bool contains(double v) const { return v >= lower && v <= upper; }
  [[nodiscard]] double length() const { return upper - lower; }
};

struct IntervalOptions {
  /// Starting bracket half-width; 0 requests the AML half-width (or a
  /// heuristic when the information matrix is unusable).
  double initial_halfwidth = 0.0;
  int max_doublings = 40;
  double residual_tol = 1e-4;
  /// Hard limits on the search; endpoints beyond report Unbounded.
  std::optional<double> lower_limit;
  std::optional<double> upper_limit;
};

/// {t : R(t) >= k} for an arbitrary relative likelihood function with
/// R(mle) = 1, by bracket doubling followed by bracketed root finding.
[[nodiscard]] IntervalResult likelihood_interval(const std::function<double(double)>& relative, double mle,
                                                 double level_k, const IntervalOptions& options = {});

/// Profile-likelihood interval of one coordinate of a fitted model.
[[nodiscard]] IntervalResult likelihood_interval(Profiler& profiler, double level_k,
                                                 const IntervalOptions& options = {});
[[nodiscard]] IntervalResult likelihood_interval(const FitResult& fit, const ObservedSample& sample,
                                                 std::size_t target, double level_k,
                                                 const IntervalOptions& options = {});

/// Standard normal quantile.
[[nodiscard]] double normal_quantile(double p);

/// Wald interval estimate +- z * se, se from the inverse observed information.
[[nodiscard]] IntervalResult aml_interval(const FitResult& fit, const ObservedSample& sample, std::size_t target,
                                          double confidence);

/// Wald interval for an arbitrary log-likelihood; steps are the central
/// difference increments per coordinate.
[[nodiscard]] IntervalResult aml_interval(const std::function<double(std::span<const double>)>& loglik,
                                          std::span<const double> mle, std::span<const double> steps,
                                          std::size_t target, double confidence);

/// Half-width z * se of the AML interval, or nullopt when the information
/// matrix is not positive definite.
[[nodiscard]] std::optional<double> aml_halfwidth(const FitResult& fit, const ObservedSample& sample,
                                                  std::size_t target, double confidence);

/// Central-difference gradient of the log-likelihood at the mle, natural coordinates.
[[nodiscard]] std::vector<double> loglik_gradient(const FitResult& fit, const ObservedSample& sample);

/// Weibull for c_hat < -1e-5, Frechet for c_hat > 1e-5, Gumbel otherwise.
[[nodiscard]] Family select_submodel(double c_hat);

/// R_p(c = 0) by a dedicated conditional fit at c = 0. The curve must be a
/// profile of the GEV shape whose grid brackets 0.
[[nodiscard]] double gumbel_plausibility(const ProfileCurve& c_profile, const FitResult& gev_fit,
                                         const ObservedSample& sample);
[[nodiscard]] double gumbel_plausibility(const FitResult& gev_fit, const ObservedSample& sample);

struct LrtResult {
  double w = 1.0;
  double minus_two_log_w = 0.0;
  double p_value = 1.0;
};

/// Likelihood ratio of nested models with one degree of freedom.
[[nodiscard]] LrtResult lrt_nested(double loglik_restricted, double loglik_full);

}  // namespace evd
