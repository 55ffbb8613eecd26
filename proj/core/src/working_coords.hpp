#pragma once

// Unconstrained optimisation coordinates for each ModelSpec.

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "evd/inference.hpp"
#include "evd/likelihood.hpp"

namespace evd {

/// Typical spread of the data, used to size simplex steps and fallbacks.
inline double scale_hint(const ModelSpec&, const ObservedSample& sample) {
  const double s = sample.stddev() * std::sqrt(6.0) / std::numbers::pi;
  return s > 0.0 ? s : 1e-6 * (1.0 + std::abs(sample.mean()));
}

/// Per-coordinate transform theta <-> u:
///   location / quantile   identity
///   GEV scale, sigma      log
///   EV sigma (3 params)   log(sigma / beta), i.e. the GEV scale b
///   GEV shape             identity (c)
///   EV beta               -1/beta (Weibull) or 1/beta (Frechet), the GEV shape
/// The EV parametrisation stays well conditioned near the Gumbel limit this way.
class WorkingMap {
 public:
  enum class Role { Location, Scale, Shape };

  WorkingMap(const ModelSpec& spec, LikelihoodKind kind, double hint, std::optional<std::size_t> target = std::nullopt)
      : spec_(spec), kind_(kind), hint_(hint) {
    const std::size_t d = spec.arity();
    coords_.resize(d);
    if (spec.family == Family::Gev) {
      coords_ = {Coord::Identity, Coord::Log, Coord::Identity};
    } else if (spec.family == Family::Gumbel) {
      coords_ = {Coord::Identity, Coord::Log};
    } else {
      const Coord shape = spec.family == Family::Weibull ? Coord::NegInverse : Coord::Inverse;
      if (spec.fixed_threshold) {
        coords_ = {spec.coords.is_quantile() ? Coord::Identity : Coord::Log, shape};
      } else {
        const bool plain = target && *target == 1;
        coords_ = {Coord::Identity, plain ? Coord::Log : Coord::LogOverShape, shape};
      }
    }
    shape_index_ = (spec.family == Family::Gumbel) ? -1 : static_cast<int>(d) - 1;
  }

  /// Variant for the exact likelihood on the bounded (c < 0) side, where the
  /// maximizer often sits on the kink "upper endpoint = x_max + h/2". One
  /// free coordinate (the location, or the scale when the location is the
  /// profile target) is replaced by the endpoint itself so that the kink is
  /// axis aligned. nullopt when the spec has no free endpoint.
  static std::optional<WorkingMap> anchored(const ModelSpec& spec, double hint,
                                            std::optional<std::size_t> target = std::nullopt) {
    if (spec.family != Family::Gev && spec.family != Family::Weibull) return std::nullopt;
    if (spec.fixed_threshold) return std::nullopt;
    const std::size_t anchor = (target && *target == 0) ? 1 : 0;
    if (target && *target == anchor) return std::nullopt;
    // Weibull natural: the location already is the endpoint.
    if (spec.family == Family::Weibull && !spec.coords.is_quantile() && anchor == 0) return std::nullopt;
    if (spec.family == Family::Weibull && !spec.coords.is_quantile() && anchor == 1) return std::nullopt;
    WorkingMap m(spec, LikelihoodKind::Exact, hint, target);
    m.anchor_ = static_cast<int>(anchor);
    if (anchor == 1 && m.coords_[1] == Coord::LogOverShape) m.coords_[1] = Coord::Identity;
    m.coords_[anchor] = Coord::Identity;
    if (spec.coords.alpha) m.log_y_ = std::log(-std::log(*spec.coords.alpha));
    return m;
  }

  [[nodiscard]] bool is_anchored() const { return anchor_ >= 0; }

  [[nodiscard]] Role role(std::size_t j) const {
    if (static_cast<int>(j) == anchor_) return Role::Location;
    switch (coords_[j]) {
      case Coord::Identity: return static_cast<int>(j) == shape_index_ ? Role::Shape : Role::Location;
      case Coord::NegInverse:
      case Coord::Inverse: return Role::Shape;
      default: return Role::Scale;
    }
  }

  [[nodiscard]] std::vector<double> to_working(std::span<const double> theta) const {
    std::vector<double> u(theta.size());
    const double beta = shape_index_ >= 0 ? theta[static_cast<std::size_t>(shape_index_)] : 1.0;
    for (std::size_t j = 0; j < theta.size(); ++j) {
      switch (coords_[j]) {
        case Coord::Identity: u[j] = theta[j]; break;
        case Coord::Log: u[j] = std::log(theta[j]); break;
        case Coord::LogOverShape: u[j] = std::log(theta[j] / beta); break;
        case Coord::NegInverse: u[j] = -1.0 / theta[j]; break;
        case Coord::Inverse: u[j] = 1.0 / theta[j]; break;
      }
    }
    if (anchor_ >= 0) {
      const auto m = model_from_theta(spec_, theta);
      u[static_cast<std::size_t>(anchor_)] = m ? support(*m).upper : std::numeric_limits<double>::quiet_NaN();
    }
    return u;
  }

  void to_theta_into(std::span<const double> u, std::span<double> theta) const {
    double beta = 1.0;
    if (shape_index_ >= 0) {
      const auto s = static_cast<std::size_t>(shape_index_);
      switch (coords_[s]) {
        case Coord::NegInverse: beta = -1.0 / u[s]; break;
        case Coord::Inverse: beta = 1.0 / u[s]; break;
        default: beta = u[s]; break;
      }
    }
    for (std::size_t j = 0; j < u.size(); ++j) {
      switch (coords_[j]) {
        case Coord::Identity: theta[j] = u[j]; break;
        case Coord::Log: theta[j] = std::exp(u[j]); break;
        case Coord::LogOverShape: theta[j] = std::exp(u[j]) * beta; break;
        case Coord::NegInverse:
        case Coord::Inverse: theta[j] = beta; break;
      }
    }
    if (anchor_ >= 0) solve_anchor(u, theta, beta);
  }

  [[nodiscard]] std::vector<double> to_theta(std::span<const double> u) const {
    std::vector<double> theta(u.size());
    to_theta_into(u, theta);
    return theta;
  }

  /// Shape caps plus, for the continuous likelihood, the regular branch.
  [[nodiscard]] bool in_domain(std::span<const double> u, bool regular_branch) const {
    if (shape_index_ < 0) return true;
    const double s = u[static_cast<std::size_t>(shape_index_)];
    if (anchor_ >= 0) return s >= -kShapeCap && s <= -kMinShape;
    const bool continuous = kind_ == LikelihoodKind::Continuous && regular_branch;
    switch (spec_.family) {
      case Family::Gev: return s >= (continuous ? -1.0 : -kShapeCap) && s <= kShapeCap;
      case Family::Weibull: return s >= (continuous ? -1.0 : -kShapeCap) && s <= -kMinShape;
      case Family::Frechet: return s >= kMinShape && s <= kShapeCap;
      default: return true;
    }
  }

  [[nodiscard]] double negative_loglik(std::span<const double> u, const ObservedSample& sample,
                                       bool regular_branch = true) const {
    if (!in_domain(u, regular_branch)) return kInfeasible;
    std::array<double, 3> theta{};
    const std::span<double> th(theta.data(), u.size());
    to_theta_into(u, th);
    const LogLik ll = loglik_reparam(th, spec_, sample, kind_);
    if (ll.singular || !(ll.value > kLogLikFloor)) return kInfeasible;
    return -ll.value;
  }

  [[nodiscard]] bool feasible(std::span<const double> u, const ObservedSample& sample) const {
    return negative_loglik(u, sample) < kInfeasible;
  }

  [[nodiscard]] bool on_regular_edge(std::span<const double> u) const {
    if (kind_ != LikelihoodKind::Continuous || shape_index_ < 0) return false;
    if (spec_.family != Family::Gev && spec_.family != Family::Weibull) return false;
    return u[static_cast<std::size_t>(shape_index_)] <= -1.0 + kSingularBoundaryTol;
  }

  [[nodiscard]] std::vector<double> steps() const {
    std::vector<double> s(coords_.size());
    for (std::size_t j = 0; j < coords_.size(); ++j) {
      switch (role(j)) {
        case Role::Location: s[j] = 0.1 * hint_; break;
        case Role::Scale: s[j] = 0.1; break;
        case Role::Shape: s[j] = 0.05; break;
      }
    }
    // Frechet / Weibull shapes live on one side of zero; keep the first
    // simplex step from crossing it.
    if (shape_index_ >= 0 && spec_.family != Family::Gev) s[static_cast<std::size_t>(shape_index_)] = -0.02;
    if (spec_.family == Family::Frechet && shape_index_ >= 0) s[static_cast<std::size_t>(shape_index_)] = 0.02;
    return s;
  }

  /// d theta_j / d u_j for coordinates whose transform is componentwise.
  [[nodiscard]] double dtheta_du(std::size_t j, double u) const {
    if (static_cast<int>(j) == anchor_) return std::numeric_limits<double>::quiet_NaN();
    switch (coords_[j]) {
      case Coord::Identity: return 1.0;
      case Coord::Log: return std::exp(u);
      case Coord::NegInverse:
      case Coord::Inverse: return 1.0 / (u * u);
      case Coord::LogOverShape: break;
    }
    return std::numeric_limits<double>::quiet_NaN();
  }

  /// True when a profiled threshold value t leaves observations outside the
  /// support, so a zero likelihood there is genuine.
  [[nodiscard]] bool target_excludes_data(double t, const ObservedSample& sample) const {
    if (spec_.coords.is_quantile() || spec_.fixed_threshold) return false;
    if (spec_.family == Family::Weibull) return t < sample.max();
    if (spec_.family == Family::Frechet) return t > sample.min();
    return false;
  }

 private:
  enum class Coord { Identity, Log, LogOverShape, NegInverse, Inverse };

  // theta[anchor] from the endpoint e = u[anchor] and the other coordinates.
  // GEV:     theta0 - e = (b/c) k,      k = exp(-c log y) (quantile) or 1
  // Weibull: theta0 - e = -sigma w,     w = y^(1/beta)
  void solve_anchor(std::span<const double> u, std::span<double> theta, double beta) const {
    const auto an = static_cast<std::size_t>(anchor_);
    const double e = u[an];
    const bool q = spec_.coords.is_quantile();
    if (spec_.family == Family::Gev) {
      const double c = theta[2];
      const double k = q ? std::exp(-c * log_y_) : 1.0;
      if (an == 0) {
        theta[0] = e + theta[1] / c * k;
      } else {
        theta[1] = (theta[0] - e) * c / k;
      }
      return;
    }
    const double w = std::exp(log_y_ / beta);
    if (an == 0) {
      theta[0] = e - theta[1] * w;
    } else {
      theta[1] = (e - theta[0]) / w;
    }
  }

  static constexpr double kInfeasible = 1e300;
  static constexpr double kShapeCap = 20.0;
  static constexpr double kMinShape = 1e-6;

  ModelSpec spec_;
  LikelihoodKind kind_;
  double hint_;
  std::vector<Coord> coords_;
  int shape_index_ = -1;
  int anchor_ = -1;
  double log_y_ = 0.0;
};

}  // namespace evd
