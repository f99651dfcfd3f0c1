#pragma once

// Continuation-ratio dose-response model and its target doses.
//
// Doses are on the log scale throughout. The model combines a toxicity
// logistic p_T(d) = logistic(theta3 + theta4 d) with a conditional efficacy
// logistic p_E|noT(d) = logistic(theta1 + theta2 d):
//
//   pi0 = (1 - p_E|noT)(1 - p_T)   neutral
//   pi1 = p_E|noT (1 - p_T)        success
//   pi2 = p_T                      toxicity

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "lord/errors.hpp"

namespace lord {

struct ThetaParams {
  double theta1 = 0.0;  ///< conditional-efficacy intercept
  double theta2 = 0.0;  ///< conditional-efficacy slope
  double theta3 = 0.0;  ///< toxicity intercept
  double theta4 = 0.0;  ///< toxicity slope

  bool finite() const noexcept {
    return std::isfinite(theta1) && std::isfinite(theta2) &&
           std::isfinite(theta3) && std::isfinite(theta4);
  }

  bool valid() const noexcept {
    return finite() && theta1 >= theta3 && theta3 < 0.0 && theta2 > 0.0 &&
           theta4 > 0.0;
  }

  void validate() const {
    if (!finite()) throw DomainError("theta has a non-finite component");
    if (!(theta1 >= theta3)) throw DomainError("theta1 must be >= theta3");
    if (!(theta3 < 0.0)) throw DomainError("theta3 must be negative");
    if (!(theta2 > 0.0)) throw DomainError("theta2 must be positive");
    if (!(theta4 > 0.0)) throw DomainError("theta4 must be positive");
  }

  friend bool operator==(const ThetaParams&, const ThetaParams&) = default;
};

struct DoseInterval {
  double lo = 0.0;
  double hi = 0.0;

  void validate() const {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
      throw DomainError("dose interval requires finite lo < hi");
  }

  bool contains(double d) const noexcept { return d >= lo && d <= hi; }

  friend bool operator==(const DoseInterval&, const DoseInterval&) = default;
};

struct DoseGrid {
  std::vector<double> x;

  void validate() const {
    if (x.size() < 2) throw DomainError("dose grid needs at least 2 doses");
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!std::isfinite(x[i])) throw DomainError("dose grid has a non-finite dose");
      if (i > 0 && !(x[i] > x[i - 1]))
        throw DomainError("dose grid must be strictly increasing");
    }
  }

  std::size_t size() const noexcept { return x.size(); }
  DoseInterval hull() const { return {x.front(), x.back()}; }

  friend bool operator==(const DoseGrid&, const DoseGrid&) = default;
};

using DoseSpace = std::variant<DoseInterval, DoseGrid>;

inline void validate(const DoseSpace& space) {
  std::visit([](const auto& s) { s.validate(); }, space);
}

struct NeutralProbability {
  double delta = 0.2;
  friend bool operator==(const NeutralProbability&, const NeutralProbability&) = default;
};

struct ConditionalEfficacy {
  double level = 0.6;
  friend bool operator==(const ConditionalEfficacy&, const ConditionalEfficacy&) = default;
};

/// How the minimum efficacious dose is located.
using MinEdDefinition = std::variant<NeutralProbability, ConditionalEfficacy>;

inline double mined_level(const MinEdDefinition& def) {
  return std::visit(
      [](const auto& d) -> double {
        if constexpr (std::is_same_v<std::decay_t<decltype(d)>, NeutralProbability>)
          return d.delta;
        else
          return d.level;
      },
      def);
}

struct OutcomeProbabilities {
  double neutral = 0.0;  // pi0
  double success = 0.0;  // pi1
  double toxic = 0.0;    // pi2
};

struct TargetDoses {
  double mted = 0.0;
  double obd = 0.0;
  double mined = 0.0;

  bool window_empty() const noexcept { return !(mined <= mted); }
};

/// Grid indices (0-based) of the discrete target doses.
struct DiscreteTargets {
  std::size_t mted = 0;
  std::size_t obd = 0;
  std::size_t mined = 0;

  friend bool operator==(const DiscreteTargets&, const DiscreteTargets&) = default;
};

namespace detail {

inline double logistic(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double logit(double p) noexcept { return std::log(p / (1.0 - p)); }

// log(1 + e^z) without overflow.
inline double softplus(double z) noexcept {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline void require_probability(double p, const char* name) {
  if (!(p > 0.0 && p < 1.0))
    throw DomainError(std::string(name) + " must lie in (0, 1)");
}

/// Root of a strictly decreasing function, starting from [-50, 50] and
/// doubling the bracket until the sign changes.
template <class F>
double decreasing_root(F&& f, double lo = -50.0, double hi = 50.0) {
  double flo = f(lo);
  double fhi = f(hi);
  for (int i = 0; i < 12 && !(flo >= 0.0 && fhi <= 0.0); ++i) {
    if (flo < 0.0) {
      lo *= 2.0;
      flo = f(lo);
    }
    if (fhi > 0.0) {
      hi *= 2.0;
      fhi = f(hi);
    }
  }
  if (!(flo >= 0.0 && fhi <= 0.0) || !std::isfinite(flo) || !std::isfinite(fhi))
    throw SolverError("could not bracket root on the log-dose axis");
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  std::uintmax_t max_iter = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(
      f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(), max_iter);
  const double fa = std::abs(f(a));
  const double fb = std::abs(f(b));
  return fa <= fb ? a : b;
}

}  // namespace detail

inline double conditional_efficacy(double d, const ThetaParams& t) noexcept {
  return detail::logistic(t.theta1 + t.theta2 * d);
}

inline double toxicity(double d, const ThetaParams& t) noexcept {
  return detail::logistic(t.theta3 + t.theta4 * d);
}

inline OutcomeProbabilities outcome_probabilities(double d, const ThetaParams& t) {
  if (!std::isfinite(d)) throw DomainError("dose must be finite");
  if (!t.finite()) throw DomainError("theta has a non-finite component");
  const double a = t.theta1 + t.theta2 * d;
  const double b = t.theta3 + t.theta4 * d;
  const double eff = detail::logistic(a);
  const double no_eff = detail::logistic(-a);
  const double tox = detail::logistic(b);
  const double no_tox = detail::logistic(-b);
  return {no_eff * no_tox, eff * no_tox, tox};
}

/// Log-dose at which the toxicity probability equals `gamma`.
inline double mtd(const ThetaParams& t, double gamma) {
  detail::require_probability(gamma, "target toxicity level");
  if (!t.finite()) throw DomainError("theta has a non-finite component");
  return (detail::logit(gamma) - t.theta3) / t.theta4;
}

/// Log-scaled stationarity condition of pi1:
///   log(theta2 (1 + e^{-(theta3 + theta4 d)})) - log(theta4 (1 + e^{theta1 + theta2 d}))
/// Strictly decreasing in d with the same root as the unscaled form.
inline double obd_residual(double d, const ThetaParams& t) noexcept {
  return std::log(t.theta2) + detail::softplus(-(t.theta3 + t.theta4 * d)) -
         std::log(t.theta4) - detail::softplus(t.theta1 + t.theta2 * d);
}

/// Log-dose maximizing the success probability pi1.
inline double obd(const ThetaParams& t) {
  t.validate();
  return detail::decreasing_root([&](double d) { return obd_residual(d, t); });
}

inline double mined(const ThetaParams& t, const MinEdDefinition& def) {
  t.validate();
  if (const auto* n = std::get_if<NeutralProbability>(&def)) {
    detail::require_probability(n->delta, "neutral probability threshold");
    // log pi0 is strictly decreasing; root-find on the log scale
    const double log_delta = std::log(n->delta);
    return detail::decreasing_root([&](double d) {
      return -detail::softplus(t.theta1 + t.theta2 * d) -
             detail::softplus(t.theta3 + t.theta4 * d) - log_delta;
    });
  }
  const double level = std::get<ConditionalEfficacy>(def).level;
  detail::require_probability(level, "conditional efficacy level");
  return (detail::logit(level) - t.theta1) / t.theta2;
}

inline TargetDoses target_doses(const ThetaParams& t, double gamma,
                                const MinEdDefinition& def) {
  return {mtd(t, gamma), obd(t), mined(t, def)};
}

namespace detail {

// First index attaining the minimum of score(i); ties go to the lower dose.
template <class Score>
std::size_t argmin_lowest(std::size_t n, Score&& score) {
  std::size_t best = 0;
  double best_score = score(0);
  for (std::size_t i = 1; i < n; ++i) {
    const double s = score(i);
    if (s < best_score) {
      best = i;
      best_score = s;
    }
  }
  return best;
}

}  // namespace detail

inline DiscreteTargets discrete_targets(const ThetaParams& t, const DoseGrid& grid,
                                        double gamma, const MinEdDefinition& def) {
  t.validate();
  grid.validate();
  detail::require_probability(gamma, "target toxicity level");
  const double level = mined_level(def);
  detail::require_probability(level, "minimum efficacy threshold");
  const bool neutral = std::holds_alternative<NeutralProbability>(def);
  const auto& x = grid.x;
  DiscreteTargets out;
  out.mted = detail::argmin_lowest(x.size(), [&](std::size_t i) {
    return std::abs(toxicity(x[i], t) - gamma);
  });
  out.obd = detail::argmin_lowest(x.size(), [&](std::size_t i) {
    return -outcome_probabilities(x[i], t).success;
  });
  out.mined = detail::argmin_lowest(x.size(), [&](std::size_t i) {
    const double p = neutral ? outcome_probabilities(x[i], t).neutral
                             : conditional_efficacy(x[i], t);
    return std::abs(p - level);
  });
  return out;
}

}  // namespace lord
