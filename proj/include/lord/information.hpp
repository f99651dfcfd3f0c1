#pragma once

// Fisher information for the continuation-ratio model.
//
// A single observation at dose d is a trinomial draw with probabilities
// pi(d, theta). Its information is the multinomial form
//
//   mu(d) = sum_k grad(pi_k) grad(pi_k)^T / pi_k
//
// which for this model collapses to two rank-one blocks on the regressor
// g(d) = (1, d): the efficacy pair (theta1, theta2) weighted by
// pi0 pi1 / (pi0 + pi1) and the toxicity pair (theta3, theta4) weighted by
// pi2 (1 - pi2).

#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lord/cr_model.hpp"
#include "lord/errors.hpp"

namespace lord {

using InfoMatrix = Eigen::Matrix4d;
using CVector = Eigen::Vector4d;

/// Value returned by criteria for designs with a singular information matrix.
inline constexpr double kSingular = std::numeric_limits<double>::infinity();

/// Relative pivot tolerance of the symmetric factorization.
inline constexpr double kPivotTolerance = 1e-12;

struct DesignMeasure {
  std::vector<double> points;
  std::vector<double> weights;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }

  double total_weight() const {
    return std::accumulate(weights.begin(), weights.end(), 0.0);
  }

  void validate() const {
    if (points.size() != weights.size())
      throw DomainError("design has mismatched point and weight counts");
    if (points.empty()) throw DomainError("design has no support points");
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!std::isfinite(points[i])) throw DomainError("design point is not finite");
      if (!(weights[i] >= 0.0)) throw DomainError("design weight is negative");
    }
    if (std::abs(total_weight() - 1.0) > 1e-12)
      throw DomainError("design weights must sum to 1");
  }

  friend bool operator==(const DesignMeasure&, const DesignMeasure&) = default;
};

namespace detail {

struct BlockWeights {
  double efficacy = 0.0;
  double toxicity = 0.0;
};

inline std::optional<BlockWeights> block_weights(double d, const ThetaParams& t) noexcept {
  const double a = t.theta1 + t.theta2 * d;
  const double b = t.theta3 + t.theta4 * d;
  const double eff = logistic(a);
  const double no_eff = logistic(-a);
  const double tox = logistic(b);
  const double no_tox = logistic(-b);
  // pi0 pi1 / (pi0 + pi1) = p_E (1 - p_E)(1 - p_T)
  const BlockWeights w{eff * no_eff * no_tox, tox * no_tox};
  const double pi0 = no_eff * no_tox;
  const double pi1 = eff * no_tox;
  if (!(pi0 > 0.0 && pi1 > 0.0 && tox > 0.0)) return std::nullopt;
  return w;
}

inline void add_mu(InfoMatrix& m, double d, const BlockWeights& w, double scale) {
  const double e = scale * w.efficacy;
  const double k = scale * w.toxicity;
  const double d2 = d * d;
  m(0, 0) += e;
  m(0, 1) += e * d;
  m(1, 1) += e * d2;
  m(2, 2) += k;
  m(2, 3) += k * d;
  m(3, 3) += k * d2;
}

inline void symmetrize_upper(InfoMatrix& m) {
  m(1, 0) = m(0, 1);
  m(3, 2) = m(2, 3);
}

inline std::optional<InfoMatrix> try_design_fim(const DesignMeasure& xi,
                                                const ThetaParams& t) noexcept {
  InfoMatrix m = InfoMatrix::Zero();
  for (std::size_t i = 0; i < xi.points.size(); ++i) {
    if (xi.weights[i] == 0.0) continue;
    const auto w = block_weights(xi.points[i], t);
    if (!w) return std::nullopt;
    add_mu(m, xi.points[i], *w, xi.weights[i]);
  }
  symmetrize_upper(m);
  return m;
}

/// LDL^T factorization that reports failure when a pivot falls below
/// kPivotTolerance relative to the largest diagonal entry.
inline std::optional<Eigen::LDLT<InfoMatrix>> factorize(const InfoMatrix& m) {
  const double scale = m.diagonal().cwiseAbs().maxCoeff();
  if (!(scale > 0.0) || !std::isfinite(scale)) return std::nullopt;
  Eigen::LDLT<InfoMatrix> ldlt(m);
  if (ldlt.info() != Eigen::Success) return std::nullopt;
  const auto& dvec = ldlt.vectorD();
  for (int i = 0; i < dvec.size(); ++i)
    if (!(dvec(i) > kPivotTolerance * scale)) return std::nullopt;
  return ldlt;
}

}  // namespace detail

/// Per-observation information matrix at log-dose `d`.
inline InfoMatrix mu(double d, const ThetaParams& t) {
  if (!std::isfinite(d)) throw DomainError("dose must be finite");
  if (!t.finite()) throw DomainError("theta has a non-finite component");
  const auto w = detail::block_weights(d, t);
  if (!w)
    throw DegenerateDoseError("an outcome probability vanishes at dose " +
                              std::to_string(d));
  InfoMatrix m = InfoMatrix::Zero();
  detail::add_mu(m, d, *w, 1.0);
  detail::symmetrize_upper(m);
  return m;
}

/// M(xi) = sum_i rho_i mu(d_i).
inline InfoMatrix design_fim(const DesignMeasure& xi, const ThetaParams& t) {
  xi.validate();
  InfoMatrix m = InfoMatrix::Zero();
  for (std::size_t i = 0; i < xi.size(); ++i)
    if (xi.weights[i] > 0.0) m += xi.weights[i] * mu(xi.points[i], t);
  return m;
}

/// -ln det M. Returns kSingular when M is not positive definite.
inline double d_criterion(const InfoMatrix& m) {
  const auto f = detail::factorize(m);
  if (!f) return kSingular;
  return -f->vectorD().array().log().sum();
}

/// c^T M^{-1} c. Returns kSingular when M is not positive definite.
inline double c_criterion(const InfoMatrix& m, const CVector& c) {
  const auto f = detail::factorize(m);
  if (!f) return kSingular;
  return c.dot(f->solve(c));
}

inline double d_criterion(const DesignMeasure& xi, const ThetaParams& t) {
  const auto m = detail::try_design_fim(xi, t);
  return m ? d_criterion(*m) : kSingular;
}

inline double c_criterion(const DesignMeasure& xi, const ThetaParams& t,
                          const CVector& c) {
  const auto m = detail::try_design_fim(xi, t);
  return m ? c_criterion(*m, c) : kSingular;
}

/// Gradient of the OBD with respect to theta by implicit differentiation of
/// the (log-scaled) stationarity condition of pi1.
inline CVector c_vector(const ThetaParams& t) {
  const double d = obd(t);
  const double sa = detail::logistic(t.theta1 + t.theta2 * d);
  const double sb = detail::logistic(-(t.theta3 + t.theta4 * d));
  const double dg_dd = -t.theta4 * sb - t.theta2 * sa;
  if (std::abs(dg_dd) < 1e-12)
    throw DegenerateGradientError("OBD condition has a vanishing dose derivative");
  const CVector dg_dtheta(-sa, 1.0 / t.theta2 - sa * d, -sb, -sb * d - 1.0 / t.theta4);
  return -dg_dtheta / dg_dd;
}

}  // namespace lord
