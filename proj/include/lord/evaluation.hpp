#pragma once

// Optimality verification and design comparison metrics.

#include <cmath>
#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lord/cr_model.hpp"
#include "lord/errors.hpp"
#include "lord/information.hpp"

namespace lord {

/// GET tolerance on the sensitivity function.
inline constexpr double kGetTolerance = 1e-3;

/// Sample count for sensitivity curves over an interval.
inline constexpr std::size_t kSensitivitySamples = 2001;

struct CurvePoint {
  double dose = 0.0;
  double value = 0.0;
};

struct SensitivityCurve {
  std::vector<CurvePoint> samples;
  double max_violation = 0.0;
  std::vector<CurvePoint> design_point_residuals;

  double max_abs_residual() const {
    double m = 0.0;
    for (const auto& r : design_point_residuals) m = std::max(m, std::abs(r.value));
    return m;
  }

  bool passes(double tol = kGetTolerance) const {
    return max_violation <= tol && max_abs_residual() <= tol;
  }
};

struct EfficiencyReport {
  double d_eff = 0.0;
  double c_eff = 0.0;
  double delta = 0.0;
  double s = 0.0;
  double score = 0.0;
};

/// Distance of (d_eff, c_eff) from the ideal point (1, 1).
inline double tradeoff_distance(double d_eff, double c_eff) {
  return std::hypot(1.0 - d_eff, 1.0 - c_eff);
}

inline double composite_score(double d_eff, double c_eff, double s) {
  return std::sqrt((d_eff * c_eff + d_eff * s + c_eff * s) / 3.0);
}

namespace detail {

inline std::vector<double> sample_doses(const DoseSpace& region, std::size_t n) {
  if (const auto* g = std::get_if<DoseGrid>(&region)) return g->x;
  const auto& iv = std::get<DoseInterval>(region);
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i)
    d[i] = n == 1 ? iv.lo
                  : iv.lo + (iv.hi - iv.lo) * static_cast<double>(i) /
                                static_cast<double>(n - 1);
  d.back() = iv.hi;
  return d;
}

inline Eigen::LDLT<InfoMatrix> require_factor(const InfoMatrix& m, const char* what) {
  auto f = factorize(m);
  if (!f) throw SingularDesignError(std::string(what) + ": information matrix is singular");
  return *f;
}

template <class Phi>
SensitivityCurve build_curve(const DesignMeasure& xi, const DoseSpace& region,
                             std::size_t samples, Phi&& phi) {
  SensitivityCurve out;
  out.max_violation = -std::numeric_limits<double>::infinity();
  for (const double d : sample_doses(region, samples)) {
    const double v = phi(d);
    out.samples.push_back({d, v});
    out.max_violation = std::max(out.max_violation, v);
  }
  for (std::size_t i = 0; i < xi.size(); ++i)
    if (xi.weights[i] > 0.0) out.design_point_residuals.push_back({xi.points[i], phi(xi.points[i])});
  return out;
}

}  // namespace detail

/// phi(d) = tr(M^{-1} mu(d)) - 4 over the restricted region.
inline SensitivityCurve sensitivity_d(const DesignMeasure& xi, const ThetaParams& t,
                                      const DoseSpace& region,
                                      std::size_t samples = kSensitivitySamples) {
  const auto f = detail::require_factor(design_fim(xi, t), "sensitivity_d");
  const InfoMatrix inv = f.solve(InfoMatrix::Identity());
  return detail::build_curve(xi, region, samples, [&](double d) {
    return (inv * mu(d, t)).trace() - 4.0;
  });
}

/// phi(d) = c^T M^{-1} mu(d) M^{-1} c / c^T M^{-1} c - 1 over the restricted region.
inline SensitivityCurve sensitivity_c(const DesignMeasure& xi, const ThetaParams& t,
                                      const CVector& c, const DoseSpace& region,
                                      std::size_t samples = kSensitivitySamples) {
  const auto f = detail::require_factor(design_fim(xi, t), "sensitivity_c");
  const CVector a = f.solve(c);
  const double var = c.dot(a);
  if (!(var > 0.0)) throw DomainError("sensitivity_c needs a nonzero c vector");
  return detail::build_curve(xi, region, samples, [&](double d) {
    return a.dot(mu(d, t) * a) / var - 1.0;
  });
}

/// (det M(xi) / det M(ref))^{1/4}.
inline double d_efficiency(const DesignMeasure& xi, const DesignMeasure& ref,
                           const ThetaParams& t) {
  const auto fx = detail::require_factor(design_fim(xi, t), "design");
  const auto fr = detail::require_factor(design_fim(ref, t), "D reference design");
  const double log_ratio =
      fx.vectorD().array().log().sum() - fr.vectorD().array().log().sum();
  return std::exp(log_ratio / 4.0);
}

/// c^T M^{-1}(ref) c / c^T M^{-1}(xi) c.
inline double c_efficiency(const DesignMeasure& xi, const DesignMeasure& ref,
                           const ThetaParams& t, const CVector& c) {
  const auto fx = detail::require_factor(design_fim(xi, t), "design");
  const auto fr = detail::require_factor(design_fim(ref, t), "c reference design");
  return c.dot(fr.solve(c)) / c.dot(fx.solve(c));
}

/// Expected success rate of `xi` relative to assigning everyone OBD' of `grid`.
inline double success_proportion(const DesignMeasure& xi, const ThetaParams& t,
                                 const DoseGrid& grid) {
  t.validate();
  grid.validate();
  double best_pi1 = 0.0;
  for (const double x : grid.x)
    best_pi1 = std::max(best_pi1, outcome_probabilities(x, t).success);
  double expected = 0.0;
  for (std::size_t i = 0; i < xi.size(); ++i)
    expected += xi.weights[i] * outcome_probabilities(xi.points[i], t).success;
  return expected / best_pi1;
}

inline EfficiencyReport efficiencies(const DesignMeasure& xi, const ThetaParams& t,
                                     const DesignMeasure& ref_d, const DesignMeasure& ref_c,
                                     const CVector& c, const DoseGrid& grid) {
  EfficiencyReport r;
  r.d_eff = d_efficiency(xi, ref_d, t);
  r.c_eff = c_efficiency(xi, ref_c, t, c);
  r.delta = tradeoff_distance(r.d_eff, r.c_eff);
  r.s = success_proportion(xi, t, grid);
  r.score = composite_score(r.d_eff, r.c_eff, r.s);
  return r;
}

/// Stationary allocation of the random walk rule targeting the safe OBD.
/// Returns the full grid; doses above the highest safe dose get weight 0.
inline DesignMeasure rwr_stationary(const ThetaParams& t, const DoseGrid& grid,
                                    double gamma) {
  t.validate();
  grid.validate();
  detail::require_probability(gamma, "target toxicity level");
  std::size_t safe = 0;  // number of doses with pi2 <= gamma
  while (safe < grid.size() && toxicity(grid.x[safe], t) <= gamma) ++safe;
  if (safe == 0)
    throw NoSafeDoseError("toxicity at the lowest dose exceeds the target level");

  // unnormalized Pi_k = prod_{j=2}^{k} lambda_j with Pi_1 = 1
  std::vector<double> pi(grid.size(), 0.0);
  pi[0] = 1.0;
  for (std::size_t k = 1; k < safe; ++k) {
    const double lambda = outcome_probabilities(grid.x[k - 1], t).neutral /
                          toxicity(grid.x[k], t);
    pi[k] = pi[k - 1] * lambda;
  }
  double total = 0.0;
  for (std::size_t k = 0; k < safe; ++k) total += pi[k];
  for (std::size_t k = 0; k < safe; ++k) pi[k] /= total;
  return {grid.x, std::move(pi)};
}

}  // namespace lord
