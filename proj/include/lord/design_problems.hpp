#pragma once

// Restricted locally optimal design problems (I-IV on a dose interval,
// I'-IV' on a dose grid).

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lord/cr_model.hpp"
#include "lord/errors.hpp"
#include "lord/information.hpp"
#include "lord/pso.hpp"

namespace lord {

enum class Criterion { D, C };

enum class Restriction { MtdCap, TherapeuticWindow };

inline const char* to_string(Criterion c) { return c == Criterion::D ? "D" : "c"; }

inline const char* to_string(Restriction r) {
  return r == Restriction::MtdCap ? "mtd_cap" : "therapeutic_window";
}

/// Admissible doses of a grid problem.
struct AdmissibleSet {
  std::vector<std::size_t> indices;
  std::vector<double> doses;
};

struct DesignProblem {
  Criterion criterion = Criterion::D;
  Restriction restriction = Restriction::MtdCap;
  DoseSpace space;
  ThetaParams theta;
  double gamma = 0.2;
  MinEdDefinition mined_def = NeutralProbability{0.2};

  TargetDoses targets;
  std::optional<DiscreteTargets> grid_targets;  // set for grid problems
  /// Interval problems: resolved [lower, upper]. Grid problems: the hull of
  /// the admissible doses.
  DoseInterval bounds;
  AdmissibleSet admissible;  // grid problems only

  bool discrete() const noexcept { return std::holds_alternative<DoseGrid>(space); }

  /// Resolved restricted space: an interval or the admissible sub-grid.
  DoseSpace restricted_space() const {
    if (discrete()) return DoseGrid{admissible.doses};
    return bounds;
  }

  /// Conventional label (I..IV, with a prime for grid problems).
  std::string label() const {
    static const char* names[] = {"I", "II", "III", "IV"};
    const int k = (criterion == Criterion::C ? 2 : 0) +
                  (restriction == Restriction::TherapeuticWindow ? 1 : 0);
    return std::string(names[k]) + (discrete() ? "'" : "");
  }
};

inline DesignProblem build_problem(Criterion criterion, Restriction restriction,
                                   const DoseSpace& space, const ThetaParams& theta,
                                   double gamma, const MinEdDefinition& mined_def) {
  theta.validate();
  validate(space);
  DesignProblem p;
  p.criterion = criterion;
  p.restriction = restriction;
  p.space = space;
  p.theta = theta;
  p.gamma = gamma;
  p.mined_def = mined_def;
  p.targets = target_doses(theta, gamma, mined_def);

  if (const auto* iv = std::get_if<DoseInterval>(&space)) {
    const double upper = std::min(iv->hi, p.targets.mted);
    const double lower = restriction == Restriction::MtdCap
                             ? iv->lo
                             : std::max(iv->lo, p.targets.mined);
    if (!(lower < upper))
      throw EmptyWindowError("restricted dose interval is empty (lower " +
                                 std::to_string(lower) + ", upper " +
                                 std::to_string(upper) + ")",
                             lower, upper);
    p.bounds = {lower, upper};
    return p;
  }

  const auto& grid = std::get<DoseGrid>(space);
  const auto dt = discrete_targets(theta, grid, gamma, mined_def);
  p.grid_targets = dt;
  const std::size_t first = restriction == Restriction::MtdCap ? 0 : dt.mined;
  if (first > dt.mted)
    throw EmptyWindowError("no grid dose lies between MinED' and MTD'",
                           grid.x[dt.mined], grid.x[dt.mted]);
  for (std::size_t i = first; i <= dt.mted; ++i) {
    p.admissible.indices.push_back(i);
    p.admissible.doses.push_back(grid.x[i]);
  }
  p.bounds = {p.admissible.doses.front(), p.admissible.doses.back()};
  return p;
}

/// Criterion value of `xi` for this problem (c-problems use c_vector(theta)).
class ProblemObjective {
 public:
  explicit ProblemObjective(const DesignProblem& p)
      : criterion_(p.criterion), theta_(p.theta) {
    if (criterion_ == Criterion::C) c_ = c_vector(theta_);
  }

  double operator()(const DesignMeasure& xi) const {
    return criterion_ == Criterion::D ? d_criterion(xi, theta_)
                                      : c_criterion(xi, theta_, c_);
  }

  const CVector& c() const noexcept { return c_; }

 private:
  Criterion criterion_;
  ThetaParams theta_;
  CVector c_ = CVector::Zero();
};

inline Encoding encoding_for(const DesignProblem& p, std::size_t continuous_points = 10) {
  if (p.discrete()) return DiscreteEncoding{p.admissible.doses};
  return ContinuousEncoding{continuous_points, p.bounds};
}

inline PsoResult solve(const DesignProblem& problem, const PsoConfig& cfg,
                       const CleanupTolerances& tol = {}) {
  return optimize(ProblemObjective(problem), encoding_for(problem), cfg, tol);
}

}  // namespace lord
