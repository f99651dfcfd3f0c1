#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "lord/evaluation.hpp"
#include "lord/scenarios.hpp"

using namespace lord;

namespace {

const DesignMeasure kThreePoint{{-1.2, 2.32, 4.38}, {0.28, 0.36, 0.36}};

// Dose-index walk: up on a neutral outcome, stay on success, down on toxicity,
// never above the highest safe dose.
std::vector<double> simulate_rwr(const ThetaParams& t, const DoseGrid& grid, double gamma,
                                 long steps, std::uint64_t seed) {
  std::size_t safe = 0;
  while (safe < grid.size() && toxicity(grid.x[safe], t) <= gamma) ++safe;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> visits(grid.size(), 0.0);
  std::size_t m = 0;
  for (long j = 0; j < steps; ++j) {
    visits[m] += 1.0;
    const auto p = outcome_probabilities(grid.x[m], t);
    const double r = u(rng);
    if (r < p.neutral) {
      if (m + 1 < safe) ++m;
    } else if (r >= p.neutral + p.success) {
      if (m > 0) --m;
    }
  }
  for (auto& v : visits) v /= static_cast<double>(steps);
  return visits;
}

}  // namespace

TEST(Sensitivity, WeightedAverageVanishes) {
  for (const auto& t : {scenarios::A, scenarios::B, scenarios::C}) {
    const auto s = sensitivity_d(kThreePoint, t, scenarios::interval(), 11);
    double avg = 0.0;
    for (std::size_t i = 0; i < kThreePoint.size(); ++i)
      avg += kThreePoint.weights[i] * s.design_point_residuals[i].value;
    EXPECT_NEAR(avg, 0.0, 1e-9);

    const auto c = sensitivity_c(kThreePoint, t, c_vector(t), scenarios::interval(), 11);
    double cavg = 0.0;
    for (std::size_t i = 0; i < kThreePoint.size(); ++i)
      cavg += kThreePoint.weights[i] * c.design_point_residuals[i].value;
    EXPECT_NEAR(cavg, 0.0, 1e-9);
  }
}

TEST(Sensitivity, SamplingGridShape) {
  const auto s = sensitivity_d(kThreePoint, scenarios::A, DoseInterval{-1.2, 4.38});
  ASSERT_EQ(s.samples.size(), kSensitivitySamples);
  EXPECT_DOUBLE_EQ(s.samples.front().dose, -1.2);
  EXPECT_DOUBLE_EQ(s.samples.back().dose, 4.38);
  for (std::size_t i = 1; i < s.samples.size(); ++i)
    ASSERT_GT(s.samples[i].dose, s.samples[i - 1].dose);
  const auto g = sensitivity_d(kThreePoint, scenarios::A, scenarios::grid());
  EXPECT_EQ(g.samples.size(), 9u);
}

TEST(Sensitivity, SaturatedDesignIsOptimalOnItsSupport) {
  // scenario D: the two-point design at the interval ends is D-optimal
  const DesignMeasure xi{{-1.2, mtd(scenarios::D, 0.2)}, {0.5, 0.5}};
  const auto s = sensitivity_d(xi, scenarios::D, DoseInterval{-1.2, mtd(scenarios::D, 0.2)});
  EXPECT_LT(s.max_abs_residual(), 1e-10);
  EXPECT_TRUE(s.passes());
}

TEST(Sensitivity, DetectsNonOptimalDesign) {
  const DesignMeasure xi{{-1.2, 0.0, 1.0}, {0.3, 0.4, 0.3}};
  const auto s = sensitivity_d(xi, scenarios::A, DoseInterval{-1.2, 4.38});
  EXPECT_FALSE(s.passes());
  EXPECT_GT(s.max_violation, 0.1);
}

TEST(Sensitivity, SingularDesignThrows) {
  EXPECT_THROW(sensitivity_d(DesignMeasure{{1.0}, {1.0}}, scenarios::A, scenarios::interval()),
               SingularDesignError);
}

TEST(Efficiency, IdentitiesAndReciprocity) {
  const DesignMeasure other{{-0.6, 3.86}, {0.3, 0.7}};
  const auto t = scenarios::A;
  const auto c = c_vector(t);
  EXPECT_NEAR(d_efficiency(kThreePoint, kThreePoint, t), 1.0, 1e-14);
  EXPECT_NEAR(c_efficiency(other, other, t, c), 1.0, 1e-14);
  EXPECT_NEAR(d_efficiency(kThreePoint, other, t) * d_efficiency(other, kThreePoint, t), 1.0,
              1e-12);
  EXPECT_NEAR(c_efficiency(kThreePoint, other, t, c) * c_efficiency(other, kThreePoint, t, c),
              1.0, 1e-12);
  const double de = d_efficiency(other, kThreePoint, t);
  EXPECT_NEAR(de, std::exp((d_criterion(kThreePoint, t) - d_criterion(other, t)) / 4.0), 1e-12);
}

TEST(Efficiency, ScoreAndDistance) {
  EXPECT_DOUBLE_EQ(tradeoff_distance(1.0, 1.0), 0.0);
  EXPECT_NEAR(tradeoff_distance(0.7, 0.6), 0.5, 1e-15);
  EXPECT_DOUBLE_EQ(composite_score(1.0, 1.0, 1.0), 1.0);
  EXPECT_NEAR(composite_score(1.0, 0.89, 0.85), 0.91, 0.005);
}

TEST(SuccessProportion, BestGridDoseScoresOne) {
  const auto g = scenarios::grid();
  const DesignMeasure at_obd{{3.00}, {1.0}};
  EXPECT_NEAR(success_proportion(at_obd, scenarios::A, g), 1.0, 1e-15);
  EXPECT_LT(success_proportion(kThreePoint, scenarios::A, g), 1.0);
}

TEST(Rwr, ClosedFormValues) {
  const auto g = scenarios::grid();
  const auto d = rwr_stationary(scenarios::D, g, 0.2);
  ASSERT_EQ(d.size(), 9u);
  EXPECT_NEAR(d.weights[0], 0.406, 0.001);
  EXPECT_NEAR(d.weights[1], 0.594, 0.001);
  for (std::size_t i = 2; i < 9; ++i) EXPECT_EQ(d.weights[i], 0.0);
  EXPECT_NEAR(d.total_weight(), 1.0, 1e-12);
  // detailed balance
  const auto a = rwr_stationary(scenarios::A, g, 0.2);
  for (std::size_t k = 1; k < 7; ++k)
    EXPECT_NEAR(a.weights[k] * toxicity(g.x[k], scenarios::A),
                a.weights[k - 1] * outcome_probabilities(g.x[k - 1], scenarios::A).neutral,
                1e-12);
}

TEST(Rwr, MatchesMonteCarloChain) {
  const auto g = scenarios::grid();
  std::uint64_t seed = 100;
  for (const auto& t : {scenarios::A, scenarios::B, scenarios::C, scenarios::D}) {
    const auto exact = rwr_stationary(t, g, 0.2);
    const auto mc = simulate_rwr(t, g, 0.2, 1000000, seed++);
    double tv = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) tv += std::abs(exact.weights[i] - mc[i]);
    EXPECT_LT(0.5 * tv, 0.01);
  }
}

TEST(Rwr, NoSafeDose) {
  EXPECT_THROW(rwr_stationary(scenarios::A, DoseGrid{{5.0, 6.0}}, 0.2), NoSafeDoseError);
}
