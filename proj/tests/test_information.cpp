#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "lord/information.hpp"
#include "lord/scenarios.hpp"

using namespace lord;

namespace {

Eigen::Vector3d probs(double d, const ThetaParams& t) {
  const auto p = outcome_probabilities(d, t);
  return {p.neutral, p.success, p.toxic};
}

ThetaParams shifted(ThetaParams t, int k, double h) {
  double* v[] = {&t.theta1, &t.theta2, &t.theta3, &t.theta4};
  *v[k] += h;
  return t;
}

// sum_k grad(pi_k) grad(pi_k)^T / pi_k with numerically differentiated pi
InfoMatrix multinomial_oracle(double d, const ThetaParams& t) {
  const double h = 1e-6;
  Eigen::Matrix<double, 3, 4> g;
  for (int k = 0; k < 4; ++k)
    g.col(k) = (probs(d, shifted(t, k, h)) - probs(d, shifted(t, k, -h))) / (2 * h);
  const Eigen::Vector3d p = probs(d, t);
  InfoMatrix m = InfoMatrix::Zero();
  for (int j = 0; j < 3; ++j) m += g.row(j).transpose() * g.row(j) / p(j);
  return m;
}

const ThetaParams kScenarios[] = {scenarios::A, scenarios::B, scenarios::C, scenarios::D};

}  // namespace

TEST(Mu, MatchesMultinomialOuterProductOracle) {
  for (const auto& t : kScenarios)
    for (double d = -1.2; d <= 5.77; d += 0.35) {
      const InfoMatrix a = mu(d, t);
      const InfoMatrix b = multinomial_oracle(d, t);
      EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-7 * (1.0 + b.cwiseAbs().maxCoeff()))
          << "d=" << d;
    }
}

TEST(Mu, BlockDiagonalStructure) {
  const InfoMatrix m = mu(2.0, scenarios::A);
  EXPECT_TRUE((m.block<2, 2>(0, 2).isZero(0.0)));
  EXPECT_TRUE((m.block<2, 2>(2, 0).isZero(0.0)));
  const auto p = outcome_probabilities(2.0, scenarios::A);
  EXPECT_NEAR(m(0, 0), p.neutral * p.success / (p.neutral + p.success), 1e-15);
  EXPECT_NEAR(m(2, 2), p.toxic * (1 - p.toxic), 1e-15);
  EXPECT_NEAR(m(1, 1), 4.0 * m(0, 0), 1e-15);
}

TEST(Mu, RankTwoAndPsdProperty) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-4.0, 4.0), pos(0.1, 3.0);
  for (int i = 0; i < 10000; ++i) {
    const ThetaParams t{u(rng), pos(rng), u(rng), pos(rng)};
    const InfoMatrix m = mu(u(rng), t);
    ASSERT_TRUE(m.isApprox(m.transpose()));
    Eigen::SelfAdjointEigenSolver<InfoMatrix> es(m);
    const auto ev = es.eigenvalues();
    const double tol = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    ASSERT_GE(ev.minCoeff(), -tol);
    int rank = 0;
    for (int k = 0; k < 4; ++k) rank += ev(k) > 1e-9 * ev.maxCoeff();
    ASSERT_EQ(rank, 2);
  }
}

TEST(Mu, DegenerateDoseThrows) {
  EXPECT_THROW(mu(1e6, scenarios::A), DegenerateDoseError);
  EXPECT_THROW(mu(std::nan(""), scenarios::A), DomainError);
}

TEST(DesignFim, WeightedSumAndValidation) {
  const DesignMeasure xi{{-1.2, 2.32, 4.38}, {0.28, 0.36, 0.36}};
  const InfoMatrix m = design_fim(xi, scenarios::A);
  const InfoMatrix ref =
      0.28 * mu(-1.2, scenarios::A) + 0.36 * mu(2.32, scenarios::A) + 0.36 * mu(4.38, scenarios::A);
  EXPECT_TRUE(m.isApprox(ref, 1e-14));
  EXPECT_THROW(design_fim(DesignMeasure{{0.0}, {0.5}}, scenarios::A), DomainError);
  EXPECT_THROW(design_fim(DesignMeasure{{0.0, 1.0}, {1.0}}, scenarios::A), DomainError);
  EXPECT_THROW(design_fim(DesignMeasure{{0.0, 1.0}, {1.5, -0.5}}, scenarios::A), DomainError);
}

TEST(Criteria, MatchDeterminantAndInverse) {
  const DesignMeasure xi{{-1.2, 2.32, 4.38}, {0.28, 0.36, 0.36}};
  const InfoMatrix m = design_fim(xi, scenarios::A);
  EXPECT_NEAR(d_criterion(m), -std::log(m.determinant()), 1e-9);
  const CVector c(0.3, -1.0, 2.0, 0.5);
  EXPECT_NEAR(c_criterion(m, c), c.dot(m.inverse() * c), 1e-8 * c_criterion(m, c));
  EXPECT_DOUBLE_EQ(d_criterion(xi, scenarios::A), d_criterion(m));
}

TEST(Criteria, SingularDesignsAreInfinite) {
  // one support point: rank 2 information
  const DesignMeasure one{{1.0}, {1.0}};
  EXPECT_EQ(d_criterion(one, scenarios::A), kSingular);
  EXPECT_EQ(c_criterion(one, scenarios::A, CVector::Ones()), kSingular);
  EXPECT_EQ(d_criterion(InfoMatrix::Zero()), kSingular);
  // a vanishing outcome probability
  EXPECT_EQ(d_criterion(DesignMeasure{{0.0, 1e6}, {0.5, 0.5}}, scenarios::A), kSingular);
}

TEST(Criteria, TwoPointDesignIsNonsingular) {
  const DesignMeasure two{{-1.2, 0.11}, {0.5, 0.5}};
  EXPECT_TRUE(std::isfinite(d_criterion(two, scenarios::D)));
}

TEST(CVector, MatchesFiniteDifferencesOfObd) {
  for (const auto& t : kScenarios) {
    const CVector c = c_vector(t);
    for (int k = 0; k < 4; ++k) {
      const double h = 1e-5;
      const double fd = (obd(shifted(t, k, h)) - obd(shifted(t, k, -h))) / (2 * h);
      EXPECT_NEAR(c(k), fd, 1e-5 * std::max(1.0, std::abs(fd))) << "component " << k;
    }
  }
}

TEST(CVector, ScaleInvarianceOfCCriterion) {
  const DesignMeasure xi{{-0.6, 3.86}, {0.3, 0.7}};
  const CVector c = c_vector(scenarios::A);
  EXPECT_NEAR(c_criterion(xi, scenarios::A, 2.0 * c), 4.0 * c_criterion(xi, scenarios::A, c),
              1e-10);
}
