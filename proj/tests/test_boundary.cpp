#include <gtest/gtest.h>

#include <cmath>

#include "hcsparse/boundary.hpp"
#include "oracles.hpp"

using namespace hcsparse;

namespace {

std::vector<double> beta_grid() {
  std::vector<double> b;
  for (int i = 0; i <= 8; ++i) b.push_back(0.55 + 0.05 * i);
  return b;
}

const ModelSpec kFamilies[] = {
    ModelSpec::normal_means(),
    {Family::TwoSampleNormal, 1.0},
    {Family::SmallPoisson, 1.0},
    ModelSpec::heteroscedastic(0.5),
    ModelSpec::heteroscedastic(2.0),
};

}  // namespace

TEST(InnerMax, InteriorOptimumBelowThreshold) {
  const auto res = inner_max(ModelSpec::normal_means(), 0.6, 0.05);
  EXPECT_NEAR(res.value, -0.05, 1e-10);
  EXPECT_NEAR(res.argmax_q, 0.2, 1e-5);
}

TEST(InnerMax, InteriorOptimumAtThreshold) {
  const auto res = inner_max(ModelSpec::normal_means(), 0.6, 0.1);
  EXPECT_NEAR(res.value, 0.0, 1e-10);
  EXPECT_NEAR(res.argmax_q, 0.4, 1e-5);
}

TEST(InnerMax, LowerBoundFromEndpoint) {
  for (const auto& m : kFamilies) {
    // r large enough that alpha(1, r) = 0 in every family.
    const double r = 4.0;
    ASSERT_EQ(detail::alpha_unchecked(m, 1.0, r), 0.0) << m.describe();
    EXPECT_GE(inner_max(m, 0.75, r).value, 0.25 - 1e-15) << m.describe();
  }
}

TEST(InnerMax, ValueMatchesObjectiveAtArgmax) {
  for (const auto& m : kFamilies) {
    for (double beta : {0.55, 0.7, 0.9}) {
      for (double r : {0.01, 0.1, 0.3, 0.9}) {
        const auto res = inner_max(m, beta, r);
        const double f = (1 + res.argmax_q) / 2 - detail::alpha_unchecked(m, res.argmax_q, r) - beta;
        EXPECT_NEAR(res.value, f, 1e-15);
        EXPECT_GE(res.argmax_q, 1e-4);
        EXPECT_LE(res.argmax_q, 1.0);
      }
    }
  }
}

TEST(InnerMax, NeverBelowDenseBruteForce) {
  for (double beta : {0.55, 0.7, 0.9}) {
    for (double r : {0.02, 0.1, 0.2, 0.5, 0.8}) {
      const double dense = oracle::dense_inner_max(oracle::normal_alpha, beta, r, 1e-4, 1000001);
      const double solved = inner_max(ModelSpec::normal_means(), beta, r).value;
      EXPECT_GE(solved, dense - 1e-9) << beta << " " << r;
      EXPECT_LE(solved, dense + 1e-6) << beta << " " << r;
    }
  }
}

TEST(InnerMax, DomainErrors) {
  const auto m = ModelSpec::normal_means();
  EXPECT_THROW(inner_max(m, 0.5, 0.1), DomainError);
  EXPECT_THROW(inner_max(m, 1.0, 0.1), DomainError);
  EXPECT_THROW(inner_max(m, 0.6, -0.1), DomainError);
  EXPECT_THROW(inner_max(m, 0.6, 0.1, {0.0, 512}), DomainError);
}

TEST(Rho, NormalMeansExamples) {
  const auto m = ModelSpec::normal_means();
  EXPECT_NEAR(rho(m, 0.6).rho, 0.1, 2e-6);
  EXPECT_NEAR(rho(m, 0.75).rho, 0.25, 2e-6);
  EXPECT_NEAR(rho(m, 0.84).rho, 0.36, 2e-6);
}

TEST(Rho, MatchesClosedFormOnGrid) {
  for (double beta : beta_grid()) {
    EXPECT_NEAR(rho(ModelSpec::normal_means(), beta).rho, tilde_rho_normal(beta), 1e-4) << beta;
  }
}

TEST(Rho, CertificatesHoldForEveryFamily) {
  const RhoOptions opt;
  for (const auto& m : kFamilies) {
    for (double beta : beta_grid()) {
      const auto res = rho(m, beta, opt);
      ASSERT_FALSE(res.zero_convention);
      EXPECT_GE(res.rho, 0.0);
      EXPECT_LT(res.certificate_lo, 0.0) << m.describe() << " beta=" << beta;
      EXPECT_GE(res.certificate_hi, -1e-12) << m.describe() << " beta=" << beta;
    }
  }
}

TEST(Rho, NonDecreasingInBeta) {
  for (const auto& m : kFamilies) {
    double prev = 0.0;
    for (double beta : beta_grid()) {
      const double v = rho(m, beta).rho;
      EXPECT_GE(v, prev - 1e-6) << m.describe() << " beta=" << beta;
      prev = v;
    }
  }
}

TEST(Rho, NormalMeansAtMostOne) {
  for (double beta : beta_grid()) EXPECT_LE(rho(ModelSpec::normal_means(), beta).rho, 1.0);
}

TEST(Rho, HeteroscedasticOrderingInSigma2) {
  // A larger effect variance shrinks alpha, so the objective grows and the
  // feasible set of r shrinks: rho is non-increasing in sigma2.
  for (double beta : {0.6, 0.7, 0.8, 0.9}) {
    const double a = rho(ModelSpec::heteroscedastic(0.5), beta).rho;
    const double b = rho(ModelSpec::heteroscedastic(1.0), beta).rho;
    const double c = rho(ModelSpec::heteroscedastic(2.0), beta).rho;
    EXPECT_GE(a, b - 1e-6) << beta;
    EXPECT_GE(b, c - 1e-6) << beta;
  }
}

TEST(Rho, BonferroniConditionBelowTheCurve) {
  for (const auto& m : kFamilies) {
    for (double beta : beta_grid()) {
      const double rb = rho(m, beta).rho;
      for (int i = 1; i <= 20; ++i) {
        const double r = rb * i / 21.0;
        if (r <= 0) continue;
        EXPECT_LT(1.0 - alpha(m, 1.0, r) - beta, 0.0) << m.describe() << " " << beta << " " << r;
      }
    }
  }
}

TEST(Rho, ZeroConventionWhenInfeasibleAtZero) {
  // sigma2 = 100 leaves the objective positive at q = 1 even for r -> 0.
  const auto res = rho(ModelSpec::heteroscedastic(100.0), 0.6);
  EXPECT_TRUE(res.zero_convention);
  EXPECT_EQ(res.rho, 0.0);
  EXPECT_GE(res.certificate_lo, 0.0);
}

TEST(Rho, BracketFailureReportsCap) {
  const ModelSpec sp{Family::SmallPoisson, 1.0};
  const double uncapped = rho(sp, 0.99).rho;
  ASSERT_GT(uncapped, 2.0);
  RhoOptions opt;
  opt.r_cap = 2.0;
  try {
    rho(sp, 0.99, opt);
    FAIL() << "expected BracketError";
  } catch (const BracketError& e) {
    EXPECT_EQ(e.cap(), 2.0);
  }
}

TEST(TildeRho, Branches) {
  EXPECT_NEAR(tilde_rho_normal(0.6), 0.1, 1e-15);
  EXPECT_NEAR(tilde_rho_normal(0.75), 0.25, 1e-15);
  EXPECT_NEAR(tilde_rho_normal(0.91), 0.49, 1e-15);
  EXPECT_NEAR(tilde_rho_normal(0.75 - 1e-12), 0.25, 1e-11);
  EXPECT_THROW(tilde_rho_normal(0.5), DomainError);
  EXPECT_THROW(tilde_rho_normal(1.0), DomainError);
}

TEST(BoundaryCurve, WorkerCountDoesNotChangeOutput) {
  const auto betas = beta_grid();
  const auto a = boundary_curve(ModelSpec::normal_means(), betas, {}, 1);
  const auto b = boundary_curve(ModelSpec::normal_means(), betas, {}, 4);
  ASSERT_EQ(a.points.size(), betas.size());
  for (std::size_t i = 0; i < betas.size(); ++i) {
    EXPECT_EQ(a.points[i].rho, b.points[i].rho);
    EXPECT_EQ(a.points[i].certificate_hi, b.points[i].certificate_hi);
  }
  const auto closed = closed_form_curve(betas);
  for (std::size_t i = 0; i < betas.size(); ++i) {
    EXPECT_NEAR(a.points[i].rho, closed.points[i].rho, 1e-4);
  }
}
