#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "hcsparse/models.hpp"
#include "hcsparse/stats.hpp"

using namespace hcsparse;

namespace {

std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> g;
  for (int i = 0; lo + i * step <= hi + 1e-12; ++i) g.push_back(lo + i * step);
  return g;
}

const ModelSpec kFamilies[] = {
    ModelSpec::normal_means(),
    {Family::TwoSampleNormal, 1.0},
    {Family::SmallPoisson, 1.0},
    ModelSpec::heteroscedastic(0.5),
    ModelSpec::heteroscedastic(2.0),
};

double uniform_cdf(double t) { return std::clamp(t, 0.0, 1.0); }

}  // namespace

TEST(Alpha, NormalMeansClampsAtEqualRoots) {
  EXPECT_EQ(alpha(ModelSpec::normal_means(), 0.25, 0.25), 0.0);
  EXPECT_EQ(alpha(ModelSpec::normal_means(), 0.1, 0.5), 0.0);
}

TEST(Alpha, NormalMeansDirectSubstitution) {
  EXPECT_NEAR(alpha(ModelSpec::normal_means(), 1.0, 0.25), 0.25, 1e-15);
}

TEST(Alpha, HeteroscedasticDividesBySigma2) {
  EXPECT_NEAR(alpha(ModelSpec::heteroscedastic(2.0), 1.0, 0.25), 0.125, 1e-15);
}

TEST(Alpha, TwoSampleUsesHalfStrength) {
  // (sqrt(1) - sqrt(0.5/2))^2 = 0.25
  EXPECT_NEAR(alpha({Family::TwoSampleNormal, 1.0}, 1.0, 0.5), 0.25, 1e-15);
}

TEST(Alpha, SmallPoissonGolden) {
  // 0.5 (log(1 / (0.2 log 2)) - 1) / log 2 + 0.1, evaluated at 30 digits.
  EXPECT_NEAR(alpha({Family::SmallPoisson, 1.0}, 0.5, 0.2), 0.803999713471648277, 1e-14);
}

TEST(Alpha, SmallPoissonFlooredBelowItsMinimum) {
  // The formula reaches 0 at q = r ln2 / 2 and is floored to the left of it.
  const double r = 2.0;
  const double q0 = r * std::log(2.0) / 2.0;
  EXPECT_EQ(alpha({Family::SmallPoisson, 1.0}, q0 * 0.5, r), 0.0);
  EXPECT_NEAR(alpha({Family::SmallPoisson, 1.0}, q0 * (1 + 1e-9), r), 0.0, 1e-12);
}

TEST(Alpha, DomainErrors) {
  const auto m = ModelSpec::normal_means();
  EXPECT_THROW(alpha(m, 0.0, 0.1), DomainError);
  EXPECT_THROW(alpha(m, -0.1, 0.1), DomainError);
  EXPECT_THROW(alpha(m, 1.01, 0.1), DomainError);
  EXPECT_THROW(alpha(m, 0.5, 0.0), DomainError);
  EXPECT_THROW(alpha(m, 0.5, -1.0), DomainError);
  EXPECT_THROW(alpha(ModelSpec::heteroscedastic(0.0), 0.5, 0.1), DomainError);
  EXPECT_THROW(alpha({Family::SmallPoisson, 1.0}, 1.0, 0.0), DomainError);
}

TEST(Alpha, MonotoneNonNegativeOnGrid) {
  const auto qs = grid(0.05, 1.0, 0.05);
  const auto rs = grid(0.05, 2.0, 0.05);
  for (const auto& m : kFamilies) {
    for (std::size_t i = 0; i < qs.size(); ++i) {
      for (std::size_t j = 0; j < rs.size(); ++j) {
        const double a = alpha(m, qs[i], rs[j]);
        ASSERT_GE(a, 0.0) << m.describe();
        if (i > 0) {
          ASSERT_GE(a, alpha(m, qs[i - 1], rs[j])) << m.describe() << " q=" << qs[i];
        }
        if (j > 0) {
          ASSERT_LE(a, alpha(m, qs[i], rs[j - 1])) << m.describe() << " r=" << rs[j];
        }
      }
    }
  }
}

TEST(Alpha, AtMostQWhereDominanceHolds) {
  const auto qs = grid(0.05, 1.0, 0.05);
  const auto rs = grid(0.05, 2.0, 0.05);
  const ModelSpec dominated[] = {ModelSpec::normal_means(), {Family::TwoSampleNormal, 1.0},
                                 ModelSpec::heteroscedastic(1.0), ModelSpec::heteroscedastic(2.0)};
  for (const auto& m : dominated) {
    for (double q : qs)
      for (double r : rs) ASSERT_LE(alpha(m, q, r), q + 1e-15) << m.describe();
  }
  for (double q : qs) {
    for (double r : rs) {
      if (r < q) continue;
      ASSERT_LE(alpha({Family::SmallPoisson, 1.0}, q, r), q + 1e-15) << q << " " << r;
    }
  }
}

TEST(RareWeakParams, Calibration) {
  const RareWeakParams p{10000, 0.6, 0.8, 0.1};
  EXPECT_NEAR(p.epsilon(), std::pow(1e4, -0.6), 1e-15);
  EXPECT_NEAR(p.mu(), std::sqrt(2 * 0.8 * std::log(1e4)), 1e-12);
  EXPECT_GT(p.epsilon(), 0.0);
  EXPECT_LT(p.epsilon(), 1.0);
  EXPECT_THROW((RareWeakParams{0, 0.6, 0.1, 0.1}.validate()), DomainError);
  EXPECT_THROW((RareWeakParams{10, 0.5, 0.1, 0.1}.validate()), DomainError);
  EXPECT_THROW((RareWeakParams{10, 0.6, -0.1, 0.1}.validate()), DomainError);
  EXPECT_THROW((RareWeakParams{10, 0.6, 0.1, 1.0}.validate()), DomainError);
}

TEST(PValueSample, Validation) {
  EXPECT_NO_THROW((PValueSample{{0.1, 0.5}, {1}}.validate()));
  EXPECT_THROW((PValueSample{{0.1, 1.0}, {}}.validate()), DomainError);
  EXPECT_THROW((PValueSample{{0.0, 0.5}, {}}.validate()), DomainError);
  EXPECT_THROW((PValueSample{{0.1, 0.5}, {2}}.validate()), DomainError);
  EXPECT_THROW((PValueSample{{0.1, 0.5}, {1, 1}}.validate()), DomainError);
}

TEST(SampleH0, SmallSample) {
  RandomStream rng(7);
  const auto s = sample_h0(5, rng);
  ASSERT_EQ(s.size(), 5u);
  EXPECT_TRUE(s.planted.empty());
  EXPECT_NO_THROW(s.validate());
  EXPECT_THROW(sample_h0(0, rng), DomainError);
}

TEST(SampleH0, SameSeedSameOutput) {
  RandomStream a(42), b(42);
  EXPECT_EQ(sample_h0(1000, a).pvalues, sample_h0(1000, b).pvalues);
}

TEST(SampleH0, UniformByKolmogorovSmirnov) {
  RandomStream rng(3);
  const auto s = sample_h0(100000, rng);
  EXPECT_LT(ks_distance(std::span<const double>(s.pvalues), uniform_cdf), 0.01);
}

TEST(SampleH1, PlantedCountMatchesBinomialMean) {
  const RareWeakParams p{100, 0.9, 0.5, 0.1};
  const int reps = 10000;
  double total = 0;
  for (int k = 0; k < reps; ++k) {
    auto rng = RandomStream::derive(11, {static_cast<std::uint64_t>(k)});
    const auto s = sample_h1(p, ModelSpec::normal_means(), rng);
    ASSERT_NO_THROW(s.validate());
    total += static_cast<double>(s.planted.size());
  }
  const double mean = total / reps;
  const double ne = 100 * p.epsilon();
  EXPECT_NEAR(mean, ne, 3 * std::sqrt(ne));
  // The mean of 10^4 replicates is far tighter than that; also check at 4 standard errors.
  EXPECT_NEAR(mean, ne, 4 * std::sqrt(ne * (1 - p.epsilon()) / reps));
}

TEST(SampleH1, ZeroStrengthIsIndistinguishableFromNull) {
  RandomStream rng(5);
  const auto s = sample_h1({100000, 0.6, 0.0, 0.1}, ModelSpec::normal_means(), rng);
  EXPECT_FALSE(s.planted.empty());
  EXPECT_LT(ks_distance(std::span<const double>(s.pvalues), uniform_cdf), 0.01);
}

TEST(SampleH1, PlantedValuesAreStochasticallySmaller) {
  const RareWeakParams p{10000, 0.6, 0.8, 0.1};
  std::vector<double> diffs;
  for (int k = 0; k < 100; ++k) {
    auto rng = RandomStream::derive(9, {static_cast<std::uint64_t>(k)});
    const auto s = sample_h1(p, ModelSpec::normal_means(), rng);
    if (s.planted.empty()) continue;
    double planted = 0, total = 0;
    for (auto i : s.planted) planted += s.pvalues[i];
    total = std::accumulate(s.pvalues.begin(), s.pvalues.end(), 0.0);
    const double np = static_cast<double>(s.planted.size());
    diffs.push_back(planted / np - (total - planted) / (static_cast<double>(p.n) - np));
  }
  const double m = std::accumulate(diffs.begin(), diffs.end(), 0.0) / diffs.size();
  double v = 0;
  for (double d : diffs) v += (d - m) * (d - m);
  const double se = std::sqrt(v / (diffs.size() - 1) / diffs.size());
  EXPECT_LT(m / se, -3.0);
}

TEST(SampleH1, EmpiricalTailExponentMatchesAlpha) {
  const std::size_t n = 10000;
  const double r = 0.25;
  const double mu = std::sqrt(2 * r * std::log(static_cast<double>(n)));
  const std::size_t draws = 1000000;
  RandomStream rng(17);
  std::vector<double> p(draws);
  for (auto& v : p) v = draw_nonnull_pvalue(ModelSpec::normal_means(), mu, rng);
  for (double q : {0.6, 0.8}) {
    const double cut = std::pow(static_cast<double>(n), -q);
    const auto hits = std::count_if(p.begin(), p.end(), [&](double v) { return v < cut; });
    ASSERT_GT(hits, 0);
    const double freq = static_cast<double>(hits) / draws;
    const double exponent = -std::log(freq) / std::log(static_cast<double>(n));
    EXPECT_NEAR(exponent, alpha(ModelSpec::normal_means(), q, r), 0.1) << "q=" << q;
  }
}

TEST(SampleH1, DeterministicAndFamilyChecked) {
  const RareWeakParams p{5000, 0.7, 0.3, 0.1};
  RandomStream a(1), b(1);
  const auto sa = sample_h1(p, ModelSpec::heteroscedastic(2.0), a);
  const auto sb = sample_h1(p, ModelSpec::heteroscedastic(2.0), b);
  EXPECT_EQ(sa.pvalues, sb.pvalues);
  EXPECT_EQ(sa.planted, sb.planted);
  RandomStream c(1);
  EXPECT_THROW(sample_h1(p, {Family::SmallPoisson, 1.0}, c), DomainError);
  EXPECT_THROW(sample_h1(p, {Family::TwoSampleNormal, 1.0}, c), DomainError);
}

TEST(Sampler, PValuesStayInsideOpenInterval) {
  RandomStream rng(2);
  EXPECT_GT(draw_nonnull_pvalue(ModelSpec::normal_means(), 60.0, rng), 0.0);
  EXPECT_LT(draw_nonnull_pvalue(ModelSpec::normal_means(), -60.0, rng), 1.0);
  EXPECT_EQ(clip_pvalue(0.0), kPValueFloor);
  EXPECT_EQ(clip_pvalue(1.0), kPValueCeil);
}

TEST(Rng, SubstreamsDependOnPathOnly) {
  EXPECT_EQ(derive_key(5, {1, 2, 3}), derive_key(5, {1, 2, 3}));
  EXPECT_NE(derive_key(5, {1, 2, 3}), derive_key(5, {1, 3, 2}));
  EXPECT_NE(derive_key(5, {1, 2}), derive_key(6, {1, 2}));
  EXPECT_NE(derive_key(5, {0}), derive_key(5, {0, 0}));
  RandomStream rng(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}
