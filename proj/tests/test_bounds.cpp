#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "kdc/bounds.hpp"
#include "kdc/certificate.hpp"

using namespace kdc;
using namespace kdc::bounds;

// Reference values below were computed independently in double precision.

TEST(Bernstein, Examples) {
  EXPECT_NEAR(bernstein_threshold(100, 0.25, 100), 64.37898078868042, 1e-12);
  EXPECT_DOUBLE_EQ(bernstein_threshold(50, 0.0, 100), 6.0 * std::log(100.0));
  EXPECT_THROW(bernstein_threshold(10, 0.1, 1.0), ValidationError);
  EXPECT_DOUBLE_EQ(bernstein_tail(100.0), 2e-12);
}

TEST(Bernstein, MonteCarloViolationsWithinTail) {
  std::mt19937_64 rng(99);
  const int sums = 10000;
  const double m = 100;
  const double t = 100;
  for (const auto& dist : {EdgeDistribution::bernoulli(0.5), EdgeDistribution::bernoulli(0.1),
                           EdgeDistribution::uniform(0.0, 1.0)}) {
    const double threshold = bernstein_threshold(m, dist.variance(), t);
    int violations = 0;
    for (int s = 0; s < sums; ++s) {
      double total = 0.0;
      for (int i = 0; i < static_cast<int>(m); ++i) total += dist.sample(rng);
      violations += std::abs(total - m * dist.mean()) > threshold ? 1 : 0;
    }
    EXPECT_LE(static_cast<double>(violations) / sums, bernstein_tail(t)) << dist.to_string();
  }
}

TEST(GapCondition, Examples) {
  EXPECT_NEAR(std::log(1000.0) / 10.0, 0.6907755278982137, 1e-15);
  EXPECT_TRUE(gap_condition(1.0, 0.0, 0.0, 10, 1000));
  EXPECT_FALSE(gap_condition(0.4, 0.4, 0.1, 10, 1000));
  EXPECT_TRUE(gap_condition(0.01, 0.0, 0.25, 1e12, 1000));
}

TEST(RecoveryCondition, IdealCaseReducesToTwoRootLog) {
  const double n = 500;
  const double threshold = 2.0 * std::sqrt(std::log(n));
  const auto terms = recovery_terms(10, 10, n, 50, 0, 0, 0, 0);
  EXPECT_DOUBLE_EQ(terms.total(), threshold);
  EXPECT_EQ(terms.outlier, 0.0);
  EXPECT_EQ(terms.mass, 0.0);
  EXPECT_TRUE(recovery_condition(1.0, std::ceil(threshold), std::ceil(threshold), n, 1, 0, 0, 0, 0));
  EXPECT_FALSE(recovery_condition(1.0, std::floor(threshold), std::floor(threshold), n, 1, 0, 0, 0, 0));
}

TEST(RecoveryCondition, DenseCaseIsDominatedByRootN) {
  // n = 1e4, sigma2 = 1/2: the noise term sigma2 sqrt(n) = 50 dwarfs sqrt(log n) ~ 3.
  const auto terms = recovery_terms(100, 100, 1e4, 100, 0, 0.5, 0.5, 0.5);
  EXPECT_DOUBLE_EQ(terms.noise, 50.0);
  EXPECT_GT(terms.noise, 5.0 * terms.cluster);
}

TEST(RecoveryCondition, MonotoneInEachArgument) {
  const double n = 400;
  auto holds = [&](double gamma, double r_hat, double sigma1, double sigma2, double beta,
                   double r_out) {
    return recovery_condition(gamma, r_hat, r_hat, n, 4, r_out, sigma1, sigma2, beta);
  };
  // One argument swept at a time; the predicate may only switch once.
  auto count_switches = [](const std::vector<bool>& v) {
    int switches = 0;
    for (std::size_t i = 1; i < v.size(); ++i) switches += v[i] != v[i - 1] ? 1 : 0;
    return switches;
  };
  std::vector<bool> by_gamma, by_rhat, by_s1, by_s2, by_beta, by_rout;
  for (int i = 0; i <= 60; ++i) {
    const double x = i / 60.0;
    by_gamma.push_back(holds(x, 60, 0.3, 0.3, 0.2, 5));
    by_rhat.push_back(holds(0.6, 1 + 199 * x, 0.3, 0.3, 0.2, 5));
    by_s1.push_back(holds(0.6, 60, x, 0.3, 0.2, 5));
    by_s2.push_back(holds(0.6, 60, 0.3, x, 0.2, 5));
    by_beta.push_back(holds(0.6, 60, 0.3, 0.3, x, 5));
    by_rout.push_back(holds(0.6, 60, 0.3, 0.3, 0.2, 200 * x));
  }
  for (const auto* v : {&by_gamma, &by_rhat}) {
    EXPECT_LE(count_switches(*v), 1);
    EXPECT_TRUE(v->back());
  }
  for (const auto* v : {&by_s1, &by_s2, &by_beta, &by_rout}) {
    EXPECT_LE(count_switches(*v), 1);
    EXPECT_TRUE(v->front());
  }
  EXPECT_FALSE(by_gamma.front());
  EXPECT_FALSE(by_rout.back());
}

TEST(UniquenessBound, Examples) {
  EXPECT_NEAR(uniqueness_bound(0.0, 10, 1000), 0.8289306334778564, 1e-12);
  EXPECT_NEAR(uniqueness_bound(0.25, 1000, 1000), 0.015769565309270796, 1e-15);
}

TEST(UniquenessBound, ScalingInRHat) {
  // sqrt branch halves, log branch quarters when r_hat doubles.
  EXPECT_NEAR(uniqueness_bound(0.25, 400, 1000) / uniqueness_bound(0.25, 800, 1000), 2.0, 1e-12);
  EXPECT_NEAR(uniqueness_bound(0.0, 40, 1000) / uniqueness_bound(0.0, 80, 1000), 4.0, 1e-12);
}

TEST(PhaseCurve, Examples) {
  EXPECT_NEAR(phase_curve(1000, 0.0), 82.89306334778564, 1e-10);
  EXPECT_NEAR(phase_curve(1000, 0.05), 228.80890212869406, 1e-10);
  EXPECT_THROW(phase_curve(1000, 1.0), ValidationError);
  EXPECT_THROW(phase_curve(1000, -0.1), ValidationError);
}

TEST(PhaseCurve, ContinuousAndUnboundedNearOne) {
  const double n = 200;
  double prev = phase_curve(n, 0.0);
  for (int i = 1; i <= 9900; ++i) {
    const double q = i * 1e-4;
    const double cur = phase_curve(n, q);
    EXPECT_LT(std::abs(cur - prev), 0.05 * std::max(prev, 1.0)) << "q = " << q;
    prev = cur;
  }
  EXPECT_GT(phase_curve(n, 0.999999), 1e5);
}

TEST(PhaseCurve, DeskScaleGridValues) {
  const double expected[] = {63.58, 130.21, 195.31, 255.73, 318.95, 390.63};
  for (int i = 0; i <= 5; ++i) {
    EXPECT_NEAR(phase_curve(200, 0.1 * i), expected[i], 0.005) << "q = " << 0.1 * i;
  }
}

TEST(STildeNormBound, IdealCaseIsThreeRootLog) {
  EXPECT_NEAR(s_tilde_norm_bound(0, 0, 200, 20, 20, 10, 0, 0), 6.9054222390040945, 1e-12);
}

TEST(STildeNormBound, CoversPointMassNorm) {
  PlantedModelSpec spec;
  spec.partition = Partition::from_sizes(std::vector<Index>{4, 4}, 11);
  spec.within = EdgeDistribution::point(0.8);
  spec.between = EdgeDistribution::point(0.3);
  const auto w = sample_weight_matrix(spec);
  const double actual = spectral_norm(build_s_tilde(w, spec.partition, 0.8, 0.3));
  EXPECT_NEAR(actual, 0.3 * 3, 1e-12);
  EXPECT_GE(s_tilde_norm_bound(0, 0, 11, 4, 4, 2, 3, 0.3), actual);
}

TEST(STildeNormBound, HoldsEmpiricallyWithConstantThree) {
  // p = q = 1/2 has no gap, so the sampler refuses it; draw the coin flips here.
  const Index n = 200;
  const Partition partition = Partition::from_sizes(std::vector<Index>{40, 40, 40, 40}, n);
  const double bound = s_tilde_norm_bound(0.5, 0.5, n, 40, 40, 4, 40, 0.5, 3.0, 3.0);
  std::mt19937_64 rng(12);
  std::bernoulli_distribution coin(0.5);
  int within = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Matrix m(n, n);
    for (Index i = 0; i < n; ++i) {
      for (Index j = i; j < n; ++j) m(i, j) = m(j, i) = coin(rng) ? 1.0 : 0.0;
    }
    const WeightMatrix w(m);
    within += spectral_norm(build_s_tilde(w, partition, 0.5, 0.5)) <= bound ? 1 : 0;
  }
  EXPECT_GE(within, 99);
}

TEST(TheoryConstants, MustBePositive) {
  TheoryConstants c;
  EXPECT_NO_THROW(c.validate());
  c.c3 = 0.0;
  EXPECT_THROW(c.validate(), ValidationError);
}
