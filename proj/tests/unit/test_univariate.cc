#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "detfactors/errors.h"
#include "detfactors/univariate.h"
#include "oracles.h"

namespace detfactors {
namespace {

std::vector<double> tied_sample(std::mt19937_64& rng, std::size_t n, int levels) {
  std::uniform_int_distribution<int> u(0, levels - 1);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

TEST(Kendall, HandExample) {
  // Pairs: (1,2) C, (1,3) C, (2,3) tie in x. tau_b = 2 / sqrt(2 * 3).
  const std::vector<double> x{1, 2, 2}, y{1, 2, 3};
  const KendallCounts c = kendall_counts(x, y);
  EXPECT_EQ(c.concordant, 2);
  EXPECT_EQ(c.discordant, 0);
  EXPECT_EQ(c.x_ties, 1);
  EXPECT_EQ(c.y_ties, 0);
  EXPECT_DOUBLE_EQ(*c.tau_b(), 2.0 / std::sqrt(6.0));
}

TEST(Kendall, PerfectOrderings) {
  const std::vector<double> x{1, 2, 3, 4}, up{10, 20, 30, 40}, down{4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(*kendall_tau_b(x, up), 1.0);
  EXPECT_DOUBLE_EQ(*kendall_tau_b(x, down), -1.0);
}

TEST(Kendall, BinaryLabelCeilingBelowOne) {
  // C = 4, D = 0, four label ties: tau_b = 4 / sqrt(6 * 4).
  const std::vector<double> x{1, 2, 3, 4}, y{0, 0, 1, 1}, flipped{1, 1, 0, 0};
  EXPECT_DOUBLE_EQ(*kendall_tau_b(x, y), 4.0 / std::sqrt(24.0));
  EXPECT_DOUBLE_EQ(*kendall_tau_b(x, flipped), -4.0 / std::sqrt(24.0));
}

TEST(Kendall, ConstantIsUndefined) {
  const std::vector<double> x{1, 1, 1}, y{1, 2, 3};
  EXPECT_FALSE(kendall_tau_b(x, y).has_value());
}

TEST(Kendall, ContractErrors) {
  const std::vector<double> a{1, 2}, b{1};
  EXPECT_THROW(kendall_counts(a, b), ContractError);
  EXPECT_THROW(kendall_counts(b, b), ContractError);
  const std::vector<double> nan{1, std::nan("")};
  EXPECT_THROW(kendall_counts(nan, a), ContractError);
}

TEST(KendallProperty, MatchesAllPairsOracle) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 120;
    const auto x = tied_sample(rng, n, 1 + static_cast<int>(rng() % 10));
    const auto y = tied_sample(rng, n, 1 + static_cast<int>(rng() % 10));
    const KendallCounts fast = kendall_counts(x, y);
    const oracle::PairCounts slow = oracle::kendall_pairs(x, y);
    EXPECT_EQ(fast.concordant, slow.concordant);
    EXPECT_EQ(fast.discordant, slow.discordant);
    EXPECT_EQ(fast.x_ties, slow.x_ties);
    EXPECT_EQ(fast.y_ties, slow.y_ties);
    EXPECT_EQ(fast.joint_ties, slow.joint_ties);
    EXPECT_EQ(fast.tau_b(), oracle::kendall_tau_b(x, y));
  }
}

TEST(KendallProperty, SymmetricAndAntisymmetric) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = tied_sample(rng, 60, 7);
    const auto y = tied_sample(rng, 60, 4);
    std::vector<double> neg(y);
    for (auto& v : neg) v = -v;
    const auto t = kendall_tau_b(x, y);
    if (!t) continue;
    EXPECT_DOUBLE_EQ(*kendall_tau_b(y, x), *t);
    EXPECT_DOUBLE_EQ(*kendall_tau_b(x, neg), -*t);
    EXPECT_LE(std::abs(*t), 1.0);
  }
}

TEST(Jitter, BoundedAndDeterministic) {
  std::vector<double> x(100);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i % 10);
  const auto a = tie_break_jitter(x, 4);
  EXPECT_EQ(a, tie_break_jitter(x, 4));
  // IQR of 0..9 repeated is 5 (quartiles 2 and 7 or close); noise stays tiny.
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_LE(std::abs(a[i] - x[i]), 1e-9);
  }
  std::vector<double> sorted(a);
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(std::adjacent_find(sorted.begin(), sorted.end()), sorted.end());
}

TEST(MiMixed, StepLabelRecoversLn2) {
  std::mt19937_64 rng(100);
  std::normal_distribution<double> n01;
  std::vector<double> x(5000);
  std::vector<int> y(5000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = n01(rng);
    y[i] = x[i] > 0;
  }
  EXPECT_NEAR(mi_mixed(x, y, {3, true, 1}).mi, std::numbers::ln2, 0.05);
}

TEST(MiMixed, IndependentIsNearZero) {
  std::mt19937_64 rng(101);
  std::normal_distribution<double> n01;
  std::bernoulli_distribution b(0.4);
  std::vector<double> x(5000);
  std::vector<int> y(5000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = n01(rng);
    y[i] = b(rng);
  }
  const MiEstimate e = mi_mixed(x, y, {3, true, 2});
  EXPECT_NEAR(e.mi, 0.0, 0.02);
  EXPECT_GE(e.mi, 0.0);
}

TEST(MiMixed, SmallGroupIsEstimatorError) {
  const std::vector<double> x{0.1, 0.2, 0.3, 0.4, 0.5};
  const std::vector<int> y{0, 0, 0, 0, 1};
  EXPECT_THROW(mi_mixed(x, y), EstimatorError);
}

TEST(MiMixed, TiesWithoutJitterAreCounted) {
  std::vector<double> x;
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) {
    x.push_back(i % 4);
    y.push_back(i % 2);
  }
  const MiEstimate e = mi_mixed(x, y, {3, false, 0});
  EXPECT_GT(e.zero_distance_points, 0u);
  EXPECT_EQ(mi_mixed(x, y, {3, true, 0}).zero_distance_points, 0u);
}

TEST(MiMixedProperty, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(110);
  std::normal_distribution<double> n01;
  std::vector<double> x(2000), ex(2000);
  std::vector<int> y(2000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = n01(rng);
    ex[i] = std::exp(x[i]);
    y[i] = x[i] + n01(rng) > 0;
  }
  // The estimand is invariant; the estimate moves only within sampling noise.
  EXPECT_NEAR(mi_mixed(x, y, {3, false, 0}).mi, mi_mixed(ex, y, {3, false, 0}).mi, 0.01);
}

TEST(MiMixedProperty, ErrorShrinksWithSampleSize) {
  auto error = [](std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    std::vector<double> x(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = n01(rng);
      y[i] = x[i] > 0;
    }
    return std::abs(mi_mixed(x, y, {3, true, seed}).mi - std::numbers::ln2);
  };
  double small = 0, large = 0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    small += error(500, 200 + s);
    large += error(5000, 300 + s);
  }
  EXPECT_LT(large, small);
}

TEST(EntropyKnn, StandardNormal) {
  std::mt19937_64 rng(102);
  std::normal_distribution<double> n01;
  std::vector<double> x(5000);
  for (auto& v : x) v = n01(rng);
  const double truth = 0.5 * std::log(2 * std::numbers::pi * std::numbers::e);
  EXPECT_NEAR(entropy_knn(x, 3, true, 5).entropy, truth, 0.03);
}

TEST(EntropyKnn, UniformScalesWithWidth) {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> u(0, 4);
  std::vector<double> x(4000);
  for (auto& v : x) v = u(rng);
  EXPECT_NEAR(entropy_knn(x, 3, true, 0).entropy, std::log(4.0), 0.03);
}

TEST(EntropyKnn, ErrorsOnDegenerateInput) {
  const std::vector<double> few{1, 2, 3};
  EXPECT_THROW(entropy_knn(few, 3), EstimatorError);
  const std::vector<double> ties{1, 1, 1, 1, 1, 2, 2, 2, 2, 2};
  EXPECT_THROW(entropy_knn(ties, 3, false), EstimatorError);
  EXPECT_NO_THROW(entropy_knn(ties, 3, true));
}

TEST(Discrete, PluginArithmetic) {
  const std::vector<int> y{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(plugin_entropy(y), std::numbers::ln2);
  EXPECT_DOUBLE_EQ(mi_discrete(y, y), std::numbers::ln2);
  const std::vector<int> x{0, 1, 0, 1};
  EXPECT_NEAR(mi_discrete(x, y), 0.0, 1e-15);
  EXPECT_EQ(discrete_codes(std::vector<double>{3.5, -1, 3.5, 7}), (std::vector<int>{1, 0, 1, 2}));
}

TEST(Nmi, HandArithmeticAndClamping) {
  EXPECT_DOUBLE_EQ(normalized_mi(0.3, 0.5, 0.7).nmi, 0.5);
  EXPECT_DOUBLE_EQ(normalized_mi(2.0, 0.5, 0.5).nmi, 1.0);
  EXPECT_DOUBLE_EQ(normalized_mi(-0.1, 0.5, 0.5).nmi, 0.0);
  const NormalizedMi d = normalized_mi(0.0, 0.0, 0.0);
  EXPECT_TRUE(d.degenerate);
  EXPECT_EQ(d.nmi, 0.0);
}

TEST(EntropyKnn, UnitUniformIsNearZero) {
  std::mt19937_64 rng(111);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> x(10000);
  for (auto& v : x) v = u(rng);
  EXPECT_NEAR(entropy_knn(x, 3, true, 0).entropy, 0.0, 0.03);
}

TEST(EntropyKnnProperty, ScalingShiftsByLogFactor) {
  std::mt19937_64 rng(112);
  std::normal_distribution<double> n01;
  std::vector<double> x(1500);
  for (auto& v : x) v = n01(rng);
  const double h = entropy_knn(x, 3, false).entropy;
  for (double c : {0.01, 0.5, 3.0, 250.0}) {
    std::vector<double> scaled(x);
    for (auto& v : scaled) v *= c;
    EXPECT_NEAR(entropy_knn(scaled, 3, false).entropy, h + std::log(c), 1e-9) << c;
  }
}

TEST(Discrete, ThreeByTwoTable) {
  // Counts: x=0 -> (2,0), x=1 -> (1,1), x=2 -> (0,2); n = 6.
  const std::vector<int> x{0, 0, 1, 1, 2, 2};
  const std::vector<int> y{0, 0, 0, 1, 1, 1};
  const double ln2 = std::numbers::ln2, ln3 = std::log(3.0);
  const double hx = ln3, hy = ln2;
  // H(X,Y) over cells with mass 2/6, 1/6, 1/6, 2/6.
  const double hxy = 2 * (2.0 / 6) * std::log(3.0) + 2 * (1.0 / 6) * std::log(6.0);
  EXPECT_NEAR(plugin_entropy(x), hx, 1e-12);
  EXPECT_NEAR(mi_discrete(x, y), hx + hy - hxy, 1e-12);
  EXPECT_NEAR(mi_discrete(x, y), 2.0 / 3.0 * ln2, 1e-12);
}

TEST(Nmi, BinaryPairByHand) {
  // x equals y except for one of eight rows.
  const std::vector<int> y{0, 0, 0, 0, 1, 1, 1, 1};
  const std::vector<int> x{0, 0, 0, 1, 1, 1, 1, 1};
  const double hy = std::numbers::ln2;
  const double hx = -(3.0 / 8) * std::log(3.0 / 8) - (5.0 / 8) * std::log(5.0 / 8);
  // Joint cells: (0,0)=3, (1,0)=1, (1,1)=4.
  const double hxy = -(3.0 / 8) * std::log(3.0 / 8) - (1.0 / 8) * std::log(1.0 / 8) - 0.5 * std::log(0.5);
  const double mi = hx + hy - hxy;
  EXPECT_NEAR(mi_discrete(x, y), mi, 1e-12);
  EXPECT_NEAR(normalized_mi(mi_discrete(x, y), plugin_entropy(x), plugin_entropy(y)).nmi,
              2 * mi / (hx + hy), 1e-12);
}

TEST(ScoreTable, KindsAndIndicators) {
  std::mt19937_64 rng(104);
  std::normal_distribution<double> n01;
  FeatureTable t;
  Column num{"signal", ColumnKind::kNumeric, {}, {}};
  Column ord{"bin", ColumnKind::kOrdinal, {}, {}};
  Column cat{"kind", ColumnKind::kCategorical, {}, {"a", "b"}};
  for (int i = 0; i < 400; ++i) {
    const double s = n01(rng);
    num.values.push_back(s);
    ord.values.push_back(i % 4);
    cat.values.push_back(i % 2);
    t.label.push_back(s > 0);
  }
  t.columns = {num, ord, cat};
  const auto scores = score_table(t, {{3, true, 9}, 2});
  ASSERT_EQ(scores.size(), 5u);
  EXPECT_EQ(scores[0].feature, "signal");
  EXPECT_GT(*scores[0].tau_b, 0.5);
  EXPECT_GT(scores[0].nmi, 0.3);
  EXPECT_EQ(scores[1].feature, "bin");
  EXPECT_TRUE(scores[1].tau_b.has_value());
  EXPECT_EQ(scores[2].feature, "kind=a");
  EXPECT_EQ(scores[2].source_column, "kind");
  EXPECT_EQ(scores[4].feature, "kind");
  EXPECT_FALSE(scores[4].tau_b.has_value());
  for (const auto& s : scores) {
    EXPECT_GE(s.nmi, 0.0);
    EXPECT_LE(s.nmi, 1.0);
  }
  // Worker count never changes the result.
  const auto serial = score_table(t, {{3, true, 9}, 1});
  for (std::size_t i = 0; i < scores.size(); ++i) {
    EXPECT_EQ(serial[i].mi, scores[i].mi);
    EXPECT_EQ(serial[i].nmi, scores[i].nmi);
  }
}

}  // namespace
}  // namespace detfactors
