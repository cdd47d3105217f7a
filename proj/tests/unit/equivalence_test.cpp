#include "xsnr/equivalence.hpp"

#include <algorithm>

#include <gtest/gtest.h>

#include "xsnr/rng.hpp"

namespace xsnr {
namespace {

TEST(ZStatistic, HandValues) {
  EXPECT_EQ(z_statistic(0.5, 0.5, 1000), 0.0);
  EXPECT_NEAR(z_statistic(0.96, 0.89, 1000), 8.404203152627295, 1e-12);
  EXPECT_NEAR(z_statistic(0.965, 0.955, 1000), 1.6137430609197576, 1e-12);
  EXPECT_NEAR(z_statistic(0.96, 0.955, 1000), 0.7838016041652766, 1e-12);
  EXPECT_EQ(z_statistic(1.0, 1.0, 10), 0.0);
  EXPECT_EQ(z_statistic(0.0, 0.0, 10), 0.0);
}

TEST(ZStatistic, ThresholdClassification) {
  EXPECT_FALSE(test_equivalence(0.96, 0.89, 1000).equivalent);
  EXPECT_TRUE(test_equivalence(0.965, 0.955, 1000).equivalent);
  EXPECT_TRUE(test_equivalence(0.7, 0.7, 5).equivalent);
}

TEST(ZStatistic, Errors) {
  EXPECT_THROW(z_statistic(1.2, 0.5, 100), ValidationError);
  EXPECT_THROW(z_statistic(0.5, -0.1, 100), ValidationError);
  EXPECT_THROW(z_statistic(0.5, 0.4, 0), ValidationError);
}

TEST(ZStatistic, SymmetricAndMonotoneProperties) {
  SplitMix64 rng(11);
  for (int t = 0; t < 2000; ++t) {
    const double a = rng.uniform();
    const double b = rng.uniform();
    const auto n = static_cast<std::int64_t>(1 + rng.below(10000));
    EXPECT_EQ(z_statistic(a, b, n), z_statistic(b, a, n));
    EXPECT_GE(z_statistic(a, b, n), 0.0);
    // Growing n scales z by sqrt.
    EXPECT_NEAR(z_statistic(a, b, 4 * n), 2 * z_statistic(a, b, n), 1e-9 * (1 + z_statistic(a, b, n)));
    // Moving b away from a (fixed mean would also change p; check |a-b| growth at fixed p)
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * std::abs(a - b);
    const double wider = std::min({half * 1.5, mid, 1 - mid});
    if (wider > half) {
      EXPECT_GE(z_statistic(mid + wider, mid - wider, n), z_statistic(mid + half, mid - half, n));
    }
  }
}

std::vector<ModelRecord> records(const std::vector<double>& accs, std::int64_t n = 1000) {
  std::vector<ModelRecord> out;
  for (std::size_t i = 0; i < accs.size(); ++i) {
    out.push_back({"m" + std::to_string(i), static_cast<std::int64_t>(i), accs[i], n});
  }
  return out;
}

TEST(EquivalentSubset, HandExample) {
  const auto r = records({0.89, 0.96, 0.955});
  const auto s = select_equivalent_subset(r);
  EXPECT_EQ(s.model_ids, (std::vector<std::string>{"m1", "m2"}));
  EXPECT_DOUBLE_EQ(s.a_best, 0.96);
  EXPECT_DOUBLE_EQ(s.b_worst, 0.955);
  EXPECT_NEAR(s.z, 0.784, 1e-3);
}

TEST(EquivalentSubset, IdenticalAccuraciesKeepAll) {
  const auto r = records(std::vector<double>(7, 0.9));
  const auto s = select_equivalent_subset(r);
  EXPECT_EQ(s.model_ids.size(), 7u);
  EXPECT_EQ(s.z, 0.0);
  // Ties ordered by id.
  EXPECT_TRUE(std::is_sorted(s.model_ids.begin(), s.model_ids.end()));
}

TEST(EquivalentSubset, MaxSizeCaps) {
  const auto r = records(std::vector<double>(7, 0.9));
  EXPECT_EQ(select_equivalent_subset(r, 1.96, 3).model_ids.size(), 3u);
  EXPECT_THROW(select_equivalent_subset(r, 1.96, 0), ValidationError);
}

TEST(EquivalentSubset, Errors) {
  EXPECT_THROW(select_equivalent_subset(std::vector<ModelRecord>{}), ValidationError);
  auto r = records({0.9, 0.91});
  r[1].n_test = 999;
  EXPECT_THROW(select_equivalent_subset(r), ValidationError);
}

TEST(EquivalentSubset, PrefixAndThresholdProperties) {
  SplitMix64 rng(5);
  for (int t = 0; t < 300; ++t) {
    std::vector<double> accs;
    const std::size_t m = 1 + rng.below(40);
    for (std::size_t i = 0; i < m; ++i) accs.push_back(0.85 + 0.1 * rng.uniform());
    const auto r = records(accs);
    const auto s = select_equivalent_subset(r);
    ASSERT_FALSE(s.model_ids.empty());
    EXPECT_LT(s.z, s.threshold);
    // Selected models form the top of the ranking.
    std::vector<double> sorted = accs;
    std::sort(sorted.rbegin(), sorted.rend());
    EXPECT_DOUBLE_EQ(s.a_best, sorted.front());
    EXPECT_DOUBLE_EQ(s.b_worst, sorted[s.model_ids.size() - 1]);
    // Maximality: the next model would break equivalence.
    if (s.model_ids.size() < m) {
      EXPECT_GE(z_statistic(sorted.front(), sorted[s.model_ids.size()], 1000), s.threshold);
    }
    // A looser threshold never selects fewer models.
    EXPECT_GE(select_equivalent_subset(r, 3.0).model_ids.size(), s.model_ids.size());
    EXPECT_LE(select_equivalent_subset(r, 1.0).model_ids.size(), s.model_ids.size());
  }
}

}  // namespace
}  // namespace xsnr
