#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "bioage/random.hpp"
#include "bioage/stats.hpp"
#include "expect_error.hpp"
#include "oracles.hpp"

using namespace bioage;
namespace bt = bioage::testing;

TEST(Metrics, R2HandExamples) {
  const std::vector<double> y{1, 2, 3};
  EXPECT_NEAR(r2(y, y), 1.0, 1e-10);
  EXPECT_NEAR(r2(y, std::vector<double>{2, 2, 2}), 0.0, 1e-10);
  EXPECT_NEAR(r2(y, std::vector<double>{1, 2, 4}), 0.5, 1e-10);
  EXPECT_BIOAGE_ERROR(r2(std::vector<double>{4, 4, 4}, y), ErrorCode::kUndefinedStatistic);
}

TEST(Metrics, RmseHandExamples) {
  const std::vector<double> y{1, 2, 3};
  EXPECT_NEAR(rmse(y, y), 0.0, 1e-10);
  EXPECT_NEAR(rmse(std::vector<double>{0, 0}, std::vector<double>{3, -4}), std::sqrt(12.5), 1e-10);
  for (double c : {-2.5, 0.75, 11.0}) {
    EXPECT_NEAR(rmse(y, std::vector<double>{1 + c, 2 + c, 3 + c}), std::abs(c), 1e-10);
  }
}

TEST(Metrics, PermutationInvariant) {
  CounterRng rng(stream_key(1, "metrics"));
  std::vector<double> y(50), yh(50);
  for (std::size_t i = 0; i < 50; ++i) {
    y[i] = rng.normal(50, 10);
    yh[i] = y[i] + rng.normal(0, 4);
  }
  const double a = r2(y, yh), b = rmse(y, yh);
  std::vector<std::size_t> perm(50);
  std::iota(perm.begin(), perm.end(), 0u);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<double> y2, yh2;
  for (auto i : perm) y2.push_back(y[i]), yh2.push_back(yh[i]);
  EXPECT_NEAR(r2(y2, yh2), a, 1e-12);
  EXPECT_NEAR(rmse(y2, yh2), b, 1e-12);
}

TEST(Correlation, HandExamples) {
  const std::vector<double> a{1, 2, 3, 4}, b{1, 4, 9, 16};
  EXPECT_NEAR(spearman(a, b), 1.0, 1e-10);
  EXPECT_NEAR(spearman(a, std::vector<double>{1, 8, 27, 64}), 1.0, 1e-10);
  EXPECT_NEAR(pearson(a, std::vector<double>{-1, -2, -3, -4}), -1.0, 1e-10);
  EXPECT_NEAR(pearson(a, b), bt::pearson_oracle({1, 2, 3, 4}, {1, 4, 9, 16}), 1e-10);
  EXPECT_NEAR(pearson(a, b), 0.98437, 1e-5);
}

TEST(Correlation, MidRanksForTies) {
  EXPECT_EQ(mid_ranks(std::vector<double>{10, 20, 20, 5}), (std::vector<double>{2, 3.5, 3.5, 1}));
  const std::vector<double> x{1, 2, 2, 3, 7}, y{3, 1, 4, 1, 5};
  EXPECT_NEAR(spearman(x, y), bt::pearson_oracle(mid_ranks(x), mid_ranks(y)), 1e-12);
}

TEST(Correlation, Errors) {
  EXPECT_BIOAGE_ERROR(pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}),
                      ErrorCode::kUndefinedStatistic);
  EXPECT_BIOAGE_ERROR(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2}), ErrorCode::kValidation);
}

TEST(PermutationTest, SeparatedGroupsSmallP) {
  std::vector<double> a(30), b(30);
  for (std::size_t i = 0; i < 30; ++i) a[i] = 10.0 + 0.01 * i, b[i] = 0.01 * i;
  const auto t = permutation_test_mean_diff(a, b, 999, 1);
  EXPECT_NEAR(t.observed, 10.0, 1e-12);
  EXPECT_DOUBLE_EQ(t.p_value, 1.0 / 1000.0);
  EXPECT_EQ(t.permutations, 999u);
}

TEST(PermutationTest, IdenticalGroupsLargeP) {
  std::vector<double> a{1, 2, 3, 4, 5}, b{1, 2, 3, 4, 5};
  const auto t = permutation_test_mean_diff(a, b, 500, 2);
  EXPECT_EQ(t.observed, 0.0);
  EXPECT_EQ(t.p_value, 1.0);
}

TEST(PermutationTest, SeededAndBounded) {
  CounterRng rng(stream_key(3, "perm"));
  std::vector<double> a(40), b(40);
  for (auto& v : a) v = rng.normal(0.3, 1);
  for (auto& v : b) v = rng.normal(0, 1);
  const auto t1 = permutation_test_mean_diff(a, b, 2000, 9);
  const auto t2 = permutation_test_mean_diff(a, b, 2000, 9);
  EXPECT_EQ(t1.p_value, t2.p_value);
  EXPECT_GT(t1.p_value, 0.0);
  EXPECT_LE(t1.p_value, 1.0);
}
