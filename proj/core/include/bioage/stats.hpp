#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace bioage {

// 1 - SS_res / SS_tot. Throws kUndefinedStatistic when y is constant.
double r2(std::span<const double> y, std::span<const double> yhat);
double rmse(std::span<const double> y, std::span<const double> yhat);
double mean(std::span<const double> x);

// Throws kUndefinedStatistic when either input has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);
// Pearson on mid-ranks (average rank for ties).
double spearman(std::span<const double> x, std::span<const double> y);
std::vector<double> mid_ranks(std::span<const double> x);

struct PermutationTest {
  double observed = 0.0;  // mean(a) - mean(b)
  double p_value = 1.0;   // two-sided, (count + 1) / (permutations + 1)
  std::size_t permutations = 0;
};

PermutationTest permutation_test_mean_diff(std::span<const double> a, std::span<const double> b,
                                           std::size_t permutations, std::uint64_t seed);

}  // namespace bioage
