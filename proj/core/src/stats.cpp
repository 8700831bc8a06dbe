#include "bioage/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bioage/error.hpp"
#include "bioage/random.hpp"

namespace bioage {

namespace {

void same_length(std::span<const double> a, std::span<const double> b, std::size_t min_n, const char* what) {
  if (a.size() != b.size()) fail(ErrorCode::kValidation, std::string(what) + ": length mismatch");
  if (a.size() < min_n) {
    fail(ErrorCode::kValidation, std::string(what) + ": needs at least " + std::to_string(min_n) + " values");
  }
}

}  // namespace

double mean(std::span<const double> x) {
  if (x.empty()) fail(ErrorCode::kValidation, "mean of an empty vector");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double r2(std::span<const double> y, std::span<const double> yhat) {
  same_length(y, yhat, 2, "r2");
  const double ybar = mean(y);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    ss_tot += (y[i] - ybar) * (y[i] - ybar);
  }
  if (ss_tot == 0.0) fail(ErrorCode::kUndefinedStatistic, "r2 undefined: target has zero variance");
  return 1.0 - ss_res / ss_tot;
}

double rmse(std::span<const double> y, std::span<const double> yhat) {
  same_length(y, yhat, 1, "rmse");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - yhat[i]) * (y[i] - yhat[i]);
  return std::sqrt(s / static_cast<double>(y.size()));
}

double pearson(std::span<const double> x, std::span<const double> y) {
  same_length(x, y, 3, "pearson");
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) fail(ErrorCode::kUndefinedStatistic, "correlation undefined: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> mid_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  same_length(x, y, 3, "spearman");
  const auto rx = mid_ranks(x);
  const auto ry = mid_ranks(y);
  return pearson(rx, ry);
}

PermutationTest permutation_test_mean_diff(std::span<const double> a, std::span<const double> b,
                                           std::size_t permutations, std::uint64_t seed) {
  if (a.empty() || b.empty()) fail(ErrorCode::kInsufficientGroup, "permutation test needs two non-empty groups");
  PermutationTest out;
  out.permutations = permutations;
  out.observed = mean(a) - mean(b);
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const double total = std::accumulate(pooled.begin(), pooled.end(), 0.0);
  const std::size_t na = a.size();
  const double nad = static_cast<double>(na), nbd = static_cast<double>(b.size());
  const double threshold = std::abs(out.observed) * (1.0 - 1e-12);
  CounterRng rng(seed);
  std::size_t extreme = 0;
  for (std::size_t k = 0; k < permutations; ++k) {
    // Partial shuffle: the first na slots become group a.
    double sa = 0.0;
    for (std::size_t i = 0; i < na; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.bounded(pooled.size() - i));
      std::swap(pooled[i], pooled[j]);
      sa += pooled[i];
    }
    const double diff = sa / nad - (total - sa) / nbd;
    if (std::abs(diff) >= threshold) ++extreme;
  }
  out.p_value = (static_cast<double>(extreme) + 1.0) / (static_cast<double>(permutations) + 1.0);
  return out;
}

}  // namespace bioage
