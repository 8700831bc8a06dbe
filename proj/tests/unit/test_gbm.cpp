#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <gtest/gtest.h>

#include "bioage/gbm.hpp"
#include "bioage/random.hpp"
#include "bioage/stats.hpp"
#include "bioage/tree.hpp"
#include "expect_error.hpp"
#include "test_data.hpp"

using namespace bioage;
namespace bt = bioage::testing;

namespace {

MatrixView mv(const bt::Regression& d) { return {d.x, d.n, d.p}; }

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

}  // namespace

// --- binning -----------------------------------------------------------------------

TEST(Binning, QuartilesOfOneToThousand) {
  std::vector<double> v(1000);
  std::iota(v.begin(), v.end(), 1.0);
  const auto edges = bin_edges(v, 4);
  ASSERT_EQ(edges.size(), 3u);
  // Sort-based oracle: the q-th quartile of 1..1000 lies between sorted[250q-1] and sorted[250q].
  auto sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int q = 1; q <= 3; ++q) {
    const double lo = sorted[static_cast<std::size_t>(250 * q - 1)], hi = sorted[static_cast<std::size_t>(250 * q)];
    EXPECT_GT(edges[static_cast<std::size_t>(q - 1)], lo);
    EXPECT_LE(edges[static_cast<std::size_t>(q - 1)], hi);
  }
  std::vector<int> counts(4);
  for (double x : v) ++counts[bin_of(edges, x)];
  for (int c : counts) EXPECT_EQ(c, 250);
}

TEST(Binning, ConstantColumnSingleBin) {
  EXPECT_TRUE(bin_edges(std::vector<double>(50, 3.0), 255).empty());
}

TEST(Binning, ValueOnEdgeGoesRight) {
  const std::vector<double> edges{1.0, 2.0};
  EXPECT_EQ(bin_of(edges, 0.5), 0u);
  EXPECT_EQ(bin_of(edges, 1.0), 1u);
  EXPECT_EQ(bin_of(edges, 2.0), 2u);
}

TEST(Binning, NeverExceedsMaxBins) {
  const auto d = bt::friedman1(3000, 5, 1.0, 4);
  const auto b = bin_features(d.x, d.n, d.p, 32);
  for (std::size_t j = 0; j < d.p; ++j) {
    EXPECT_LE(b.num_bins(j), 32u);
    EXPECT_TRUE(std::is_sorted(b.edges[j].begin(), b.edges[j].end()));
  }
}

TEST(Binning, FewDistinctValuesGetOwnBins) {
  const auto edges = bin_edges({3, 1, 2, 2, 3, 1}, 255);
  EXPECT_EQ(edges, (std::vector<double>{1.5, 2.5}));
}

// --- closed forms ---------------------------------------------------------------------

TEST(ClosedForms, LeafWeight) {
  EXPECT_NEAR(leaf_weight(10, 5, 1), -10.0 / 6.0, 1e-12);
  EXPECT_EQ(leaf_weight(0, 5, 1), 0.0);
  double prev = std::abs(leaf_weight(10, 5, 0));
  for (double lam : {1.0, 10.0, 100.0}) {
    const double w = std::abs(leaf_weight(10, 5, lam));
    EXPECT_LT(w, prev);
    prev = w;
  }
  EXPECT_BIOAGE_ERROR(leaf_weight(1, 0, 0), ErrorCode::kDegenerate);
}

TEST(ClosedForms, SplitGain) {
  EXPECT_NEAR(split_gain(-4, 2, 4, 2, 1, 0), 16.0 / 3.0, 1e-12);
  EXPECT_NEAR(split_gain(-4, 2, 4, 2, 1, 5), 16.0 / 3.0 - 5.0, 1e-12);
  // Mirrored children reduce nothing when lambda = 0 (or the gradients vanish).
  EXPECT_NEAR(split_gain(3, 2, 3, 2, 0, 0.7), -0.7, 1e-12);
  EXPECT_NEAR(split_gain(0, 4, 0, 4, 1, 0.7), -0.7, 1e-12);
  // With lambda > 0 a mirrored split is a net loss before the gamma charge.
  EXPECT_LT(split_gain(3, 2, 3, 2, 1, 0), 0.0);
}

// --- fit ------------------------------------------------------------------------------

TEST(Fit, StumpClosedForm) {
  const auto d = bt::friedman1(300, 5, 1.0, 1);
  GbmParams p;
  p.n_trees = 1;
  p.num_leaves = 1;
  p.learning_rate = 0.3;
  p.lambda = 4.0;
  const auto m = fit(mv(d), d.y, p);
  const double base = mean_of(d.y);
  EXPECT_NEAR(m.base_score, base, 1e-12);
  double g = 0.0;
  for (double y : d.y) g += base - y;
  const double want = base + 0.3 * (-g / (300.0 + 4.0));
  for (double v : predict(m, mv(d))) EXPECT_NEAR(v, want, 1e-12);
}

TEST(Fit, ConstantTarget) {
  auto d = bt::friedman1(200, 5, 0.0, 2);
  std::fill(d.y.begin(), d.y.end(), 42.5);
  GbmParams p;
  p.n_trees = 20;
  const auto m = fit(mv(d), d.y, p);
  for (const auto& t : m.trees) {
    for (const auto& n : t.nodes) EXPECT_EQ(n.weight, 0.0);
  }
  for (double v : predict(m, mv(d))) EXPECT_EQ(v, 42.5);
}

TEST(Fit, ZeroTreesPredictBase) {
  const auto d = bt::friedman1(100, 5, 1.0, 3);
  GbmParams p;
  p.n_trees = 0;
  const auto m = fit(mv(d), d.y, p);
  for (double v : predict(m, mv(d))) EXPECT_EQ(v, m.base_score);
}

TEST(Fit, LeafWeightsMatchStoredSums) {
  const auto d = bt::friedman1(500, 5, 1.0, 4);
  GbmParams p;
  p.n_trees = 10;
  const auto m = fit(mv(d), d.y, p);
  for (const auto& t : m.trees) {
    for (const auto& n : t.nodes) {
      if (n.is_leaf()) EXPECT_NEAR(n.weight, -n.sum_grad / (n.sum_hess + p.lambda), 1e-12);
      EXPECT_GT(n.cover, 0.0);
    }
    EXPECT_LE(t.num_leaves(), static_cast<std::size_t>(p.num_leaves));
  }
}

TEST(Fit, MinSamplesLeafHonoured) {
  const auto d = bt::friedman1(400, 5, 1.0, 5);
  GbmParams p;
  p.n_trees = 5;
  p.min_samples_leaf = 37;
  const auto m = fit(mv(d), d.y, p);
  for (const auto& t : m.trees) {
    for (const auto& n : t.nodes) {
      if (n.is_leaf()) EXPECT_GE(n.cover, 37.0);
    }
  }
}

TEST(Fit, AdditiveDecomposition) {
  const auto d = bt::friedman1(400, 6, 1.0, 6);
  GbmParams p;
  p.n_trees = 25;
  const auto m = fit(mv(d), d.y, p);
  const auto pred = predict(m, mv(d));
  for (std::size_t i = 0; i < d.n; ++i) {
    std::span<const double> row(d.x.data() + i * d.p, d.p);
    double acc = m.base_score;
    for (const auto& t : m.trees) acc += m.learning_rate * t.predict(row);
    EXPECT_NEAR(pred[i], acc, 1e-9);
  }
}

TEST(Fit, ObjectiveNonIncreasing) {
  const auto d = bt::friedman1(2000, 10, 1.0, 7);
  GbmParams p;
  p.n_trees = 50;
  p.learning_rate = 1.0;
  const auto r = fit_with_trace(mv(d), d.y, p);
  ASSERT_EQ(r.objective.size(), 51u);
  for (std::size_t m = 2; m < r.objective.size(); ++m) EXPECT_LE(r.objective[m], r.objective[m - 1]);
}

TEST(Fit, CartEquivalence) {
  // lambda = gamma = 0, one tree, unlimited leaves and distinct values: every
  // training row ends up in a pure leaf whose weight is its residual mean.
  CounterRng rng(stream_key(8, "cart"));
  const std::size_t n = 120, p = 3;
  std::vector<double> x(n * p), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) x[i * p + j] = static_cast<double>(i) * 0.37 + static_cast<double>(j) * 1000.0 + rng.uniform() * 0.01;
    y[i] = rng.normal(0, 3);
  }
  GbmParams gp;
  gp.n_trees = 1;
  gp.num_leaves = static_cast<int>(n);
  gp.min_samples_leaf = 1;
  gp.learning_rate = 1.0;
  gp.lambda = 0.0;
  const auto m = fit(MatrixView{x, n, p}, y, gp);
  const auto pred = predict(m, MatrixView{x, n, p});
  // Check against per-leaf target means computed independently from leaf membership.
  std::map<std::size_t, std::pair<double, int>> leaf;
  for (std::size_t i = 0; i < n; ++i) {
    const auto l = m.trees[0].leaf_of(std::span<const double>(x.data() + i * p, p));
    leaf[l].first += y[i];
    leaf[l].second += 1;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto l = m.trees[0].leaf_of(std::span<const double>(x.data() + i * p, p));
    EXPECT_NEAR(pred[i], leaf[l].first / leaf[l].second, 1e-9);
    EXPECT_NEAR(pred[i], y[i], 1e-9);
  }
}

TEST(Fit, PermutationInvariant) {
  const auto d = bt::friedman1(600, 6, 1.0, 9);
  GbmParams p;
  p.n_trees = 30;
  p.goss = GossParams{};
  p.seed = 17;
  std::vector<std::size_t> perm(d.n);
  std::iota(perm.begin(), perm.end(), 0u);
  CounterRng rng(stream_key(9, "perm"));
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<double> x2, y2;
  for (auto i : perm) {
    x2.insert(x2.end(), d.x.begin() + static_cast<std::ptrdiff_t>(i * d.p), d.x.begin() + static_cast<std::ptrdiff_t>((i + 1) * d.p));
    y2.push_back(d.y[i]);
  }
  const auto a = fit(mv(d), d.y, p);
  const auto b = fit(MatrixView{x2, d.n, d.p}, y2, p);
  EXPECT_EQ(predict(a, mv(d)), predict(b, mv(d)));
}

TEST(Fit, DeterministicPerSeed) {
  const auto d = bt::friedman1(500, 6, 1.0, 10);
  GbmParams p;
  p.n_trees = 20;
  p.goss = GossParams{};
  p.seed = 1;
  const auto a = predict(fit(mv(d), d.y, p), mv(d));
  EXPECT_EQ(a, predict(fit(mv(d), d.y, p), mv(d)));
  p.seed = 2;
  EXPECT_NE(a, predict(fit(mv(d), d.y, p), mv(d)));
}

TEST(Fit, FriedmanHeldOut) {
  const auto train = bt::friedman1(2000, 10, 1.0, 11);
  const auto test = bt::friedman1(2000, 10, 1.0, 12);
  const auto m = fit(mv(train), train.y, GbmParams{});
  EXPECT_GE(r2(test.y, predict(m, mv(test))), 0.85);
}

TEST(Fit, GossStillLearns) {
  const auto train = bt::friedman1(2000, 10, 1.0, 13);
  const auto test = bt::friedman1(1000, 10, 1.0, 14);
  GbmParams p;
  p.goss = GossParams{};
  const auto r = fit_with_trace(mv(train), train.y, p);
  EXPECT_EQ(r.goss_fallbacks, 0u);
  EXPECT_GE(r2(test.y, predict(r.model, mv(test))), 0.8);
}

TEST(Fit, Errors) {
  auto d = bt::friedman1(30, 5, 1.0, 15);
  GbmParams p;
  EXPECT_BIOAGE_ERROR(fit(mv(d), d.y, p), ErrorCode::kFit);  // n < 2 * min_samples_leaf
  p.min_samples_leaf = 2;
  d.x[7] = std::nan("");
  EXPECT_BIOAGE_ERROR(fit(mv(d), d.y, p), ErrorCode::kValidation);
  std::vector<double> none;
  EXPECT_BIOAGE_ERROR(fit(MatrixView{none, 0, 5}, none, p), ErrorCode::kFit);
  p.goss = GossParams{0.7, 0.5};
  EXPECT_BIOAGE_ERROR(p.validate(), ErrorCode::kConfig);
  GbmParams q;
  q.max_bins = 1;
  EXPECT_BIOAGE_ERROR(q.validate(), ErrorCode::kConfig);
}

TEST(Predict, SchemaMismatch) {
  const auto d = bt::friedman1(100, 5, 1.0, 16);
  FeatureMatrix fm;
  for (std::size_t j = 0; j < d.p; ++j) fm.columns.push_back({"f" + std::to_string(j)});
  fm.values = d.x;
  fm.row_ids.resize(d.n);
  fm.sex.resize(d.n);
  fm.target = AuditedVector(d.y);
  GbmParams p;
  p.n_trees = 3;
  const auto m = fit(fm, d.y, p);
  EXPECT_EQ(predict(m, fm), predict(m, mv(d)));
  // Reordered columns are realigned by name.
  const std::vector<std::size_t> order{4, 3, 2, 1, 0};
  EXPECT_EQ(predict(m, select_columns(fm, order)), predict(m, mv(d)));
  const std::vector<std::size_t> fewer{0, 1, 2};
  EXPECT_BIOAGE_ERROR(predict(m, select_columns(fm, fewer)), ErrorCode::kSchema);
}

// --- GOSS ------------------------------------------------------------------------------

TEST(Goss, CountsAndWeights) {
  std::vector<double> g(100);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<double>(i) - 50.0;
  const auto s = goss_sample(g, 0.2, 0.1, 5);
  ASSERT_EQ(s.indices.size(), 30u);
  EXPECT_FALSE(s.fell_back);
  int top = 0, small = 0;
  for (std::size_t k = 0; k < s.indices.size(); ++k) {
    if (s.weights[k] == 1.0) {
      ++top;
      EXPECT_GE(std::abs(g[s.indices[k]]), 40.0);
    } else {
      ++small;
      EXPECT_DOUBLE_EQ(s.weights[k], 8.0);
    }
  }
  EXPECT_EQ(top, 20);
  EXPECT_EQ(small, 10);
  EXPECT_TRUE(std::is_sorted(s.indices.begin(), s.indices.end()));
}

TEST(Goss, FullCoverageWhenFractionsSumToOne) {
  std::vector<double> g(50, 1.0);
  const auto s = goss_sample(g, 0.3, 0.7, 1);
  EXPECT_EQ(s.indices.size(), 50u);
  for (double w : s.weights) EXPECT_DOUBLE_EQ(w, 1.0);
}

TEST(Goss, FallsBackOnTinyInput) {
  std::vector<double> g(5, 2.0);
  const auto s = goss_sample(g, 0.2, 0.1, 1);
  EXPECT_TRUE(s.fell_back);
  EXPECT_EQ(s.indices.size(), 5u);
}

TEST(Goss, WeightedSumUnbiased) {
  CounterRng rng(stream_key(2, "goss-mc"));
  std::vector<double> g(1000);
  for (auto& v : g) v = rng.normal(0.5, 2.0);
  const double full = std::accumulate(g.begin(), g.end(), 0.0);
  std::vector<double> est;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto s = goss_sample(g, 0.2, 0.1, seed);
    double acc = 0.0;
    for (std::size_t k = 0; k < s.indices.size(); ++k) acc += s.weights[k] * g[s.indices[k]];
    est.push_back(acc);
  }
  const double m = mean_of(est);
  double var = 0.0;
  for (double e : est) var += (e - m) * (e - m);
  const double se = std::sqrt(var / 199.0 / 200.0);
  EXPECT_LE(std::abs(m - full), 3.0 * se) << "mean " << m << " full " << full << " se " << se;
}

TEST(Goss, DeterministicPerSeed) {
  std::vector<double> g(300);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::sin(static_cast<double>(i));
  EXPECT_EQ(goss_sample(g, 0.2, 0.1, 4).indices, goss_sample(g, 0.2, 0.1, 4).indices);
  EXPECT_NE(goss_sample(g, 0.2, 0.1, 4).indices, goss_sample(g, 0.2, 0.1, 5).indices);
}
