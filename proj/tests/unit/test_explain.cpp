#include <algorithm>
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "bioage/baselines.hpp"
#include "bioage/explain.hpp"
#include "bioage/random.hpp"
#include "expect_error.hpp"
#include "test_data.hpp"

using namespace bioage;
namespace bt = bioage::testing;

namespace {

TreeNode leaf(double w, double cover) {
  TreeNode n;
  n.weight = w;
  n.cover = cover;
  return n;
}

TreeNode split(int feature, double threshold, int left, int right, double cover) {
  TreeNode n;
  n.feature = feature;
  n.threshold = threshold;
  n.left = left;
  n.right = right;
  n.cover = cover;
  return n;
}

BoostedEnsemble ensemble(std::vector<Tree> trees, std::size_t p, double base = 10.0, double lr = 1.0) {
  BoostedEnsemble m;
  m.base_score = base;
  m.learning_rate = lr;
  for (std::size_t j = 0; j < p; ++j) m.feature_names.push_back("f" + std::to_string(j));
  m.bin_edges.resize(p);
  m.trees = std::move(trees);
  return m;
}

// Random small GBM on the first p Friedman columns.
BoostedEnsemble random_gbm(std::uint64_t seed, std::size_t p, bt::Regression& data) {
  CounterRng rng(stream_key(seed, "shap-test"));
  data = bt::friedman1(200, std::max<std::size_t>(p, 5), 0.5, seed);
  std::vector<double> x;
  for (std::size_t i = 0; i < data.n; ++i) {
    for (std::size_t j = 0; j < p; ++j) x.push_back(data.x[i * data.p + j]);
  }
  data.x = x;
  data.p = p;
  GbmParams gp;
  gp.n_trees = 1 + static_cast<int>(rng.bounded(5));
  gp.num_leaves = 2 + static_cast<int>(rng.bounded(6));
  gp.min_samples_leaf = 3;
  gp.learning_rate = 0.3 + 0.7 * rng.uniform();
  gp.max_bins = 8;
  return fit(MatrixView{data.x, data.n, data.p}, data.y, gp);
}

}  // namespace

TEST(TreeShap, ZeroTreesGiveBaseValue) {
  const auto m = ensemble({}, 3, 42.0);
  const std::vector<double> x{1, 2, 3};
  const auto v = shap_view(m);
  EXPECT_EQ(expected_value(v), 42.0);
  for (double phi : tree_shap_row(v, x)) EXPECT_EQ(phi, 0.0);
}

TEST(TreeShap, SingleSplitDummyFeatures) {
  Tree t;
  t.nodes = {split(1, 0.5, 1, 2, 10), leaf(-2, 4), leaf(3, 6)};
  const auto m = ensemble({t}, 4);
  const std::vector<double> x{9, 0.1, 9, 9};  // routed left
  const auto phi = tree_shap_row(shap_view(m), x);
  EXPECT_EQ(phi[0], 0.0);
  EXPECT_EQ(phi[2], 0.0);
  EXPECT_EQ(phi[3], 0.0);
  // v(empty) = 0.4 * -2 + 0.6 * 3 = 1.0; prediction -2 => phi_1 = -3.
  EXPECT_NEAR(phi[1], -3.0, 1e-12);
  EXPECT_NEAR(expected_value(shap_view(m)), 11.0, 1e-12);
}

TEST(BruteForce, OneFeature) {
  Tree t;
  t.nodes = {split(0, 0.0, 1, 2, 5), leaf(1, 2), leaf(4, 3)};
  const auto m = ensemble({t}, 1, 0.0);
  const std::vector<double> x{1.0};
  const auto phi = brute_force_shap(m, x);
  EXPECT_NEAR(phi[0], predict_row(m, x) - expected_value(shap_view(m)), 1e-12);
}

TEST(BruteForce, SymmetricDuplicateFeatures) {
  // f0 and f1 are identical columns; the tree splits on f0 then f1 with mirrored covers.
  Tree t;
  t.nodes = {split(0, 0.5, 1, 2, 100), split(1, 0.5, 3, 4, 50), split(1, 0.5, 5, 6, 50),
             leaf(1, 25),              leaf(2, 25),              leaf(2, 25),
             leaf(5, 25)};
  const auto m = ensemble({t}, 3);
  for (const auto& x : std::vector<std::vector<double>>{{1, 1, 0}, {0, 0, 7}, {0.2, 0.2, 1}}) {
    const auto brute = brute_force_shap(m, x);
    const auto fast = tree_shap_row(shap_view(m), x);
    EXPECT_NEAR(brute[0], brute[1], 1e-12);
    EXPECT_NEAR(fast[0], fast[1], 1e-12);
    EXPECT_EQ(brute[2], 0.0);
  }
}

TEST(BruteForce, EfficiencyOverSeeds) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    bt::Regression d;
    const std::size_t p = 2 + seed % 7;
    const auto m = random_gbm(seed, p, d);
    const auto v = shap_view(m);
    for (std::size_t i = 0; i < 3; ++i) {
      std::span<const double> row(d.x.data() + i * p, p);
      const auto phi = brute_force_shap(v, row);
      double s = expected_value(v);
      for (double f : phi) s += f;
      EXPECT_NEAR(s, predict_row(m, row), 1e-10) << "seed " << seed;
    }
  }
}

TEST(BruteForce, RefusesWideInputs) {
  const auto m = ensemble({}, 16);
  const std::vector<double> x(16, 0.0);
  EXPECT_BIOAGE_ERROR(brute_force_shap(m, x), ErrorCode::kConfig, "16");
}

TEST(TreeShap, MatchesBruteForce) {
  double worst = 0.0;
  for (std::uint64_t seed = 100; seed < 140; ++seed) {
    bt::Regression d;
    const std::size_t p = 2 + seed % 9;
    const auto m = random_gbm(seed, p, d);
    const auto v = shap_view(m);
    for (std::size_t i = 0; i < 10; ++i) {
      std::span<const double> row(d.x.data() + i * p, p);
      const auto a = tree_shap_row(v, row);
      const auto b = brute_force_shap(v, row);
      for (std::size_t j = 0; j < p; ++j) worst = std::max(worst, std::abs(a[j] - b[j]));
    }
  }
  EXPECT_LE(worst, 1e-9);
}

TEST(TreeShap, AdditiveAcrossTrees) {
  bt::Regression d;
  const auto m = random_gbm(7, 6, d);
  std::span<const double> row(d.x.data(), 6);
  const auto total = tree_shap_row(shap_view(m), row);
  std::vector<double> acc(6, 0.0);
  for (const auto& t : m.trees) tree_shap_single(t, row, acc, m.learning_rate);
  for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(total[j], acc[j], 1e-12);
}

TEST(TreeShap, UnusedFeatureIsExactlyZero) {
  bt::Regression d;
  const auto m = random_gbm(3, 8, d);
  std::vector<bool> used(8, false);
  for (const auto& t : m.trees) {
    for (const auto& n : t.nodes) {
      if (!n.is_leaf()) used[static_cast<std::size_t>(n.feature)] = true;
    }
  }
  for (std::size_t i = 0; i < 20; ++i) {
    const auto phi = tree_shap_row(shap_view(m), std::span<const double>(d.x.data() + i * 8, 8));
    for (std::size_t j = 0; j < 8; ++j) {
      if (!used[j]) EXPECT_EQ(phi[j], 0.0);
    }
  }
}

TEST(TreeShap, ForestLocalAccuracy) {
  const auto d = bt::friedman1(300, 6, 1.0, 4);
  ForestParams p;
  p.n_trees = 15;
  const auto m = rf_fit(MatrixView{d.x, d.n, d.p}, d.y, p);
  const auto v = shap_view(m);
  for (std::size_t i = 0; i < 30; ++i) {
    std::span<const double> row(d.x.data() + i * d.p, d.p);
    const auto phi = tree_shap_row(v, row);
    double s = expected_value(v);
    for (double f : phi) s += f;
    EXPECT_NEAR(s, rf_predict_row(m, row), 1e-8);
  }
}

TEST(TreeShap, ZeroCoverIsModelIntegrityError) {
  Tree t;
  t.nodes = {split(0, 0.5, 1, 2, 10), leaf(1, 10), leaf(2, 0)};
  const auto m = ensemble({t}, 2);
  const std::vector<double> x{0, 0};
  EXPECT_BIOAGE_ERROR(tree_shap_row(shap_view(m), x), ErrorCode::kModelIntegrity);
}

TEST(TreeShap, FeatureMatrixResult) {
  const auto d = bt::friedman1(120, 5, 1.0, 5);
  FeatureMatrix fm;
  for (std::size_t j = 0; j < d.p; ++j) fm.columns.push_back({"c" + std::to_string(j)});
  fm.values = d.x;
  for (std::size_t i = 0; i < d.n; ++i) fm.row_ids.push_back("R" + std::to_string(i));
  fm.sex.assign(d.n, Sex::kMale);
  fm.target = AuditedVector(d.y);
  GbmParams p;
  p.n_trees = 10;
  p.min_samples_leaf = 5;
  const auto m = fit(fm, d.y, p);
  const auto r = tree_shap(m, fm);
  ASSERT_EQ(r.rows.size(), d.n);
  EXPECT_EQ(r.rows[3].row_id, "R3");
  const auto pred = predict(m, fm);
  for (std::size_t i = 0; i < d.n; ++i) {
    double s = r.phi0;
    for (double f : r.rows[i].phi) s += f;
    EXPECT_NEAR(s, pred[i], 1e-8);
  }
  const auto summary = summarize(r);
  std::vector<std::size_t> ranks;
  for (const auto& f : summary) ranks.push_back(f.rank);
  std::sort(ranks.begin(), ranks.end());
  for (std::size_t k = 0; k < ranks.size(); ++k) EXPECT_EQ(ranks[k], k + 1);

  std::ostringstream pts;
  write_shap_points(pts, r, summary);
  EXPECT_EQ(pts.str().substr(0, pts.str().find('\n')), "row_id,feature,rank,phi,value");
}

TEST(Summarize, OneNonzeroFeatureRanksFirst) {
  ShapResult r;
  r.feature_names = {"a", "b", "c"};
  r.rows = {{"1", {0, 0.5, 0}}, {"2", {0, -0.2, 0}}};
  const auto s = summarize(r);
  EXPECT_EQ(s[1].rank, 1u);
  EXPECT_DOUBLE_EQ(s[1].mean_abs_phi, 0.35);
  EXPECT_DOUBLE_EQ(s[1].sign_consistency, 0.5);
}

TEST(Summarize, AllZeroTiesKeepFeatureOrder) {
  ShapResult r;
  r.feature_names = {"a", "b", "c"};
  r.rows = {{"1", {0, 0, 0}}};
  const auto s = summarize(r);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(s[j].rank, j + 1);
    EXPECT_EQ(s[j].mean_abs_phi, 0.0);
  }
  EXPECT_BIOAGE_ERROR(summarize(ShapResult{}), ErrorCode::kValidation);
}
