#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bioage/baselines.hpp"
#include "bioage/gbm.hpp"

namespace bioage {

// Trees plus the affine map from summed leaf values to the model output:
// prediction = offset + scale * sum_t tree_t(x).
struct TreeEnsembleView {
  const std::vector<Tree>* trees = nullptr;
  double offset = 0.0;
  double scale = 1.0;
  std::size_t n_features = 0;
};

TreeEnsembleView shap_view(const BoostedEnsemble& m);
TreeEnsembleView shap_view(const ForestModel& m);

// Cover-weighted mean output of one tree.
double tree_expected_value(const Tree& t);
double expected_value(const TreeEnsembleView& v);

// Exact path-based TreeSHAP for one tree; adds into phi.
void tree_shap_single(const Tree& t, std::span<const double> x, std::span<double> phi, double scale = 1.0);
std::vector<double> tree_shap_row(const TreeEnsembleView& v, std::span<const double> x);

inline constexpr std::size_t kBruteForceMaxFeatures = 15;

// Tree-conditional value v(S): features in S follow x, the rest average the
// two children by training cover.
double subset_value(const TreeEnsembleView& v, std::span<const double> x, std::uint32_t mask);
std::vector<double> brute_force_shap(const TreeEnsembleView& v, std::span<const double> x);
std::vector<double> brute_force_shap(const BoostedEnsemble& m, std::span<const double> x);

struct ShapAttribution {
  std::string row_id;
  std::vector<double> phi;
  double phi0 = 0.0;
};

struct ShapResult {
  std::vector<std::string> feature_names;
  double phi0 = 0.0;
  std::vector<ShapAttribution> rows;
  std::vector<std::vector<double>> values;  // aligned feature values, model order
};

ShapResult tree_shap(const BoostedEnsemble& m, const FeatureMatrix& x);
ShapResult tree_shap(const ForestModel& m, const FeatureMatrix& x);

struct FeatureImportance {
  std::string feature;
  double mean_abs_phi = 0.0;
  std::size_t rank = 0;
  double sign_consistency = 0.0;
};

// Per feature in model order; ranks 1..p by mean |phi| desc, ties by feature order.
std::vector<FeatureImportance> summarize(const ShapResult& shap);

void write_shap_summary(std::ostream& out, const std::vector<FeatureImportance>& summary);
// Long format: row_id, feature, rank, phi, value.
void write_shap_points(std::ostream& out, const ShapResult& shap, const std::vector<FeatureImportance>& summary);

}  // namespace bioage
