#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bioage/features.hpp"
#include "bioage/tree.hpp"

namespace bioage {

struct GossParams {
  double a = 0.2;  // fraction kept by largest |gradient|
  double b = 0.1;  // fraction sampled from the rest
};

struct GbmParams {
  int n_trees = 400;
  double learning_rate = 0.05;
  int num_leaves = 31;
  int min_samples_leaf = 20;
  double lambda = 1.0;
  double gamma = 0.0;
  int max_bins = 255;
  std::optional<GossParams> goss;
  std::uint64_t seed = 0;

  void validate() const;
};

struct BoostedEnsemble {
  double base_score = 0.0;
  double learning_rate = 1.0;
  GbmParams params;
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> bin_edges;
  std::vector<Tree> trees;
};

// Row-major dense matrix view.
struct MatrixView {
  std::span<const double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::span<const double> row(std::size_t i) const { return data.subspan(i * cols, cols); }
};

inline MatrixView view(const FeatureMatrix& m) { return {m.values, m.rows(), m.cols()}; }

// Split score: 1/2 [GL^2/(HL+l) + GR^2/(HR+l) - (GL+GR)^2/(HL+HR+l)] - gamma.
double split_gain(double gl, double hl, double gr, double hr, double lambda, double gamma);

// Optimal leaf value -G/(H+lambda). Throws kDegenerate when H+lambda == 0.
double leaf_weight(double g, double h, double lambda);

struct GossSample {
  std::vector<std::uint32_t> indices;  // ascending
  std::vector<double> weights;         // aligned with indices
  bool fell_back = false;              // n < 1/b: full data, unit weights
};

GossSample goss_sample(std::span<const double> gradients, double a, double b, std::uint64_t seed);

struct GbmFitResult {
  BoostedEnsemble model;
  // objective[m] = sum 1/2 (y - yhat_m)^2 + gamma T_m + lambda/2 sum w^2 of the
  // m-th added function; objective[0] is the loss at base_score.
  std::vector<double> objective;
  std::size_t goss_fallbacks = 0;
};

GbmFitResult fit_with_trace(MatrixView x, std::span<const double> y, const GbmParams& p,
                            std::vector<std::string> feature_names = {});
BoostedEnsemble fit(MatrixView x, std::span<const double> y, const GbmParams& p,
                    std::vector<std::string> feature_names = {});
BoostedEnsemble fit(const FeatureMatrix& x, std::span<const double> y, const GbmParams& p);

// Raw row in fit-time feature order.
double predict_row(const BoostedEnsemble& m, std::span<const double> row);
std::vector<double> predict(const BoostedEnsemble& m, MatrixView x);
// Columns matched by name; schema error when the sets differ.
std::vector<double> predict(const BoostedEnsemble& m, const FeatureMatrix& x);

// Reorders the columns of x to the model's feature order.
std::vector<double> align_columns(const std::vector<std::string>& model_features, const FeatureMatrix& x);

void validate_finite(MatrixView x, std::span<const double> y);

}  // namespace bioage
