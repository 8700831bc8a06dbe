#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bioage/gbm.hpp"

namespace bioage {

struct ForestParams {
  int n_trees = 300;
  int max_depth = 0;  // 0: unlimited
  int min_samples_leaf = 5;
  double feature_subsample = 1.0 / 3.0;
  bool bootstrap = true;
  int max_bins = 255;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ForestModel {
  ForestParams params;
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> bin_edges;
  std::vector<Tree> trees;  // leaf weight = bootstrap-weighted mean target
};

ForestModel rf_fit(MatrixView x, std::span<const double> y, const ForestParams& p,
                   std::vector<std::string> feature_names = {});
ForestModel rf_fit(const FeatureMatrix& x, std::span<const double> y, const ForestParams& p);
double rf_predict_row(const ForestModel& m, std::span<const double> row);
std::vector<double> rf_predict(const ForestModel& m, MatrixView x);
std::vector<double> rf_predict(const ForestModel& m, const FeatureMatrix& x);

struct ElasticNetParams {
  double alpha = 0.1;
  double l1_ratio = 0.5;
  int max_iter = 10000;
  double tol = 1e-6;

  void validate() const;
};

struct ElasticNetModel {
  ElasticNetParams params;
  std::vector<std::string> feature_names;
  double intercept = 0.0;
  std::vector<double> coef;           // original feature scale
  std::vector<double> coef_standard;  // standardized scale
  std::vector<double> mean;
  std::vector<double> scale;          // population sd; 0 for constant columns
  bool converged = false;
  int iterations = 0;
  double final_delta = 0.0;
  std::vector<double> objective;      // after each full sweep, standardized problem
};

double soft_threshold(double z, double t);

ElasticNetModel enet_fit(MatrixView x, std::span<const double> y, const ElasticNetParams& p,
                         std::vector<std::string> feature_names = {});
ElasticNetModel enet_fit(const FeatureMatrix& x, std::span<const double> y, const ElasticNetParams& p);
double enet_predict_row(const ElasticNetModel& m, std::span<const double> row);
std::vector<double> enet_predict(const ElasticNetModel& m, MatrixView x);
std::vector<double> enet_predict(const ElasticNetModel& m, const FeatureMatrix& x);

}  // namespace bioage
