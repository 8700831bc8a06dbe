#include "bioage/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bioage/error.hpp"
#include "bioage/random.hpp"
#include "grower.hpp"

namespace bioage {

namespace {

std::vector<std::string> default_names(std::vector<std::string> names, std::size_t d) {
  if (names.empty()) {
    for (std::size_t j = 0; j < d; ++j) names.push_back("f" + std::to_string(j));
  }
  if (names.size() != d) fail(ErrorCode::kFit, "feature name count does not match columns");
  return names;
}

void check_shape(MatrixView x, std::span<const double> y) {
  if (x.rows == 0 || x.cols == 0) fail(ErrorCode::kFit, "cannot fit on empty data");
  if (y.size() != x.rows) fail(ErrorCode::kFit, "target length does not match row count");
  validate_finite(x, y);
}

}  // namespace

void ForestParams::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorCode::kConfig, "rf params: " + what); };
  if (n_trees < 1) bad("n_trees must be >= 1");
  if (max_depth < 0) bad("max_depth must be >= 0");
  if (min_samples_leaf < 1) bad("min_samples_leaf must be >= 1");
  if (!(feature_subsample > 0.0 && feature_subsample <= 1.0)) bad("feature_subsample must be in (0, 1]");
  if (max_bins < 2 || max_bins > kMaxBins) bad("max_bins must be in [2, 255]");
}

ForestModel rf_fit(MatrixView x, std::span<const double> y, const ForestParams& p,
                   std::vector<std::string> feature_names) {
  p.validate();
  check_shape(x, y);
  const std::size_t n = x.rows;
  ForestModel m;
  m.params = p;
  m.feature_names = default_names(std::move(feature_names), x.cols);
  const BinnedMatrix binned = bin_features(x.data, n, x.cols, p.max_bins);
  m.bin_edges = binned.edges;

  // Variance-reduction CART is the lambda = 0 second-order grower with
  // g = -y and h = 1 (times bootstrap multiplicity).
  std::vector<double> grad(n), hess(n);
  for (int t = 0; t < p.n_trees; ++t) {
    const auto tree_key = stream_key(p.seed, "rf", static_cast<std::uint64_t>(t));
    std::vector<double> count(n, 0.0);
    if (p.bootstrap) {
      CounterRng rng(combine_keys(tree_key, hash_name("bootstrap")));
      for (std::size_t k = 0; k < n; ++k) count[rng.bounded(n)] += 1.0;
    } else {
      std::fill(count.begin(), count.end(), 1.0);
    }
    std::vector<std::uint32_t> rows;
    for (std::size_t i = 0; i < n; ++i) {
      if (count[i] == 0.0) continue;
      rows.push_back(static_cast<std::uint32_t>(i));
      grad[i] = -y[i] * count[i];
      hess[i] = count[i];
    }
    detail::GrowOptions opt;
    opt.max_leaves = 0;
    opt.max_depth = p.max_depth;
    opt.min_leaf = static_cast<double>(p.min_samples_leaf);
    opt.min_leaf_by_weight = true;
    opt.feature_fraction = p.feature_subsample;
    opt.feature_key = combine_keys(tree_key, hash_name("features"));
    m.trees.push_back(detail::grow_tree(binned, rows, grad, hess, opt));
  }
  return m;
}

ForestModel rf_fit(const FeatureMatrix& x, std::span<const double> y, const ForestParams& p) {
  return rf_fit(view(x), y, p, x.feature_names());
}

double rf_predict_row(const ForestModel& m, std::span<const double> row) {
  double s = 0.0;
  for (const auto& t : m.trees) s += t.predict(row);
  return s / static_cast<double>(m.trees.size());
}

std::vector<double> rf_predict(const ForestModel& m, MatrixView x) {
  if (x.cols != m.feature_names.size()) fail(ErrorCode::kSchema, "column count does not match the model");
  std::vector<double> out(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) out[i] = rf_predict_row(m, x.row(i));
  return out;
}

std::vector<double> rf_predict(const ForestModel& m, const FeatureMatrix& x) {
  const auto data = align_columns(m.feature_names, x);
  return rf_predict(m, MatrixView{data, x.rows(), m.feature_names.size()});
}

void ElasticNetParams::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorCode::kConfig, "enet params: " + what); };
  if (!(alpha >= 0.0)) bad("alpha must be >= 0");
  if (!(l1_ratio >= 0.0 && l1_ratio <= 1.0)) bad("l1_ratio must be in [0, 1]");
  if (max_iter < 1) bad("max_iter must be >= 1");
  if (!(tol > 0.0)) bad("tol must be > 0");
}

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

ElasticNetModel enet_fit(MatrixView x, std::span<const double> y, const ElasticNetParams& p,
                         std::vector<std::string> feature_names) {
  p.validate();
  check_shape(x, y);
  const std::size_t n = x.rows;
  const std::size_t d = x.cols;
  if (n < 2) fail(ErrorCode::kFit, "elastic net needs at least 2 rows");
  const double nd = static_cast<double>(n);

  ElasticNetModel m;
  m.params = p;
  m.feature_names = default_names(std::move(feature_names), d);
  m.mean.assign(d, 0.0);
  m.scale.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) m.mean[j] += x.data[i * d + j];
  }
  for (auto& v : m.mean) v /= nd;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = x.data[i * d + j] - m.mean[j];
      m.scale[j] += c * c;
    }
  }
  for (auto& v : m.scale) v = std::sqrt(v / nd);

  // Column-major standardized copy; constant columns stay zero.
  std::vector<double> z(n * d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    if (m.scale[j] == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) z[j * n + i] = (x.data[i * d + j] - m.mean[j]) / m.scale[j];
  }
  const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / nd;
  std::vector<double> resid(n);
  for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - ybar;

  const double l1 = p.alpha * p.l1_ratio;
  const double l2 = p.alpha * (1.0 - p.l1_ratio);
  std::vector<double> w(d, 0.0);
  auto objective = [&] {
    double rss = 0.0;
    for (double r : resid) rss += r * r;
    double pen1 = 0.0, pen2 = 0.0;
    for (double v : w) {
      pen1 += std::abs(v);
      pen2 += v * v;
    }
    return rss / (2.0 * nd) + l1 * pen1 + 0.5 * l2 * pen2;
  };

  for (int it = 0; it < p.max_iter; ++it) {
    double max_delta = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      if (m.scale[j] == 0.0) continue;
      const double* col = z.data() + j * n;
      double rho = 0.0;
      for (std::size_t i = 0; i < n; ++i) rho += col[i] * resid[i];
      rho = rho / nd + w[j];
      const double updated = soft_threshold(rho, l1) / (1.0 + l2);
      const double delta = updated - w[j];
      if (delta != 0.0) {
        for (std::size_t i = 0; i < n; ++i) resid[i] -= delta * col[i];
        w[j] = updated;
      }
      max_delta = std::max(max_delta, std::abs(delta));
    }
    m.objective.push_back(objective());
    m.iterations = it + 1;
    m.final_delta = max_delta;
    if (max_delta < p.tol) {
      m.converged = true;
      break;
    }
  }

  m.coef_standard = w;
  m.coef.assign(d, 0.0);
  m.intercept = ybar;
  for (std::size_t j = 0; j < d; ++j) {
    if (m.scale[j] == 0.0) continue;
    m.coef[j] = w[j] / m.scale[j];
    m.intercept -= m.coef[j] * m.mean[j];
  }
  return m;
}

ElasticNetModel enet_fit(const FeatureMatrix& x, std::span<const double> y, const ElasticNetParams& p) {
  return enet_fit(view(x), y, p, x.feature_names());
}

double enet_predict_row(const ElasticNetModel& m, std::span<const double> row) {
  double s = m.intercept;
  for (std::size_t j = 0; j < m.coef.size(); ++j) s += m.coef[j] * row[j];
  return s;
}

std::vector<double> enet_predict(const ElasticNetModel& m, MatrixView x) {
  if (x.cols != m.feature_names.size()) fail(ErrorCode::kSchema, "column count does not match the model");
  std::vector<double> out(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) out[i] = enet_predict_row(m, x.row(i));
  return out;
}

std::vector<double> enet_predict(const ElasticNetModel& m, const FeatureMatrix& x) {
  const auto data = align_columns(m.feature_names, x);
  return enet_predict(m, MatrixView{data, x.rows(), m.feature_names.size()});
}

}  // namespace bioage
