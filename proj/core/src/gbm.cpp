#include "bioage/gbm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "bioage/error.hpp"
#include "bioage/random.hpp"
#include "grower.hpp"

namespace bioage {

void GbmParams::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorCode::kConfig, "gbm params: " + what); };
  if (n_trees < 0) bad("n_trees must be >= 0");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) bad("learning_rate must be in (0, 1]");
  if (num_leaves < 1) bad("num_leaves must be >= 1");
  if (min_samples_leaf < 1) bad("min_samples_leaf must be >= 1");
  if (!(lambda >= 0.0) || !(gamma >= 0.0)) bad("lambda and gamma must be >= 0");
  if (max_bins < 2 || max_bins > kMaxBins) bad("max_bins must be in [2, 255]");
  if (goss) {
    if (!(goss->a > 0.0 && goss->a < 1.0) || !(goss->b > 0.0) || goss->a + goss->b > 1.0 + 1e-12) {
      bad("goss needs 0 < a < 1, b > 0, a + b <= 1");
    }
  }
}

double split_gain(double gl, double hl, double gr, double hr, double lambda, double gamma) {
  const double g = gl + gr;
  const double h = hl + hr;
  return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - g * g / (h + lambda)) - gamma;
}

double leaf_weight(double g, double h, double lambda) {
  if (h + lambda == 0.0) fail(ErrorCode::kDegenerate, "leaf weight undefined: H + lambda == 0");
  return -g / (h + lambda);
}

GossSample goss_sample(std::span<const double> gradients, double a, double b, std::uint64_t seed) {
  if (!(a > 0.0 && a < 1.0) || !(b > 0.0) || a + b > 1.0 + 1e-12) {
    fail(ErrorCode::kConfig, "goss needs 0 < a < 1, b > 0, a + b <= 1");
  }
  const std::size_t n = gradients.size();
  GossSample s;
  if (static_cast<double>(n) < 1.0 / b) {
    s.fell_back = true;
    s.indices.resize(n);
    std::iota(s.indices.begin(), s.indices.end(), 0u);
    s.weights.assign(n, 1.0);
    return s;
  }
  auto count = [n](double frac) {
    return std::min(n, static_cast<std::size_t>(std::ceil(frac * static_cast<double>(n) - 1e-9)));
  };
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t i, std::uint32_t j) {
    return std::abs(gradients[i]) > std::abs(gradients[j]);
  });
  const std::size_t top = count(a);
  std::vector<std::uint32_t> rest(order.begin() + static_cast<std::ptrdiff_t>(top), order.end());
  std::sort(rest.begin(), rest.end());
  const std::size_t take = std::min(count(b), rest.size());
  CounterRng rng(seed);
  for (std::size_t k = 0; k < take; ++k) {
    const auto j = k + static_cast<std::size_t>(rng.bounded(rest.size() - k));
    std::swap(rest[k], rest[j]);
  }
  const double small_weight = (1.0 - a) / b;
  std::vector<std::pair<std::uint32_t, double>> kept;
  kept.reserve(top + take);
  for (std::size_t k = 0; k < top; ++k) kept.emplace_back(order[k], 1.0);
  for (std::size_t k = 0; k < take; ++k) kept.emplace_back(rest[k], small_weight);
  std::sort(kept.begin(), kept.end());
  for (auto [i, w] : kept) {
    s.indices.push_back(i);
    s.weights.push_back(w);
  }
  return s;
}

void validate_finite(MatrixView x, std::span<const double> y) {
  for (double v : x.data) {
    if (!std::isfinite(v)) fail(ErrorCode::kValidation, "feature matrix contains a non-finite value");
  }
  for (double v : y) {
    if (!std::isfinite(v)) fail(ErrorCode::kValidation, "target contains a non-finite value");
  }
}

GbmFitResult fit_with_trace(MatrixView x, std::span<const double> y, const GbmParams& p,
                            std::vector<std::string> feature_names) {
  p.validate();
  const std::size_t n = x.rows;
  const std::size_t d = x.cols;
  if (n == 0 || d == 0) fail(ErrorCode::kFit, "cannot fit on empty data");
  if (y.size() != n) fail(ErrorCode::kFit, "target length does not match row count");
  if (n < 2 * static_cast<std::size_t>(p.min_samples_leaf)) {
    fail(ErrorCode::kFit, "need at least 2 * min_samples_leaf rows");
  }
  validate_finite(x, y);
  if (feature_names.empty()) {
    for (std::size_t j = 0; j < d; ++j) feature_names.push_back("f" + std::to_string(j));
  }
  if (feature_names.size() != d) fail(ErrorCode::kFit, "feature name count does not match columns");

  // Canonical row order makes every sum, and so the model, independent of
  // the order rows were supplied in.
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    const auto ra = x.row(a), rb = x.row(b);
    for (std::size_t j = 0; j < d; ++j) {
      if (ra[j] != rb[j]) return ra[j] < rb[j];
    }
    return y[a] < y[b];
  });
  std::vector<double> xs(n * d), ys(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto r = x.row(order[k]);
    std::copy(r.begin(), r.end(), xs.begin() + static_cast<std::ptrdiff_t>(k * d));
    ys[k] = y[order[k]];
  }

  GbmFitResult out;
  auto& m = out.model;
  m.params = p;
  m.learning_rate = p.learning_rate;
  m.feature_names = std::move(feature_names);
  const BinnedMatrix binned = bin_features(xs, n, d, p.max_bins);
  m.bin_edges = binned.edges;
  m.base_score = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(n);

  std::vector<double> pred(n, m.base_score), grad(n), hess(n);
  auto loss = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += 0.5 * (ys[i] - pred[i]) * (ys[i] - pred[i]);
    return s;
  };
  out.objective.push_back(loss());

  detail::GrowOptions opt;
  opt.max_leaves = p.num_leaves;
  opt.min_leaf = static_cast<double>(p.min_samples_leaf);
  opt.lambda = p.lambda;
  opt.gamma = p.gamma;

  std::vector<std::uint32_t> all(n);
  std::iota(all.begin(), all.end(), 0u);
  for (int t = 0; t < p.n_trees; ++t) {
    std::span<const std::uint32_t> rows = all;
    GossSample sample;
    for (std::size_t i = 0; i < n; ++i) {
      grad[i] = pred[i] - ys[i];
      hess[i] = 1.0;
    }
    if (p.goss) {
      sample = goss_sample(grad, p.goss->a, p.goss->b, stream_key(p.seed, "goss", static_cast<std::uint64_t>(t)));
      if (sample.fell_back) ++out.goss_fallbacks;
      for (std::size_t k = 0; k < sample.indices.size(); ++k) {
        const auto i = sample.indices[k];
        grad[i] *= sample.weights[k];
        hess[i] = sample.weights[k];
      }
      rows = sample.indices;
    }
    Tree tree = detail::grow_tree(binned, rows, grad, hess, opt);

    double penalty = 0.0;
    for (const auto& node : tree.nodes) {
      if (!node.is_leaf()) continue;
      const double w = p.learning_rate * node.weight;
      penalty += p.gamma + 0.5 * p.lambda * w * w;
    }
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] += p.learning_rate * tree.nodes[detail::leaf_of_binned(tree, binned, i)].weight;
    }
    out.objective.push_back(loss() + penalty);
    m.trees.push_back(std::move(tree));
  }
  return out;
}

BoostedEnsemble fit(MatrixView x, std::span<const double> y, const GbmParams& p, std::vector<std::string> feature_names) {
  return fit_with_trace(x, y, p, std::move(feature_names)).model;
}

BoostedEnsemble fit(const FeatureMatrix& x, std::span<const double> y, const GbmParams& p) {
  return fit(view(x), y, p, x.feature_names());
}

double predict_row(const BoostedEnsemble& m, std::span<const double> row) {
  double s = 0.0;
  for (const auto& t : m.trees) s += t.predict(row);
  return m.base_score + m.learning_rate * s;
}

std::vector<double> predict(const BoostedEnsemble& m, MatrixView x) {
  if (x.cols != m.feature_names.size()) fail(ErrorCode::kSchema, "column count does not match the model");
  std::vector<double> out(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) out[i] = predict_row(m, x.row(i));
  return out;
}

std::vector<double> align_columns(const std::vector<std::string>& model_features, const FeatureMatrix& x) {
  if (x.cols() != model_features.size()) {
    fail(ErrorCode::kSchema, "feature schema mismatch: model has " + std::to_string(model_features.size()) +
                                 " features, input has " + std::to_string(x.cols()));
  }
  std::vector<std::size_t> src(model_features.size());
  bool identity = true;
  for (std::size_t j = 0; j < model_features.size(); ++j) {
    auto k = x.column_index(model_features[j]);
    if (!k) fail(ErrorCode::kSchema, "feature schema mismatch: input lacks column '" + model_features[j] + "'");
    src[j] = *k;
    identity = identity && *k == j;
  }
  if (identity) return x.values;
  std::vector<double> out(x.rows() * src.size());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < src.size(); ++j) out[i * src.size() + j] = x.at(i, src[j]);
  }
  return out;
}

std::vector<double> predict(const BoostedEnsemble& m, const FeatureMatrix& x) {
  const auto data = align_columns(m.feature_names, x);
  return predict(m, MatrixView{data, x.rows(), m.feature_names.size()});
}

}  // namespace bioage
