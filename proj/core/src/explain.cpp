#include "bioage/explain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "bioage/error.hpp"
#include "csv.hpp"

namespace bioage {

namespace {

void check_covers(const std::vector<Tree>& trees) {
  for (const auto& t : trees) {
    if (t.nodes.empty()) fail(ErrorCode::kModelIntegrity, "tree has no nodes");
    for (const auto& n : t.nodes) {
      if (!(n.cover > 0.0)) fail(ErrorCode::kModelIntegrity, "tree node with zero cover; cannot attribute");
    }
  }
}

struct PathElement {
  int feature = -1;
  double zero_fraction = 0.0;
  double one_fraction = 0.0;
  double weight = 0.0;
};

void extend_path(PathElement* path, int depth, double zero_fraction, double one_fraction, int feature) {
  path[depth] = {feature, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0};
  for (int i = depth - 1; i >= 0; --i) {
    path[i + 1].weight += one_fraction * path[i].weight * (i + 1) / static_cast<double>(depth + 1);
    path[i].weight = zero_fraction * path[i].weight * (depth - i) / static_cast<double>(depth + 1);
  }
}

void unwind_path(PathElement* path, int depth, int index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  double next = path[depth].weight;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0.0) {
      const double tmp = path[i].weight;
      path[i].weight = next * (depth + 1) / ((i + 1) * one);
      next = tmp - path[i].weight * zero * (depth - i) / static_cast<double>(depth + 1);
    } else {
      path[i].weight = path[i].weight * (depth + 1) / (zero * (depth - i));
    }
  }
  for (int i = index; i < depth; ++i) {
    path[i].feature = path[i + 1].feature;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

double unwound_sum(const PathElement* path, int depth, int index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  double next = path[depth].weight;
  double total = 0.0;
  for (int i = depth - 1; i >= 0; --i) {
    if (one != 0.0) {
      const double tmp = next * (depth + 1) / ((i + 1) * one);
      total += tmp;
      next = path[i].weight - tmp * zero * (depth - i) / static_cast<double>(depth + 1);
    } else {
      total += path[i].weight / zero * (depth + 1) / static_cast<double>(depth - i);
    }
  }
  return total;
}

void shap_recurse(const Tree& t, std::size_t k, std::span<const double> x, std::span<double> phi, double scale,
                  PathElement* parent_path, int depth, double zero_fraction, double one_fraction, int feature) {
  PathElement* path = parent_path + depth + 1;
  if (depth > 0) std::copy(parent_path, parent_path + depth, path);
  extend_path(path, depth, zero_fraction, one_fraction, feature);

  const auto& n = t.nodes[k];
  if (n.is_leaf()) {
    for (int i = 1; i <= depth; ++i) {
      const double w = unwound_sum(path, depth, i);
      const auto& e = path[i];
      phi[static_cast<std::size_t>(e.feature)] += w * (e.one_fraction - e.zero_fraction) * n.weight * scale;
    }
    return;
  }
  const bool go_left = x[static_cast<std::size_t>(n.feature)] < n.threshold;
  const auto hot = static_cast<std::size_t>(go_left ? n.left : n.right);
  const auto cold = static_cast<std::size_t>(go_left ? n.right : n.left);
  const double hot_zero = t.nodes[hot].cover / n.cover;
  const double cold_zero = t.nodes[cold].cover / n.cover;
  double incoming_zero = 1.0, incoming_one = 1.0;

  int seen = 1;
  for (; seen <= depth; ++seen) {
    if (path[seen].feature == n.feature) break;
  }
  if (seen <= depth) {
    incoming_zero = path[seen].zero_fraction;
    incoming_one = path[seen].one_fraction;
    unwind_path(path, depth, seen);
    --depth;
  }
  shap_recurse(t, hot, x, phi, scale, path, depth + 1, hot_zero * incoming_zero, incoming_one, n.feature);
  shap_recurse(t, cold, x, phi, scale, path, depth + 1, cold_zero * incoming_zero, 0.0, n.feature);
}

double tree_subset_value(const Tree& t, std::size_t k, std::span<const double> x, std::uint32_t mask) {
  const auto& n = t.nodes[k];
  if (n.is_leaf()) return n.weight;
  const auto l = static_cast<std::size_t>(n.left);
  const auto r = static_cast<std::size_t>(n.right);
  if (mask & (1u << n.feature)) {
    return tree_subset_value(t, x[static_cast<std::size_t>(n.feature)] < n.threshold ? l : r, x, mask);
  }
  return (t.nodes[l].cover * tree_subset_value(t, l, x, mask) + t.nodes[r].cover * tree_subset_value(t, r, x, mask)) /
         n.cover;
}

ShapResult run_tree_shap(const TreeEnsembleView& v, const std::vector<std::string>& names, const FeatureMatrix& x) {
  const auto data = align_columns(names, x);
  const std::size_t p = names.size();
  ShapResult out;
  out.feature_names = names;
  out.phi0 = expected_value(v);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    std::span<const double> row(data.data() + i * p, p);
    out.rows.push_back({x.row_ids[i], tree_shap_row(v, row), out.phi0});
    out.values.emplace_back(row.begin(), row.end());
  }
  return out;
}

}  // namespace

TreeEnsembleView shap_view(const BoostedEnsemble& m) {
  return {&m.trees, m.base_score, m.learning_rate, m.feature_names.size()};
}

TreeEnsembleView shap_view(const ForestModel& m) {
  return {&m.trees, 0.0, 1.0 / static_cast<double>(m.trees.size()), m.feature_names.size()};
}

double tree_expected_value(const Tree& t) {
  const double root = t.nodes.at(0).cover;
  double s = 0.0;
  for (const auto& n : t.nodes) {
    if (n.is_leaf()) s += n.cover / root * n.weight;
  }
  return s;
}

double expected_value(const TreeEnsembleView& v) {
  check_covers(*v.trees);
  double s = 0.0;
  for (const auto& t : *v.trees) s += tree_expected_value(t);
  return v.offset + v.scale * s;
}

void tree_shap_single(const Tree& t, std::span<const double> x, std::span<double> phi, double scale) {
  const auto depth = t.depth();
  std::vector<PathElement> storage((depth + 2) * (depth + 3) / 2);
  shap_recurse(t, 0, x, phi, scale, storage.data(), 0, 1.0, 1.0, -1);
}

std::vector<double> tree_shap_row(const TreeEnsembleView& v, std::span<const double> x) {
  check_covers(*v.trees);
  std::vector<double> phi(v.n_features, 0.0);
  for (const auto& t : *v.trees) tree_shap_single(t, x, phi, v.scale);
  return phi;
}

double subset_value(const TreeEnsembleView& v, std::span<const double> x, std::uint32_t mask) {
  double s = 0.0;
  for (const auto& t : *v.trees) s += tree_subset_value(t, 0, x, mask);
  return v.offset + v.scale * s;
}

std::vector<double> brute_force_shap(const TreeEnsembleView& v, std::span<const double> x) {
  const std::size_t p = v.n_features;
  if (p > kBruteForceMaxFeatures) {
    fail(ErrorCode::kConfig, "brute-force Shapley enumerates 2^p subsets; refusing p = " + std::to_string(p) +
                                 " > 15 (use tree_shap instead)");
  }
  check_covers(*v.trees);
  const std::uint32_t full = 1u << p;
  std::vector<double> value(full);
  for (std::uint32_t mask = 0; mask < full; ++mask) value[mask] = subset_value(v, x, mask);

  // weight[s] = s! (p - s - 1)! / p!
  std::vector<double> weight(p, 0.0);
  for (std::size_t s = 0; s < p; ++s) {
    weight[s] = std::exp(std::lgamma(static_cast<double>(s) + 1.0) + std::lgamma(static_cast<double>(p - s)) -
                         std::lgamma(static_cast<double>(p) + 1.0));
  }
  std::vector<double> phi(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    const std::uint32_t bit = 1u << j;
    double acc = 0.0;
    for (std::uint32_t mask = 0; mask < full; ++mask) {
      if (mask & bit) continue;
      acc += weight[static_cast<std::size_t>(std::popcount(mask))] * (value[mask | bit] - value[mask]);
    }
    phi[j] = acc;
  }
  return phi;
}

std::vector<double> brute_force_shap(const BoostedEnsemble& m, std::span<const double> x) {
  return brute_force_shap(shap_view(m), x);
}

ShapResult tree_shap(const BoostedEnsemble& m, const FeatureMatrix& x) {
  return run_tree_shap(shap_view(m), m.feature_names, x);
}

ShapResult tree_shap(const ForestModel& m, const FeatureMatrix& x) {
  return run_tree_shap(shap_view(m), m.feature_names, x);
}

std::vector<FeatureImportance> summarize(const ShapResult& shap) {
  if (shap.rows.empty()) fail(ErrorCode::kValidation, "cannot summarize an empty attribution set");
  const std::size_t p = shap.feature_names.size();
  const double n = static_cast<double>(shap.rows.size());
  std::vector<FeatureImportance> out(p);
  for (std::size_t j = 0; j < p; ++j) {
    double abs_sum = 0.0;
    std::size_t pos = 0, neg = 0, zero = 0;
    for (const auto& r : shap.rows) {
      const double v = r.phi[j];
      abs_sum += std::abs(v);
      if (v > 0.0) ++pos;
      else if (v < 0.0) ++neg;
      else ++zero;
    }
    out[j].feature = shap.feature_names[j];
    out[j].mean_abs_phi = abs_sum / n;
    out[j].sign_consistency = static_cast<double>(std::max({pos, neg, zero})) / n;
  }
  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return out[a].mean_abs_phi > out[b].mean_abs_phi; });
  for (std::size_t r = 0; r < p; ++r) out[order[r]].rank = r + 1;
  return out;
}

void write_shap_summary(std::ostream& out, const std::vector<FeatureImportance>& summary) {
  std::vector<const FeatureImportance*> sorted;
  for (const auto& f : summary) sorted.push_back(&f);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->rank < b->rank; });
  detail::write_csv_row(out, {"feature", "mean_abs_phi", "rank", "sign_consistency"});
  for (const auto* f : sorted) {
    detail::write_csv_row(out, {f->feature, detail::format_double(f->mean_abs_phi), std::to_string(f->rank),
                                detail::format_double(f->sign_consistency)});
  }
}

void write_shap_points(std::ostream& out, const ShapResult& shap, const std::vector<FeatureImportance>& summary) {
  detail::write_csv_row(out, {"row_id", "feature", "rank", "phi", "value"});
  for (std::size_t i = 0; i < shap.rows.size(); ++i) {
    for (std::size_t j = 0; j < shap.feature_names.size(); ++j) {
      detail::write_csv_row(out, {shap.rows[i].row_id, shap.feature_names[j], std::to_string(summary[j].rank),
                                  detail::format_double(shap.rows[i].phi[j]),
                                  detail::format_double(shap.values[i][j])});
    }
  }
}

}  // namespace bioage
