#include "bioage/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bioage/error.hpp"
#include "bioage/gbm.hpp"
#include "bioage/random.hpp"
#include "grower.hpp"

namespace bioage {

std::size_t Tree::leaf_of(std::span<const double> x) const {
  std::size_t k = 0;
  while (!nodes[k].is_leaf()) {
    const auto& n = nodes[k];
    k = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
  }
  return k;
}

std::size_t Tree::num_leaves() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t Tree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t best = 0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const auto& n = nodes[k];
    if (n.is_leaf()) {
      best = std::max(best, d[k]);
      continue;
    }
    d[static_cast<std::size_t>(n.left)] = d[k] + 1;
    d[static_cast<std::size_t>(n.right)] = d[k] + 1;
  }
  return best;
}

std::vector<double> bin_edges(std::vector<double> column, int max_bins) {
  if (max_bins < 2 || max_bins > kMaxBins) fail(ErrorCode::kConfig, "max_bins must be in [2, 255]");
  std::sort(column.begin(), column.end());
  std::vector<double> distinct;
  for (double v : column) {
    if (distinct.empty() || v != distinct.back()) distinct.push_back(v);
  }
  auto midpoint = [](double a, double b) {
    const double m = a + (b - a) / 2.0;
    return m > a ? m : b;
  };
  std::vector<double> edges;
  if (distinct.size() <= static_cast<std::size_t>(max_bins)) {
    for (std::size_t k = 1; k < distinct.size(); ++k) edges.push_back(midpoint(distinct[k - 1], distinct[k]));
    return edges;
  }
  // Quantile cut q sits just below the sorted value at rank ceil(q n / B).
  const std::size_t n = column.size();
  for (int q = 1; q < max_bins; ++q) {
    const auto rank = static_cast<std::size_t>(std::ceil(static_cast<double>(q) * static_cast<double>(n) / max_bins - 1e-9));
    if (rank == 0 || rank >= n) continue;
    const double v = column[rank];
    const auto pos = static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), v) - distinct.begin());
    if (pos == 0) continue;
    const double e = midpoint(distinct[pos - 1], distinct[pos]);
    if (edges.empty() || e > edges.back()) edges.push_back(e);
  }
  return edges;
}

std::size_t bin_of(std::span<const double> edges, double x) {
  return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin());
}

BinnedMatrix apply_bins(std::span<const double> x, std::size_t rows, std::size_t cols,
                        const std::vector<std::vector<double>>& edges) {
  BinnedMatrix b;
  b.rows = rows;
  b.cols = cols;
  b.edges = edges;
  b.bins.resize(rows * cols);
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t i = 0; i < rows; ++i) {
      b.bins[j * rows + i] = static_cast<std::uint8_t>(bin_of(edges[j], x[i * cols + j]));
    }
  }
  return b;
}

BinnedMatrix bin_features(std::span<const double> x, std::size_t rows, std::size_t cols, int max_bins) {
  std::vector<std::vector<double>> edges(cols);
  std::vector<double> column(rows);
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t i = 0; i < rows; ++i) column[i] = x[i * cols + j];
    edges[j] = bin_edges(column, max_bins);
  }
  return apply_bins(x, rows, cols, edges);
}

namespace detail {

namespace {

struct Split {
  int feature = -1;
  int bin = 0;
  double gain = 0.0;
};

struct Leaf {
  std::size_t node = 0;
  std::vector<std::uint32_t> rows;
  int depth = 0;
  Split best;
};

class Grower {
 public:
  Grower(const BinnedMatrix& data, std::span<const double> grad, std::span<const double> hess, const GrowOptions& opt)
      : data_(data), grad_(grad), hess_(hess), opt_(opt) {}

  Tree run(std::span<const std::uint32_t> rows) {
    Leaf root;
    root.rows.assign(rows.begin(), rows.end());
    root.node = add_node(root.rows);
    evaluate(root);
    std::vector<Leaf> leaves;
    leaves.push_back(std::move(root));

    while (opt_.max_leaves == 0 || leaves.size() < static_cast<std::size_t>(opt_.max_leaves)) {
      std::size_t pick = leaves.size();
      double best = 0.0;
      for (std::size_t k = 0; k < leaves.size(); ++k) {
        if (leaves[k].best.feature >= 0 && leaves[k].best.gain > best) {
          best = leaves[k].best.gain;
          pick = k;
        }
      }
      if (pick == leaves.size()) break;
      Leaf parent = std::move(leaves[pick]);
      leaves.erase(leaves.begin() + static_cast<std::ptrdiff_t>(pick));

      const auto f = static_cast<std::size_t>(parent.best.feature);
      Leaf left, right;
      for (auto i : parent.rows) {
        (data_.at(i, f) < parent.best.bin ? left.rows : right.rows).push_back(i);
      }
      left.depth = right.depth = parent.depth + 1;
      left.node = add_node(left.rows);
      right.node = add_node(right.rows);
      auto& pn = tree_.nodes[parent.node];
      pn.feature = parent.best.feature;
      pn.threshold_bin = parent.best.bin;
      pn.threshold = data_.edges[f][static_cast<std::size_t>(parent.best.bin - 1)];
      pn.left = static_cast<int>(left.node);
      pn.right = static_cast<int>(right.node);
      evaluate(left);
      evaluate(right);
      leaves.push_back(std::move(left));
      leaves.push_back(std::move(right));
    }
    for (auto& n : tree_.nodes) {
      if (n.is_leaf()) n.weight = leaf_weight(n.sum_grad, n.sum_hess, opt_.lambda);
    }
    return std::move(tree_);
  }

 private:
  std::size_t add_node(const std::vector<std::uint32_t>& rows) {
    TreeNode n;
    for (auto i : rows) {
      n.sum_grad += grad_[i];
      n.sum_hess += hess_[i];
    }
    n.cover = n.sum_hess;
    const double denom = n.sum_hess + opt_.lambda;
    n.weight = denom > 0.0 ? -n.sum_grad / denom : 0.0;
    tree_.nodes.push_back(n);
    return tree_.nodes.size() - 1;
  }

  double mass(std::size_t count, double hess) const {
    return opt_.min_leaf_by_weight ? hess : static_cast<double>(count);
  }

  std::vector<std::size_t> candidate_features() {
    std::vector<std::size_t> feats(data_.cols);
    std::iota(feats.begin(), feats.end(), std::size_t{0});
    if (opt_.feature_fraction >= 1.0 || data_.cols <= 1) return feats;
    const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(opt_.feature_fraction * static_cast<double>(data_.cols))));
    CounterRng rng(combine_keys(opt_.feature_key, ++draws_));
    for (std::size_t a = 0; a < k; ++a) {
      const auto b = a + static_cast<std::size_t>(rng.bounded(feats.size() - a));
      std::swap(feats[a], feats[b]);
    }
    feats.resize(k);
    std::sort(feats.begin(), feats.end());
    return feats;
  }

  void evaluate(Leaf& leaf) {
    leaf.best = Split{};
    if (opt_.max_depth > 0 && leaf.depth >= opt_.max_depth) return;
    const auto& node = tree_.nodes[leaf.node];
    const double total_mass = mass(leaf.rows.size(), node.sum_hess);
    if (total_mass < 2.0 * opt_.min_leaf) return;

    for (auto f : candidate_features()) {
      const std::size_t nb = data_.num_bins(f);
      if (nb < 2) continue;
      hg_.assign(nb, 0.0);
      hh_.assign(nb, 0.0);
      hc_.assign(nb, 0);
      const std::uint8_t* col = data_.bins.data() + f * data_.rows;
      for (auto i : leaf.rows) {
        const auto b = col[i];
        hg_[b] += grad_[i];
        hh_[b] += hess_[i];
        ++hc_[b];
      }
      double gl = 0.0, hl = 0.0;
      std::size_t cl = 0;
      for (std::size_t t = 1; t < nb; ++t) {
        gl += hg_[t - 1];
        hl += hh_[t - 1];
        cl += hc_[t - 1];
        if (cl == 0) continue;
        const std::size_t cr = leaf.rows.size() - cl;
        if (cr == 0) break;
        const double hr = node.sum_hess - hl;
        if (mass(cl, hl) < opt_.min_leaf || mass(cr, hr) < opt_.min_leaf) continue;
        if (hl + opt_.lambda <= 0.0 || hr + opt_.lambda <= 0.0) continue;
        const double gain = split_gain(gl, hl, node.sum_grad - gl, hr, opt_.lambda, opt_.gamma);
        if (gain > leaf.best.gain) leaf.best = {static_cast<int>(f), static_cast<int>(t), gain};
      }
    }
  }

  const BinnedMatrix& data_;
  std::span<const double> grad_;
  std::span<const double> hess_;
  const GrowOptions& opt_;
  Tree tree_;
  std::uint64_t draws_ = 0;
  std::vector<double> hg_, hh_;
  std::vector<std::size_t> hc_;
};

}  // namespace

Tree grow_tree(const BinnedMatrix& data, std::span<const std::uint32_t> rows, std::span<const double> grad,
               std::span<const double> hess, const GrowOptions& opt) {
  if (rows.empty()) fail(ErrorCode::kFit, "cannot grow a tree on zero rows");
  return Grower(data, grad, hess, opt).run(rows);
}

std::size_t leaf_of_binned(const Tree& tree, const BinnedMatrix& data, std::size_t i) {
  std::size_t k = 0;
  while (!tree.nodes[k].is_leaf()) {
    const auto& n = tree.nodes[k];
    k = static_cast<std::size_t>(data.at(i, static_cast<std::size_t>(n.feature)) < n.threshold_bin ? n.left : n.right);
  }
  return k;
}

}  // namespace detail

}  // namespace bioage
