#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace bioage {

// Internal nodes split on bin id: rows with bin < threshold_bin go left,
// equivalently raw value < threshold. Every node records the training
// statistics it saw; for leaves weight == -sum_grad / (sum_hess + lambda).
struct TreeNode {
  int feature = -1;
  int threshold_bin = 0;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double weight = 0.0;
  double cover = 0.0;
  double sum_grad = 0.0;
  double sum_hess = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  std::size_t leaf_of(std::span<const double> x) const;
  double predict(std::span<const double> x) const { return nodes[leaf_of(x)].weight; }
  std::size_t num_leaves() const;
  std::size_t depth() const;
};

// Quantile histogram binning. Edges sit between distinct training values;
// bin(x) = number of edges <= x, so a value equal to an edge lands right.
struct BinnedMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> bins;           // column-major: bins[j * rows + i]
  std::vector<std::vector<double>> edges;  // per feature, strictly increasing

  std::uint8_t at(std::size_t i, std::size_t j) const { return bins[j * rows + i]; }
  std::size_t num_bins(std::size_t j) const { return edges[j].size() + 1; }
};

inline constexpr int kMaxBins = 255;

std::vector<double> bin_edges(std::vector<double> column, int max_bins);
std::size_t bin_of(std::span<const double> edges, double x);
BinnedMatrix bin_features(std::span<const double> x, std::size_t rows, std::size_t cols, int max_bins);
BinnedMatrix apply_bins(std::span<const double> x, std::size_t rows, std::size_t cols,
                        const std::vector<std::vector<double>>& edges);

}  // namespace bioage
