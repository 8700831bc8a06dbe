#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bioage/tree.hpp"

namespace bioage::detail {

struct GrowOptions {
  int max_leaves = 31;  // 0: unlimited
  int max_depth = 0;    // 0: unlimited
  double min_leaf = 1.0;
  bool min_leaf_by_weight = false;  // count hessian mass instead of rows
  double lambda = 0.0;
  double gamma = 0.0;
  double feature_fraction = 1.0;
  std::uint64_t feature_key = 0;
};

// Best-first growth on first/second-order statistics. grad and hess are
// indexed by row of `data` and already include sample weights; only `rows`
// participate.
Tree grow_tree(const BinnedMatrix& data, std::span<const std::uint32_t> rows, std::span<const double> grad,
               std::span<const double> hess, const GrowOptions& opt);

// Leaf reached by row i of the binned matrix.
std::size_t leaf_of_binned(const Tree& tree, const BinnedMatrix& data, std::size_t i);

}  // namespace bioage::detail
