#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "stagecraft/event_tree.hpp"

namespace stagecraft {

// Categorical data: rows of level indices, one column per variable.
struct Dataset {
  std::vector<VariableSpec> variables;
  std::vector<std::int32_t> cells;  // row-major, rows() x variables.size()

  std::int64_t rows() const {
    return variables.empty() ? 0
                             : static_cast<std::int64_t>(cells.size() / variables.size());
  }
  int cols() const { return static_cast<int>(variables.size()); }
  std::int32_t at(std::int64_t row, int col) const { return cells[row * cols() + col]; }
  void push_row(std::span<const std::int32_t> row) {
    cells.insert(cells.end(), row.begin(), row.end());
  }
};

// Exact prefix counts of a dataset under a variable order: for every observed
// internal vertex the per-level edge counts n(v,x). Vertices never reached by
// a row are simply absent and count as zero.
class CountTree {
 public:
  static CountTree build(const Dataset& data, std::span<const int> order);

  const std::vector<VariableSpec>& variables() const { return variables_; }
  const std::vector<int>& order() const { return order_; }
  std::int64_t total() const { return total_; }
  int num_variables() const { return static_cast<int>(variables_.size()); }

  // Edge counts of a vertex, or nullptr when unobserved.
  const std::vector<std::int64_t>* edge_counts(int depth, std::uint64_t rank) const;
  std::int64_t vertex_total(int depth, std::uint64_t rank) const;
  const std::unordered_map<std::uint64_t, std::vector<std::int64_t>>& observed(int depth) const {
    return counts_[depth];
  }

  // Same variable names and levels as the tree's, in the same order.
  bool matches(const EventTree& tree) const { return tree.variables() == variables_; }

 private:
  std::vector<VariableSpec> variables_;  // permuted into tree order
  std::vector<int> order_;               // column in the source dataset per depth
  std::int64_t total_ = 0;
  std::vector<std::unordered_map<std::uint64_t, std::vector<std::int64_t>>> counts_;
};

CountTree count_paths(const Dataset& data, std::span<const int> order);
// Identity order.
CountTree count_paths(const Dataset& data);

}  // namespace stagecraft
