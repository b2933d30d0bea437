#include "stagecraft/counts.hpp"

#include <numeric>

#include "stagecraft/error.hpp"

namespace stagecraft {

CountTree CountTree::build(const Dataset& data, std::span<const int> order) {
  const int p = data.cols();
  if (static_cast<int>(order.size()) != p)
    throw Error("variable order does not match the dataset");
  std::vector<bool> used(p, false);
  for (int col : order) {
    if (col < 0 || col >= p || used[col]) throw Error("order is not a permutation of the variables");
    used[col] = true;
  }

  CountTree ct;
  ct.order_.assign(order.begin(), order.end());
  ct.variables_.reserve(p);
  for (int col : order) ct.variables_.push_back(data.variables[col]);
  ct.total_ = data.rows();
  ct.counts_.resize(p);

  for (std::int64_t row = 0; row < data.rows(); ++row) {
    std::uint64_t rank = 0;
    for (int d = 0; d < p; ++d) {
      const int arity = static_cast<int>(ct.variables_[d].levels.size());
      const std::int32_t x = data.at(row, order[d]);
      if (x < 0 || x >= arity) throw Error("dataset cell out of range for its variable");
      auto [it, fresh] = ct.counts_[d].try_emplace(rank);
      if (fresh) it->second.assign(arity, 0);
      ++it->second[x];
      rank = rank * static_cast<std::uint64_t>(arity) + static_cast<std::uint64_t>(x);
    }
  }
  return ct;
}

const std::vector<std::int64_t>* CountTree::edge_counts(int depth, std::uint64_t rank) const {
  auto it = counts_[depth].find(rank);
  return it == counts_[depth].end() ? nullptr : &it->second;
}

std::int64_t CountTree::vertex_total(int depth, std::uint64_t rank) const {
  const auto* c = edge_counts(depth, rank);
  if (!c) return 0;
  return std::accumulate(c->begin(), c->end(), std::int64_t{0});
}

CountTree count_paths(const Dataset& data, std::span<const int> order) {
  return CountTree::build(data, order);
}

CountTree count_paths(const Dataset& data) {
  std::vector<int> order(data.cols());
  std::iota(order.begin(), order.end(), 0);
  return CountTree::build(data, order);
}

}  // namespace stagecraft
