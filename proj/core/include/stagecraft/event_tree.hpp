#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace stagecraft {

// One categorical variable: a name and its ordered list of category labels.
struct VariableSpec {
  std::string name;
  std::vector<std::string> levels;

  bool operator==(const VariableSpec&) const = default;
};

// The event tree over an ordered variable list. Vertices at depth d are the
// value-prefixes of length d; the skeleton is implicit in the variable list,
// so a vertex is addressed by (depth, rank) where rank is the mixed-radix
// rank of its prefix (first variable most significant).
class EventTree {
 public:
  explicit EventTree(std::vector<VariableSpec> variables);

  int num_variables() const { return static_cast<int>(vars_.size()); }
  const std::vector<VariableSpec>& variables() const { return vars_; }

  // Variable whose values label the edges leaving depth-d vertices.
  const VariableSpec& variable(int depth) const { return vars_[depth]; }
  int arity(int depth) const { return static_cast<int>(vars_[depth].levels.size()); }

  // Number of vertices at a depth in [0, p]; depth p are the leaves.
  std::uint64_t depth_size(int depth) const { return sizes_[depth]; }
  std::uint64_t num_internal() const { return internal_; }
  std::uint64_t num_leaves() const { return sizes_.back(); }

  std::uint64_t child(int depth, std::uint64_t rank, int level) const {
    return rank * static_cast<std::uint64_t>(arity(depth)) + static_cast<std::uint64_t>(level);
  }
  // Parent of a vertex at depth >= 1, and the level of the edge into it.
  std::uint64_t parent(int depth, std::uint64_t rank) const {
    return rank / static_cast<std::uint64_t>(arity(depth - 1));
  }
  int last_level(int depth, std::uint64_t rank) const {
    return static_cast<int>(rank % static_cast<std::uint64_t>(arity(depth - 1)));
  }

  std::vector<int> prefix(int depth, std::uint64_t rank) const;
  std::uint64_t rank_of(std::span<const int> prefix) const;

  // Breadth-first vertex id (root = 0), used for stable display names.
  std::uint64_t vertex_id(int depth, std::uint64_t rank) const { return offsets_[depth] + rank; }

  // Same variable names, level labels and order.
  bool same_shape(const EventTree& other) const { return vars_ == other.vars_; }

 private:
  std::vector<VariableSpec> vars_;
  std::vector<std::uint64_t> sizes_;    // sizes_[d], d = 0..p
  std::vector<std::uint64_t> offsets_;  // BFS offset per depth
  std::uint64_t internal_ = 0;
};

EventTree build_event_tree(std::vector<VariableSpec> variables);

}  // namespace stagecraft
