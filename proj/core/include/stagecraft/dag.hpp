#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stagecraft/counts.hpp"
#include "stagecraft/staging.hpp"

namespace stagecraft {

// Directed graph over named vertices with parent sets stored as bitmasks.
// Acyclicity is a precondition of the operations below, not of edge editing.
class Dag {
 public:
  explicit Dag(std::vector<std::string> names);

  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }

  bool has_edge(int from, int to) const { return (parents_[to] >> from) & 1u; }
  void add_edge(int from, int to);
  void remove_edge(int from, int to);

  std::uint64_t parent_mask(int v) const { return parents_[v]; }
  void set_parent_mask(int v, std::uint64_t mask);
  std::vector<int> parents(int v) const;
  std::vector<std::pair<int, int>> edges() const;  // sorted by (from, to)
  int num_edges() const;

  bool is_acyclic() const;
  // True if adding from->to keeps the graph acyclic.
  bool can_add_edge(int from, int to) const;

  bool operator==(const Dag&) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<std::uint64_t> parents_;
};

// All linear extensions in lexicographic order. Throws on cyclic input.
std::vector<std::vector<int>> topological_orders(const Dag& g);
bool is_topological(const Dag& g, std::span<const int> order);
// Lexicographically smallest topological order.
std::vector<int> smallest_topological_order(const Dag& g);

// Containment-chain check: each vertex's parent set lies inside its
// predecessor's parent set plus the predecessor itself.
bool is_simple_dag(const Dag& g, std::span<const int> order);
// True iff some topological order satisfies the chain.
bool is_simple_dag(const Dag& g);

// Every vertex with a nonempty parent set has a parent j covering it: the
// parent set lies inside parents(j) + j. Equivalent to all parent sets being
// complete; empty parent sets pass vacuously. Simple DAGs always qualify.
bool is_decomposable(const Dag& g);

// Adds the edges needed to make the chain hold for `order`, sweeping from the
// last position backward; a fixed point on already-simple inputs.
Dag simplify_dag(const Dag& g, std::span<const int> order);

// The staged tree of a BN: depth-d vertices are grouped by the projection of
// their prefix onto the parents of the depth's variable. `variables[i]`
// carries the levels of DAG vertex i.
StagedTree bn_to_staged_tree(const Dag& g, std::span<const VariableSpec> variables,
                             std::span<const int> order);

// Maximized BN log-likelihood (family-wise multinomial MLE) and the matching
// parameter count / BIC.
double bn_log_likelihood(const Dag& g, const Dataset& data);
std::int64_t bn_free_params(const Dag& g, std::span<const VariableSpec> variables);
double bn_bic(const Dag& g, const Dataset& data);

struct BnLearnResult {
  Dag dag;
  std::vector<int> order;  // smallest-label topological order
  double bic = 0.0;
  double log_lik = 0.0;
};

// Greedy add/delete/reverse hill-climbing on the BN BIC with deterministic
// move tie-breaking.
BnLearnResult learn_bn_hc(const Dataset& data);

}  // namespace stagecraft
