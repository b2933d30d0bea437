#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "stagecraft/counts.hpp"
#include "stagecraft/staging.hpp"

namespace stagecraft {

enum class Algorithm {
  Bhc,
  SimplifiedBhc,
  Marginal,
  Total,
  GreedyMarginal,
  AllMarginal,
  AllTotal,
};

const char* to_string(Algorithm a);
std::optional<Algorithm> algorithm_from_string(std::string_view name);
// True for marginal/total/greedy/all-*: the output's stages coincide with its
// positions by construction.
bool produces_simple(Algorithm a);

struct LearnResult {
  StagedTree model;
  double bic = 0.0;      // tracked incrementally during the search
  double log_lik = 0.0;  // of the final model
};

struct LearnOptions {
  int threads = 1;
  int max_exhaustive_p = 7;
  bool allow_large_exhaustive = false;
};

// Forced depth-(i+1) groups induced by the depth-i staging: level-matched
// children of same-stage vertices must share a group. Returns canonical group
// labels per depth-(i+1) rank (the finest partition satisfying the
// constraints).
std::vector<std::int32_t> closure_propagate(const EventTree& tree, int depth,
                                            std::span<const std::int32_t> stage_labels);

// Backward hill-climbing per depth, starting from singleton stages; merges
// the best-improving stage pair until no merge lowers the BIC.
LearnResult learn_bhc(const CountTree& counts);

// learn_bhc followed by simplify; the result is simple.
LearnResult learn_simplified_bhc(const CountTree& counts);

// Depth-by-depth stage joining scored on the depth's own BIC contribution,
// with closure constraints propagated downward; the result is simple.
LearnResult learn_marginal(const CountTree& counts);

// Depth-by-depth position joining scored on the full-model BIC; merging two
// groups recursively merges their level-matched child groups. The result is
// simple.
LearnResult learn_total(const CountTree& counts);

// Builds the variable order greedily, at each step appending the variable
// whose marginal-staged extension has the lowest full BIC.
LearnResult learn_greedy_order_marginal(const Dataset& data);

// Runs the inner learner (Marginal or Total) for every variable order and
// returns the lowest-BIC model; ties break on the lexicographically smallest
// order. Orders are evaluated concurrently when threads > 1; the reduction is
// deterministic.
LearnResult learn_exhaustive(const Dataset& data, Algorithm inner, const LearnOptions& opt = {});

// Dispatch by algorithm id. Fixed-order algorithms require `order`
// (a permutation of column indices); the others ignore it.
LearnResult learn(Algorithm algorithm, const Dataset& data,
                  const std::optional<std::vector<int>>& order, const LearnOptions& opt = {});

}  // namespace stagecraft
