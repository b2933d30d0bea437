#pragma once

#include "stagecraft/staging.hpp"

namespace stagecraft {

// Position partition of the internal vertices, computed bottom-up: two
// vertices share a position iff their colored subtrees are identical. Always
// refines the staging.
PositionPartition compute_positions(const StagedTree& st);

// Recursive colored-subtree equality; the independent oracle for
// compute_positions. Vertices must be at the same depth.
bool subtree_equal(const StagedTree& st, Vertex v, Vertex w);

// True iff stages and positions coincide at every depth.
bool is_simple(const StagedTree& st);

// Re-stages the tree by its positions; the result is simple and idempotent.
// Parameters are dropped (re-estimate from data afterward).
StagedTree simplify(const StagedTree& st);

}  // namespace stagecraft
