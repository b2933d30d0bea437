#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "stagecraft/event_tree.hpp"

namespace stagecraft {

struct Vertex {
  int depth = 0;
  std::uint64_t rank = 0;
};

// A per-depth partition of the internal vertices. Stage ids are dense and
// canonical: assigned by first occurrence scanning depth 0..p-1, rank
// ascending, so ids are contiguous per depth and two Staging objects compare
// equal iff they describe the same partition. The same structure represents
// position partitions.
class Staging {
 public:
  Staging() = default;

  // Every internal vertex its own stage.
  static Staging singletons(const EventTree& tree);
  // From arbitrary per-depth label vectors (labels are renumbered).
  static Staging from_stage_vectors(const EventTree& tree,
                                    const std::vector<std::vector<std::int32_t>>& labels);
  // From explicit per-depth blocks of vertex ranks; validates that the blocks
  // are nonempty, disjoint and cover each depth.
  static Staging from_blocks(const EventTree& tree,
                             const std::vector<std::vector<std::vector<std::uint64_t>>>& blocks);

  int num_depths() const { return static_cast<int>(stage_of_.size()); }
  std::int32_t num_stages() const { return num_stages_; }
  std::int32_t num_stages_at(int depth) const {
    return first_stage_[depth + 1] - first_stage_[depth];
  }
  std::int32_t first_stage_at(int depth) const { return first_stage_[depth]; }
  int stage_depth(std::int32_t stage) const;

  std::int32_t stage_of(int depth, std::uint64_t rank) const { return stage_of_[depth][rank]; }
  std::span<const std::int32_t> labels_at(int depth) const { return stage_of_[depth]; }

  // Blocks at a depth, ordered by stage id; members ascending.
  std::vector<std::vector<std::uint64_t>> blocks_at(int depth) const;
  std::vector<std::uint64_t> block_sizes() const;

  bool operator==(const Staging&) const = default;

 private:
  std::vector<std::vector<std::int32_t>> stage_of_;  // [depth][rank]
  std::vector<std::int32_t> first_stage_;            // size p+1, prefix of per-depth counts
  std::int32_t num_stages_ = 0;
};

using PositionPartition = Staging;

// Probability vector per stage, indexed by canonical stage id.
struct StageParameters {
  std::vector<std::vector<double>> by_stage;
};

enum class SimplexMode {
  Open,    // entries strictly inside (0,1)
  Closed,  // entries in [0,1]; what fitted models with zero counts produce
};

struct StagedTree {
  EventTree tree;
  Staging staging;
  std::optional<StageParameters> params;
};

StagedTree full_staging(const EventTree& tree);

// Checks arity, nonnegativity (or strict positivity in Open mode) and that
// every vector sums to 1 within 1e-12.
void validate_parameters(const StagedTree& st, const StageParameters& params,
                         SimplexMode mode = SimplexMode::Closed);

// Probability of each root-to-leaf path (indexed by leaf rank); the product
// of stage parameters along the path. Requires params.
std::vector<double> atom_probabilities(const StagedTree& st);

}  // namespace stagecraft
