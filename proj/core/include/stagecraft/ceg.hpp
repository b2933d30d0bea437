#pragma once

#include <cstdint>
#include <vector>

#include "stagecraft/staging.hpp"

namespace stagecraft {

struct CegEdge {
  std::int32_t src = 0;  // position id
  std::int32_t dst = 0;  // position id, or sink()
  std::int32_t depth = 0;
  std::int32_t level = 0;

  bool operator==(const CegEdge&) const = default;
};

// The coalesced multigraph: one vertex per position plus a single sink, one
// edge per (source position, level) pair, vertices colored by stage id.
struct Ceg {
  PositionPartition positions;
  std::vector<std::int32_t> stage_of_position;  // coloring, indexed by position id
  std::vector<CegEdge> edges;                   // sorted by (depth, src, level)

  std::int32_t num_internal() const { return positions.num_stages(); }
  std::int32_t sink() const { return positions.num_stages(); }
  std::int32_t num_vertices() const { return num_internal() + 1; }
};

Ceg to_ceg(const StagedTree& st);

}  // namespace stagecraft
