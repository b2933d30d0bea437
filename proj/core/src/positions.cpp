#include "stagecraft/positions.hpp"

#include <map>
#include <stdexcept>
#include <vector>

namespace stagecraft {

PositionPartition compute_positions(const StagedTree& st) {
  const EventTree& tree = st.tree;
  const int p = tree.num_variables();
  std::vector<std::vector<std::int32_t>> pos(p);
  std::vector<std::int32_t> below;  // position labels at depth d+1
  for (int d = p - 1; d >= 0; --d) {
    const int k = tree.arity(d);
    pos[d].resize(tree.depth_size(d));
    // Key = (stage id, child position ids ordered by level); at the deepest
    // internal depth all children are leaves, so the stage alone decides.
    std::map<std::vector<std::int32_t>, std::int32_t> interned;
    std::vector<std::int32_t> key(d + 1 < p ? k + 1 : 1);
    for (std::uint64_t r = 0; r < tree.depth_size(d); ++r) {
      key[0] = st.staging.stage_of(d, r);
      if (d + 1 < p)
        for (int x = 0; x < k; ++x) key[1 + x] = below[tree.child(d, r, x)];
      pos[d][r] =
          interned.try_emplace(key, static_cast<std::int32_t>(interned.size())).first->second;
    }
    below = pos[d];
  }
  return Staging::from_stage_vectors(tree, pos);
}

bool subtree_equal(const StagedTree& st, Vertex v, Vertex w) {
  if (v.depth != w.depth) throw std::invalid_argument("subtree_equal: depth mismatch");
  if (v.depth == st.tree.num_variables()) return true;  // leaves
  if (st.staging.stage_of(v.depth, v.rank) != st.staging.stage_of(w.depth, w.rank)) return false;
  for (int x = 0; x < st.tree.arity(v.depth); ++x) {
    Vertex cv{v.depth + 1, st.tree.child(v.depth, v.rank, x)};
    Vertex cw{w.depth + 1, st.tree.child(w.depth, w.rank, x)};
    if (!subtree_equal(st, cv, cw)) return false;
  }
  return true;
}

bool is_simple(const StagedTree& st) { return compute_positions(st) == st.staging; }

StagedTree simplify(const StagedTree& st) {
  return StagedTree{st.tree, compute_positions(st), std::nullopt};
}

}  // namespace stagecraft
