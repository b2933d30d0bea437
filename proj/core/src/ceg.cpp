#include "stagecraft/ceg.hpp"

#include "stagecraft/positions.hpp"

namespace stagecraft {

Ceg to_ceg(const StagedTree& st) {
  Ceg ceg;
  ceg.positions = compute_positions(st);
  const EventTree& tree = st.tree;
  const int p = tree.num_variables();

  ceg.stage_of_position.assign(ceg.positions.num_stages(), -1);
  for (int d = 0; d < p; ++d)
    for (std::uint64_t r = 0; r < tree.depth_size(d); ++r)
      ceg.stage_of_position[ceg.positions.stage_of(d, r)] = st.staging.stage_of(d, r);

  // One representative vertex per position is enough: all members have
  // level-matched children in the same positions.
  for (int d = 0; d < p; ++d) {
    const std::int32_t base = ceg.positions.first_stage_at(d);
    const std::int32_t count = ceg.positions.num_stages_at(d);
    std::vector<std::uint64_t> rep(count, 0);
    std::vector<bool> seen(count, false);
    for (std::uint64_t r = 0; r < tree.depth_size(d); ++r) {
      const std::int32_t local = ceg.positions.stage_of(d, r) - base;
      if (!seen[local]) {
        seen[local] = true;
        rep[local] = r;
      }
    }
    for (std::int32_t w = 0; w < count; ++w) {
      for (int x = 0; x < tree.arity(d); ++x) {
        const std::uint64_t c = tree.child(d, rep[w], x);
        const std::int32_t dst = (d + 1 < p) ? ceg.positions.stage_of(d + 1, c) : ceg.sink();
        ceg.edges.push_back(CegEdge{base + w, dst, d, x});
      }
    }
  }
  return ceg;
}

}  // namespace stagecraft
