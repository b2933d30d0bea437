#include <doctest.h>

#include "stagecraft/ceg.hpp"
#include "stagecraft/error.hpp"
#include "stagecraft/learn.hpp"
#include "stagecraft/positions.hpp"
#include "test_util.hpp"

using namespace stagecraft;

TEST_CASE("positions of the non-simple four-variable tree") {
  const StagedTree st = testutil::non_simple_tree();
  const auto pos = compute_positions(st);
  // {v0},{v1},{v2},{v3,v5},{v4},{v6},{v7,v9,v10,v11},{v8,v12,v13,v14}
  CHECK(pos.num_stages() == 8);
  CHECK(pos.blocks_at(0) == std::vector<std::vector<std::uint64_t>>{{0}});
  CHECK(pos.blocks_at(1) == std::vector<std::vector<std::uint64_t>>{{0}, {1}});
  CHECK(pos.blocks_at(2) == std::vector<std::vector<std::uint64_t>>{{0, 2}, {1}, {3}});
  CHECK(pos.blocks_at(3) ==
        std::vector<std::vector<std::uint64_t>>{{0, 2, 3, 4}, {1, 5, 6, 7}});
}

TEST_CASE("positions equal stages on the simple fixtures") {
  const StagedTree a = testutil::cond_indep_tree();
  CHECK(compute_positions(a) == a.staging);
  CHECK(compute_positions(a) == testutil::positions_by_oracle(a));

  StagedTree full = full_staging(EventTree(testutil::binary_vars(3)));
  const auto pos = compute_positions(full);
  CHECK(pos == full.staging);
}

TEST_CASE("subtree equality") {
  const StagedTree st = testutil::non_simple_tree();
  // v3 and v5 are depth-2 ranks 0 and 2.
  CHECK(subtree_equal(st, Vertex{2, 0}, Vertex{2, 2}));
  CHECK(subtree_equal(st, Vertex{1, 0}, Vertex{1, 0}));
  // v1 and v2: same stage, different subtrees.
  CHECK_FALSE(subtree_equal(st, Vertex{1, 0}, Vertex{1, 1}));
  CHECK_THROWS_AS(subtree_equal(st, Vertex{1, 0}, Vertex{2, 0}), std::invalid_argument);
}

TEST_CASE("is_simple on fixtures") {
  CHECK(is_simple(testutil::cond_indep_tree()));
  CHECK(is_simple(testutil::context_specific_tree()));
  CHECK_FALSE(is_simple(testutil::non_simple_tree()));
  CHECK(is_simple(full_staging(EventTree(testutil::binary_vars(4)))));
}

TEST_CASE("simplify") {
  SUBCASE("non-simple tree is re-staged by its positions") {
    const StagedTree st = testutil::non_simple_tree();
    const StagedTree simple = simplify(st);
    CHECK(simple.staging == compute_positions(st));
    CHECK(simple.staging.num_stages() == 8);
    CHECK(is_simple(simple));
    CHECK(simplify(simple).staging == simple.staging);
  }
  SUBCASE("simple input is a fixed point") {
    const StagedTree st = testutil::context_specific_tree();
    CHECK(simplify(st).staging == st.staging);
  }
  SUBCASE("stage splits when children diverge") {
    // Depth-1 stage {v1,v2} whose children are all staged apart: the stage
    // splits into two positions.
    EventTree tree(testutil::binary_vars(3));
    auto staging =
        Staging::from_blocks(tree, {{{0}}, {{0, 1}}, {{0}, {1}, {2}, {3}}});
    const StagedTree st{tree, staging, std::nullopt};
    CHECK_FALSE(is_simple(st));
    const StagedTree simple = simplify(st);
    CHECK(simple.staging.num_stages_at(1) == 2);
    CHECK(simple.staging == testutil::positions_by_oracle(st));
  }
}

TEST_CASE("position oracle equivalence on random trees") {
  Rng rng(20260810);
  for (int i = 0; i < 200; ++i) {
    const StagedTree st = testutil::random_staged_tree(rng);
    CHECK(compute_positions(st) == testutil::positions_by_oracle(st));
  }
}

TEST_CASE("partition laws and refinement on random trees") {
  Rng rng(31337);
  for (int i = 0; i < 100; ++i) {
    const StagedTree st = testutil::random_staged_tree(rng);
    const auto pos = compute_positions(st);
    for (int d = 0; d < st.tree.num_variables(); ++d) {
      // blocks_at covers every vertex exactly once by construction; check
      // stage ids are within the depth's range and the refinement law.
      std::uint64_t covered = 0;
      for (const auto& block : pos.blocks_at(d)) covered += block.size();
      CHECK(covered == st.tree.depth_size(d));
      for (std::uint64_t v = 0; v < st.tree.depth_size(d); ++v)
        for (std::uint64_t w = v + 1; w < st.tree.depth_size(d); ++w)
          if (pos.stage_of(d, v) == pos.stage_of(d, w))
            CHECK(st.staging.stage_of(d, v) == st.staging.stage_of(d, w));
    }
    CHECK(is_simple(simplify(st)));
  }
}

TEST_CASE("ceg of the non-simple tree has eight internal vertices") {
  const Ceg ceg = to_ceg(testutil::non_simple_tree());
  CHECK(ceg.num_internal() == 8);
  CHECK(ceg.num_vertices() == 9);
  // Edge merging: v3 and v5 share position w3; the level-0 edges out of them
  // land in one position, so the CEG keeps a single such edge.
  int from_w3 = 0;
  for (const auto& e : ceg.edges)
    if (e.src == 3) ++from_w3;
  CHECK(from_w3 == 2);
}

TEST_CASE("ceg of a fully staged tree mirrors the tree") {
  StagedTree full = full_staging(EventTree(testutil::binary_vars(2)));
  const Ceg ceg = to_ceg(full);
  CHECK(ceg.num_internal() == 3);
  CHECK(ceg.edges.size() == 6);
  for (const auto& e : ceg.edges)
    if (e.depth == 1) CHECK(e.dst == ceg.sink());
}

TEST_CASE("ceg vertex count equals positions plus sink") {
  Rng rng(777);
  for (int i = 0; i < 50; ++i) {
    const StagedTree st = testutil::random_staged_tree(rng);
    const Ceg ceg = to_ceg(st);
    CHECK(ceg.num_vertices() == compute_positions(st).num_stages() + 1);
  }
}

TEST_CASE("simple tree with fifteen stages yields a fifteen-vertex ceg") {
  // Build a position-closed staging over six binary variables with stage
  // counts (1,2,3,3,3,3) per depth by merging whole closure groups.
  EventTree tree(testutil::binary_vars(6));
  std::vector<std::vector<std::int32_t>> labels(6);
  labels[0] = {0};
  const int targets[6] = {1, 2, 3, 3, 3, 3};
  for (int d = 1; d < 6; ++d) {
    std::vector<std::int32_t> forced = closure_propagate(tree, d - 1, labels[d - 1]);
    std::int32_t groups = 0;
    for (std::int32_t g : forced) groups = std::max(groups, g + 1);
    // Renumber canonically, then fold group g into g % target.
    std::vector<std::int32_t> canon(forced.size());
    {
      std::vector<std::int32_t> remap(groups, -1);
      std::int32_t next = 0;
      for (size_t r = 0; r < forced.size(); ++r) {
        if (remap[forced[r]] < 0) remap[forced[r]] = next++;
        canon[r] = remap[forced[r]];
      }
      groups = next;
    }
    for (auto& g : canon) g = g % targets[d];
    labels[d] = std::move(canon);
  }
  const StagedTree st{tree, Staging::from_stage_vectors(tree, labels), std::nullopt};
  REQUIRE(st.staging.num_stages() == 15);
  REQUIRE(is_simple(st));
  CHECK(to_ceg(st).num_internal() == 15);
}
