#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "stagecraft/assignment.hpp"
#include "stagecraft/error.hpp"
#include "stagecraft/positions.hpp"
#include "stagecraft/scoring.hpp"
#include "stagecraft/simulate.hpp"
#include "test_util.hpp"

using namespace stagecraft;

namespace {

SimConfig binary_cfg(int p, double q, std::uint64_t seed) {
  SimConfig cfg;
  cfg.p = p;
  cfg.levels.assign(p, 2);
  cfg.q = q;
  cfg.seed = seed;
  return cfg;
}

// Exhaustive best matching between blocks, for cross-checking the assignment
// solver on small instances.
std::int64_t brute_force_overlap(std::vector<std::vector<std::int64_t>> overlap) {
  size_t n = overlap.size();
  if (n == 0) return 0;
  size_t m = overlap[0].size();
  if (n > m) {
    std::vector<std::vector<std::int64_t>> t(m, std::vector<std::int64_t>(n));
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < m; ++j) t[j][i] = overlap[i][j];
    overlap = std::move(t);
    std::swap(n, m);
  }
  // Every injection of rows into columns appears as a prefix of some column
  // permutation.
  std::vector<int> cols(m);
  for (size_t j = 0; j < m; ++j) cols[j] = static_cast<int>(j);
  std::int64_t best = 0;
  do {
    std::int64_t total = 0;
    for (size_t i = 0; i < n; ++i) total += overlap[i][cols[i]];
    best = std::max(best, total);
  } while (std::next_permutation(cols.begin(), cols.end()));
  return best;
}

}  // namespace

TEST_CASE("random simple trees") {
  SUBCASE("q = 0 gives the full staging") {
    const StagedTree st = random_simple_tree(binary_cfg(4, 0.0, 9));
    CHECK(st.staging == Staging::singletons(st.tree));
  }
  SUBCASE("q = 1 gives one stage per depth") {
    const StagedTree st = random_simple_tree(binary_cfg(4, 1.0, 9));
    for (int d = 0; d < 4; ++d) CHECK(st.staging.num_stages_at(d) == 1);
  }
  SUBCASE("every draw is simple") {
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
      SimConfig cfg = binary_cfg(2 + static_cast<int>(seed % 4), 0.1 * (seed % 11), seed);
      CHECK(is_simple(random_simple_tree(cfg)));
    }
  }
  SUBCASE("deterministic given the seed") {
    const StagedTree a = random_simple_tree(binary_cfg(5, 0.5, 123));
    const StagedTree b = random_simple_tree(binary_cfg(5, 0.5, 123));
    CHECK(a.staging == b.staging);
    const StagedTree c = random_simple_tree(binary_cfg(5, 0.5, 124));
    CHECK(a.staging != c.staging);  // overwhelmingly likely
  }
  SUBCASE("lower q means more positions") {
    double mean_low = 0.0, mean_high = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      mean_low += random_simple_tree(binary_cfg(6, 0.2, seed)).staging.num_stages();
      mean_high += random_simple_tree(binary_cfg(6, 0.7, seed)).staging.num_stages();
    }
    CHECK(mean_low > mean_high);
  }
  SUBCASE("invalid q rejected") {
    CHECK_THROWS_AS(random_simple_tree(binary_cfg(3, 1.5, 0)), Error);
  }
}

TEST_CASE("random parameters") {
  const StagedTree st = random_simple_tree(binary_cfg(4, 0.4, 5));
  const StageParameters params = random_parameters(st, 17);
  SUBCASE("valid open-simplex vectors") {
    StagedTree with = st;
    with.params = params;
    CHECK_NOTHROW(validate_parameters(with, params, SimplexMode::Open));
    for (const auto& theta : params.by_stage) {
      double sum = 0.0;
      for (double x : theta) sum += x;
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
  SUBCASE("distinct stages draw distinct vectors") {
    for (size_t a = 0; a < params.by_stage.size(); ++a)
      for (size_t b = a + 1; b < params.by_stage.size(); ++b)
        if (params.by_stage[a].size() == params.by_stage[b].size())
          CHECK(params.by_stage[a] != params.by_stage[b]);
  }
  SUBCASE("bit-identical across runs") {
    const StageParameters again = random_parameters(st, 17);
    CHECK(params.by_stage == again.by_stage);
  }
}

TEST_CASE("sampling") {
  SUBCASE("deterministic parameters give constant rows") {
    StagedTree st = full_staging(EventTree(testutil::binary_vars(2)));
    st.params = StageParameters{{{0.0, 1.0}, {1.0, 0.0}, {0.0, 1.0}}};
    const Dataset data = sample(st, 20, 3);
    for (std::int64_t i = 0; i < data.rows(); ++i) {
      CHECK(data.at(i, 0) == 1);
      CHECK(data.at(i, 1) == 1);  // vertex (1) has stage vector (0,1)
    }
  }
  SUBCASE("zero rows") {
    StagedTree st = random_simple_tree(binary_cfg(3, 0.3, 4));
    st.params = random_parameters(st, 4);
    const Dataset data = sample(st, 0, 9);
    CHECK(data.rows() == 0);
  }
  SUBCASE("missing parameters rejected") {
    const StagedTree st = random_simple_tree(binary_cfg(3, 0.3, 4));
    CHECK_THROWS_AS(sample(st, 5, 1), Error);
  }
  SUBCASE("empirical leaf frequencies approach the atoms") {
    StagedTree st = random_simple_tree(binary_cfg(3, 0.5, 21));
    st.params = random_parameters(st, 22);
    const std::int64_t n = 100000;
    const Dataset data = sample(st, n, 23);
    const auto atoms = atom_probabilities(st);
    std::vector<double> freq(st.tree.num_leaves(), 0.0);
    for (std::int64_t i = 0; i < n; ++i) {
      std::vector<int> row(3);
      for (int j = 0; j < 3; ++j) row[j] = data.at(i, j);
      freq[st.tree.rank_of(row)] += 1.0 / static_cast<double>(n);
    }
    double tv = 0.0;
    for (std::uint64_t l = 0; l < st.tree.num_leaves(); ++l)
      tv += 0.5 * std::abs(freq[l] - atoms[l]);
    CHECK(tv < 0.02);
  }
  SUBCASE("mle recovers the generating vectors at large n") {
    StagedTree st = random_simple_tree(binary_cfg(4, 0.5, 31));
    st.params = random_parameters(st, 32);
    const Dataset data = sample(st, 100000, 33);
    const auto fitted = mle_parameters(st, count_paths(data));
    for (std::int32_t s = 0; s < st.staging.num_stages(); ++s)
      for (size_t x = 0; x < fitted.by_stage[s].size(); ++x)
        CHECK(std::abs(fitted.by_stage[s][x] - st.params->by_stage[s][x]) < 0.05);
  }
}

TEST_CASE("assignment solver") {
  SUBCASE("known instance") {
    const std::vector<std::vector<std::int64_t>> cost{{4, 1, 3}, {2, 0, 5}, {3, 2, 2}};
    std::vector<int> match;
    CHECK(min_cost_assignment(cost, &match) == 5);
    CHECK(match == std::vector<int>{1, 0, 2});
  }
  SUBCASE("agrees with brute force on random instances") {
    Rng rng(606);
    for (int i = 0; i < 200; ++i) {
      const size_t n = 1 + rng.next_below(6);
      const size_t m = 1 + rng.next_below(6);
      std::vector<std::vector<std::int64_t>> overlap(n, std::vector<std::int64_t>(m));
      for (auto& row : overlap)
        for (auto& cell : row) cell = static_cast<std::int64_t>(rng.next_below(20));
      CHECK(max_assignment_overlap(overlap) == brute_force_overlap(overlap));
    }
  }
}

TEST_CASE("hamming stage distance") {
  SUBCASE("identical stagings have distance zero") {
    const StagedTree a = random_simple_tree(binary_cfg(5, 0.4, 77));
    CHECK(hamming_stage_distance(a, a) == 0.0);
  }
  SUBCASE("two-variable example") {
    EventTree tree(testutil::binary_vars(2));
    const StagedTree merged{tree, Staging::from_blocks(tree, {{{0}}, {{0, 1}}}), std::nullopt};
    const StagedTree split{tree, Staging::from_blocks(tree, {{{0}}, {{0}, {1}}}), std::nullopt};
    CHECK(hamming_stage_distance(merged, split) == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("symmetry") {
    Rng rng(404);
    for (int i = 0; i < 100; ++i) {
      const auto seed = rng.next_u64();
      const StagedTree a = random_simple_tree(binary_cfg(4, 0.3, seed));
      const StagedTree b = random_simple_tree(binary_cfg(4, 0.6, seed + 1));
      CHECK(hamming_stage_distance(a, b) ==
            doctest::Approx(hamming_stage_distance(b, a)).epsilon(1e-12));
    }
  }
  SUBCASE("identity of indiscernibles and triangle inequality") {
    Rng rng(505);
    for (int i = 0; i < 60; ++i) {
      const StagedTree a = random_simple_tree(binary_cfg(3, 0.4, rng.next_u64()));
      const StagedTree b = random_simple_tree(binary_cfg(3, 0.4, rng.next_u64()));
      const StagedTree c = random_simple_tree(binary_cfg(3, 0.4, rng.next_u64()));
      const double ab = hamming_stage_distance(a, b);
      const double bc = hamming_stage_distance(b, c);
      const double ac = hamming_stage_distance(a, c);
      CHECK(ab >= 0.0);
      if (a.staging == b.staging)
        CHECK(ab == 0.0);
      else
        CHECK(ab > 0.0);
      CHECK(ac <= ab + bc + 1e-12);
    }
  }
  SUBCASE("mismatched trees rejected") {
    const StagedTree a = random_simple_tree(binary_cfg(3, 0.4, 1));
    const StagedTree b = random_simple_tree(binary_cfg(4, 0.4, 1));
    CHECK_THROWS_AS(hamming_stage_distance(a, b), Error);
  }
}

TEST_CASE("consistency study") {
  SUBCASE("zero replicates give an empty table") {
    StudyConfig cfg;
    cfg.qs = {0.5};
    cfg.ns = {25};
    cfg.p = 3;
    cfg.levels = {2, 2, 2};
    cfg.replicates = 0;
    cfg.learners = {Algorithm::Total};
    CHECK(run_consistency_study(cfg).rows.empty());
  }
  SUBCASE("deterministic and thread-count independent") {
    StudyConfig cfg;
    cfg.qs = {0.3, 0.7};
    cfg.ns = {25, 100};
    cfg.p = 4;
    cfg.levels = {2, 2, 2, 2};
    cfg.replicates = 3;
    cfg.learners = {Algorithm::Marginal, Algorithm::Total};
    cfg.seed = 99;
    cfg.record_timing = false;
    const StudyResult a = run_consistency_study(cfg);
    cfg.threads = 4;
    const StudyResult b = run_consistency_study(cfg);
    CHECK(study_csv(a) == study_csv(b));
    CHECK(a.rows.size() == 2 * 2 * 3 * 2);
  }
  SUBCASE("summaries aggregate by cell") {
    StudyConfig cfg;
    cfg.qs = {0.5};
    cfg.ns = {50};
    cfg.p = 3;
    cfg.levels = {2, 2, 2};
    cfg.replicates = 5;
    cfg.learners = {Algorithm::Total};
    cfg.seed = 7;
    const StudyResult res = run_consistency_study(cfg);
    const auto cells = summarize(res);
    REQUIRE(cells.size() == 1);
    CHECK(cells[0].replicates == 5);
    double mean = 0.0;
    for (const auto& row : res.rows) mean += row.distance / 5.0;
    CHECK(cells[0].mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(cells[0].ci_lo <= cells[0].mean);
    CHECK(cells[0].ci_hi >= cells[0].mean);
  }
}
