#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>

#include "stagecraft/error.hpp"
#include "stagecraft/learn.hpp"
#include "stagecraft/positions.hpp"
#include "stagecraft/scoring.hpp"
#include "stagecraft/simulate.hpp"
#include "test_util.hpp"

using namespace stagecraft;
using testutil::binary_vars;

namespace {

Dataset from_counts_3bin(const std::array<int, 8>& leaf_counts) {
  Dataset data;
  data.variables = binary_vars(3);
  for (int leaf = 0; leaf < 8; ++leaf)
    for (int i = 0; i < leaf_counts[leaf]; ++i) {
      data.cells.push_back((leaf >> 2) & 1);
      data.cells.push_back((leaf >> 1) & 1);
      data.cells.push_back(leaf & 1);
    }
  return data;
}

StagedTree sampled_model(const StagedTree& shape, std::vector<std::vector<double>> by_stage) {
  StagedTree st = shape;
  st.params = StageParameters{std::move(by_stage)};
  return st;
}

}  // namespace

TEST_CASE("closure propagation") {
  SUBCASE("merged depth-1 pair forces level-matched children") {
    EventTree tree(binary_vars(3));
    const std::vector<std::int32_t> depth1{0, 0};
    const auto forced = closure_propagate(tree, 1, depth1);
    CHECK(forced == std::vector<std::int32_t>{0, 1, 0, 1});
  }
  SUBCASE("singleton stages force nothing") {
    EventTree tree(binary_vars(3));
    const std::vector<std::int32_t> depth1{0, 1};
    CHECK(closure_propagate(tree, 1, depth1) == std::vector<std::int32_t>{0, 1, 2, 3});
  }
  SUBCASE("three-level pair forces three child pairs") {
    EventTree tree({VariableSpec{"S", {"low", "avg", "high"}},
                    VariableSpec{"E", {"low", "avg", "high"}}, VariableSpec{"H", {"no", "yes"}}});
    const std::vector<std::int32_t> depth1{0, 1, 1};
    const auto forced = closure_propagate(tree, 1, depth1);
    CHECK(forced == std::vector<std::int32_t>{0, 1, 2, 3, 4, 5, 3, 4, 5});
  }
  SUBCASE("depth out of range") {
    EventTree tree(binary_vars(2));
    const std::vector<std::int32_t> labels{0, 0};
    CHECK_THROWS_AS(closure_propagate(tree, 1, labels), std::invalid_argument);
  }
}

TEST_CASE("bhc merges stages with shared conditionals") {
  StagedTree truth = sampled_model(
      testutil::cond_indep_tree(),
      {{0.5, 0.5}, {0.3, 0.7}, {0.3, 0.7}, {0.9, 0.1}, {0.25, 0.75}});
  const Dataset data = sample(truth, 5000, 11);
  const LearnResult fit = learn_bhc(count_paths(data));
  CHECK(fit.model.staging.stage_of(1, 0) == fit.model.staging.stage_of(1, 1));
}

TEST_CASE("bhc keeps distinct stages apart") {
  EventTree tree(binary_vars(2));
  StagedTree truth = sampled_model(full_staging(tree),
                                   {{0.5, 0.5}, {0.95, 0.05}, {0.05, 0.95}});
  const Dataset data = sample(truth, 5000, 12);
  const LearnResult fit = learn_bhc(count_paths(data));
  CHECK(fit.model.staging == truth.staging);
}

TEST_CASE("single-row data leaves every merge delta at zero") {
  // With N=1 the BIC penalty vanishes and pooling the lone observed vertex
  // with empty ones never moves the likelihood, so nothing strictly improves.
  Dataset data;
  data.variables = binary_vars(3);
  data.cells = {0, 1, 0};
  const CountTree ct = count_paths(data);
  const StagedTree st = full_staging(EventTree(binary_vars(3)));
  for (int d = 0; d < 3; ++d) {
    const std::int32_t lo = st.staging.first_stage_at(d);
    const std::int32_t n = st.staging.num_stages_at(d);
    for (std::int32_t a = lo; a < lo + n; ++a)
      for (std::int32_t b = a + 1; b < lo + n; ++b)
        CHECK(delta_bic_merge(st, ct, d, a, b) == 0.0);
  }
  const LearnResult fit = learn_bhc(ct);
  CHECK(fit.model.staging == st.staging);
}

TEST_CASE("simplified bhc output is simple") {
  Rng rng(2024);
  for (int i = 0; i < 20; ++i) {
    const StagedTree shape = testutil::random_staged_tree(rng, 4, 2);
    const Dataset data =
        testutil::random_dataset(rng, shape.tree.variables(), 30 + rng.next_below(300));
    const CountTree ct = count_paths(data);
    const LearnResult bhc = learn_bhc(ct);
    const LearnResult simp = learn_simplified_bhc(ct);
    CHECK(is_simple(simp.model));
    CHECK(simp.model.staging.num_stages() >= bhc.model.staging.num_stages());
    if (is_simple(bhc.model)) CHECK(simp.model.staging == bhc.model.staging);
  }
}

TEST_CASE("marginal recovers the generating staging") {
  StagedTree truth = sampled_model(
      testutil::cond_indep_tree(),
      {{0.5, 0.5}, {0.2, 0.8}, {0.7, 0.3}, {0.9, 0.1}, {0.4, 0.6}});
  const Dataset data = sample(truth, 5000, 31);
  const LearnResult fit = learn_marginal(count_paths(data));
  CHECK(is_simple(fit.model));
  CHECK(fit.model.staging == truth.staging);
}

TEST_CASE("single variable: marginal and total equal bhc") {
  Dataset data;
  data.variables = {VariableSpec{"A", {"0", "1", "2"}}};
  data.cells = {0, 1, 1, 2, 2, 2};
  const CountTree ct = count_paths(data);
  const LearnResult a = learn_bhc(ct);
  const LearnResult b = learn_marginal(ct);
  const LearnResult c = learn_total(ct);
  CHECK(a.model.staging == b.model.staging);
  CHECK(a.model.staging == c.model.staging);
  CHECK(a.bic == doctest::Approx(b.bic).epsilon(1e-12));
  CHECK(a.bic == doctest::Approx(c.bic).epsilon(1e-12));
}

TEST_CASE("total declines a marginally attractive merge that hurts deeper fit") {
  // Equal X2|X1 margins but opposite X3 conditionals: pooling the depth-1
  // vertices forces ruinous depth-2 merges, which only total sees.
  const Dataset data = from_counts_3bin({180, 20, 180, 20, 20, 180, 20, 180});
  const CountTree ct = count_paths(data);
  const LearnResult marg = learn_marginal(ct);
  const LearnResult tot = learn_total(ct);
  CHECK(marg.model.staging.stage_of(1, 0) == marg.model.staging.stage_of(1, 1));
  CHECK(tot.model.staging.stage_of(1, 0) != tot.model.staging.stage_of(1, 1));
  CHECK(is_simple(marg.model));
  CHECK(is_simple(tot.model));
  CHECK(tot.bic <= marg.bic + 1e-9);
}

TEST_CASE("learner postconditions on random datasets") {
  Rng rng(616);
  for (int i = 0; i < 30; ++i) {
    const int p = 2 + static_cast<int>(rng.next_below(3));
    std::vector<VariableSpec> vars;
    for (int j = 0; j < p; ++j) {
      VariableSpec v{"V" + std::to_string(j), {}};
      const int k = 2 + static_cast<int>(rng.next_below(2));
      for (int l = 0; l < k; ++l) v.levels.push_back(std::to_string(l));
      vars.push_back(std::move(v));
    }
    const Dataset data = testutil::random_dataset(rng, vars, 40 + rng.next_below(400));
    const CountTree ct = count_paths(data);

    std::vector<int> identity(p);
    for (int j = 0; j < p; ++j) identity[j] = j;

    for (Algorithm algo : {Algorithm::Bhc, Algorithm::SimplifiedBhc, Algorithm::Marginal,
                           Algorithm::Total, Algorithm::GreedyMarginal, Algorithm::AllMarginal,
                           Algorithm::AllTotal}) {
      const LearnResult fit = learn(algo, data, identity);
      if (produces_simple(algo)) CHECK(is_simple(fit.model));
      // Reported BIC must match a from-scratch recomputation.
      std::vector<int> order;
      for (const auto& v : fit.model.tree.variables())
        for (int j = 0; j < p; ++j)
          if (data.variables[j].name == v.name) order.push_back(j);
      const CountTree fit_counts = CountTree::build(data, order);
      CHECK(fit.bic == doctest::Approx(bic(fit.model, fit_counts)).epsilon(1e-9));
    }

    const LearnResult fixed = learn_marginal(ct);
    const LearnResult all = learn_exhaustive(data, Algorithm::Marginal);
    CHECK(all.bic <= fixed.bic + 1e-9);
  }
}

TEST_CASE("greedy order search") {
  SUBCASE("single variable") {
    Dataset data;
    data.variables = {VariableSpec{"A", {"0", "1"}}};
    data.cells = {0, 1, 1};
    const LearnResult fit = learn_greedy_order_marginal(data);
    CHECK(fit.model.tree.variables()[0].name == "A");
  }
  SUBCASE("exact ties resolve by variable name") {
    // Both columns have marginal counts (2,2): the first step ties exactly,
    // so the lexicographically smaller name goes first despite column order.
    Dataset data;
    data.variables = {VariableSpec{"B", {"0", "1"}}, VariableSpec{"A", {"0", "1"}}};
    data.cells = {0, 0, 0, 1, 1, 0, 1, 1};
    const LearnResult fit = learn_greedy_order_marginal(data);
    CHECK(fit.model.tree.variables()[0].name == "A");
  }
  SUBCASE("no worse than the worst fixed order") {
    StagedTree truth = sampled_model(
        testutil::context_specific_tree(),
        {{0.5, 0.5}, {0.15, 0.85}, {0.75, 0.25}, {0.9, 0.1}, {0.35, 0.65}, {0.6, 0.4}});
    const Dataset data = sample(truth, 1200, 55);
    const LearnResult greedy = learn_greedy_order_marginal(data);
    double worst = -1e300;
    std::vector<int> perm{0, 1, 2};
    do {
      worst = std::max(worst, learn_marginal(CountTree::build(data, perm)).bic);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(greedy.bic <= worst + 1e-9);
  }
}

TEST_CASE("exhaustive search equals the best fixed-order run") {
  Rng rng(2718);
  const Dataset data = testutil::random_dataset(rng, binary_vars(3), 300);

  for (Algorithm inner : {Algorithm::Marginal, Algorithm::Total}) {
    double best = 1e300;
    std::vector<int> perm{0, 1, 2};
    do {
      const LearnResult fit = inner == Algorithm::Marginal
                                  ? learn_marginal(CountTree::build(data, perm))
                                  : learn_total(CountTree::build(data, perm));
      best = std::min(best, fit.bic);
    } while (std::next_permutation(perm.begin(), perm.end()));

    const LearnResult all = learn_exhaustive(data, inner);
    CHECK(all.bic == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("exhaustive search is deterministic across thread counts") {
  Rng rng(13);
  const Dataset data = testutil::random_dataset(rng, binary_vars(4), 250);
  LearnOptions seq;
  seq.threads = 1;
  LearnOptions par;
  par.threads = 4;
  const LearnResult a = learn_exhaustive(data, Algorithm::Marginal, seq);
  const LearnResult b = learn_exhaustive(data, Algorithm::Marginal, par);
  CHECK(a.bic == b.bic);
  CHECK(a.model.staging == b.model.staging);
  CHECK(a.model.tree.variables() == b.model.tree.variables());
}

TEST_CASE("exhaustive search respects the variable cap") {
  Rng rng(1);
  const Dataset data = testutil::random_dataset(rng, binary_vars(4), 50);
  LearnOptions opt;
  opt.max_exhaustive_p = 3;
  CHECK_THROWS_AS(learn_exhaustive(data, Algorithm::Marginal, opt), Error);
  opt.allow_large_exhaustive = true;
  CHECK_NOTHROW(learn_exhaustive(data, Algorithm::Marginal, opt));
}

TEST_CASE("fixed-order algorithms require an order") {
  Rng rng(2);
  const Dataset data = testutil::random_dataset(rng, binary_vars(2), 20);
  CHECK_THROWS_AS(learn(Algorithm::Marginal, data, std::nullopt), Error);
}

TEST_CASE("algorithm names round trip") {
  for (Algorithm a : {Algorithm::Bhc, Algorithm::SimplifiedBhc, Algorithm::Marginal,
                      Algorithm::Total, Algorithm::GreedyMarginal, Algorithm::AllMarginal,
                      Algorithm::AllTotal})
    CHECK(algorithm_from_string(to_string(a)) == a);
  CHECK_FALSE(algorithm_from_string("gradient-descent").has_value());
}
