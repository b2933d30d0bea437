#include "stagecraft/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <thread>

#include "stagecraft/assignment.hpp"
#include "stagecraft/error.hpp"
#include "stagecraft/positions.hpp"
#include "stagecraft/rng.hpp"
#include "stagecraft/scoring.hpp"
#include "stagecraft/union_find.hpp"

namespace stagecraft {

namespace {

EventTree tree_from_config(const SimConfig& cfg) {
  if (cfg.p < 1) throw Error("simulation requires p >= 1");
  if (static_cast<int>(cfg.levels.size()) != cfg.p)
    throw Error("levels list must have one entry per variable");
  std::vector<VariableSpec> vars;
  vars.reserve(cfg.p);
  for (int i = 0; i < cfg.p; ++i) {
    VariableSpec v;
    v.name = "X" + std::to_string(i + 1);
    for (int l = 0; l < cfg.levels[i]; ++l) v.levels.push_back(std::to_string(l));
    vars.push_back(std::move(v));
  }
  return EventTree(std::move(vars));
}

}  // namespace

StagedTree random_simple_tree(const SimConfig& cfg) {
  if (cfg.q < 0.0 || cfg.q > 1.0) throw Error("joining probability must lie in [0,1]");
  const EventTree tree = tree_from_config(cfg);
  const int p = tree.num_variables();
  Rng rng(cfg.seed);

  std::vector<std::vector<std::int32_t>> labels(p);
  labels[0].assign(1, 0);
  for (int d = 1; d < p; ++d) {
    const std::vector<std::int32_t> forced = closure_propagate(tree, d - 1, labels[d - 1]);
    // Forced groups in canonical order, anchored at their first vertex.
    std::vector<std::uint64_t> anchors;
    {
      std::vector<std::int64_t> seen;
      for (std::uint64_t r = 0; r < forced.size(); ++r) {
        const std::int32_t g = forced[r];
        if (g >= static_cast<std::int32_t>(seen.size())) seen.resize(g + 1, -1);
        if (seen[g] < 0) {
          seen[g] = 1;
          anchors.push_back(r);
        }
      }
    }
    // Group index -> formed stage; the first group starts the first stage,
    // every later one joins an existing stage with probability q.
    std::vector<std::int32_t> stage_of_group(anchors.size());
    std::int32_t formed = 0;
    for (size_t gi = 0; gi < anchors.size(); ++gi) {
      if (gi == 0) {
        stage_of_group[gi] = formed++;
        continue;
      }
      if (rng.bernoulli(cfg.q))
        stage_of_group[gi] = static_cast<std::int32_t>(rng.next_below(formed));
      else
        stage_of_group[gi] = formed++;
    }
    // Map anchor rank -> group index for a single pass over the vertices.
    std::vector<std::int32_t> group_index(forced.size(), -1);
    for (size_t gi = 0; gi < anchors.size(); ++gi) group_index[forced[anchors[gi]]] = static_cast<std::int32_t>(gi);
    labels[d].resize(forced.size());
    for (std::uint64_t r = 0; r < forced.size(); ++r)
      labels[d][r] = stage_of_group[group_index[forced[r]]];
  }
  return StagedTree{tree, Staging::from_stage_vectors(tree, labels), std::nullopt};
}

StageParameters random_parameters(const StagedTree& st, std::uint64_t seed) {
  Rng rng(seed);
  StageParameters params;
  params.by_stage.resize(st.staging.num_stages());
  for (std::int32_t s = 0; s < st.staging.num_stages(); ++s) {
    const int k = st.tree.arity(st.staging.stage_depth(s));
    auto& theta = params.by_stage[s];
    theta.resize(k);
    double sum = 0.0;
    for (int x = 0; x < k; ++x) {
      theta[x] = rng.exponential();
      sum += theta[x];
    }
    for (int x = 0; x < k; ++x) theta[x] /= sum;
  }
  return params;
}

Dataset sample(const StagedTree& st, std::int64_t n, std::uint64_t seed) {
  if (!st.params) throw Error("sampling requires stage parameters");
  validate_parameters(st, *st.params, SimplexMode::Closed);
  if (n < 0) throw Error("sample size must be nonnegative");
  Rng rng(seed);
  const int p = st.tree.num_variables();
  Dataset data;
  data.variables = st.tree.variables();
  data.cells.reserve(static_cast<size_t>(n) * p);
  for (std::int64_t i = 0; i < n; ++i) {
    std::uint64_t rank = 0;
    for (int d = 0; d < p; ++d) {
      const auto& theta = st.params->by_stage[st.staging.stage_of(d, rank)];
      const double u = rng.next_double();
      double acc = 0.0;
      int x = static_cast<int>(theta.size()) - 1;
      for (int l = 0; l < static_cast<int>(theta.size()); ++l) {
        acc += theta[l];
        if (u < acc) {
          x = l;
          break;
        }
      }
      data.cells.push_back(x);
      rank = st.tree.child(d, rank, x);
    }
  }
  return data;
}

double hamming_stage_distance(const StagedTree& a, const StagedTree& b) {
  if (!a.tree.same_shape(b.tree))
    throw Error("stage distance requires identical event trees");
  double total = 0.0;
  for (int d = 0; d < a.tree.num_variables(); ++d) {
    const std::int32_t na = a.staging.num_stages_at(d);
    const std::int32_t nb = b.staging.num_stages_at(d);
    const std::int32_t base_a = a.staging.first_stage_at(d);
    const std::int32_t base_b = b.staging.first_stage_at(d);
    std::vector<std::vector<std::int64_t>> overlap(na, std::vector<std::int64_t>(nb, 0));
    for (std::uint64_t r = 0; r < a.tree.depth_size(d); ++r)
      ++overlap[a.staging.stage_of(d, r) - base_a][b.staging.stage_of(d, r) - base_b];
    const std::int64_t matched = max_assignment_overlap(overlap);
    const auto m = static_cast<double>(a.tree.depth_size(d));
    total += (m - static_cast<double>(matched)) / m;
  }
  return total;
}

namespace {

LearnResult run_learner(Algorithm a, const CountTree& counts, const Dataset& data) {
  switch (a) {
    case Algorithm::Bhc: return learn_bhc(counts);
    case Algorithm::SimplifiedBhc: return learn_simplified_bhc(counts);
    case Algorithm::Marginal: return learn_marginal(counts);
    case Algorithm::Total: return learn_total(counts);
    case Algorithm::GreedyMarginal: return learn_greedy_order_marginal(data);
    case Algorithm::AllMarginal:
    case Algorithm::AllTotal: {
      LearnOptions opt;
      opt.threads = 1;  // study replicates already run in parallel
      return learn_exhaustive(
          data, a == Algorithm::AllMarginal ? Algorithm::Marginal : Algorithm::Total, opt);
    }
  }
  throw std::invalid_argument("unknown learner");
}

}  // namespace

StudyResult run_consistency_study(const StudyConfig& cfg) {
  for (double q : cfg.qs)
    if (q < 0.0 || q > 1.0) throw Error("joining probability must lie in [0,1]");
  if (cfg.replicates < 0) throw Error("replicates must be nonnegative");
  if (static_cast<int>(cfg.levels.size()) != cfg.p)
    throw Error("levels list must have one entry per variable");

  struct Task {
    size_t qi, ni;
    int replicate;
  };
  std::vector<Task> tasks;
  for (size_t qi = 0; qi < cfg.qs.size(); ++qi)
    for (size_t ni = 0; ni < cfg.ns.size(); ++ni)
      for (int r = 0; r < cfg.replicates; ++r) tasks.push_back({qi, ni, r});

  const size_t learners = cfg.learners.size();
  std::vector<StudyRow> rows(tasks.size() * learners);

  auto run_task = [&](size_t ti) {
    const Task& task = tasks[ti];
    const double q = cfg.qs[task.qi];
    const std::int64_t n = cfg.ns[task.ni];
    // One child stream per (cell, replicate); sub-streams for the tree, the
    // parameters and the data so draw counts never interact.
    const std::uint64_t cell =
        (static_cast<std::uint64_t>(task.qi) * cfg.ns.size() + task.ni) *
            static_cast<std::uint64_t>(std::max(cfg.replicates, 1)) +
        static_cast<std::uint64_t>(task.replicate);
    const std::uint64_t stream = Rng::derive_stream(cfg.seed, cell);

    SimConfig sim{cfg.p, cfg.levels, q, n, Rng::derive_stream(stream, 1)};
    StagedTree truth = random_simple_tree(sim);
    truth.params = random_parameters(truth, Rng::derive_stream(stream, 2));
    const Dataset data = sample(truth, n, Rng::derive_stream(stream, 3));
    const CountTree counts = count_paths(data);

    for (size_t li = 0; li < learners; ++li) {
      const auto t0 = std::chrono::steady_clock::now();
      const LearnResult fit = run_learner(cfg.learners[li], counts, data);
      const auto t1 = std::chrono::steady_clock::now();
      StudyRow row;
      row.q = q;
      row.n = n;
      row.replicate = task.replicate;
      row.learner = to_string(cfg.learners[li]);
      row.distance = hamming_stage_distance(fit.model, truth);
      row.wall_ms = cfg.record_timing
                        ? std::chrono::duration<double, std::milli>(t1 - t0).count()
                        : 0.0;
      rows[ti * learners + li] = std::move(row);
    }
  };

  const int threads = std::max(1, std::min<int>(cfg.threads, static_cast<int>(tasks.size())));
  if (threads <= 1 || tasks.size() <= 1) {
    for (size_t ti = 0; ti < tasks.size(); ++ti) run_task(ti);
  } else {
    std::atomic<size_t> next{0};
    auto worker = [&] {
      for (;;) {
        const size_t ti = next.fetch_add(1);
        if (ti >= tasks.size()) break;
        run_task(ti);
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  return StudyResult{std::move(rows)};
}

std::vector<StudyCell> summarize(const StudyResult& result) {
  std::vector<StudyCell> cells;
  auto find_cell = [&](double q, std::int64_t n, const std::string& learner) -> StudyCell& {
    for (auto& c : cells)
      if (c.q == q && c.n == n && c.learner == learner) return c;
    cells.push_back(StudyCell{q, n, learner, 0, 0.0, 0.0, 0.0});
    return cells.back();
  };
  // First pass: means.
  for (const auto& row : result.rows) {
    StudyCell& c = find_cell(row.q, row.n, row.learner);
    ++c.replicates;
    c.mean += row.distance;
  }
  for (auto& c : cells) c.mean /= std::max(c.replicates, 1);
  // Second pass: normal-approximation confidence intervals.
  std::vector<double> ss(cells.size(), 0.0);
  for (const auto& row : result.rows) {
    for (size_t i = 0; i < cells.size(); ++i) {
      auto& c = cells[i];
      if (c.q == row.q && c.n == row.n && c.learner == row.learner) {
        ss[i] += (row.distance - c.mean) * (row.distance - c.mean);
        break;
      }
    }
  }
  for (size_t i = 0; i < cells.size(); ++i) {
    auto& c = cells[i];
    const double se = c.replicates > 1
                          ? std::sqrt(ss[i] / (c.replicates - 1) / c.replicates)
                          : 0.0;
    c.ci_lo = c.mean - 1.96 * se;
    c.ci_hi = c.mean + 1.96 * se;
  }
  return cells;
}

std::string study_csv(const StudyResult& result) {
  std::string out = "q,N,replicate,learner,distance,wall_ms\n";
  char buf[160];
  for (const auto& row : result.rows) {
    std::snprintf(buf, sizeof(buf), "%.6f,%lld,%d,%s,%.6f,%.3f\n", row.q,
                  static_cast<long long>(row.n), row.replicate, row.learner.c_str(), row.distance,
                  row.wall_ms);
    out += buf;
  }
  return out;
}

}  // namespace stagecraft
