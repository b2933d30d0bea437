#include "stagecraft/learn.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "stagecraft/error.hpp"
#include "stagecraft/positions.hpp"
#include "stagecraft/scoring.hpp"
#include "stagecraft/union_find.hpp"

namespace stagecraft {

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Bhc: return "bhc";
    case Algorithm::SimplifiedBhc: return "simplified-bhc";
    case Algorithm::Marginal: return "marginal";
    case Algorithm::Total: return "total";
    case Algorithm::GreedyMarginal: return "greedy-marginal";
    case Algorithm::AllMarginal: return "all-marginal";
    case Algorithm::AllTotal: return "all-total";
  }
  return "?";
}

std::optional<Algorithm> algorithm_from_string(std::string_view name) {
  for (Algorithm a : {Algorithm::Bhc, Algorithm::SimplifiedBhc, Algorithm::Marginal,
                      Algorithm::Total, Algorithm::GreedyMarginal, Algorithm::AllMarginal,
                      Algorithm::AllTotal})
    if (name == to_string(a)) return a;
  return std::nullopt;
}

bool produces_simple(Algorithm a) {
  return a != Algorithm::Bhc;
}

namespace {

using Counts = std::vector<std::int64_t>;

double merge_delta(const Counts& a, const Counts& b, double log_n) {
  const int k = static_cast<int>(a.size());
  Counts merged(k);
  for (int x = 0; x < k; ++x) merged[x] = a[x] + b[x];
  const double delta_ll = multinomial_ll(merged) - multinomial_ll(a) - multinomial_ll(b);
  return -static_cast<double>(k - 1) * log_n - 2.0 * delta_ll;
}

// Pooled counts per group for one depth, group id = smallest member rank.
std::vector<Counts> pool_by_group(const EventTree& tree, const CountTree& counts, int depth,
                                  const UnionFind& dsu) {
  std::vector<Counts> pooled(tree.depth_size(depth));
  const int k = tree.arity(depth);
  for (std::uint64_t r = 0; r < tree.depth_size(depth); ++r)
    if (dsu.find(r) == r) pooled[r].assign(k, 0);
  for (const auto& [rank, edge] : counts.observed(depth)) {
    auto& dst = pooled[dsu.find(rank)];
    for (int x = 0; x < k; ++x) dst[x] += edge[x];
  }
  return pooled;
}

// BIC contribution of one depth under a given grouping.
double depth_contribution(const EventTree& tree, int depth, const std::vector<Counts>& pooled,
                          const std::vector<std::uint64_t>& roots, double log_n) {
  double ll = 0.0;
  for (std::uint64_t r : roots) ll += multinomial_ll(pooled[r]);
  return static_cast<double>(roots.size()) * (tree.arity(depth) - 1) * log_n - 2.0 * ll;
}

std::vector<std::uint64_t> current_roots(const UnionFind& dsu) {
  std::vector<std::uint64_t> roots;
  for (std::uint64_t r = 0; r < dsu.size(); ++r)
    if (dsu.find(r) == r) roots.push_back(r);
  return roots;
}

struct DepthClimb {
  std::vector<std::int32_t> labels;  // canonical group labels per rank
  double contribution = 0.0;         // final depth BIC contribution (tracked)
};

// Best-improvement merging of groups at one depth, scored by the depth's own
// BIC contribution. Ties break on the lexicographically smallest root pair.
DepthClimb climb_depth(const EventTree& tree, const CountTree& counts, int depth,
                       std::span<const std::int32_t> initial_labels) {
  const std::uint64_t m = tree.depth_size(depth);
  const double log_n = std::log(static_cast<double>(counts.total()));
  UnionFind dsu(m);
  {
    // Anchor each initial group at its first member.
    std::vector<std::int64_t> group_anchor;
    for (std::uint64_t r = 0; r < m; ++r) {
      const std::int32_t g = initial_labels[r];
      if (g >= static_cast<std::int32_t>(group_anchor.size())) group_anchor.resize(g + 1, -1);
      if (group_anchor[g] < 0)
        group_anchor[g] = static_cast<std::int64_t>(r);
      else
        dsu.unite(static_cast<std::uint64_t>(group_anchor[g]), r);
    }
  }

  auto pooled = pool_by_group(tree, counts, depth, dsu);
  auto roots = current_roots(dsu);
  double contribution = depth_contribution(tree, depth, pooled, roots, log_n);

  while (roots.size() > 1) {
    double best = 0.0;
    size_t bi = 0, bj = 0;
    bool found = false;
    for (size_t i = 0; i + 1 < roots.size(); ++i) {
      for (size_t j = i + 1; j < roots.size(); ++j) {
        const double delta = merge_delta(pooled[roots[i]], pooled[roots[j]], log_n);
        if (delta < best) {
          best = delta;
          bi = i;
          bj = j;
          found = true;
        }
      }
    }
    if (!found) break;
    const std::uint64_t ra = roots[bi], rb = roots[bj];
    for (size_t x = 0; x < pooled[ra].size(); ++x) pooled[ra][x] += pooled[rb][x];
    dsu.unite(ra, rb);
    roots.erase(roots.begin() + bj);
    contribution += best;
  }

  DepthClimb out;
  out.labels.resize(m);
  for (std::uint64_t r = 0; r < m; ++r)
    out.labels[r] = static_cast<std::int32_t>(dsu.find(r));
  out.contribution = contribution;
  return out;
}

EventTree tree_for(const CountTree& counts) { return EventTree(counts.variables()); }

void require_scorable(const CountTree& counts) {
  if (counts.total() <= 0) throw Error("learning requires at least one observation");
}

LearnResult finish(EventTree tree, std::vector<std::vector<std::int32_t>> labels, double tracked,
                   const CountTree& counts) {
  StagedTree model{tree, Staging::from_stage_vectors(tree, labels), std::nullopt};
  LearnResult res{std::move(model), tracked, 0.0};
  res.log_lik = log_likelihood(res.model, counts);
  return res;
}

}  // namespace

std::vector<std::int32_t> closure_propagate(const EventTree& tree, int depth,
                                            std::span<const std::int32_t> stage_labels) {
  if (depth < 0 || depth + 1 >= tree.num_variables())
    throw std::invalid_argument("closure_propagate: no internal depth below the given one");
  if (stage_labels.size() != tree.depth_size(depth))
    throw std::invalid_argument("closure_propagate: label vector has wrong size");
  const int k = tree.arity(depth);
  UnionFind dsu(tree.depth_size(depth + 1));
  std::vector<std::int64_t> group_anchor;
  for (std::uint64_t r = 0; r < stage_labels.size(); ++r) {
    const std::int32_t g = stage_labels[r];
    if (g >= static_cast<std::int32_t>(group_anchor.size())) group_anchor.resize(g + 1, -1);
    if (group_anchor[g] < 0) {
      group_anchor[g] = static_cast<std::int64_t>(r);
      continue;
    }
    const auto anchor = static_cast<std::uint64_t>(group_anchor[g]);
    for (int x = 0; x < k; ++x) dsu.unite(tree.child(depth, anchor, x), tree.child(depth, r, x));
  }
  std::vector<std::int32_t> labels(dsu.size());
  for (std::uint64_t r = 0; r < dsu.size(); ++r)
    labels[r] = static_cast<std::int32_t>(dsu.find(r));
  return labels;
}

LearnResult learn_bhc(const CountTree& counts) {
  require_scorable(counts);
  const EventTree tree = tree_for(counts);
  const int p = tree.num_variables();
  std::vector<std::vector<std::int32_t>> labels(p);
  double tracked = 0.0;
  for (int d = 0; d < p; ++d) {
    std::vector<std::int32_t> singleton(tree.depth_size(d));
    for (std::uint64_t r = 0; r < singleton.size(); ++r) singleton[r] = static_cast<std::int32_t>(r);
    DepthClimb climb = climb_depth(tree, counts, d, singleton);
    labels[d] = std::move(climb.labels);
    tracked += climb.contribution;
  }
  return finish(tree, std::move(labels), tracked, counts);
}

LearnResult learn_simplified_bhc(const CountTree& counts) {
  LearnResult res = learn_bhc(counts);
  res.model = simplify(res.model);
  // Re-track on the simplified staging: sum the per-depth contributions.
  res.log_lik = log_likelihood(res.model, counts);
  res.bic = static_cast<double>(n_free_params(res.model)) *
                std::log(static_cast<double>(counts.total())) -
            2.0 * res.log_lik;
  return res;
}

LearnResult learn_marginal(const CountTree& counts) {
  require_scorable(counts);
  const EventTree tree = tree_for(counts);
  const int p = tree.num_variables();
  std::vector<std::vector<std::int32_t>> labels(p);
  double tracked = 0.0;
  for (int d = 0; d < p; ++d) {
    std::vector<std::int32_t> initial;
    if (d == 0)
      initial.assign(tree.depth_size(0), 0);
    else
      initial = closure_propagate(tree, d - 1, labels[d - 1]);
    DepthClimb climb = climb_depth(tree, counts, d, initial);
    labels[d] = std::move(climb.labels);
    tracked += climb.contribution;
  }
  return finish(tree, std::move(labels), tracked, counts);
}

namespace {

// Search state for the total algorithm: per-depth groupings with pooled
// counts; merging two groups cascades to level-matched child groups so the
// staging stays position-closed at every step.
class TotalSearch {
 public:
  TotalSearch(const EventTree& tree, const CountTree& counts)
      : tree_(tree), counts_(counts), log_n_(std::log(static_cast<double>(counts.total()))) {
    const int p = tree_.num_variables();
    dsu_.reserve(p);
    pooled_.resize(p);
    for (int d = 0; d < p; ++d) {
      dsu_.emplace_back(tree_.depth_size(d));
      pooled_[d].resize(tree_.depth_size(d));
      const int k = tree_.arity(d);
      for (std::uint64_t r = 0; r < tree_.depth_size(d); ++r) pooled_[d][r].assign(k, 0);
      for (const auto& [rank, edge] : counts_.observed(d))
        for (int x = 0; x < k; ++x) pooled_[d][rank][x] += edge[x];
    }
  }

  double evaluate(int depth, std::uint64_t a, std::uint64_t b) {
    dsu_undo_.clear();
    pool_undo_.clear();
    const double delta = cascade(depth, a, b);
    for (auto it = pool_undo_.rbegin(); it != pool_undo_.rend(); ++it) {
      const auto& [d, rlo, rhi] = *it;
      for (size_t x = 0; x < pooled_[d][rlo].size(); ++x) pooled_[d][rlo][x] -= pooled_[d][rhi][x];
    }
    for (const auto& [d, idx] : dsu_undo_) dsu_[d].rollback(idx);
    return delta;
  }

  double commit(int depth, std::uint64_t a, std::uint64_t b) {
    dsu_undo_.clear();
    pool_undo_.clear();
    return cascade(depth, a, b);
  }

  std::vector<std::uint64_t> roots_at(int depth) const { return current_roots(dsu_[depth]); }
  const Counts& pooled(int depth, std::uint64_t root) const { return pooled_[depth][root]; }

  std::vector<std::vector<std::int32_t>> final_labels() const {
    std::vector<std::vector<std::int32_t>> labels(tree_.num_variables());
    for (int d = 0; d < tree_.num_variables(); ++d) {
      labels[d].resize(tree_.depth_size(d));
      for (std::uint64_t r = 0; r < tree_.depth_size(d); ++r)
        labels[d][r] = static_cast<std::int32_t>(dsu_[d].find(r));
    }
    return labels;
  }

 private:
  double cascade(int depth, std::uint64_t a, std::uint64_t b) {
    const std::uint64_t ra = dsu_[depth].find(a), rb = dsu_[depth].find(b);
    if (ra == rb) return 0.0;
    const std::uint64_t rlo = std::min(ra, rb), rhi = std::max(ra, rb);
    double delta = merge_delta(pooled_[depth][rlo], pooled_[depth][rhi], log_n_);
    UnionFind::Undo local;
    dsu_[depth].unite(rlo, rhi, &local);
    for (std::uint64_t idx : local) dsu_undo_.emplace_back(depth, idx);
    for (size_t x = 0; x < pooled_[depth][rlo].size(); ++x)
      pooled_[depth][rlo][x] += pooled_[depth][rhi][x];
    pool_undo_.emplace_back(depth, rlo, rhi);
    if (depth + 1 < tree_.num_variables())
      for (int x = 0; x < tree_.arity(depth); ++x)
        delta += cascade(depth + 1, tree_.child(depth, ra, x), tree_.child(depth, rb, x));
    return delta;
  }

  const EventTree& tree_;
  const CountTree& counts_;
  double log_n_;
  std::vector<UnionFind> dsu_;
  std::vector<std::vector<Counts>> pooled_;
  std::vector<std::pair<int, std::uint64_t>> dsu_undo_;
  std::vector<std::tuple<int, std::uint64_t, std::uint64_t>> pool_undo_;
};

}  // namespace

LearnResult learn_total(const CountTree& counts) {
  require_scorable(counts);
  const EventTree tree = tree_for(counts);
  const int p = tree.num_variables();
  const double log_n = std::log(static_cast<double>(counts.total()));

  TotalSearch search(tree, counts);
  StagedTree full = full_staging(tree);
  double tracked = static_cast<double>(n_free_params(full)) * log_n -
                   2.0 * log_likelihood(full, counts);

  for (int d = 0; d < p; ++d) {
    for (;;) {
      const auto roots = search.roots_at(d);
      if (roots.size() < 2) break;
      double best = 0.0;
      size_t bi = 0, bj = 0;
      bool found = false;
      for (size_t i = 0; i + 1 < roots.size(); ++i) {
        for (size_t j = i + 1; j < roots.size(); ++j) {
          const double delta = search.evaluate(d, roots[i], roots[j]);
          if (delta < best) {
            best = delta;
            bi = i;
            bj = j;
            found = true;
          }
        }
      }
      if (!found) break;
      tracked += search.commit(d, roots[bi], roots[bj]);
    }
  }
  return finish(tree, search.final_labels(), tracked, counts);
}

namespace {

// Restriction of the dataset to a subset of columns, in the given order.
Dataset project_columns(const Dataset& data, std::span<const int> cols) {
  Dataset out;
  out.variables.reserve(cols.size());
  for (int c : cols) out.variables.push_back(data.variables[c]);
  out.cells.reserve(static_cast<size_t>(data.rows()) * cols.size());
  for (std::int64_t row = 0; row < data.rows(); ++row)
    for (int c : cols) out.cells.push_back(data.at(row, c));
  return out;
}

double labels_contribution(const EventTree& tree, const CountTree& counts, int depth,
                           std::span<const std::int32_t> labels, double log_n) {
  UnionFind dsu(labels.size());
  std::vector<std::int64_t> group_anchor;
  for (std::uint64_t r = 0; r < labels.size(); ++r) {
    const std::int32_t g = labels[r];
    if (g >= static_cast<std::int32_t>(group_anchor.size())) group_anchor.resize(g + 1, -1);
    if (group_anchor[g] < 0)
      group_anchor[g] = static_cast<std::int64_t>(r);
    else
      dsu.unite(static_cast<std::uint64_t>(group_anchor[g]), r);
  }
  const auto pooled = pool_by_group(tree, counts, depth, dsu);
  return depth_contribution(tree, depth, pooled, current_roots(dsu), log_n);
}

}  // namespace

LearnResult learn_greedy_order_marginal(const Dataset& data) {
  const int p = data.cols();
  if (p == 0) throw Error("dataset has no variables");
  if (data.rows() <= 0) throw Error("learning requires at least one observation");
  const double log_n = std::log(static_cast<double>(data.rows()));

  std::vector<int> order;
  std::vector<std::vector<std::int32_t>> labels;
  std::vector<bool> used(p, false);
  double best_full_bic = 0.0;

  for (int step = 0; step < p; ++step) {
    bool have_best = false;
    double cand_best_bic = 0.0;
    std::string cand_best_name;
    int cand_best = -1;
    std::vector<std::int32_t> cand_best_labels;

    for (int cand = 0; cand < p; ++cand) {
      if (used[cand]) continue;
      std::vector<int> ext = order;
      ext.push_back(cand);
      const Dataset prefix_data = project_columns(data, ext);
      const CountTree counts = count_paths(prefix_data);
      const EventTree tree(counts.variables());

      std::vector<std::int32_t> initial;
      if (step == 0)
        initial.assign(1, 0);
      else
        initial = closure_propagate(tree, step - 1, labels[step - 1]);
      DepthClimb climb = climb_depth(tree, counts, step, initial);

      double full = climb.contribution;
      for (int d = 0; d < step; ++d)
        full += labels_contribution(tree, counts, d, labels[d], log_n);

      const std::string& name = data.variables[cand].name;
      if (!have_best || full < cand_best_bic ||
          (full == cand_best_bic && name < cand_best_name)) {
        have_best = true;
        cand_best_bic = full;
        cand_best_name = name;
        cand_best = cand;
        cand_best_labels = std::move(climb.labels);
      }
    }

    used[cand_best] = true;
    order.push_back(cand_best);
    labels.push_back(std::move(cand_best_labels));
    best_full_bic = cand_best_bic;
  }

  const CountTree counts = CountTree::build(data, order);
  return finish(EventTree(counts.variables()), std::move(labels), best_full_bic, counts);
}

namespace {

std::uint64_t factorial(int n) {
  std::uint64_t f = 1;
  for (int i = 2; i <= n; ++i) f *= static_cast<std::uint64_t>(i);
  return f;
}

// k-th permutation of 0..p-1 in lexicographic order (factorial number system).
std::vector<int> kth_permutation(int p, std::uint64_t k) {
  std::vector<int> pool(p);
  for (int i = 0; i < p; ++i) pool[i] = i;
  std::vector<int> perm;
  perm.reserve(p);
  std::uint64_t f = factorial(p);
  for (int i = p; i >= 1; --i) {
    f /= static_cast<std::uint64_t>(i);
    const auto idx = static_cast<size_t>(k / f);
    k %= f;
    perm.push_back(pool[idx]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(idx));
  }
  return perm;
}

}  // namespace

LearnResult learn_exhaustive(const Dataset& data, Algorithm inner, const LearnOptions& opt) {
  if (inner != Algorithm::Marginal && inner != Algorithm::Total)
    throw std::invalid_argument("exhaustive search runs marginal or total inner learners");
  const int p = data.cols();
  if (p == 0) throw Error("dataset has no variables");
  if (p > opt.max_exhaustive_p && !opt.allow_large_exhaustive)
    throw Error("exhaustive search over " + std::to_string(p) +
                " variables exceeds the cap; raise --max-exhaustive-p to override");
  const std::uint64_t total = factorial(p);

  struct Best {
    double bic = 0.0;
    std::vector<int> order;
    std::optional<LearnResult> result;
  };
  auto better = [](double bic, const std::vector<int>& order, const Best& cur) {
    if (!cur.result) return true;
    if (bic != cur.bic) return bic < cur.bic;
    return order < cur.order;
  };

  const int threads =
      std::max(1, std::min<int>(opt.threads, static_cast<int>(std::min<std::uint64_t>(
                                                 total, std::uint64_t{256}))));
  std::vector<Best> bests(threads);
  std::atomic<std::uint64_t> next{0};

  auto worker = [&](int tid) {
    for (;;) {
      const std::uint64_t i = next.fetch_add(1);
      if (i >= total) break;
      const std::vector<int> perm = kth_permutation(p, i);
      const CountTree counts = CountTree::build(data, perm);
      LearnResult res =
          (inner == Algorithm::Marginal) ? learn_marginal(counts) : learn_total(counts);
      if (better(res.bic, perm, bests[tid])) {
        bests[tid] = Best{res.bic, perm, std::move(res)};
      }
    }
  };

  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& t : pool) t.join();
  }

  Best* winner = nullptr;
  for (auto& b : bests) {
    if (!b.result) continue;
    if (!winner || better(b.bic, b.order, *winner)) winner = &b;
  }
  if (!winner) throw Error("exhaustive search evaluated no orders");
  return std::move(*winner->result);
}

LearnResult learn(Algorithm algorithm, const Dataset& data,
                  const std::optional<std::vector<int>>& order, const LearnOptions& opt) {
  switch (algorithm) {
    case Algorithm::Bhc:
    case Algorithm::SimplifiedBhc:
    case Algorithm::Marginal:
    case Algorithm::Total: {
      if (!order) throw Error("algorithm '" + std::string(to_string(algorithm)) +
                              "' requires a variable order");
      const CountTree counts = CountTree::build(data, *order);
      switch (algorithm) {
        case Algorithm::Bhc: return learn_bhc(counts);
        case Algorithm::SimplifiedBhc: return learn_simplified_bhc(counts);
        case Algorithm::Marginal: return learn_marginal(counts);
        default: return learn_total(counts);
      }
    }
    case Algorithm::GreedyMarginal: return learn_greedy_order_marginal(data);
    case Algorithm::AllMarginal: return learn_exhaustive(data, Algorithm::Marginal, opt);
    case Algorithm::AllTotal: return learn_exhaustive(data, Algorithm::Total, opt);
  }
  throw std::invalid_argument("unknown algorithm");
}

}  // namespace stagecraft
