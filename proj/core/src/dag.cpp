#include "stagecraft/dag.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <tuple>
#include <unordered_map>

#include "stagecraft/error.hpp"
#include "stagecraft/scoring.hpp"

namespace stagecraft {

Dag::Dag(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) throw Error("DAG requires at least one vertex");
  if (names_.size() > 63) throw Error("DAG supports at most 63 vertices");
  parents_.assign(names_.size(), 0);
}

void Dag::add_edge(int from, int to) {
  if (from < 0 || to < 0 || from >= size() || to >= size())
    throw Error("edge references an invalid vertex");
  if (from == to) throw Error("self-loops are not allowed");
  parents_[to] |= std::uint64_t{1} << from;
}

void Dag::remove_edge(int from, int to) { parents_[to] &= ~(std::uint64_t{1} << from); }

void Dag::set_parent_mask(int v, std::uint64_t mask) {
  if ((mask >> size()) != 0 || ((mask >> v) & 1u))
    throw Error("invalid parent mask");
  parents_[v] = mask;
}

std::vector<int> Dag::parents(int v) const {
  std::vector<int> out;
  for (int j = 0; j < size(); ++j)
    if (has_edge(j, v)) out.push_back(j);
  return out;
}

std::vector<std::pair<int, int>> Dag::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int from = 0; from < size(); ++from)
    for (int to = 0; to < size(); ++to)
      if (has_edge(from, to)) out.emplace_back(from, to);
  return out;
}

int Dag::num_edges() const {
  int n = 0;
  for (int v = 0; v < size(); ++v) n += static_cast<int>(std::popcount(parents_[v]));
  return n;
}

bool Dag::is_acyclic() const {
  // Kahn peeling over parent masks.
  std::uint64_t placed = 0;
  const auto all = (size() == 63) ? ~std::uint64_t{0} >> 1 : (std::uint64_t{1} << size()) - 1;
  for (int step = 0; step < size(); ++step) {
    bool progress = false;
    for (int v = 0; v < size(); ++v) {
      if ((placed >> v) & 1u) continue;
      if ((parents_[v] & ~placed) == 0) {
        placed |= std::uint64_t{1} << v;
        progress = true;
      }
    }
    if (placed == all) return true;
    if (!progress) return false;
  }
  return placed == all;
}

bool Dag::can_add_edge(int from, int to) const {
  if (has_edge(from, to)) return false;
  // A cycle appears iff `from` is reachable from `to`.
  std::uint64_t reached = std::uint64_t{1} << to;
  for (;;) {
    std::uint64_t next = reached;
    for (int v = 0; v < size(); ++v)
      if (parents_[v] & reached) next |= std::uint64_t{1} << v;
    if (next == reached) break;
    reached = next;
  }
  return !((reached >> from) & 1u);
}

namespace {

void enumerate_orders(const Dag& g, std::uint64_t placed, std::vector<int>& prefix,
                      std::vector<std::vector<int>>& out) {
  if (static_cast<int>(prefix.size()) == g.size()) {
    out.push_back(prefix);
    return;
  }
  for (int v = 0; v < g.size(); ++v) {
    if ((placed >> v) & 1u) continue;
    if ((g.parent_mask(v) & ~placed) != 0) continue;
    prefix.push_back(v);
    enumerate_orders(g, placed | (std::uint64_t{1} << v), prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

std::vector<std::vector<int>> topological_orders(const Dag& g) {
  if (!g.is_acyclic()) throw Error("graph contains a cycle");
  std::vector<std::vector<int>> out;
  std::vector<int> prefix;
  enumerate_orders(g, 0, prefix, out);
  return out;
}

bool is_topological(const Dag& g, std::span<const int> order) {
  if (static_cast<int>(order.size()) != g.size()) return false;
  std::uint64_t placed = 0;
  std::vector<bool> seen(g.size(), false);
  for (int v : order) {
    if (v < 0 || v >= g.size() || seen[v]) return false;
    seen[v] = true;
    if ((g.parent_mask(v) & ~placed) != 0) return false;
    placed |= std::uint64_t{1} << v;
  }
  return true;
}

std::vector<int> smallest_topological_order(const Dag& g) {
  if (!g.is_acyclic()) throw Error("graph contains a cycle");
  std::vector<int> order;
  std::uint64_t placed = 0;
  for (int step = 0; step < g.size(); ++step) {
    for (int v = 0; v < g.size(); ++v) {
      if ((placed >> v) & 1u) continue;
      if ((g.parent_mask(v) & ~placed) == 0) {
        order.push_back(v);
        placed |= std::uint64_t{1} << v;
        break;
      }
    }
  }
  return order;
}

bool is_simple_dag(const Dag& g, std::span<const int> order) {
  if (!is_topological(g, order)) throw Error("order is not topological for the graph");
  for (size_t i = 0; i + 1 < order.size(); ++i) {
    const std::uint64_t allowed =
        g.parent_mask(order[i]) | (std::uint64_t{1} << order[i]);
    if ((g.parent_mask(order[i + 1]) & ~allowed) != 0) return false;
  }
  return true;
}

namespace {

bool exists_simple_order(const Dag& g, std::uint64_t placed, int last) {
  if (std::popcount(placed) == g.size()) return true;
  for (int v = 0; v < g.size(); ++v) {
    if ((placed >> v) & 1u) continue;
    if ((g.parent_mask(v) & ~placed) != 0) continue;
    if (last >= 0) {
      const std::uint64_t allowed = g.parent_mask(last) | (std::uint64_t{1} << last);
      if ((g.parent_mask(v) & ~allowed) != 0) continue;
    }
    if (exists_simple_order(g, placed | (std::uint64_t{1} << v), v)) return true;
  }
  return false;
}

}  // namespace

bool is_simple_dag(const Dag& g) {
  if (!g.is_acyclic()) throw Error("graph contains a cycle");
  return exists_simple_order(g, 0, -1);
}

bool is_decomposable(const Dag& g) {
  // Some parent j must cover the whole parent set: Pi_v inside Pi_j + j.
  // Equivalent to every parent set being complete in the graph; empty parent
  // sets pass vacuously.
  for (int v = 0; v < g.size(); ++v) {
    const std::uint64_t mask = g.parent_mask(v);
    if (mask == 0) continue;
    bool ok = false;
    for (int j = 0; j < g.size() && !ok; ++j)
      if ((mask >> j) & 1u)
        ok = (mask & ~(g.parent_mask(j) | (std::uint64_t{1} << j))) == 0;
    if (!ok) return false;
  }
  return true;
}

Dag simplify_dag(const Dag& g, std::span<const int> order) {
  if (!is_topological(g, order)) throw Error("order is not topological for the graph");
  Dag out = g;
  for (int i = static_cast<int>(order.size()) - 2; i >= 0; --i) {
    const int cur = order[i];
    const int next = order[i + 1];
    const std::uint64_t add =
        out.parent_mask(next) & ~(std::uint64_t{1} << cur) & ~out.parent_mask(cur);
    out.set_parent_mask(cur, out.parent_mask(cur) | add);
  }
  return out;
}

StagedTree bn_to_staged_tree(const Dag& g, std::span<const VariableSpec> variables,
                             std::span<const int> order) {
  if (static_cast<int>(variables.size()) != g.size())
    throw Error("variable list does not match the DAG");
  if (!is_topological(g, order)) throw Error("order is not topological for the graph");
  std::vector<VariableSpec> ordered;
  ordered.reserve(order.size());
  for (int v : order) ordered.push_back(variables[v]);
  const EventTree tree(std::move(ordered));

  const int p = g.size();
  std::vector<std::vector<std::int32_t>> labels(p);
  for (int d = 0; d < p; ++d) {
    // Group depth-d prefixes by their projection onto the parents of the
    // depth's DAG vertex; parents land in the prefix because the order is
    // topological.
    const std::uint64_t mask = g.parent_mask(order[d]);
    std::vector<int> proj;
    for (int j = 0; j < d; ++j)
      if ((mask >> order[j]) & 1u) proj.push_back(j);
    labels[d].resize(tree.depth_size(d));
    std::map<std::vector<int>, std::int32_t> interned;
    std::vector<int> key(proj.size());
    for (std::uint64_t r = 0; r < tree.depth_size(d); ++r) {
      const std::vector<int> prefix = tree.prefix(d, r);
      for (size_t t = 0; t < proj.size(); ++t) key[t] = prefix[proj[t]];
      labels[d][r] =
          interned.try_emplace(key, static_cast<std::int32_t>(interned.size())).first->second;
    }
  }
  return StagedTree{tree, Staging::from_stage_vectors(tree, labels), std::nullopt};
}

namespace {

// Maximized log-likelihood of one family: column v given the parent columns.
double family_ll(const Dataset& data, int v, std::uint64_t parent_mask) {
  const int arity = static_cast<int>(data.variables[v].levels.size());
  std::vector<int> par;
  for (int j = 0; j < data.cols(); ++j)
    if ((parent_mask >> j) & 1u) par.push_back(j);
  // Ordered map so the float summation order is reproducible.
  std::map<std::uint64_t, std::vector<std::int64_t>> table;
  for (std::int64_t row = 0; row < data.rows(); ++row) {
    std::uint64_t config = 0;
    for (int j : par)
      config = config * data.variables[j].levels.size() + static_cast<std::uint64_t>(data.at(row, j));
    auto [it, fresh] = table.try_emplace(config);
    if (fresh) it->second.assign(arity, 0);
    ++it->second[data.at(row, v)];
  }
  double ll = 0.0;
  for (const auto& [config, counts] : table) ll += multinomial_ll(counts);
  return ll;
}

std::int64_t family_params(std::span<const VariableSpec> variables, int v,
                           std::uint64_t parent_mask) {
  std::int64_t k = static_cast<std::int64_t>(variables[v].levels.size()) - 1;
  for (int j = 0; j < static_cast<int>(variables.size()); ++j)
    if ((parent_mask >> j) & 1u) k *= static_cast<std::int64_t>(variables[j].levels.size());
  return k;
}

}  // namespace

double bn_log_likelihood(const Dag& g, const Dataset& data) {
  if (static_cast<int>(data.variables.size()) != g.size())
    throw Error("dataset does not match the DAG");
  double ll = 0.0;
  for (int v = 0; v < g.size(); ++v) ll += family_ll(data, v, g.parent_mask(v));
  return ll;
}

std::int64_t bn_free_params(const Dag& g, std::span<const VariableSpec> variables) {
  std::int64_t k = 0;
  for (int v = 0; v < g.size(); ++v) k += family_params(variables, v, g.parent_mask(v));
  return k;
}

double bn_bic(const Dag& g, const Dataset& data) {
  if (data.rows() <= 0) throw Error("BIC requires at least one observation");
  return static_cast<double>(bn_free_params(g, data.variables)) *
             std::log(static_cast<double>(data.rows())) -
         2.0 * bn_log_likelihood(g, data);
}

BnLearnResult learn_bn_hc(const Dataset& data) {
  if (data.rows() <= 0) throw Error("learning requires at least one observation");
  const int p = data.cols();
  Dag dag(([&] {
    std::vector<std::string> names;
    for (const auto& v : data.variables) names.push_back(v.name);
    return names;
  })());
  const double log_n = std::log(static_cast<double>(data.rows()));

  std::vector<std::unordered_map<std::uint64_t, double>> cache(p);
  auto family_bic = [&](int v, std::uint64_t mask) {
    auto it = cache[v].find(mask);
    if (it == cache[v].end())
      it = cache[v].emplace(mask, static_cast<double>(family_params(data.variables, v, mask)) *
                                          log_n -
                                      2.0 * family_ll(data, v, mask)).first;
    return it->second;
  };

  double total = 0.0;
  for (int v = 0; v < p; ++v) total += family_bic(v, 0);

  enum MoveKind { kAdd = 0, kDelete = 1, kReverse = 2 };
  for (;;) {
    double best_delta = 0.0;
    int best_kind = -1, best_u = -1, best_v = -1;
    // Ties break on the lexicographically smallest (kind, u, v).
    auto consider = [&](int kind, int u, int v, double delta) {
      if (delta < best_delta ||
          (best_kind >= 0 && delta == best_delta &&
           std::tuple(kind, u, v) < std::tuple(best_kind, best_u, best_v))) {
        best_delta = delta;
        best_kind = kind;
        best_u = u;
        best_v = v;
      }
    };
    for (int u = 0; u < p; ++u) {
      for (int v = 0; v < p; ++v) {
        if (u == v) continue;
        const std::uint64_t bit_u = std::uint64_t{1} << u;
        const std::uint64_t bit_v = std::uint64_t{1} << v;
        if (!dag.has_edge(u, v) && dag.can_add_edge(u, v)) {
          consider(kAdd, u, v,
                   family_bic(v, dag.parent_mask(v) | bit_u) - family_bic(v, dag.parent_mask(v)));
        }
        if (dag.has_edge(u, v)) {
          consider(kDelete, u, v,
                   family_bic(v, dag.parent_mask(v) & ~bit_u) - family_bic(v, dag.parent_mask(v)));
          Dag probe = dag;
          probe.remove_edge(u, v);
          if (probe.can_add_edge(v, u)) {
            const double delta =
                family_bic(v, dag.parent_mask(v) & ~bit_u) + family_bic(u, dag.parent_mask(u) | bit_v) -
                family_bic(v, dag.parent_mask(v)) - family_bic(u, dag.parent_mask(u));
            consider(kReverse, u, v, delta);
          }
        }
      }
    }
    if (best_kind < 0) break;
    total += best_delta;
    if (best_kind == kAdd) {
      dag.add_edge(best_u, best_v);
    } else if (best_kind == kDelete) {
      dag.remove_edge(best_u, best_v);
    } else {
      dag.remove_edge(best_u, best_v);
      dag.add_edge(best_v, best_u);
    }
  }

  BnLearnResult res{dag, smallest_topological_order(dag), total, bn_log_likelihood(dag, data)};
  return res;
}

}  // namespace stagecraft
