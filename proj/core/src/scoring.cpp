#include "stagecraft/scoring.hpp"

#include <cmath>

#include "stagecraft/error.hpp"

namespace stagecraft {

namespace {

void require_match(const StagedTree& st, const CountTree& counts) {
  if (!counts.matches(st.tree))
    throw Error("count tree was built under a different variable order");
}

}  // namespace

std::vector<std::vector<std::int64_t>> pooled_stage_counts(const StagedTree& st,
                                                           const CountTree& counts) {
  require_match(st, counts);
  std::vector<std::vector<std::int64_t>> pooled(st.staging.num_stages());
  for (std::int32_t s = 0; s < st.staging.num_stages(); ++s)
    pooled[s].assign(st.tree.arity(st.staging.stage_depth(s)), 0);
  for (int d = 0; d < st.tree.num_variables(); ++d) {
    for (const auto& [rank, edge] : counts.observed(d)) {
      auto& dst = pooled[st.staging.stage_of(d, rank)];
      for (size_t x = 0; x < edge.size(); ++x) dst[x] += edge[x];
    }
  }
  return pooled;
}

double multinomial_ll(std::span<const std::int64_t> counts) {
  std::int64_t total = 0;
  for (std::int64_t c : counts) total += c;
  if (total == 0) return 0.0;
  double ll = 0.0;
  const double log_total = std::log(static_cast<double>(total));
  for (std::int64_t c : counts)
    if (c > 0) ll += static_cast<double>(c) * (std::log(static_cast<double>(c)) - log_total);
  return ll;
}

StageParameters mle_parameters(const StagedTree& st, const CountTree& counts, double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("smoothing must be nonnegative");
  const auto pooled = pooled_stage_counts(st, counts);
  StageParameters params;
  params.by_stage.resize(pooled.size());
  for (size_t s = 0; s < pooled.size(); ++s) {
    const auto& c = pooled[s];
    const int k = static_cast<int>(c.size());
    std::int64_t total = 0;
    for (std::int64_t v : c) total += v;
    auto& theta = params.by_stage[s];
    theta.resize(k);
    const double denom = static_cast<double>(total) + alpha * k;
    if (denom <= 0.0) {
      for (int x = 0; x < k; ++x) theta[x] = 1.0 / k;
    } else {
      for (int x = 0; x < k; ++x) theta[x] = (static_cast<double>(c[x]) + alpha) / denom;
    }
  }
  return params;
}

double log_likelihood(const StagedTree& st, const CountTree& counts) {
  const auto pooled = pooled_stage_counts(st, counts);
  double ll = 0.0;
  for (const auto& c : pooled) ll += multinomial_ll(c);
  return ll;
}

std::int64_t n_free_params(const StagedTree& st) {
  std::int64_t k = 0;
  for (int d = 0; d < st.tree.num_variables(); ++d)
    k += static_cast<std::int64_t>(st.staging.num_stages_at(d)) * (st.tree.arity(d) - 1);
  return k;
}

double bic(const StagedTree& st, const CountTree& counts) {
  require_match(st, counts);
  if (counts.total() <= 0) throw Error("BIC requires at least one observation");
  return static_cast<double>(n_free_params(st)) * std::log(static_cast<double>(counts.total())) -
         2.0 * log_likelihood(st, counts);
}

double delta_bic_merge(const StagedTree& st, const CountTree& counts, int depth, std::int32_t a,
                       std::int32_t b) {
  require_match(st, counts);
  if (counts.total() <= 0) throw Error("BIC requires at least one observation");
  if (a == b) throw Error("cannot merge a stage with itself");
  const std::int32_t lo = st.staging.first_stage_at(depth);
  const std::int32_t hi = lo + st.staging.num_stages_at(depth);
  if (a < lo || a >= hi || b < lo || b >= hi)
    throw Error("stage ids are not at the given depth");

  const int k = st.tree.arity(depth);
  std::vector<std::int64_t> ca(k, 0), cb(k, 0), merged(k, 0);
  for (const auto& [rank, edge] : counts.observed(depth)) {
    const std::int32_t s = st.staging.stage_of(depth, rank);
    if (s != a && s != b) continue;
    auto& dst = (s == a) ? ca : cb;
    for (int x = 0; x < k; ++x) dst[x] += edge[x];
  }
  for (int x = 0; x < k; ++x) merged[x] = ca[x] + cb[x];

  const double delta_ll = multinomial_ll(merged) - multinomial_ll(ca) - multinomial_ll(cb);
  const double log_n = std::log(static_cast<double>(counts.total()));
  return -static_cast<double>(k - 1) * log_n - 2.0 * delta_ll;
}

}  // namespace stagecraft
