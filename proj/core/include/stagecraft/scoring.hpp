#pragma once

#include <cstdint>
#include <span>

#include "stagecraft/counts.hpp"
#include "stagecraft/staging.hpp"

namespace stagecraft {

// Pooled edge counts per stage, indexed by canonical stage id.
std::vector<std::vector<std::int64_t>> pooled_stage_counts(const StagedTree& st,
                                                           const CountTree& counts);

// Maximized multinomial log-likelihood of one count vector:
// sum_x c_x * ln(c_x / c_tot), with 0*ln 0 := 0.
double multinomial_ll(std::span<const std::int64_t> counts);

// Per-stage MLE with optional additive smoothing; stages with no mass get the
// uniform vector.
StageParameters mle_parameters(const StagedTree& st, const CountTree& counts, double alpha = 0.0);

// Unsmoothed MLE plug-in log-likelihood.
double log_likelihood(const StagedTree& st, const CountTree& counts);

// Dimension of the parameter space: one simplex per stage.
std::int64_t n_free_params(const StagedTree& st);

// BIC = k*ln(N) - 2*logL; lower is better.
double bic(const StagedTree& st, const CountTree& counts);

// BIC(after merging stages a and b at `depth`) - BIC(before); computed from
// the two stages' pooled counts only.
double delta_bic_merge(const StagedTree& st, const CountTree& counts, int depth, std::int32_t a,
                       std::int32_t b);

}  // namespace stagecraft
