#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stagecraft/counts.hpp"
#include "stagecraft/learn.hpp"
#include "stagecraft/staging.hpp"

namespace stagecraft {

// Generator scheme identifier, recorded in output metadata so studies stay
// reproducible across releases.
inline constexpr const char* kTreeGeneratorVersion = "join-v1";

struct SimConfig {
  int p = 1;
  std::vector<int> levels;  // arity per variable; size p
  double q = 0.0;           // joining probability
  std::int64_t n = 0;       // sample size
  std::uint64_t seed = 0;
};

// Random simple staged tree: depth by depth, the closure-forced groups are
// visited in canonical order; after the first, each group joins a uniformly
// chosen already-formed group with probability q, else stays on its own.
// q=0 gives the full staging, q=1 one stage per depth.
StagedTree random_simple_tree(const SimConfig& cfg);

// Flat-Dirichlet vector per stage, drawn in stage-id order.
StageParameters random_parameters(const StagedTree& st, std::uint64_t seed);

// N root-to-leaf walks under the stage parameters.
Dataset sample(const StagedTree& st, std::int64_t n, std::uint64_t seed);

// Sum over depths of (partition transfer distance at the depth) divided by
// the number of vertices at the depth; transfer distance is the minimum
// number of vertices to recolor, solved exactly by optimal assignment on the
// block-overlap matrix. Requires identical event trees.
double hamming_stage_distance(const StagedTree& a, const StagedTree& b);

struct StudyConfig {
  std::vector<double> qs;
  std::vector<std::int64_t> ns;
  int p = 6;
  std::vector<int> levels;  // size p
  int replicates = 0;
  std::vector<Algorithm> learners;
  std::uint64_t seed = 0;
  int threads = 1;
  bool record_timing = true;  // when false wall_ms is written as 0
};

struct StudyRow {
  double q = 0.0;
  std::int64_t n = 0;
  int replicate = 0;
  std::string learner;
  double distance = 0.0;
  double wall_ms = 0.0;
};

struct StudyCell {
  double q = 0.0;
  std::int64_t n = 0;
  std::string learner;
  int replicates = 0;
  double mean = 0.0;
  double ci_lo = 0.0;  // 95% normal-approximation interval
  double ci_hi = 0.0;
};

struct StudyResult {
  std::vector<StudyRow> rows;  // ordered by (q index, N index, replicate, learner)
};

// One generated truth per (cell, replicate): tree, parameters and data come
// from a child stream derived from the seed, each learner is fitted under the
// true order and its stage distance to the truth recorded. Replicates run
// concurrently when threads > 1; output order does not depend on it.
StudyResult run_consistency_study(const StudyConfig& cfg);

std::vector<StudyCell> summarize(const StudyResult& result);

std::string study_csv(const StudyResult& result);

}  // namespace stagecraft
