#include "stagecraft/staging.hpp"

#include <cmath>
#include <cstdlib>
#include <unordered_map>

#include "stagecraft/error.hpp"

namespace stagecraft {

Staging Staging::singletons(const EventTree& tree) {
  Staging s;
  const int p = tree.num_variables();
  s.stage_of_.resize(p);
  s.first_stage_.assign(p + 1, 0);
  std::int32_t next = 0;
  for (int d = 0; d < p; ++d) {
    s.first_stage_[d] = next;
    s.stage_of_[d].resize(tree.depth_size(d));
    for (std::uint64_t r = 0; r < tree.depth_size(d); ++r) s.stage_of_[d][r] = next++;
  }
  s.first_stage_[p] = next;
  s.num_stages_ = next;
  return s;
}

Staging Staging::from_stage_vectors(const EventTree& tree,
                                    const std::vector<std::vector<std::int32_t>>& labels) {
  const int p = tree.num_variables();
  if (static_cast<int>(labels.size()) != p)
    throw std::invalid_argument("staging must cover every internal depth");
  Staging s;
  s.stage_of_.resize(p);
  s.first_stage_.assign(p + 1, 0);
  std::int32_t next = 0;
  for (int d = 0; d < p; ++d) {
    const auto& in = labels[d];
    if (in.size() != tree.depth_size(d))
      throw std::invalid_argument("staging label vector has wrong size");
    s.first_stage_[d] = next;
    auto& out = s.stage_of_[d];
    out.resize(in.size());
    // Renumber by first occurrence; labels are arbitrary ids within the depth.
    std::unordered_map<std::int32_t, std::int32_t> remap;
    for (std::uint64_t r = 0; r < in.size(); ++r) {
      auto [it, fresh] = remap.try_emplace(in[r], next);
      if (fresh) ++next;
      out[r] = it->second;
    }
  }
  s.first_stage_[p] = next;
  s.num_stages_ = next;
  return s;
}

Staging Staging::from_blocks(const EventTree& tree,
                             const std::vector<std::vector<std::vector<std::uint64_t>>>& blocks) {
  const int p = tree.num_variables();
  if (static_cast<int>(blocks.size()) != p) throw Error("staging must list every internal depth");
  std::vector<std::vector<std::int32_t>> labels(p);
  for (int d = 0; d < p; ++d) {
    labels[d].assign(tree.depth_size(d), -1);
    std::int32_t id = 0;
    for (const auto& block : blocks[d]) {
      if (block.empty()) throw Error("empty stage block");
      for (std::uint64_t r : block) {
        if (r >= tree.depth_size(d)) throw Error("stage block references invalid vertex rank");
        if (labels[d][r] != -1) throw Error("overlapping stage blocks");
        labels[d][r] = id;
      }
      ++id;
    }
    for (std::uint64_t r = 0; r < tree.depth_size(d); ++r)
      if (labels[d][r] == -1) throw Error("stage blocks do not cover depth");
  }
  return from_stage_vectors(tree, labels);
}

int Staging::stage_depth(std::int32_t stage) const {
  for (int d = 0; d < num_depths(); ++d)
    if (stage < first_stage_[d + 1]) return d;
  throw std::invalid_argument("invalid stage id");
}

std::vector<std::vector<std::uint64_t>> Staging::blocks_at(int depth) const {
  std::vector<std::vector<std::uint64_t>> out(num_stages_at(depth));
  const std::int32_t base = first_stage_[depth];
  for (std::uint64_t r = 0; r < stage_of_[depth].size(); ++r)
    out[stage_of_[depth][r] - base].push_back(r);
  return out;
}

std::vector<std::uint64_t> Staging::block_sizes() const {
  std::vector<std::uint64_t> sizes(num_stages_, 0);
  for (const auto& labels : stage_of_)
    for (std::int32_t s : labels) ++sizes[s];
  return sizes;
}

StagedTree full_staging(const EventTree& tree) {
  return StagedTree{tree, Staging::singletons(tree), std::nullopt};
}

void validate_parameters(const StagedTree& st, const StageParameters& params, SimplexMode mode) {
  if (static_cast<std::int32_t>(params.by_stage.size()) != st.staging.num_stages())
    throw Error("parameter table does not match stage count");
  for (std::int32_t s = 0; s < st.staging.num_stages(); ++s) {
    const int depth = st.staging.stage_depth(s);
    const auto& v = params.by_stage[s];
    if (static_cast<int>(v.size()) != st.tree.arity(depth))
      throw Error("parameter vector has wrong arity for its stage");
    double sum = 0.0;
    for (double x : v) {
      if (mode == SimplexMode::Open && (x <= 0.0 || x >= 1.0))
        throw Error("parameter outside the open simplex");
      if (x < 0.0 || x > 1.0) throw Error("parameter outside [0,1]");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw Error("stage parameter vector does not sum to 1");
  }
}

std::vector<double> atom_probabilities(const StagedTree& st) {
  if (!st.params) throw Error("atom probabilities require stage parameters");
  const auto& params = *st.params;
  validate_parameters(st, params, SimplexMode::Closed);
  const EventTree& tree = st.tree;
  const int p = tree.num_variables();
  std::vector<double> probs(1, 1.0);
  for (int d = 0; d < p; ++d) {
    const int k = tree.arity(d);
    std::vector<double> next(tree.depth_size(d + 1));
    for (std::uint64_t r = 0; r < tree.depth_size(d); ++r) {
      const auto& theta = params.by_stage[st.staging.stage_of(d, r)];
      for (int x = 0; x < k; ++x) next[tree.child(d, r, x)] = probs[r] * theta[x];
    }
    probs = std::move(next);
  }
  return probs;
}

}  // namespace stagecraft
