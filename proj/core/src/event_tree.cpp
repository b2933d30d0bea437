#include "stagecraft/event_tree.hpp"

#include <unordered_set>

#include "stagecraft/error.hpp"

namespace stagecraft {

namespace {
// Keeps per-depth index vectors allocatable; beyond this the dense
// per-depth representation stops being sensible anyway.
constexpr std::uint64_t kMaxVertices = std::uint64_t{1} << 31;
}  // namespace

EventTree::EventTree(std::vector<VariableSpec> variables) : vars_(std::move(variables)) {
  if (vars_.empty()) throw Error("event tree requires at least one variable");
  std::unordered_set<std::string> names;
  for (const auto& v : vars_) {
    if (v.levels.size() < 2)
      throw Error("variable '" + v.name + "' must have at least 2 levels");
    if (!names.insert(v.name).second)
      throw Error("duplicate variable name '" + v.name + "'");
    std::unordered_set<std::string> seen;
    for (const auto& l : v.levels)
      if (!seen.insert(l).second)
        throw Error("duplicate level '" + l + "' in variable '" + v.name + "'");
  }
  const int p = num_variables();
  sizes_.assign(p + 1, 1);
  offsets_.assign(p + 1, 0);
  for (int d = 0; d < p; ++d) {
    sizes_[d + 1] = sizes_[d] * static_cast<std::uint64_t>(arity(d));
    if (sizes_[d + 1] > kMaxVertices) throw Error("event tree too large");
    offsets_[d + 1] = offsets_[d] + sizes_[d];
    internal_ += sizes_[d];
  }
}

std::vector<int> EventTree::prefix(int depth, std::uint64_t rank) const {
  std::vector<int> out(depth);
  for (int d = depth - 1; d >= 0; --d) {
    out[d] = static_cast<int>(rank % static_cast<std::uint64_t>(arity(d)));
    rank /= static_cast<std::uint64_t>(arity(d));
  }
  return out;
}

std::uint64_t EventTree::rank_of(std::span<const int> prefix) const {
  std::uint64_t r = 0;
  for (size_t d = 0; d < prefix.size(); ++d)
    r = r * static_cast<std::uint64_t>(arity(static_cast<int>(d))) +
        static_cast<std::uint64_t>(prefix[d]);
  return r;
}

EventTree build_event_tree(std::vector<VariableSpec> variables) {
  return EventTree(std::move(variables));
}

}  // namespace stagecraft
