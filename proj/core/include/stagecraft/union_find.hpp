#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

namespace stagecraft {

// Disjoint sets over 0..n-1 where the representative is always the smallest
// member, so group ids are stable and deterministic. Supports an undo log so
// speculative merge cascades can be rolled back; no path compression, unions
// are recorded as single parent writes.
class UnionFind {
 public:
  using Undo = std::vector<std::uint64_t>;  // indices whose parent was overwritten

  UnionFind() = default;
  explicit UnionFind(std::uint64_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::uint64_t{0});
  }

  std::uint64_t size() const { return parent_.size(); }

  std::uint64_t find(std::uint64_t x) const {
    while (parent_[x] != x) x = parent_[x];
    return x;
  }

  // Merges the groups of a and b; returns the surviving root (the smaller),
  // or the common root if already joined.
  std::uint64_t unite(std::uint64_t a, std::uint64_t b, Undo* undo = nullptr) {
    std::uint64_t ra = find(a), rb = find(b);
    if (ra == rb) return ra;
    if (rb < ra) std::swap(ra, rb);
    parent_[rb] = ra;
    if (undo) undo->push_back(rb);
    return ra;
  }

  // Logged indices were roots when overwritten, so restoring is
  // order-independent.
  void rollback(const Undo& undo) {
    for (std::uint64_t idx : undo) parent_[idx] = idx;
  }
  void rollback(std::uint64_t idx) { parent_[idx] = idx; }

  // Canonical labels (root per element).
  std::vector<std::uint64_t> roots() const {
    std::vector<std::uint64_t> out(parent_.size());
    for (std::uint64_t i = 0; i < parent_.size(); ++i) out[i] = find(i);
    return out;
  }

 private:
  std::vector<std::uint64_t> parent_;
};

}  // namespace stagecraft
