#include "stagecraft/assignment.hpp"

#include <limits>
#include <stdexcept>

namespace stagecraft {

std::int64_t min_cost_assignment(const std::vector<std::vector<std::int64_t>>& cost,
                                 std::vector<int>* match) {
  const int n = static_cast<int>(cost.size());
  if (n == 0) {
    if (match) match->clear();
    return 0;
  }
  const int m = static_cast<int>(cost[0].size());
  if (m < n) throw std::invalid_argument("assignment requires rows <= columns");
  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;

  // Potentials method, 1-indexed; p[j] is the row matched to column j.
  std::vector<std::int64_t> u(n + 1, 0), v(m + 1, 0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<std::int64_t> minv(m + 1, kInf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      std::int64_t delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const std::int64_t cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  if (match) match->assign(n, -1);
  std::int64_t total = 0;
  for (int j = 1; j <= m; ++j) {
    if (p[j] == 0) continue;
    total += cost[p[j] - 1][j - 1];
    if (match) (*match)[p[j] - 1] = j - 1;
  }
  return total;
}

std::int64_t max_assignment_overlap(const std::vector<std::vector<std::int64_t>>& overlap) {
  if (overlap.empty()) return 0;
  const size_t n = overlap.size(), m = overlap[0].size();
  std::vector<std::vector<std::int64_t>> cost;
  if (n <= m) {
    cost.assign(n, std::vector<std::int64_t>(m));
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < m; ++j) cost[i][j] = -overlap[i][j];
  } else {
    cost.assign(m, std::vector<std::int64_t>(n));
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < m; ++j) cost[j][i] = -overlap[i][j];
  }
  return -min_cost_assignment(cost);
}

}  // namespace stagecraft
