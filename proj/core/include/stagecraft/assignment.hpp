#pragma once

#include <cstdint>
#include <vector>

namespace stagecraft {

// Exact minimum-cost assignment (Hungarian algorithm with potentials) on an
// n x m cost matrix, n <= m. Returns the optimal total cost; if `match` is
// given it receives the column assigned to each row.
std::int64_t min_cost_assignment(const std::vector<std::vector<std::int64_t>>& cost,
                                 std::vector<int>* match = nullptr);

// Maximum total overlap over injective matchings between the blocks of two
// partitions, given the block-overlap matrix. Rectangular inputs are padded.
std::int64_t max_assignment_overlap(const std::vector<std::vector<std::int64_t>>& overlap);

}  // namespace stagecraft
