#pragma once

#include <Eigen/Core>

#include <limits>
#include <utility>
#include <vector>

namespace segmap {

/// Marks a forbidden (row, column) pair in a score matrix.
inline constexpr double kInfeasible = -std::numeric_limits<double>::infinity();

/// Maximum-weight rectangular assignment. Entries equal to kInfeasible are
/// never selected; every other entry must be finite and non-negative. Rows and
/// columns may stay unassigned. Returns (row, column) pairs sorted by row.
///
/// Solved as a square min-cost problem of size rows + cols where each row
/// and column gets a zero-cost "unassigned" partner, with the shortest
/// augmenting path Hungarian method. Equal-score alternatives resolve to the
/// first candidate found while scanning rows and columns in ascending index
/// order, so the result is deterministic.
std::vector<std::pair<int, int>> solve_assignment(const Eigen::MatrixXd& scores);

/// Sum of scores over an assignment, accumulated in row order.
double assignment_score(const Eigen::MatrixXd& scores,
                        const std::vector<std::pair<int, int>>& matches);

}  // namespace segmap
