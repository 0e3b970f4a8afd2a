#include "segmap/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace segmap {

std::vector<std::pair<int, int>> solve_assignment(const Eigen::MatrixXd& scores) {
  const int rows = static_cast<int>(scores.rows());
  const int cols = static_cast<int>(scores.cols());
  std::vector<std::pair<int, int>> out;
  if (rows == 0 || cols == 0) return out;

  constexpr double inf = std::numeric_limits<double>::infinity();
  const int n = rows + cols;
  // cost(i, j), 1-based to match the potential formulation below.
  auto cost = [&](int i, int j) -> double {
    if (i <= rows && j <= cols) {
      const double s = scores(i - 1, j - 1);
      if (s == kInfeasible) return inf;
      if (!std::isfinite(s) || s < 0.0) {
        throw std::invalid_argument("assignment scores must be finite and non-negative");
      }
      return -s;
    }
    if (i <= rows) return (j - cols == i) ? 0.0 : inf;   // row i left unassigned
    if (j <= cols) return (i - rows == j) ? 0.0 : inf;   // column j left unassigned
    return 0.0;                                          // dummy to dummy
  };

  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double c = cost(i0, j);
        if (c < inf) {
          const double cur = c - u[i0] - v[j];
          if (cur < minv[j]) {
            minv[j] = cur;
            way[j] = j0;
          }
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      if (j1 == 0) throw std::logic_error("assignment has no feasible completion");
      for (int j = 0; j <= n; ++j) {
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

  for (int j = 1; j <= cols; ++j) {
    const int i = p[j];
    if (i >= 1 && i <= rows) out.emplace_back(i - 1, j - 1);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double assignment_score(const Eigen::MatrixXd& scores,
                        const std::vector<std::pair<int, int>>& matches) {
  double total = 0.0;
  for (const auto& [r, c] : matches) total += scores(r, c);
  return total;
}

}  // namespace segmap
