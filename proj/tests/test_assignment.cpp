#include "segmap/assignment.hpp"
#include "segmap/oracles.hpp"

#include <doctest.h>

#include <random>
#include <set>

using namespace segmap;

TEST_CASE("assignment matches exhaustive search") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim(1, 6);
  for (int t = 0; t < 300; ++t) {
    const Eigen::MatrixXd s = random_score_matrix(rng, dim(rng), dim(rng));
    const auto m = solve_assignment(s);
    CHECK(assignment_score(s, m) == brute_force_assignment_score(s));
    std::set<int> rows, cols;
    for (auto [r, c] : m) {
      CHECK(rows.insert(r).second);
      CHECK(cols.insert(c).second);
      CHECK(s(r, c) != kInfeasible);
    }
    for (std::size_t k = 1; k < m.size(); ++k) CHECK(m[k - 1].first < m[k].first);
  }
}

TEST_CASE("assignment edge cases") {
  Eigen::MatrixXd diag(2, 2);
  diag << 2.0, 0.5, 0.4, 1.5;
  CHECK(solve_assignment(diag) == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}});

  Eigen::MatrixXd blocked = Eigen::MatrixXd::Constant(2, 3, kInfeasible);
  CHECK(solve_assignment(blocked).empty());
  blocked(1, 2) = 0.3;
  CHECK(solve_assignment(blocked) == std::vector<std::pair<int, int>>{{1, 2}});

  CHECK(solve_assignment(Eigen::MatrixXd(0, 4)).empty());

  Eigen::MatrixXd bad(1, 1);
  bad << -1.0;
  CHECK_THROWS_AS(solve_assignment(bad), std::invalid_argument);

  // Ties resolve the same way every time.
  const Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(4, 4, 1.0);
  const auto first = solve_assignment(flat);
  for (int k = 0; k < 5; ++k) CHECK(solve_assignment(flat) == first);
  CHECK(first.size() == 4);
}
