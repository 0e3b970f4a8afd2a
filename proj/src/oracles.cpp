#include "segmap/oracles.hpp"

#include "segmap/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <ostream>

namespace segmap {

double brute_force_assignment_score(const Eigen::MatrixXd& scores) {
  const int rows = static_cast<int>(scores.rows());
  const int cols = static_cast<int>(scores.cols());
  std::vector<int> pick(static_cast<std::size_t>(rows), -1);
  std::vector<char> used(static_cast<std::size_t>(cols), 0);
  double best = 0.0;
  // Each complete choice is summed front to back in row order, so equal
  // matchings give bit-identical totals to a row-order accumulation.
  std::function<void(int)> visit = [&](int r) {
    if (r == rows) {
      double total = 0.0;
      for (int q = 0; q < rows; ++q) {
        if (pick[static_cast<std::size_t>(q)] >= 0) total += scores(q, pick[static_cast<std::size_t>(q)]);
      }
      best = std::max(best, total);
      return;
    }
    pick[static_cast<std::size_t>(r)] = -1;
    visit(r + 1);
    for (int c = 0; c < cols; ++c) {
      if (used[static_cast<std::size_t>(c)] || scores(r, c) == kInfeasible) continue;
      used[static_cast<std::size_t>(c)] = 1;
      pick[static_cast<std::size_t>(r)] = c;
      visit(r + 1);
      used[static_cast<std::size_t>(c)] = 0;
    }
    pick[static_cast<std::size_t>(r)] = -1;
  };
  visit(0);
  return best;
}

double dense_subset_objective(const Eigen::MatrixXd& m, std::span<const int> subset) {
  if (subset.empty()) return 0.0;
  double sum = 0.0;
  for (int a : subset) {
    for (int b : subset) sum += m(a, b);
  }
  return sum / static_cast<double>(subset.size());
}

SubsetOptimum bitmask_consistent_optimum(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  if (n > 20) throw std::invalid_argument("bitmask oracle is limited to 20 elements");
  std::vector<std::uint32_t> adj(static_cast<std::size_t>(n), 0);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a != b && m(a, b) > 0.0) adj[static_cast<std::size_t>(a)] |= 1u << b;
    }
  }
  SubsetOptimum best;
  best.objective = -1.0;
  const std::uint32_t total = n == 0 ? 1u : (1u << n);
  for (std::uint32_t mask = 1; mask < total; ++mask) {
    bool ok = true;
    std::vector<int> members;
    for (int a = 0; a < n && ok; ++a) {
      if (!(mask >> a & 1u)) continue;
      const std::uint32_t others = mask & ~(1u << a);
      if ((adj[static_cast<std::size_t>(a)] & others) != others) ok = false;
      members.push_back(a);
    }
    if (!ok) continue;
    const double obj = dense_subset_objective(m, members);
    if (obj > best.objective) best = {members, obj};
  }
  if (best.objective < 0.0) best.objective = 0.0;
  return best;
}

Vec3 numeric_reprojection_gradient(std::span<const PosedObservation> obs,
                                   const CameraIntrinsics& intr, double sigma_px,
                                   const Vec3& point, double step) {
  Vec3 g;
  for (int k = 0; k < 3; ++k) {
    Vec3 hi = point;
    Vec3 lo = point;
    hi[k] += step;
    lo[k] -= step;
    g[k] = (reprojection_cost(obs, intr, sigma_px, hi) - reprojection_cost(obs, intr, sigma_px, lo)) /
           (2.0 * step);
  }
  return g;
}

Eigen::MatrixXd random_score_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> level(0, 4);
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double p = u(rng);
      // Coarse values make ties common, which is where solvers slip.
      if (p < 0.25) m(r, c) = kInfeasible;
      else if (p < 0.5) m(r, c) = 0.25 * level(rng);
      else m(r, c) = u(rng);
    }
  }
  return m;
}

ConsistencyProblem random_consistency_problem(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> box(0.0, 30.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> angle(-180.0, 180.0);
  std::normal_distribution<double> noise(0.0, 0.4);
  const int m = std::max(n, 4);
  std::vector<Vec3> pi(static_cast<std::size_t>(m));
  std::vector<Vec3> pj(static_cast<std::size_t>(m));
  const Mat3 r = rotation_ypr(angle(rng), 0.1 * angle(rng) / 9.0, 0.1 * angle(rng) / 9.0);
  const Vec3 t(box(rng), box(rng), 0.1 * box(rng));
  for (int k = 0; k < m; ++k) {
    pi[static_cast<std::size_t>(k)] = Vec3(box(rng), box(rng), 0.2 * box(rng));
    pj[static_cast<std::size_t>(k)] = r * pi[static_cast<std::size_t>(k)] + t +
                                      Vec3(noise(rng), noise(rng), noise(rng));
  }
  // Some pairs are correct (k, k), the rest random; duplicates avoided.
  std::vector<PutativeAssociation> assocs;
  std::uniform_int_distribution<int> idx(0, m - 1);
  const double inlier_share = u(rng);
  int guard = 0;
  while (static_cast<int>(assocs.size()) < n && guard++ < 10000) {
    const int a = idx(rng);
    const int b = u(rng) < inlier_share ? a : idx(rng);
    const bool dup = std::any_of(assocs.begin(), assocs.end(), [&](const PutativeAssociation& p) {
      return p.idx_i == a && p.idx_j == b;
    });
    if (dup) continue;
    assocs.push_back({a, b, 0.05 + 0.95 * u(rng)});
  }
  return consistency_matrix(std::move(assocs), pi, pj, 2.0, 2.0 / 3.0);
}

ConsistencyProblem single_clique_problem(std::mt19937_64& rng, int n, int k) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  // Clique members carry enough affinity that no singleton can beat them.
  for (int a = 0; a < n; ++a) m(a, a) = 0.1 + 0.4 * u(rng);
  for (int x = 0; x < k; ++x) {
    for (int y = x + 1; y < k; ++y) {
      const int a = perm[static_cast<std::size_t>(x)];
      const int b = perm[static_cast<std::size_t>(y)];
      m(a, b) = m(b, a) = 0.5 + 0.5 * u(rng);
    }
  }
  return ConsistencyProblem::from_dense(m);
}

SelftestSummary run_selftest(std::uint64_t seed, std::ostream& out, int scale) {
  SelftestSummary s;
  std::mt19937_64 rng(seed);
  scale = std::max(1, scale);

  std::uniform_int_distribution<int> dim(1, 6);
  for (int c = 0; c < 200 * scale; ++c) {
    const Eigen::MatrixXd m = random_score_matrix(rng, dim(rng), dim(rng));
    const auto matches = solve_assignment(m);
    ++s.assignment_cases;
    if (assignment_score(m, matches) != brute_force_assignment_score(m)) ++s.assignment_failures;
  }
  out << "assignment vs enumeration: " << s.assignment_cases - s.assignment_failures << "/"
      << s.assignment_cases << '\n';

  std::uniform_int_distribution<int> size(1, 12);
  for (int c = 0; c < 100 * scale; ++c) {
    const ConsistencyProblem p = random_consistency_problem(rng, size(rng));
    const Eigen::MatrixXd dense = p.dense();
    const double opt = bitmask_consistent_optimum(dense).objective;
    const auto greedy = densest_consistent_set(p);
    const auto exact = exact_consistent_oracle(p);
    const double g = dense_subset_objective(dense, greedy);
    const double e = dense_subset_objective(dense, exact);
    ++s.consistency_cases;
    const double ratio = opt > 0.0 ? g / opt : 1.0;
    s.worst_consistency_ratio = std::min(s.worst_consistency_ratio, ratio);
    if (ratio < 0.9 || std::abs(e - opt) > 1e-9 * std::max(1.0, opt) ||
        !is_pairwise_compatible(p, greedy)) {
      ++s.consistency_failures;
    }
  }
  out << "consistent set vs enumeration: " << s.consistency_cases - s.consistency_failures << "/"
      << s.consistency_cases << " (worst ratio " << s.worst_consistency_ratio << ")\n";

  for (int c = 0; c < 50 * scale; ++c) {
    const int n = size(rng);
    const int k = std::uniform_int_distribution<int>(std::min(2, n), n)(rng);
    const ConsistencyProblem p = single_clique_problem(rng, n, k);
    ++s.clique_cases;
    if (densest_consistent_set(p) != exact_consistent_oracle(p)) ++s.clique_failures;
  }
  out << "single clique recovery: " << s.clique_cases - s.clique_failures << "/" << s.clique_cases
      << '\n';

  const CameraIntrinsics intr{800.0, 800.0, 400.0, 300.0, 800, 600};
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int c = 0; c < 50 * scale; ++c) {
    const Vec3 landmark(10.0 * u(rng), 10.0 * u(rng), 5.0 * u(rng));
    std::vector<PosedObservation> obs;
    for (int v = 0; v < 5; ++v) {
      Pose pose;
      pose.rotation = rotation_ypr(20.0 * u(rng), 180.0 + 10.0 * u(rng), 10.0 * u(rng));
      pose.translation = Vec3(5.0 * u(rng), 5.0 * u(rng), 40.0 + 5.0 * u(rng));
      const auto px = project(pose, intr, landmark);
      if (!px) continue;
      obs.push_back({pose, *px + Vec2(5.0 * u(rng), 5.0 * u(rng)), 10.0});
    }
    if (obs.empty()) continue;
    const Vec3 at = landmark + Vec3(u(rng), u(rng), u(rng));
    const Vec3 analytic = reprojection_gradient(obs, intr, 3.0, at);
    const Vec3 numeric = numeric_reprojection_gradient(obs, intr, 3.0, at, 1e-5);
    const double err = (analytic - numeric).norm() / std::max(numeric.norm(), 1e-8);
    ++s.gradient_cases;
    s.worst_gradient_error = std::max(s.worst_gradient_error, err);
    if (err >= 1e-4) ++s.gradient_failures;
  }
  out << "gradient vs central differences: " << s.gradient_cases - s.gradient_failures << "/"
      << s.gradient_cases << " (worst relative error " << s.worst_gradient_error << ")\n";
  return s;
}

}  // namespace segmap
