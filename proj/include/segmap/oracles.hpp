#pragma once

// Slow reference implementations and random problem generators used by the
// selftest subcommand and the test suites.

#include "segmap/alignment.hpp"
#include "segmap/reconstruction.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

namespace segmap {

/// Best total score over all partial one-to-one row/column matchings, by
/// enumeration. Meant for matrices up to about 7x7.
double brute_force_assignment_score(const Eigen::MatrixXd& scores);

/// Best objective over every pairwise-compatible subset, by enumerating all
/// 2^n subsets of the dense affinity matrix. n <= 20.
struct SubsetOptimum {
  std::vector<int> members;
  double objective = 0.0;
};
SubsetOptimum bitmask_consistent_optimum(const Eigen::MatrixXd& affinity);

/// (sum of the affinity block over the subset) / |subset|, from a dense matrix.
double dense_subset_objective(const Eigen::MatrixXd& affinity, std::span<const int> subset);

/// Central-difference gradient of the reprojection cost.
Vec3 numeric_reprojection_gradient(std::span<const PosedObservation> obs,
                                   const CameraIntrinsics& intr, double sigma_px,
                                   const Vec3& point, double step);

/// Scores in [0, 1] with roughly a quarter of the entries infeasible.
Eigen::MatrixXd random_score_matrix(std::mt19937_64& rng, int rows, int cols);

/// Putative associations between two random point sets related by a rigid
/// motion, with a mix of correct and wrong pairings, run through
/// consistency_matrix.
ConsistencyProblem random_consistency_problem(std::mt19937_64& rng, int n);

/// k associations forming one clique with random affinities plus isolated
/// ones; the clique is the unique optimum.
ConsistencyProblem single_clique_problem(std::mt19937_64& rng, int n, int k);

struct SelftestSummary {
  int assignment_cases = 0;
  int assignment_failures = 0;
  int consistency_cases = 0;
  int consistency_failures = 0;
  double worst_consistency_ratio = 1.0;
  int clique_cases = 0;
  int clique_failures = 0;
  int gradient_cases = 0;
  int gradient_failures = 0;
  double worst_gradient_error = 0.0;

  bool ok() const {
    return assignment_failures == 0 && consistency_failures == 0 && clique_failures == 0 &&
           gradient_failures == 0;
  }
};

/// Runs the oracle-equivalence checks and prints one line per suite.
SelftestSummary run_selftest(std::uint64_t seed, std::ostream& out, int scale = 1);

}  // namespace segmap
