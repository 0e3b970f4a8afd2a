#pragma once

#include "segmap/geometry.hpp"
#include "segmap/vehicle_map.hpp"

#include <Eigen/Core>

#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace segmap {

struct AlignmentParams {
  int WL = 50;               ///< window length, objects
  int SL = 10;               ///< stride, objects
  double eps_lim = 2.0;      ///< pairwise distance consistency gate, meters
  double r_lim = 0.2;        ///< relative size difference gate
  double alpha_lim = 22.5;   ///< roll/pitch gate, degrees
  int s_lim = 5;             ///< accept when more associations than this
  double sigma_c = 2.0 / 3.0;  ///< affinity kernel width, meters
  int power_iters = 1000;
  double power_tol = 1e-9;
  int rounding_starts = 8;   ///< greedy rounding passes, seeded in eigenvector order

  bool is_valid() const {
    return WL >= 3 && SL >= 1 && SL <= WL && eps_lim > 0 && r_lim > 0 && alpha_lim > 0 &&
           s_lim > 0 && sigma_c > 0 && power_iters > 0 && power_tol > 0 && rounding_starts > 0;
  }
};

struct PutativeAssociation {
  int idx_i = 0;
  int idx_j = 0;
  double weight = 0.0;
  bool operator==(const PutativeAssociation&) const = default;
};

/// Pairwise affinity between putative associations. Stored sparsely: the
/// diagonal holds the association weights, the off-diagonal part is a
/// symmetric CSR pattern of the strictly positive entries.
class ConsistencyProblem {
 public:
  ConsistencyProblem() = default;
  ConsistencyProblem(std::vector<PutativeAssociation> associations,
                     std::vector<std::vector<std::pair<int, double>>> neighbours);
  /// Builds from a dense symmetric matrix; associations get the diagonal as
  /// weight and placeholder endpoints.
  static ConsistencyProblem from_dense(const Eigen::MatrixXd& affinity);

  std::size_t size() const { return associations_.size(); }
  const std::vector<PutativeAssociation>& associations() const { return associations_; }
  double weight(int a) const { return associations_[static_cast<std::size_t>(a)].weight; }
  double affinity(int a, int b) const;
  std::span<const int> neighbours(int a) const;
  std::span<const double> neighbour_values(int a) const;
  std::size_t nonzeros() const { return cols_.size(); }
  Eigen::MatrixXd dense() const;

  /// y = M x.
  void multiply(std::span<const double> x, std::span<double> y) const;

 private:
  std::vector<PutativeAssociation> associations_;
  std::vector<int> row_start_{0};
  std::vector<int> cols_;
  std::vector<double> vals_;
};

/// Stride offsets (s_i, s_j) whose windows [s*SL, min(s*SL + WL, N)) are
/// non-empty, in lexicographic order.
std::vector<std::pair<int, int>> window_offsets(std::size_t n_i, std::size_t n_j, int WL, int SL);

/// Cross pairs whose relative size difference is at most r_lim, weighted by
/// the size score with cut-off r_lim. Indices are local to the windows.
std::vector<PutativeAssociation> putative_associations(std::span<const MapObject> win_i,
                                                       std::span<const MapObject> win_j,
                                                       double r_lim);

/// Affinity exp(-eps^2 / (2 sigma_c^2)) for association pairs whose
/// inter-object distances differ by eps <= eps_lim and that share no object.
ConsistencyProblem consistency_matrix(std::vector<PutativeAssociation> assocs,
                                      std::span<const Vec3> positions_i,
                                      std::span<const Vec3> positions_j, double eps_lim,
                                      double sigma_c);

/// (sum of weights + sum of off-diagonal affinities) / |S|, i.e. x'Mx / x'x
/// for the indicator vector of S.
double consistency_objective(const ConsistencyProblem& problem, std::span<const int> selected);

/// True when every selected pair has positive affinity.
bool is_pairwise_compatible(const ConsistencyProblem& problem, std::span<const int> selected);

/// Leading eigenvector of the affinity matrix by power iteration from the
/// uniform vector.
Eigen::VectorXd leading_eigenvector(const ConsistencyProblem& problem, int max_iters, double tol,
                                    int* iterations = nullptr);

/// Power iteration followed by greedy rounding in descending eigenvector
/// order, admitting a candidate only when it is compatible with everything
/// already selected. The rounding is repeated seeded at each of the top
/// `starts` entries and the densest result kept. Returns sorted association
/// indices.
std::vector<int> densest_consistent_set(const ConsistencyProblem& problem, int power_iters = 1000,
                                        double power_tol = 1e-9, int starts = 8);

class ProblemTooLarge : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr std::size_t kExactOracleLimit = 20;

/// Exhaustive maximizer of consistency_objective over compatible subsets,
/// by clique enumeration with an average-row-sum bound. Throws
/// ProblemTooLarge above kExactOracleLimit associations.
std::vector<int> exact_consistent_oracle(const ConsistencyProblem& problem);

struct AlignmentHypothesis {
  int offset_i = 0;
  int offset_j = 0;
  /// Selected associations with map-global object indices.
  std::vector<PutativeAssociation> selected;
  /// Maps points of map i into map j.
  RigidTransform transform;
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
  bool registered = false;  ///< a transform was estimated from >= 3 associations
  bool angular_ok = false;
  bool accepted = false;
  std::size_t n_putative = 0;

  int score() const { return static_cast<int>(selected.size()); }
  /// Acceptance at an arbitrary threshold; accepted == accepted_at(s_lim).
  bool accepted_at(int s_lim) const { return score() > s_lim && angular_ok; }
};

/// Data association, registration and gating for one pair of windows.
AlignmentHypothesis align_window_pair(std::span<const MapObject> win_i,
                                      std::span<const MapObject> win_j,
                                      const AlignmentParams& params, int offset_i = 0,
                                      int offset_j = 0);

/// Evaluates every window pair; results sorted by (offset_i, offset_j)
/// regardless of the worker count.
std::vector<AlignmentHypothesis> align_maps(const VehicleMap& map_i, const VehicleMap& map_j,
                                            const AlignmentParams& params, int workers = 1);

/// Object index range [begin, end) of a stride offset.
std::pair<std::size_t, std::size_t> window_range(std::size_t n, int offset, int WL, int SL);

}  // namespace segmap
