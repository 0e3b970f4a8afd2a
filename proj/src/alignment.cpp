#include "segmap/alignment.hpp"

#include "segmap/scoring.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

namespace segmap {

// ---------------------------------------------------------------------------
// ConsistencyProblem

ConsistencyProblem::ConsistencyProblem(std::vector<PutativeAssociation> associations,
                                       std::vector<std::vector<std::pair<int, double>>> neighbours)
    : associations_(std::move(associations)) {
  if (neighbours.size() != associations_.size()) {
    throw std::invalid_argument("neighbour list size differs from association count");
  }
  row_start_.assign(associations_.size() + 1, 0);
  for (std::size_t a = 0; a < neighbours.size(); ++a) {
    auto& row = neighbours[a];
    std::sort(row.begin(), row.end());
    row_start_[a + 1] = row_start_[a] + static_cast<int>(row.size());
  }
  cols_.reserve(static_cast<std::size_t>(row_start_.back()));
  vals_.reserve(static_cast<std::size_t>(row_start_.back()));
  for (const auto& row : neighbours) {
    for (const auto& [c, v] : row) {
      cols_.push_back(c);
      vals_.push_back(v);
    }
  }
}

ConsistencyProblem ConsistencyProblem::from_dense(const Eigen::MatrixXd& m) {
  const auto n = static_cast<int>(m.rows());
  std::vector<PutativeAssociation> assocs(static_cast<std::size_t>(n));
  std::vector<std::vector<std::pair<int, double>>> nb(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    assocs[static_cast<std::size_t>(a)] = {a, a, m(a, a)};
    for (int b = 0; b < n; ++b) {
      if (a != b && m(a, b) > 0.0) nb[static_cast<std::size_t>(a)].emplace_back(b, m(a, b));
    }
  }
  return ConsistencyProblem(std::move(assocs), std::move(nb));
}

std::span<const int> ConsistencyProblem::neighbours(int a) const {
  const auto b = static_cast<std::size_t>(row_start_[static_cast<std::size_t>(a)]);
  const auto e = static_cast<std::size_t>(row_start_[static_cast<std::size_t>(a) + 1]);
  return std::span<const int>(cols_).subspan(b, e - b);
}

std::span<const double> ConsistencyProblem::neighbour_values(int a) const {
  const auto b = static_cast<std::size_t>(row_start_[static_cast<std::size_t>(a)]);
  const auto e = static_cast<std::size_t>(row_start_[static_cast<std::size_t>(a) + 1]);
  return std::span<const double>(vals_).subspan(b, e - b);
}

double ConsistencyProblem::affinity(int a, int b) const {
  if (a == b) return weight(a);
  const auto cols = neighbours(a);
  const auto it = std::lower_bound(cols.begin(), cols.end(), b);
  if (it == cols.end() || *it != b) return 0.0;
  return neighbour_values(a)[static_cast<std::size_t>(it - cols.begin())];
}

Eigen::MatrixXd ConsistencyProblem::dense() const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < static_cast<int>(n); ++a) {
    m(a, a) = weight(a);
    const auto cols = neighbours(a);
    const auto vals = neighbour_values(a);
    for (std::size_t k = 0; k < cols.size(); ++k) m(a, cols[k]) = vals[k];
  }
  return m;
}

void ConsistencyProblem::multiply(std::span<const double> x, std::span<double> y) const {
  const std::size_t n = size();
  for (std::size_t a = 0; a < n; ++a) {
    double acc = associations_[a].weight * x[a];
    for (int k = row_start_[a]; k < row_start_[a + 1]; ++k) {
      acc += vals_[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(cols_[static_cast<std::size_t>(k)])];
    }
    y[a] = acc;
  }
}

// ---------------------------------------------------------------------------
// Windows and associations

std::pair<std::size_t, std::size_t> window_range(std::size_t n, int offset, int WL, int SL) {
  const std::size_t begin = static_cast<std::size_t>(offset) * static_cast<std::size_t>(SL);
  const std::size_t end = std::min(begin + static_cast<std::size_t>(WL), n);
  return {std::min(begin, n), end};
}

std::vector<std::pair<int, int>> window_offsets(std::size_t n_i, std::size_t n_j, int WL, int SL) {
  if (WL < 1 || SL < 1) throw std::invalid_argument("window length and stride must be positive");
  auto count = [SL](std::size_t n) {
    return static_cast<int>((n + static_cast<std::size_t>(SL) - 1) / static_cast<std::size_t>(SL));
  };
  std::vector<std::pair<int, int>> out;
  const int ci = count(n_i);
  const int cj = count(n_j);
  out.reserve(static_cast<std::size_t>(ci) * static_cast<std::size_t>(cj));
  for (int si = 0; si < ci; ++si) {
    for (int sj = 0; sj < cj; ++sj) out.emplace_back(si, sj);
  }
  return out;
}

std::vector<PutativeAssociation> putative_associations(std::span<const MapObject> win_i,
                                                       std::span<const MapObject> win_j,
                                                       double r_lim) {
  std::vector<PutativeAssociation> out;
  for (std::size_t a = 0; a < win_i.size(); ++a) {
    for (std::size_t b = 0; b < win_j.size(); ++b) {
      const double hi = win_i[a].size_m;
      const double hj = win_j[b].size_m;
      if (relative_size_difference(hi, hj) > r_lim) continue;
      const double w = size_score(hi, hj, r_lim);
      // r == r_lim survives the gate but has zero weight; nothing to gain.
      if (w <= 0.0) continue;
      out.push_back({static_cast<int>(a), static_cast<int>(b), w});
    }
  }
  return out;
}

ConsistencyProblem consistency_matrix(std::vector<PutativeAssociation> assocs,
                                      std::span<const Vec3> positions_i,
                                      std::span<const Vec3> positions_j, double eps_lim,
                                      double sigma_c) {
  const std::size_t ni = positions_i.size();
  const std::size_t nj = positions_j.size();
  std::vector<double> di(ni * ni);
  std::vector<double> dj(nj * nj);
  for (std::size_t a = 0; a < ni; ++a) {
    for (std::size_t b = 0; b < ni; ++b) di[a * ni + b] = (positions_i[a] - positions_i[b]).norm();
  }
  for (std::size_t a = 0; a < nj; ++a) {
    for (std::size_t b = 0; b < nj; ++b) dj[a * nj + b] = (positions_j[a] - positions_j[b]).norm();
  }

  const std::size_t n = assocs.size();
  const double inv_two_var = 1.0 / (2.0 * sigma_c * sigma_c);
  std::vector<std::vector<std::pair<int, double>>> nb(n);
  for (std::size_t a = 0; a < n; ++a) {
    const auto ia = static_cast<std::size_t>(assocs[a].idx_i);
    const auto ja = static_cast<std::size_t>(assocs[a].idx_j);
    const double* row_i = &di[ia * ni];
    const double* row_j = &dj[ja * nj];
    for (std::size_t b = a + 1; b < n; ++b) {
      const auto ib = static_cast<std::size_t>(assocs[b].idx_i);
      const auto jb = static_cast<std::size_t>(assocs[b].idx_j);
      if (ia == ib || ja == jb) continue;
      const double eps = std::abs(row_i[ib] - row_j[jb]);
      if (eps > eps_lim) continue;
      const double v = std::exp(-eps * eps * inv_two_var);
      if (v <= 0.0) continue;
      nb[a].emplace_back(static_cast<int>(b), v);
      nb[b].emplace_back(static_cast<int>(a), v);
    }
  }
  return ConsistencyProblem(std::move(assocs), std::move(nb));
}

// ---------------------------------------------------------------------------
// Solvers

double consistency_objective(const ConsistencyProblem& problem, std::span<const int> selected) {
  if (selected.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t x = 0; x < selected.size(); ++x) {
    total += problem.weight(selected[x]);
    for (std::size_t y = x + 1; y < selected.size(); ++y) {
      total += 2.0 * problem.affinity(selected[x], selected[y]);
    }
  }
  return total / static_cast<double>(selected.size());
}

bool is_pairwise_compatible(const ConsistencyProblem& problem, std::span<const int> selected) {
  for (std::size_t x = 0; x < selected.size(); ++x) {
    for (std::size_t y = x + 1; y < selected.size(); ++y) {
      if (!(problem.affinity(selected[x], selected[y]) > 0.0)) return false;
    }
  }
  return true;
}

Eigen::VectorXd leading_eigenvector(const ConsistencyProblem& problem, int max_iters, double tol,
                                    int* iterations) {
  const auto n = static_cast<Eigen::Index>(problem.size());
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  Eigen::VectorXd y(n);
  int it = 0;
  while (it < max_iters) {
    ++it;
    problem.multiply({x.data(), static_cast<std::size_t>(n)}, {y.data(), static_cast<std::size_t>(n)});
    const double norm = y.norm();
    if (!(norm > 0.0)) break;
    y /= norm;
    const double change = (y - x).cwiseAbs().maxCoeff();
    x.swap(y);
    if (change < tol) break;
  }
  if (iterations) *iterations = it;
  return x;
}

std::vector<int> densest_consistent_set(const ConsistencyProblem& problem, int power_iters,
                                        double power_tol, int starts) {
  const std::size_t n = problem.size();
  if (n == 0) return {};
  const Eigen::VectorXd v = leading_eigenvector(problem, power_iters, power_tol);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&v](int a, int b) { return v(a) > v(b); });

  // One greedy pass per seed: the seed first, then everything else in
  // eigenvector order. hits[c] counts selected nodes adjacent to c, so c is
  // compatible with the whole selection exactly when hits[c] equals its
  // size. The objective is tracked after each admission and the selection is
  // cut back to its best prefix, since a weakly attached late candidate
  // lowers the average it joins.
  std::vector<int> hits(n);
  std::vector<int> selected;
  std::vector<int> best;
  double best_value = -1.0;
  const std::size_t n_starts = std::min(n, static_cast<std::size_t>(std::max(1, starts)));
  for (std::size_t s = 0; s < n_starts; ++s) {
    std::fill(hits.begin(), hits.end(), 0);
    selected.clear();
    double mass = 0.0;  // x'Mx of the current selection
    double pass_value = -1.0;
    std::size_t pass_len = 0;
    auto admit = [&](int c) {
      if (hits[static_cast<std::size_t>(c)] != static_cast<int>(selected.size())) return;
      double gain = problem.weight(c);
      for (const int q : selected) gain += 2.0 * problem.affinity(c, q);
      mass += gain;
      selected.push_back(c);
      const double value = mass / static_cast<double>(selected.size());
      if (value > pass_value) {
        pass_value = value;
        pass_len = selected.size();
      }
      for (const int nb : problem.neighbours(c)) ++hits[static_cast<std::size_t>(nb)];
    };
    admit(order[s]);
    for (std::size_t k = 0; k < n; ++k) {
      if (k != s) admit(order[k]);
    }
    if (pass_value > best_value) {
      best_value = pass_value;
      best.assign(selected.begin(), selected.begin() + static_cast<std::ptrdiff_t>(pass_len));
    }
  }
  std::sort(best.begin(), best.end());
  return best;
}

namespace {

struct CliqueSearch {
  const ConsistencyProblem& problem;
  double max_weight = 0.0;
  double max_affinity = 0.0;
  double best_value = -1.0;
  std::vector<int> best;
  std::vector<int> current;

  // sum = sum of weights + 2 * sum of pairwise affinities within current.
  void extend(double sum, const std::vector<int>& candidates) {
    const auto k = static_cast<double>(current.size());
    if (!current.empty()) {
      const double value = sum / k;
      if (value > best_value) {
        best_value = value;
        best = current;
      }
    }
    if (candidates.empty()) return;
    // Every row sum inside a clique of size m is at most w_max + (m-1) a_max.
    const double bound =
        max_weight + (k + static_cast<double>(candidates.size()) - 1.0) * max_affinity;
    if (bound <= best_value) return;
    for (std::size_t idx = 0; idx < candidates.size(); ++idx) {
      const int c = candidates[idx];
      double added = problem.weight(c);
      for (const int s : current) added += 2.0 * problem.affinity(c, s);
      std::vector<int> next;
      for (std::size_t r = idx + 1; r < candidates.size(); ++r) {
        if (problem.affinity(c, candidates[r]) > 0.0) next.push_back(candidates[r]);
      }
      current.push_back(c);
      extend(sum + added, next);
      current.pop_back();
    }
  }
};

}  // namespace

std::vector<int> exact_consistent_oracle(const ConsistencyProblem& problem) {
  const std::size_t n = problem.size();
  if (n > kExactOracleLimit) {
    throw ProblemTooLarge("exact oracle supports at most 20 associations");
  }
  if (n == 0) return {};
  CliqueSearch search{problem, 0.0, 0.0, -1.0, {}, {}};
  for (int a = 0; a < static_cast<int>(n); ++a) {
    search.max_weight = std::max(search.max_weight, problem.weight(a));
    for (const double v : problem.neighbour_values(a)) {
      search.max_affinity = std::max(search.max_affinity, v);
    }
  }
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  search.extend(0.0, all);
  std::sort(search.best.begin(), search.best.end());
  return search.best;
}

// ---------------------------------------------------------------------------
// Hypotheses

AlignmentHypothesis align_window_pair(std::span<const MapObject> win_i,
                                      std::span<const MapObject> win_j,
                                      const AlignmentParams& params, int offset_i, int offset_j) {
  AlignmentHypothesis h;
  h.offset_i = offset_i;
  h.offset_j = offset_j;
  if (win_i.empty() || win_j.empty()) return h;

  std::vector<Vec3> pos_i(win_i.size());
  std::vector<Vec3> pos_j(win_j.size());
  for (std::size_t k = 0; k < win_i.size(); ++k) pos_i[k] = win_i[k].position;
  for (std::size_t k = 0; k < win_j.size(); ++k) pos_j[k] = win_j[k].position;

  auto assocs = putative_associations(win_i, win_j, params.r_lim);
  h.n_putative = assocs.size();
  if (assocs.empty()) return h;
  const ConsistencyProblem problem =
      consistency_matrix(std::move(assocs), pos_i, pos_j, params.eps_lim, params.sigma_c);
  const std::vector<int> chosen =
      densest_consistent_set(problem, params.power_iters, params.power_tol,
                             params.rounding_starts);

  const std::size_t base_i = static_cast<std::size_t>(offset_i) * static_cast<std::size_t>(params.SL);
  const std::size_t base_j = static_cast<std::size_t>(offset_j) * static_cast<std::size_t>(params.SL);
  std::vector<Vec3> src;
  std::vector<Vec3> dst;
  for (const int c : chosen) {
    PutativeAssociation a = problem.associations()[static_cast<std::size_t>(c)];
    src.push_back(pos_i[static_cast<std::size_t>(a.idx_i)]);
    dst.push_back(pos_j[static_cast<std::size_t>(a.idx_j)]);
    a.idx_i += static_cast<int>(base_i);
    a.idx_j += static_cast<int>(base_j);
    h.selected.push_back(a);
  }
  if (h.selected.size() < 3) return h;

  try {
    h.transform = estimate_rigid_transform(src, dst);
  } catch (const DegenerateConfiguration&) {
    h.transform = RigidTransform{};
    return h;
  }
  h.registered = true;
  const EulerAngles e = euler_zyx(h.transform.rotation);
  h.roll = e.roll;
  h.pitch = e.pitch;
  h.yaw = e.yaw;
  h.angular_ok = std::max(std::abs(e.roll), std::abs(e.pitch)) <= params.alpha_lim;
  h.accepted = h.accepted_at(params.s_lim);
  return h;
}

std::vector<AlignmentHypothesis> align_maps(const VehicleMap& map_i, const VehicleMap& map_j,
                                            const AlignmentParams& params, int workers) {
  if (!params.is_valid()) throw std::invalid_argument("invalid alignment parameters");
  const auto offsets = window_offsets(map_i.size(), map_j.size(), params.WL, params.SL);
  std::vector<AlignmentHypothesis> out(offsets.size());
  const std::span<const MapObject> all_i(map_i.objects);
  const std::span<const MapObject> all_j(map_j.objects);

  auto run = [&](std::size_t k) {
    const auto [si, sj] = offsets[k];
    const auto [bi, ei] = window_range(map_i.size(), si, params.WL, params.SL);
    const auto [bj, ej] = window_range(map_j.size(), sj, params.WL, params.SL);
    out[k] = align_window_pair(all_i.subspan(bi, ei - bi), all_j.subspan(bj, ej - bj), params,
                               si, sj);
  };

  if (workers <= 1 || offsets.size() < 2) {
    for (std::size_t k = 0; k < offsets.size(); ++k) run(k);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(workers), offsets.size());
  for (std::size_t w = 0; w < n_workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < offsets.size(); k = next++) run(k);
    });
  }
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace segmap
