#include "segmap/alignment.hpp"
#include "segmap/oracles.hpp"
#include "segmap/scoring.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace segmap;

namespace {

std::vector<MapObject> random_objects(std::mt19937_64& rng, int n, double span) {
  std::uniform_real_distribution<double> u(0.0, span);
  std::uniform_real_distribution<double> z(0.0, 5.0);
  std::uniform_real_distribution<double> size(1.0, 10.0);
  std::vector<MapObject> out;
  for (int k = 0; k < n; ++k) {
    MapObject o;
    o.position = Vec3(u(rng), u(rng), z(rng));
    o.size_m = size(rng);
    o.track_len = 5;
    out.push_back(o);
  }
  return out;
}

std::vector<MapObject> transformed(std::vector<MapObject> objs, const Mat3& r, const Vec3& t) {
  for (MapObject& o : objs) o.position = r * o.position + t;
  return objs;
}

Eigen::MatrixXd block_problem(const std::vector<std::vector<int>>& cliques, int isolated,
                              double weight = 1.0) {
  int n = isolated;
  for (const auto& c : cliques) n += static_cast<int>(c.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  m.diagonal().setConstant(weight);
  for (const auto& c : cliques)
    for (int a : c)
      for (int b : c)
        if (a != b) m(a, b) = 1.0;
  return m;
}

}  // namespace

TEST_CASE("window offsets") {
  const auto o = window_offsets(50, 50, 50, 10);
  CHECK(o.size() == 25);
  CHECK(o.front() == std::pair<int, int>{0, 0});
  CHECK(o[1] == std::pair<int, int>{0, 1});
  CHECK(o.back() == std::pair<int, int>{4, 4});
  CHECK(window_range(50, 4, 50, 10) == std::pair<std::size_t, std::size_t>{40, 50});
  CHECK(window_offsets(10, 10, 50, 10).size() == 1);

  // Quadrupling the pair count when N doubles (N >> WL).
  const double c100 = static_cast<double>(window_offsets(100, 100, 5, 5).size());
  const double c200 = static_cast<double>(window_offsets(200, 200, 5, 5).size());
  const double c400 = static_cast<double>(window_offsets(400, 400, 5, 5).size());
  CHECK(c200 / c100 == doctest::Approx(4.0));
  CHECK(c400 / c200 == doctest::Approx(4.0));
  CHECK(std::is_sorted(o.begin(), o.end()));
}

TEST_CASE("putative associations") {
  std::vector<MapObject> win(6);
  for (int k = 0; k < 6; ++k) win[k].size_m = 1.0 + 2.0 * k;
  const auto self = putative_associations(win, win, 0.2);
  CHECK(self.size() >= 6);
  for (int k = 0; k < 6; ++k) {
    const auto it = std::find_if(self.begin(), self.end(), [k](const PutativeAssociation& a) {
      return a.idx_i == k && a.idx_j == k;
    });
    REQUIRE(it != self.end());
    CHECK(it->weight == 2.0);
  }

  std::vector<MapObject> a(1), b(1);
  a[0].size_m = 1.0;
  b[0].size_m = 3.0;
  CHECK(putative_associations(a, b, 0.2).empty());

  std::mt19937_64 rng(4);
  const auto wi = random_objects(rng, 40, 50);
  const auto wj = random_objects(rng, 35, 50);
  const auto got = putative_associations(wi, wj, 0.2);
  std::vector<PutativeAssociation> expect;
  for (int x = 0; x < 40; ++x)
    for (int y = 0; y < 35; ++y) {
      const double r = 2.0 * std::abs(wi[x].size_m - wj[y].size_m) / (wi[x].size_m + wj[y].size_m);
      if (r < 0.2) expect.push_back({x, y, size_score(wi[x].size_m, wj[y].size_m, 0.2)});
    }
  CHECK(got == expect);
}

TEST_CASE("consistency matrix entries") {
  std::vector<Vec3> pi{{0, 0, 0}, {10, 0, 0}, {0, 5, 0}};
  const Mat3 r = rotation_ypr(70, 5, -3);
  std::vector<Vec3> pj;
  for (const Vec3& p : pi) pj.push_back(r * p + Vec3(3, -2, 8));

  const ConsistencyProblem rigid =
      consistency_matrix({{0, 0, 2.0}, {1, 1, 1.5}}, pi, pj, 2.0, 2.0 / 3.0);
  CHECK(rigid.affinity(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rigid.affinity(0, 0) == 2.0);
  CHECK(rigid.affinity(1, 1) == 1.5);

  // eps just over the gate
  std::vector<Vec3> stretched{{0, 0, 0}, {12.01, 0, 0}, {0, 5, 0}};
  CHECK(consistency_matrix({{0, 0, 1}, {1, 1, 1}}, pi, stretched, 2.0, 2.0 / 3.0).affinity(0, 1) == 0.0);
  // eps inside the gate: Gaussian kernel
  std::vector<Vec3> bent{{0, 0, 0}, {11, 0, 0}, {0, 5, 0}};
  CHECK(consistency_matrix({{0, 0, 1}, {1, 1, 1}}, pi, bent, 2.0, 2.0 / 3.0).affinity(0, 1) ==
        doctest::Approx(std::exp(-1.0 / (2.0 * 4.0 / 9.0))).epsilon(1e-12));
  // shared endpoint
  CHECK(consistency_matrix({{0, 0, 1}, {0, 1, 1}}, pi, pj, 2.0, 2.0 / 3.0).affinity(0, 1) == 0.0);
  CHECK(consistency_matrix({{0, 1, 1}, {2, 1, 1}}, pi, pj, 2.0, 2.0 / 3.0).affinity(0, 1) == 0.0);
}

TEST_CASE("consistency matrix is invariant under rigid motion") {
  std::mt19937_64 rng(12);
  const auto wi = random_objects(rng, 15, 40);
  const auto wj = random_objects(rng, 15, 40);
  const auto assocs = putative_associations(wi, wj, 0.2);
  std::vector<Vec3> pi, pj, pj_moved;
  const Mat3 r = rotation_ypr(123, -40, 17);
  for (const auto& o : wi) pi.push_back(o.position);
  for (const auto& o : wj) {
    pj.push_back(o.position);
    pj_moved.push_back(r * o.position + Vec3(100, -50, 3));
  }
  const Eigen::MatrixXd a = consistency_matrix(assocs, pi, pj, 2.0, 2.0 / 3.0).dense();
  const Eigen::MatrixXd b = consistency_matrix(assocs, pi, pj_moved, 2.0, 2.0 / 3.0).dense();
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((a - a.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("densest consistent set on block problems") {
  const auto five = ConsistencyProblem::from_dense(block_problem({{0, 1, 2, 3, 4}}, 3));
  const auto sel = densest_consistent_set(five);
  CHECK(sel == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(exact_consistent_oracle(five) == sel);

  const auto two = ConsistencyProblem::from_dense(block_problem({{0, 1}, {2, 3, 4, 5}}, 0));
  CHECK(densest_consistent_set(two) == std::vector<int>{2, 3, 4, 5});
  CHECK(exact_consistent_oracle(two) == std::vector<int>{2, 3, 4, 5});

  const auto single = ConsistencyProblem::from_dense(Eigen::MatrixXd::Constant(1, 1, 0.7));
  CHECK(exact_consistent_oracle(single) == std::vector<int>{0});
  CHECK(densest_consistent_set(ConsistencyProblem{}).empty());

  Eigen::MatrixXd big = Eigen::MatrixXd::Identity(21, 21);
  CHECK_THROWS_AS(exact_consistent_oracle(ConsistencyProblem::from_dense(big)), ProblemTooLarge);
}

TEST_CASE("exact oracle agrees with bitmask enumeration") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> size(1, 12);
  for (int t = 0; t < 150; ++t) {
    const ConsistencyProblem p = random_consistency_problem(rng, size(rng));
    const Eigen::MatrixXd d = p.dense();
    const SubsetOptimum brute = bitmask_consistent_optimum(d);
    const auto exact = exact_consistent_oracle(p);
    CHECK(is_pairwise_compatible(p, exact));
    CHECK(consistency_objective(p, exact) == doctest::Approx(brute.objective).epsilon(1e-12));
    CHECK(dense_subset_objective(d, exact) == doctest::Approx(consistency_objective(p, exact)));

    const auto greedy = densest_consistent_set(p);
    CHECK(is_pairwise_compatible(p, greedy));
    CHECK(consistency_objective(p, greedy) >= 0.9 * brute.objective);
  }
}

TEST_CASE("single clique problems are solved exactly") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 40; ++t) {
    const int n = 4 + t % 9;
    const int k = 3 + t % (n - 2);
    const ConsistencyProblem p = single_clique_problem(rng, n, std::min(k, n));
    CHECK(densest_consistent_set(p) == exact_consistent_oracle(p));
  }
}

TEST_CASE("align_window_pair recovers a rigid motion") {
  std::mt19937_64 rng(31);
  const auto win_i = random_objects(rng, 10, 60);
  AlignmentParams params;

  const Mat3 yaw = rotation_z(45);
  const Vec3 t(20, -7, 1.5);
  const auto win_j = transformed(win_i, yaw, t);
  const AlignmentHypothesis h = align_window_pair(win_i, win_j, params);
  CHECK(h.accepted);
  CHECK(h.registered);
  CHECK(h.score() == 10);
  for (const auto& a : h.selected) CHECK(a.idx_i == a.idx_j);
  CHECK((h.transform.rotation - yaw).norm() < 1e-6);
  CHECK((h.transform.translation - t).norm() < 1e-6);
  CHECK(h.yaw == doctest::Approx(45.0));

  const auto rolled = transformed(win_i, rotation_ypr(45, 0, 30), t);
  const AlignmentHypothesis r = align_window_pair(win_i, rolled, params);
  CHECK(r.score() == 10);
  CHECK_FALSE(r.angular_ok);
  CHECK_FALSE(r.accepted);
  CHECK(r.roll == doctest::Approx(30.0));

  // Two unrelated random windows.
  const auto other = random_objects(rng, 10, 60);
  const AlignmentHypothesis n = align_window_pair(win_i, other, params);
  CHECK_FALSE(n.accepted);

  // Fewer than three associations: identity, not registered.
  std::vector<MapObject> pair(win_i.begin(), win_i.begin() + 2);
  const AlignmentHypothesis tiny = align_window_pair(pair, pair, params);
  CHECK_FALSE(tiny.registered);
  CHECK_FALSE(tiny.accepted);
  CHECK(tiny.transform.rotation == Mat3::Identity());
}

TEST_CASE("align_maps: self alignment, determinism and nesting") {
  std::mt19937_64 rng(8);
  VehicleMap m;
  m.objects = random_objects(rng, 230, 1);
  std::uniform_real_distribution<double> u(0, 80);
  for (std::size_t k = 0; k < m.objects.size(); ++k) {
    m.objects[k].position = Vec3(5.0 * k + 0.3 * u(rng), u(rng), 0.05 * u(rng));
  }
  AlignmentParams params;
  params.s_lim = params.WL / 2;
  const auto hyps = align_maps(m, m, params, 1);
  REQUIRE(hyps.size() == window_offsets(m.size(), m.size(), params.WL, params.SL).size());
  for (const AlignmentHypothesis& h : hyps) {
    if (h.offset_i != h.offset_j) continue;
    const auto [b, e] = window_range(m.size(), h.offset_i, params.WL, params.SL);
    if (static_cast<int>(e - b) <= params.s_lim) continue;  // partial tail windows are too small
    CHECK(h.accepted);
    CHECK((h.transform.rotation - Mat3::Identity()).norm() < 1e-9);
    CHECK(h.transform.translation.norm() < 1e-6);
  }

  const auto threaded = align_maps(m, m, params, 3);
  REQUIRE(threaded.size() == hyps.size());
  for (std::size_t k = 0; k < hyps.size(); ++k) {
    CHECK(threaded[k].offset_i == hyps[k].offset_i);
    CHECK(threaded[k].offset_j == hyps[k].offset_j);
    CHECK(threaded[k].selected == hyps[k].selected);
    CHECK(threaded[k].accepted == hyps[k].accepted);
    CHECK(threaded[k].transform.rotation == hyps[k].transform.rotation);
  }

  for (int s = 0; s < 40; ++s) {
    for (const AlignmentHypothesis& h : hyps) {
      if (h.accepted_at(s + 1)) CHECK(h.accepted_at(s));
    }
  }
}
