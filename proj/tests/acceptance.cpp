// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "segmap/alignment.hpp"
#include "segmap/assignment.hpp"
#include "segmap/config.hpp"
#include "segmap/evaluation.hpp"
#include "segmap/map_io.hpp"
#include "segmap/oracles.hpp"
#include "segmap/pipeline.hpp"
#include "segmap/reconstruction.hpp"
#include "segmap/scoring.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace segmap;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("criterion %d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Seeds for the end-to-end scenario.
constexpr std::uint64_t kWorldSeed = 1;
constexpr std::uint64_t kFlightSeedA = 2;
constexpr std::uint64_t kFlightSeedB = 3;
constexpr std::uint64_t kSeasonSeed = 4;

std::vector<int> sweep() {
  std::vector<int> th;
  for (int s = 0; s <= 40; ++s) th.push_back(s);
  return th;
}

struct Run {
  VehicleMap map_a, map_b;
  std::vector<AlignmentHypothesis> hyps;
  PRCurve pr;
  int positives = 0;
};

Run end_to_end(const SurveyScenario& s, const SimWorld& world_a, const SimWorld& world_b,
               std::uint64_t seed_a, std::uint64_t seed_b, const PipelineConfig& cfg,
               bool label) {
  const SimulatedFlight fa = survey_flight(s, world_a, cfg.T_p, seed_a);
  const SimulatedFlight fb = survey_flight(s, world_b, cfg.T_p, seed_b);
  Run r;
  r.map_a = map_from_log(fa.log, cfg).map;
  r.map_b = map_from_log(fb.log, cfg).map;
  r.hyps = align_maps(r.map_a, r.map_b, cfg.alignment, 1);
  if (label) {
    const auto labels = label_pairs(fa.truth, fb.truth, r.map_a, r.map_b, cfg.alignment.WL,
                                    cfg.alignment.SL, 0.0);
    for (const PairLabel& l : labels) r.positives += l.label == PairClass::positive;
    r.pr = precision_recall(r.hyps, labels, sweep());
  }
  return r;
}

std::string best_point(const PRCurve& pr, double min_precision) {
  const PRPoint* best = nullptr;
  for (const PRPoint& p : pr.points)
    if (p.precision >= min_precision && (!best || p.recall > best->recall)) best = &p;
  if (!best) return "none";
  return fmt("s_lim %d P %.3f R %.3f", best->threshold, best->precision, best->recall);
}

void formula_fidelity() {
  const auto t0 = Clock::now();
  int bad = 0;
  auto exact = [&](double got, double want) {
    if (std::abs(got - want) > 1e-12) ++bad;
  };
  const Vec2 c(10, 10);
  bad += !vio_shift_gate(c, c + Vec2(7, 0), 7.0, 1.5, 4.0);
  bad += vio_shift_gate(c, c + Vec2(7 + 4.1 * 1.5, 0), 7.0, 1.5, 4.0);
  bad += !vio_shift_gate(c, c + Vec2(7 - 3.9 * 1.5, 0), 7.0, 1.5, 4.0);
  exact(relative_size_difference(4.2, 4.2), 0.0);
  exact(relative_size_difference(1.0, 3.0), 1.0);
  for (double k : {0.01, 0.5, 3.0, 1e4}) {
    exact(relative_size_difference(k * 2.0, k * 2.5), relative_size_difference(2.0, 2.5));
  }
  exact(size_score(3.0, 3.0, 0.2), 2.0);
  exact(size_score(1.05, 0.95, 0.2), 1.0);  // r = 0.1 = h_lim / 2
  exact(size_score(1.0, 3.0, 1.0), 0.0);    // r = h_lim
  std::vector<Descriptor> d{Descriptor::Constant(2, 0.0), Descriptor::Constant(2, 10.0)};
  exact(feature_score(d, d, 0.75), 1.0);
  exact(feature_score({}, {}, 0.75), 1.0);
  exact(similarity(2.0, 0.5), 1.0);
  exact(similarity(0.0, 0.3), 0.0);
  exact(similarity(2.0, 1.0), std::sqrt(2.0));
  const double secs = seconds_since(t0);
  report(1, bad == 0 && secs < 1.0, fmt("%d mismatches, %.4f s (limit 1 s)", bad, secs));
}

void assignment_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> dim(1, 6);
  int bad = 0;
  for (int t = 0; t < 1000; ++t) {
    const Eigen::MatrixXd s = random_score_matrix(rng, dim(rng), dim(rng));
    if (assignment_score(s, solve_assignment(s)) != brute_force_assignment_score(s)) ++bad;
  }
  const double secs = seconds_since(t0);
  report(2, bad == 0 && secs < 10.0,
         fmt("%d/1000 score mismatches, %.2f s (limit 10 s)", bad, secs));
}

void triangulation() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const CameraIntrinsics k{1000, 1000, 500, 400, 1000, 800};
  const ReconstructionParams params;
  double worst_pos = 0.0, worst_grad = 0.0;
  int failed = 0;
  for (int t = 0; t < 100; ++t) {
    const Vec3 p(30 * u(rng), 30 * u(rng), 5 + 5 * u(rng));
    const double alt = 100 + 20 * u(rng);
    const int n = 5 + t % 8;
    std::vector<PosedObservation> clean, noisy;
    std::normal_distribution<double> g(0.0, 2.0);
    for (int i = 0; i < n; ++i) {
      PosedObservation o;
      o.pose.rotation = camera_rotation(0.3 * u(rng), -90.0 + 10 * u(rng));
      o.pose.translation = Vec3(p.x() + 3.0 * (i - n / 2), p.y() + 2 * u(rng), alt);
      const auto px = project(o.pose, k, p);
      if (!px) continue;
      o.pixel = *px;
      o.size_px = 10.0;
      clean.push_back(o);
      o.pixel += Vec2(g(rng), g(rng));
      noisy.push_back(o);
    }
    const TriangulationResult r = triangulate_track(clean, k, params);
    if (!r.position) {
      ++failed;
      continue;
    }
    worst_pos = std::max(worst_pos, (*r.position - p).norm());
    const Vec3 q = p + 3.0 * Vec3(u(rng), u(rng), u(rng));
    const Vec3 a = reprojection_gradient(noisy, k, params.sigma_px, q);
    const Vec3 f = numeric_reprojection_gradient(noisy, k, params.sigma_px, q, 1e-4);
    worst_grad = std::max(worst_grad, (a - f).norm() / std::max(a.norm(), 1e-300));
  }
  const double secs = seconds_since(t0);
  report(3, failed == 0 && worst_pos < 1e-6 && worst_grad < 1e-4 && secs < 10.0,
         fmt("worst position error %.2e m (limit 1e-6), worst gradient rel. error %.2e "
             "(limit 1e-4), %d diverged, %.2f s",
             worst_pos, worst_grad, failed, secs));
}

void association_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<int> size(1, 12);
  double worst = 1.0;
  int below = 0;
  for (int t = 0; t < 500; ++t) {
    const ConsistencyProblem p = random_consistency_problem(rng, size(rng));
    const double opt = consistency_objective(p, exact_consistent_oracle(p));
    const auto got = densest_consistent_set(p);
    const double ratio = opt > 0.0 ? consistency_objective(p, got) / opt : 1.0;
    if (!is_pairwise_compatible(p, got) || ratio < 0.9) ++below;
    worst = std::min(worst, ratio);
  }
  int clique_bad = 0;
  for (int t = 0; t < 200; ++t) {
    const int n = 3 + t % 10;
    const int k = 2 + t % (n - 1);
    const ConsistencyProblem p = single_clique_problem(rng, n, k);
    if (densest_consistent_set(p) != exact_consistent_oracle(p)) ++clique_bad;
  }
  const double secs = seconds_since(t0);
  report(4, below == 0 && clique_bad == 0 && secs < 60.0,
         fmt("worst ratio %.3f over 500 (%d below 0.9), %d/200 clique disagreements, %.2f s",
             worst, below, clique_bad, secs));
}

}  // namespace

int main() {
  std::printf("acceptance run\n");
  formula_fidelity();
  assignment_oracle();
  triangulation();
  association_oracle();

  const PipelineConfig cfg;  // paper defaults: WL 50, SL 10, eps 2, r 0.2, alpha 22.5
  SurveyScenario s;          // 1000 objects, sigma 3 px, detection 0.9
  const SimWorld world = survey_world(s, kWorldSeed);

  auto t0 = Clock::now();
  const Run same = end_to_end(s, world, world, kFlightSeedA, kFlightSeedB, cfg, true);
  double secs = seconds_since(t0);
  const double r5 = same.pr.recall_at_precision(0.95);
  report(5, r5 >= 0.9 && secs < 300.0,
         fmt("recall %.3f at precision >= 0.95 (target 0.9); best point %s; %d positive pairs "
             "of %zu; maps %zu/%zu objects; avg F1 %.3f; %.1f s",
             r5, best_point(same.pr, 0.95).c_str(), same.positives, same.hyps.size(),
             same.map_a.size(), same.map_b.size(), same.pr.average_f1, secs));

  t0 = Clock::now();
  const SimWorld spring = perturb_season(world, {0.3, 0.1, 0.0}, kSeasonSeed);
  const Run season = end_to_end(s, world, spring, kFlightSeedA, kFlightSeedB, cfg, true);
  secs = seconds_since(t0);
  const double r6 = season.pr.recall_at_precision(0.95);
  report(6, r6 > 0.5 * r5,
         fmt("recall %.3f at precision >= 0.95 vs %.3f same-season (must exceed %.3f); "
             "best point %s; %.1f s",
             r6, r5, 0.5 * r5, best_point(season.pr, 0.95).c_str(), secs));

  t0 = Clock::now();
  int accepted_total = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const SimWorld wa = survey_world(s, 1000 + seed);
    const SimWorld wb = survey_world(s, 2000 + seed);
    const Run neg = end_to_end(s, wa, wb, 10 * seed + 1, 10 * seed + 2, cfg, false);
    int accepted = 0, best = 0;
    for (const AlignmentHypothesis& h : neg.hyps) {
      accepted += h.accepted;
      best = std::max(best, h.score());
    }
    accepted_total += accepted;
    per_seed += fmt(" %d(max|S| %d)", accepted, best);
  }
  secs = seconds_since(t0);
  report(7, accepted_total == 0,
         fmt("%d accepted at s_lim 5 over 10 world pairs;%s; %.1f s", accepted_total,
             per_seed.c_str(), secs));

  {
    bool exact = true;
    for (std::size_t n : {0u, 1u, 50u, 999u}) {
      VehicleMap m;
      m.objects.resize(n);
      exact = exact && encode_map(m).size() == map_file_size(n, m.frame_id) &&
              map_file_size(n, m.frame_id) == 12 + m.frame_id.size() + 26 * n + 4;
    }
    VehicleMap thousand = same.map_a;
    thousand.objects.resize(1000, same.map_a.objects.front());
    const std::string bytes = encode_map(thousand);
    const bool round_trip = encode_map(decode_map(bytes)) == bytes;
    const double mb = static_cast<double>(bytes.size()) / 1e6;
    report(8, exact && round_trip && mb < 0.03,
           fmt("1000-object map %zu bytes = %.4f MB (limit 0.03); size formula %s; "
               "simulated map of %zu objects is %zu bytes",
               bytes.size(), mb, exact ? "exact" : "WRONG", same.map_a.size(),
               encode_map(same.map_a).size()));
  }

  {
    t0 = Clock::now();
    // SL 20 is the largest stride that every WL in the sweep admits (SL <= WL).
    const std::vector<int> wls{25, 50, 100};
    const std::vector<int> sls{20, 40};
    const auto rows = bench_search(same.map_a, same.map_b, cfg.alignment, wls, sls, 5, 1);
    auto row = [&](int wl, int sl) {
      for (const BenchRow& r : rows)
        if (r.WL == wl && r.SL == sl) return r;
      return BenchRow{};
    };
    const BenchRow s20 = row(50, 20), s40 = row(50, 40);
    const BenchRow w25 = row(25, 20), w50 = row(50, 20), w100 = row(100, 20);
    secs = seconds_since(t0);
    const double ratio = s40.mean_s / s20.mean_s;
    const bool increasing = w25.repeats == 5 && w25.mean_s < w50.mean_s && w50.mean_s < w100.mean_s;
    report(9, ratio >= 0.2 && ratio <= 0.35 && increasing && secs < 600.0,
           fmt("WL 50: SL 20 -> 40 time ratio %.3f (band 0.2-0.35); SL 20: WL 25/50/100 "
               "means %.3f/%.3f/%.3f s (std %.3f/%.3f/%.3f); 5 repeats, 1 worker; %.1f s",
               ratio, w25.mean_s, w50.mean_s, w100.mean_s, w25.std_s, w50.std_s, w100.std_s,
               secs));
  }

  {
    bool nested = true;
    bool consistent = true;
    std::string counts;
    std::set<std::pair<int, int>> prev;
    for (const Run* r : {&same, &season}) {
      for (const AlignmentHypothesis& h : r->hyps)
        consistent = consistent && h.accepted == h.accepted_at(cfg.alignment.s_lim);
    }
    for (int th = 0; th <= 40; ++th) {
      std::set<std::pair<int, int>> cur;
      for (const AlignmentHypothesis& h : same.hyps)
        if (h.accepted_at(th)) cur.insert({h.offset_i, h.offset_j});
      if (th > 0) nested = nested && std::includes(prev.begin(), prev.end(), cur.begin(), cur.end());
      if (th % 10 == 0) counts += fmt(" s%d:%zu", th, cur.size());
      prev = std::move(cur);
    }
    report(10, nested && consistent,
           fmt("accepted sets nested over s_lim 0..40: %s;%s", nested ? "yes" : "NO",
               counts.c_str()));
  }

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
