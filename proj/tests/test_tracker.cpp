#include "fixtures.hpp"

#include "segmap/assignment.hpp"
#include "segmap/tracker.hpp"

#include <doctest.h>

using namespace segmap;
using fixtures::blob;

namespace {

// Nadir pass along +x at 100 m, 2 m between keyframes: ground points shift
// 10 px per keyframe.
struct Scripted {
  CameraIntrinsics intr = fixtures::camera();
  FlightLog log;

  explicit Scripted(int frames) {
    log.intrinsics = intr;
    for (int k = 0; k < frames; ++k) {
      Keyframe kf;
      kf.id = 10 + k;
      kf.timestamp = 0.2 * k;
      kf.pose = fixtures::nadir(2.0 * k, 0, 100);
      kf.mu_p = k == 0 ? 0.0 : 10.0;
      kf.sigma_p = 1.0;
      log.keyframes.push_back(kf);
    }
  }
  void see(int frame, const Vec3& p, double size_px = 8.0) {
    Keyframe& kf = log.keyframes[static_cast<std::size_t>(frame)];
    kf.observations.push_back(blob(*project(kf.pose, intr, p), size_px));
  }
};

}  // namespace

TEST_CASE("assign: single candidate") {
  const CameraIntrinsics k = fixtures::camera();
  const Pose prev = fixtures::nadir(0, 0, 100);
  const Pose cur = fixtures::nadir(2, 0, 100);
  const Vec3 p(5, 3, 0);
  const SegmentObservation last = blob(*project(prev, k, p), 6.0);
  TrackCandidate c{7, &last, prev, 10.0, 1.0};
  const std::vector<TrackCandidate> tracks{c};
  const TrackerParams params;

  const std::vector<SegmentObservation> good{blob(*project(cur, k, p), 6.1)};
  const AssignResult r = assign(tracks, good, cur, k, params);
  CHECK(r.matches == std::vector<std::pair<int, int>>{{7, 0}});
  CHECK(r.new_track_obs.empty());

  // Displaced 40 px perpendicular to the (horizontal) epipolar line.
  const std::vector<SegmentObservation> off{blob(*project(cur, k, p) + Vec2(0, 40), 6.0)};
  const AssignResult r2 = assign(tracks, off, cur, k, params);
  CHECK(r2.matches.empty());
  CHECK(r2.new_track_obs == std::vector<int>{0});

  // Size mismatch beyond h_lim leaves the pair at zero score, below q_lim.
  const std::vector<SegmentObservation> big{blob(*project(cur, k, p), 12.0)};
  CHECK(assign(tracks, big, cur, k, params).matches.empty());

  CHECK(assign({}, good, cur, k, params).new_track_obs == std::vector<int>{0});
  CHECK(assign(tracks, {}, cur, k, params).matches.empty());
}

TEST_CASE("assign: two tracks, diagonal dominance") {
  const CameraIntrinsics k = fixtures::camera();
  const Pose prev = fixtures::nadir(0, 0, 100);
  const Pose cur = fixtures::nadir(2, 0, 100);
  const Vec3 p0(5, 3, 0), p1(5, -3, 0);
  const SegmentObservation l0 = blob(*project(prev, k, p0), 6.0);
  const SegmentObservation l1 = blob(*project(prev, k, p1), 6.4);
  const std::vector<TrackCandidate> tracks{{0, &l0, prev, 10.0, 1.0}, {1, &l1, prev, 10.0, 1.0}};
  const std::vector<SegmentObservation> obs{blob(*project(cur, k, p0), 6.0),
                                            blob(*project(cur, k, p1), 6.4)};
  const TrackerParams params;
  const AssignResult r = assign(tracks, obs, cur, k, params);
  CHECK(r.matches == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}});

  Eigen::MatrixXd s(2, 2);
  for (int t = 0; t < 2; ++t)
    for (int o = 0; o < 2; ++o) s(t, o) = association_score(tracks[t], obs[o], cur, k, params);
  const double diag = s(0, 0) + s(1, 1);
  const double anti = (s(0, 1) == kInfeasible || s(1, 0) == kInfeasible)
                          ? -1.0
                          : s(0, 1) + s(1, 0);
  CHECK(diag > anti);
}

TEST_CASE("tracker: continuous track handed on") {
  Scripted sc(8);
  const Vec3 p(8, 5, 0);
  for (int f = 1; f <= 6; ++f) sc.see(f, p);
  TrackerParams params;
  std::size_t dropped = 0;
  const auto tracks = track_log(sc.log, params, &dropped);
  REQUIRE(tracks.size() == 1);
  CHECK(tracks[0].entries.size() == 6);
  CHECK(tracks[0].entries.front().keyframe_id == 11);
  CHECK(tracks[0].entries.back().keyframe_id == 16);
  CHECK(dropped == 0);
}

TEST_CASE("tracker: short track dropped") {
  Scripted sc(8);
  for (int f = 0; f < 3; ++f) sc.see(f, Vec3(0, 0, 0));
  std::size_t dropped = 0;
  CHECK(track_log(sc.log, TrackerParams{}, &dropped).empty());
  CHECK(dropped == 1);
}

TEST_CASE("tracker: a gap of t_lim keyframes keeps the track") {
  TrackerParams params;
  Scripted sc(12);
  const Vec3 p(10, -4, 0);
  for (int f : {0, 1, 2}) sc.see(f, p);
  // frames 3..5 miss it (t_lim = 3), then it returns
  for (int f : {6, 7}) sc.see(f, p);
  const auto tracks = track_log(sc.log, params);
  REQUIRE(tracks.size() == 1);
  CHECK(tracks[0].entries.size() == 5);

  Scripted longer(12);
  for (int f : {0, 1, 2}) longer.see(f, p);
  for (int f : {7, 8, 9}) longer.see(f, p);  // gap of 4
  std::size_t dropped = 0;
  CHECK(track_log(longer.log, params, &dropped).empty());
  CHECK(dropped == 2);
}

TEST_CASE("tracker: keyframes must arrive in order") {
  Tracker t(fixtures::camera(), TrackerParams{});
  Keyframe a;
  a.id = 5;
  t.step(a);
  Keyframe b;
  b.id = 5;
  CHECK_THROWS_AS(t.step(b), OutOfOrderKeyframe);
  b.id = 3;
  CHECK_THROWS_AS(t.step(b), OutOfOrderKeyframe);
}

TEST_CASE("tracker: several objects stay separate") {
  Scripted sc(10);
  const std::vector<Vec3> pts{{6, 10, 0}, {6, -10, 0}, {12, 0, 2}, {20, 25, 0}};
  for (int f = 0; f < 10; ++f)
    for (std::size_t k = 0; k < pts.size(); ++k) sc.see(f, pts[k], 5.0 + k);
  const auto tracks = track_log(sc.log, TrackerParams{});
  REQUIRE(tracks.size() == pts.size());
  for (std::size_t k = 0; k < tracks.size(); ++k) {
    CHECK(tracks[k].entries.size() == 10);
    for (const TrackEntry& e : tracks[k].entries) CHECK(e.obs_index == static_cast<int>(k));
  }
}
