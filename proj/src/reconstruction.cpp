#include "segmap/reconstruction.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_map>

namespace segmap {

namespace {

using Mat23 = Eigen::Matrix<double, 2, 3>;

struct Linearization {
  double cost = 0.0;
  Mat3 hessian = Mat3::Zero();   // J^T J / sigma^2
  Vec3 half_gradient = Vec3::Zero();  // J^T r / sigma^2
  bool any_behind = false;
};

Linearization linearize(std::span<const PosedObservation> obs, const CameraIntrinsics& intr,
                        double sigma_px, const Vec3& point, bool with_jacobian) {
  Linearization lin;
  const double w = 1.0 / (sigma_px * sigma_px);
  for (const PosedObservation& o : obs) {
    const Vec3 pc = o.pose.to_camera(point);
    if (pc.z() <= 1e-6) {
      lin.any_behind = true;
      continue;
    }
    const double iz = 1.0 / pc.z();
    const Vec2 proj(intr.fx * pc.x() * iz + intr.cx, intr.fy * pc.y() * iz + intr.cy);
    const Vec2 r = proj - o.pixel;
    lin.cost += w * r.squaredNorm();
    if (!with_jacobian) continue;
    Mat23 dproj;
    dproj << intr.fx * iz, 0.0, -intr.fx * pc.x() * iz * iz, 0.0, intr.fy * iz,
        -intr.fy * pc.y() * iz * iz;
    const Mat23 j = dproj * o.pose.rotation.transpose();
    lin.hessian += w * j.transpose() * j;
    lin.half_gradient += w * j.transpose() * r;
  }
  return lin;
}

Vec3 world_ray(const PosedObservation& o, const CameraIntrinsics& intr) {
  return (o.pose.rotation * back_project(intr, o.pixel)).normalized();
}

}  // namespace

double reprojection_cost(std::span<const PosedObservation> obs, const CameraIntrinsics& intr,
                         double sigma_px, const Vec3& point) {
  return linearize(obs, intr, sigma_px, point, false).cost;
}

Vec3 reprojection_gradient(std::span<const PosedObservation> obs, const CameraIntrinsics& intr,
                           double sigma_px, const Vec3& point) {
  return 2.0 * linearize(obs, intr, sigma_px, point, true).half_gradient;
}

double ray_parallax_deg(const PosedObservation& a, const PosedObservation& b,
                        const CameraIntrinsics& intr) {
  const double c = std::clamp(world_ray(a, intr).dot(world_ray(b, intr)), -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

std::optional<Vec3> midpoint_triangulation(const PosedObservation& a, const PosedObservation& b,
                                           const CameraIntrinsics& intr) {
  const Vec3 d1 = world_ray(a, intr);
  const Vec3 d2 = world_ray(b, intr);
  const Vec3 c1 = a.pose.center();
  const Vec3 c2 = b.pose.center();
  // Minimize |c1 + s d1 - c2 - t d2|^2 over s, t.
  const double dd = d1.dot(d2);
  const double denom = 1.0 - dd * dd;
  if (denom < 1e-12) return std::nullopt;
  const Vec3 w0 = c1 - c2;
  const double e1 = d1.dot(w0);
  const double e2 = d2.dot(w0);
  const double s = (dd * e2 - e1) / denom;
  const double t = (e2 - dd * e1) / denom;
  return 0.5 * ((c1 + s * d1) + (c2 + t * d2));
}

TriangulationResult triangulate_track(std::span<const PosedObservation> obs,
                                      const CameraIntrinsics& intr,
                                      const ReconstructionParams& params) {
  TriangulationResult res;
  if (obs.size() < 2 || static_cast<int>(obs.size()) < params.n_lim) {
    res.reason = Divergence::too_short;
    return res;
  }
  const PosedObservation& first = obs.front();
  const PosedObservation& last = obs.back();
  if (ray_parallax_deg(first, last, intr) < params.min_parallax_deg) {
    res.reason = Divergence::low_parallax;
    return res;
  }
  const auto init = midpoint_triangulation(first, last, intr);
  if (!init) {
    res.reason = Divergence::low_parallax;
    return res;
  }

  Vec3 x = *init;
  Linearization lin = linearize(obs, intr, params.sigma_px, x, true);
  double cost = lin.any_behind ? std::numeric_limits<double>::infinity() : lin.cost;
  if (!std::isfinite(cost)) {
    res.reason = Divergence::behind_camera;
    return res;
  }
  res.cost_history.push_back(cost);
  double lambda = 1e-3;
  bool converged = false;
  int iter = 0;
  while (iter < params.max_iters && !converged) {
    ++iter;
    Mat3 a = lin.hessian;
    a.diagonal() += lambda * lin.hessian.diagonal();
    const Vec3 delta = a.ldlt().solve(-lin.half_gradient);
    if (!delta.allFinite()) break;
    const Vec3 candidate = x + delta;
    const Linearization trial = linearize(obs, intr, params.sigma_px, candidate, true);
    const double new_cost =
        trial.any_behind ? std::numeric_limits<double>::infinity() : trial.cost;
    if (new_cost <= cost) {
      const double rel = cost > 0.0 ? (cost - new_cost) / cost : 0.0;
      x = candidate;
      cost = new_cost;
      lin = trial;
      lambda *= 0.5;
      res.cost_history.push_back(cost);
      if (delta.norm() < params.step_tol || rel < params.cost_tol || cost == 0.0) {
        converged = true;
      }
    } else {
      lambda *= 10.0;
      if (delta.norm() < params.step_tol) converged = true;
    }
  }
  res.iterations = iter;
  res.final_cost = cost;
  if (!converged) {
    res.reason = Divergence::no_convergence;
    return res;
  }
  for (const PosedObservation& o : obs) {
    if (o.pose.to_camera(x).z() <= 1e-6) {
      res.reason = Divergence::behind_camera;
      return res;
    }
  }
  // A solution that ran off towards infinity is seen under no parallax.
  const Vec3 to_first = (x - first.pose.center()).normalized();
  const Vec3 to_last = (x - last.pose.center()).normalized();
  const double seen = std::acos(std::clamp(to_first.dot(to_last), -1.0, 1.0)) * 180.0 / std::numbers::pi;
  if (!(seen >= params.min_parallax_deg)) {
    res.reason = Divergence::low_parallax;
    return res;
  }
  res.position = x;
  return res;
}

std::optional<double> metric_size(std::span<const PosedObservation> obs, const Vec3& position,
                                  const CameraIntrinsics& intr) {
  const double f = intr.mean_focal();
  double sum = 0.0;
  std::size_t n = 0;
  for (const PosedObservation& o : obs) {
    const double depth = o.pose.to_camera(position).z();
    if (depth <= 1e-6) continue;
    sum += o.size_px * depth / f;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

namespace {

std::vector<PosedObservation> gather(const FlightLog& log,
                                     const std::unordered_map<KeyframeId, std::size_t>& index,
                                     const Track& track) {
  std::vector<PosedObservation> out;
  out.reserve(track.entries.size());
  for (const TrackEntry& e : track.entries) {
    const auto it = index.find(e.keyframe_id);
    if (it == index.end()) throw std::out_of_range("track references unknown keyframe");
    const Keyframe& kf = log.keyframes[it->second];
    const SegmentObservation& so = kf.observations.at(static_cast<std::size_t>(e.obs_index));
    out.push_back({kf.pose, so.centroid, so.size_px});
  }
  return out;
}

std::unordered_map<KeyframeId, std::size_t> keyframe_index(const FlightLog& log) {
  std::unordered_map<KeyframeId, std::size_t> index;
  for (std::size_t i = 0; i < log.keyframes.size(); ++i) index[log.keyframes[i].id] = i;
  return index;
}

}  // namespace

std::vector<PosedObservation> gather_observations(const FlightLog& log, const Track& track) {
  return gather(log, keyframe_index(log), track);
}

MapBuildResult build_map(const FlightLog& log, std::span<const Track> tracks,
                         const ReconstructionParams& params, std::uint64_t params_hash) {
  MapBuildResult out;
  out.map.params_hash = params_hash;
  if (!log.keyframes.empty()) out.map.frame_id = log.keyframes.front().pose.frame_id;

  std::vector<const Track*> ordered;
  for (const Track& t : tracks) ordered.push_back(&t);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const Track* a, const Track* b) { return a->id < b->id; });

  const auto index = keyframe_index(log);
  for (const Track* t : ordered) {
    if (static_cast<int>(t->entries.size()) < params.n_lim) {
      ++out.too_short;
      continue;
    }
    const auto obs = gather(log, index, *t);
    const TriangulationResult tri = triangulate_track(obs, log.intrinsics, params);
    if (!tri.position) {
      ++out.diverged;
      continue;
    }
    const auto size = metric_size(obs, *tri.position, log.intrinsics);
    if (!size || !(*size > 0.0)) {
      ++out.diverged;
      continue;
    }
    MapObject m;
    m.position = *tri.position;
    m.size_m = *size;
    m.track_len = static_cast<int>(t->entries.size());
    m.first_kf = t->entries.front().keyframe_id;
    m.last_kf = t->entries.back().keyframe_id;
    out.map.objects.push_back(m);
  }
  return out;
}

}  // namespace segmap
