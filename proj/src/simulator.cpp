#include "segmap/simulator.hpp"

#include "segmap/frontend.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

namespace segmap {

namespace {

using Rng = std::mt19937_64;

// Independent, reproducible streams derived from one seed.
Rng stream(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
  return Rng(seq);
}

constexpr int kLatticeSide = 8;

}  // namespace

SimWorld generate_world(std::uint64_t seed, double density, const Region& region,
                        double extent_min, double extent_max) {
  if (!(density > 0.0) || !(region.area() > 0.0)) {
    throw std::invalid_argument("world needs positive density and a non-empty region");
  }
  if (!(extent_min > 0.0) || extent_max < extent_min) {
    throw std::invalid_argument("extent range must be positive and ordered");
  }
  Rng rng = stream(seed, 1);
  std::uniform_real_distribution<double> ux(region.min.x(), region.max.x());
  std::uniform_real_distribution<double> uy(region.min.y(), region.max.y());
  std::uniform_real_distribution<double> uz(region.min.z(), region.max.z());
  std::uniform_real_distribution<double> ue(extent_min, extent_max);

  SimWorld w;
  w.region = region;
  w.seed = seed;
  const auto count = static_cast<std::size_t>(std::llround(density * region.area()));
  w.objects.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    WorldObject o;
    o.position = Vec3(ux(rng), uy(rng), uz(rng));
    o.extent = ue(rng);
    o.stable_id = static_cast<std::int64_t>(k);
    w.objects.push_back(o);
  }
  return w;
}

SimWorld perturb_season(const SimWorld& world, const SeasonModel& season, std::uint64_t seed) {
  Rng rng = stream(seed, 2);
  const std::size_t n = world.objects.size();
  const auto n_drop = static_cast<std::size_t>(std::llround(season.dropout_frac * static_cast<double>(n)));
  const auto n_spawn = static_cast<std::size_t>(std::llround(season.spawn_frac * static_cast<double>(n)));

  std::vector<std::size_t> idx(n);
  for (std::size_t k = 0; k < n; ++k) idx[k] = k;
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<char> dropped(n, 0);
  for (std::size_t k = 0; k < n_drop && k < n; ++k) dropped[idx[k]] = 1;

  SimWorld out;
  out.region = world.region;
  out.seed = world.seed;
  std::lognormal_distribution<double> scale(0.0, season.size_scale_sigma);
  std::int64_t max_id = -1;
  for (std::size_t k = 0; k < n; ++k) {
    max_id = std::max(max_id, world.objects[k].stable_id);
    if (dropped[k]) continue;
    WorldObject o = world.objects[k];
    if (season.size_scale_sigma > 0.0) o.extent *= scale(rng);
    out.objects.push_back(o);
  }

  double emin = std::numeric_limits<double>::infinity();
  double emax = 0.0;
  for (const auto& o : world.objects) {
    emin = std::min(emin, o.extent);
    emax = std::max(emax, o.extent);
  }
  if (n == 0) emin = emax = 1.0;
  const Region& r = world.region;
  std::uniform_real_distribution<double> ux(r.min.x(), r.max.x());
  std::uniform_real_distribution<double> uy(r.min.y(), r.max.y());
  std::uniform_real_distribution<double> uz(r.min.z(), r.max.z());
  std::uniform_real_distribution<double> ue(emin, emax);
  for (std::size_t k = 0; k < n_spawn; ++k) {
    WorldObject o;
    o.position = Vec3(ux(rng), uy(rng), uz(rng));
    o.extent = ue(rng);
    o.stable_id = ++max_id;
    out.objects.push_back(o);
  }
  return out;
}

Mat3 camera_rotation(double heading_rad, double pitch_deg) {
  const Vec3 forward(std::cos(heading_rad), std::sin(heading_rad), 0.0);
  const Vec3 up = Vec3::UnitZ();
  const double th = pitch_deg * std::numbers::pi / 180.0;
  const Vec3 z = std::cos(th) * forward + std::sin(th) * up;
  const Vec3 y = std::sin(th) * forward - std::cos(th) * up;
  const Vec3 x = y.cross(z);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return r;
}

SimulatedFlight simulate_flight(const SimWorld& world, const FlightSpec& spec,
                                const NoiseModel& noise, const CameraIntrinsics& intr,
                                std::uint64_t seed) {
  if (spec.waypoints.size() < 2) throw std::invalid_argument("flight needs at least 2 waypoints");
  if (!(spec.keyframe_spacing > 0.0)) throw std::invalid_argument("keyframe spacing must be > 0");
  if (!intr.is_valid()) throw std::invalid_argument("invalid intrinsics");

  Rng det_rng = stream(seed, 10);
  Rng px_rng = stream(seed, 11);
  Rng size_rng = stream(seed, 12);
  Rng odom_rng = stream(seed, 13);
  Rng vio_rng = stream(seed, 14);
  Rng desc_rng = stream(seed, 15);
  std::bernoulli_distribution detect(std::clamp(noise.detection_prob, 0.0, 1.0));
  std::normal_distribution<double> unit(0.0, 1.0);

  // Keyframe positions and headings along the polyline.
  struct Sample {
    Vec3 position;
    double heading;
    double distance;
  };
  std::vector<Sample> samples;
  double travelled = 0.0;
  double next = 0.0;
  for (std::size_t s = 0; s + 1 < spec.waypoints.size(); ++s) {
    const Vec3 a = spec.waypoints[s];
    const Vec3 b = spec.waypoints[s + 1];
    const double len = (b - a).norm();
    if (len <= 0.0) continue;
    const double heading = std::atan2(b.y() - a.y(), b.x() - a.x());
    while (next <= travelled + len + 1e-9) {
      const double u = (next - travelled) / len;
      samples.push_back({a + u * (b - a), heading, next});
      next += spec.keyframe_spacing;
    }
    travelled += len;
  }

  // Per-object descriptor prototypes.
  std::vector<std::vector<Descriptor>> prototypes;
  if (noise.descriptor_dim > 0) {
    for (const auto& o : world.objects) {
      Rng r = stream(world.seed ^ 0x9e3779b97f4a7c15ULL, static_cast<std::uint64_t>(o.stable_id));
      std::vector<Descriptor> set;
      for (int k = 0; k < noise.descriptors_per_object; ++k) {
        Descriptor d(noise.descriptor_dim);
        for (int c = 0; c < noise.descriptor_dim; ++c) d(c) = unit(r);
        set.push_back(d);
      }
      prototypes.push_back(std::move(set));
    }
  }

  SimulatedFlight out;
  out.log.intrinsics = intr;
  out.log.descriptor_dim = std::max(0, noise.descriptor_dim);
  out.truth.intrinsics = intr;
  out.truth.ground_z = world.region.min.z();
  out.truth.world = world.objects;

  const double f = intr.mean_focal();
  const double ground_z = world.region.min.z();
  const double relief = world.region.max.z() - world.region.min.z();
  const Vec3 origin = samples.empty() ? Vec3::Zero() : samples.front().position;
  Mat3 drift_r = Mat3::Identity();
  Vec3 drift_t = Vec3::Zero();
  std::size_t total_obs = 0;

  for (std::size_t k = 0; k < samples.size(); ++k) {
    const Sample& s = samples[k];
    Pose truth;
    truth.rotation = camera_rotation(s.heading, spec.pitch_deg);
    truth.translation = s.position;
    // Route through the quaternion so the in-memory pose equals what a log
    // reader rebuilds.
    truth = Pose::from_quaternion(truth.quaternion(), truth.translation);

    if (k > 0) {
      const double step = s.distance - samples[k - 1].distance;
      if (noise.odom_drift_sigma > 0.0) {
        drift_t += noise.odom_drift_sigma * step * Vec3(unit(odom_rng), unit(odom_rng), unit(odom_rng));
      }
      if (noise.odom_rot_drift_sigma > 0.0) {
        const double sd = noise.odom_rot_drift_sigma * step;
        drift_r = rotation_ypr(sd * unit(odom_rng), sd * unit(odom_rng), sd * unit(odom_rng)) * drift_r;
      }
    }
    Pose odom = truth;
    odom.rotation = drift_r * truth.rotation;
    odom.translation = drift_r * (truth.translation - origin) + origin + drift_t;

    Keyframe kf;
    kf.id = static_cast<KeyframeId>(k);
    kf.timestamp = s.distance / spec.speed;
    kf.pose = Pose::from_quaternion(odom.quaternion(), odom.translation);

    // Feature displacement statistics from a virtual ground lattice.
    if (k == 0) {
      kf.mu_p = 0.0;
      kf.sigma_p = 1.0;
    } else {
      const Pose& prev = out.truth.true_poses.back();
      std::vector<double> shifts;
      for (int gy = 0; gy < kLatticeSide; ++gy) {
        for (int gx = 0; gx < kLatticeSide; ++gx) {
          const Vec2 px((gx + 0.5) * intr.width / kLatticeSide, (gy + 0.5) * intr.height / kLatticeSide);
          const Vec3 ray = prev.rotation * back_project(intr, px);
          if (ray.z() >= -1e-12) continue;
          // Lattice heights span the object height range so the spread of
          // the shifts reflects the relief the objects actually have.
          const double frac = ((gx * 3 + gy * 5) % kLatticeSide + 0.5) / kLatticeSide;
          const double h = ground_z + frac * relief;
          const double t = (h - prev.translation.z()) / ray.z();
          if (t <= 0.0) continue;
          const auto now = project(truth, intr, prev.translation + t * ray);
          if (!now) continue;
          Vec2 a = px;
          Vec2 b = *now;
          if (noise.centroid_sigma > 0.0) {
            a += noise.centroid_sigma * Vec2(unit(vio_rng), unit(vio_rng));
            b += noise.centroid_sigma * Vec2(unit(vio_rng), unit(vio_rng));
          }
          shifts.push_back((b - a).norm());
        }
      }
      double mean = 0.0;
      for (double v : shifts) mean += v;
      mean = shifts.empty() ? 0.0 : mean / static_cast<double>(shifts.size());
      double var = 0.0;
      for (double v : shifts) var += (v - mean) * (v - mean);
      var = shifts.empty() ? 1.0 : var / static_cast<double>(shifts.size());
      kf.mu_p = mean;
      kf.sigma_p = std::max(std::sqrt(var), kMinSigmaP);
    }

    std::vector<std::int64_t> ids;
    for (std::size_t o = 0; o < world.objects.size(); ++o) {
      const WorldObject& obj = world.objects[o];
      const Vec3 pc = truth.to_camera(obj.position);
      if (pc.z() <= 1e-6) continue;
      const auto px = project(truth, intr, obj.position);
      if (px->x() < 0.0 || px->y() < 0.0 || px->x() >= intr.width || px->y() >= intr.height) continue;
      if (!detect(det_rng)) continue;
      SegmentObservation so;
      so.centroid = *px;
      if (noise.centroid_sigma > 0.0) {
        so.centroid += noise.centroid_sigma * Vec2(unit(px_rng), unit(px_rng));
      }
      double size = f * obj.extent / pc.z();
      if (noise.size_jitter > 0.0) size *= std::exp(noise.size_jitter * unit(size_rng));
      so.size_px = size;
      so.covariance = size * size * Mat2::Identity();
      so.size_px = std::sqrt(largest_eigenvalue(so.covariance));
      so.pixel_count = std::max(3, static_cast<int>(std::ceil(std::numbers::pi * size * size)));
      if (noise.descriptor_dim > 0) {
        for (const Descriptor& proto : prototypes[o]) {
          Descriptor d = proto;
          for (int c = 0; c < d.size(); ++c) d(c) += noise.descriptor_noise * unit(desc_rng);
          so.descriptors.push_back(std::move(d));
        }
      }
      kf.observations.push_back(std::move(so));
      ids.push_back(obj.stable_id);
    }
    total_obs += ids.size();
    out.truth.keyframe_ids.push_back(kf.id);
    out.truth.true_poses.push_back(truth);
    out.truth.obs_stable_ids.push_back(std::move(ids));
    out.log.keyframes.push_back(std::move(kf));
  }
  if (total_obs == 0) throw SimulationError("no object is visible from any keyframe");
  out.log.ground_truth_poses = out.truth.true_poses;
  return out;
}

// ---------------------------------------------------------------------------
// Ground-truth sidecar

using nlohmann::json;

void save_ground_truth(const GroundTruth& truth, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const CameraIntrinsics& k = truth.intrinsics;
  out << json{{"type", "truth"},
              {"version", 1},
              {"intrinsics",
               {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width},
                {"height", k.height}}},
              {"ground_z", truth.ground_z}}
             .dump()
      << '\n';
  for (std::size_t i = 0; i < truth.keyframe_ids.size(); ++i) {
    const Pose& p = truth.true_poses[i];
    const Eigen::Quaterniond q = p.quaternion();
    out << json{{"type", "pose"},
                {"keyframe", truth.keyframe_ids[i]},
                {"q", {q.w(), q.x(), q.y(), q.z()}},
                {"t", {p.translation.x(), p.translation.y(), p.translation.z()}}}
               .dump()
        << '\n';
    if (i < truth.obs_stable_ids.size()) {
      out << json{{"type", "obs_ids"},
                  {"keyframe", truth.keyframe_ids[i]},
                  {"stable_ids", truth.obs_stable_ids[i]}}
                 .dump()
          << '\n';
    }
  }
  for (const WorldObject& o : truth.world) {
    out << json{{"type", "object"},
                {"stable_id", o.stable_id},
                {"position", {o.position.x(), o.position.y(), o.position.z()}},
                {"extent", o.extent}}
               .dump()
        << '\n';
  }
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  GroundTruth truth;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (!header) {
        if (type != "truth") throw LogParseError(lineno, "first record must be the truth header");
        const json& k = j.at("intrinsics");
        truth.intrinsics = {k.at("fx").get<double>(), k.at("fy").get<double>(),
                            k.at("cx").get<double>(), k.at("cy").get<double>(),
                            k.at("width").get<int>(), k.at("height").get<int>()};
        truth.ground_z = j.at("ground_z").get<double>();
        header = true;
      } else if (type == "pose") {
        const auto q = j.at("q").get<std::vector<double>>();
        const auto t = j.at("t").get<std::vector<double>>();
        if (q.size() != 4 || t.size() != 3) throw LogParseError(lineno, "malformed pose");
        truth.keyframe_ids.push_back(j.at("keyframe").get<KeyframeId>());
        truth.true_poses.push_back(Pose::from_quaternion(Eigen::Quaterniond(q[0], q[1], q[2], q[3]),
                                                         Vec3(t[0], t[1], t[2]), "truth"));
      } else if (type == "obs_ids") {
        truth.obs_stable_ids.push_back(j.at("stable_ids").get<std::vector<std::int64_t>>());
      } else if (type == "object") {
        const auto p = j.at("position").get<std::vector<double>>();
        if (p.size() != 3) throw LogParseError(lineno, "malformed object position");
        truth.world.push_back({Vec3(p[0], p[1], p[2]), j.at("extent").get<double>(),
                               j.at("stable_id").get<std::int64_t>()});
      } else {
        throw LogParseError(lineno, "unknown record type '" + type + "'");
      }
    } catch (const LogParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw LogParseError(lineno, e.what());
    }
  }
  if (!header) throw LogParseError(lineno, "missing truth header");
  return truth;
}

}  // namespace segmap
