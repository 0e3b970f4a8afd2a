#include "segmap/frontend.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace segmap {

using nlohmann::json;

LogParseError::LogParseError(std::size_t line, const std::string& msg)
    : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}

InvariantViolation::InvariantViolation(std::string field, const std::string& msg)
    : std::runtime_error("invariant violated for '" + field + "': " + msg),
      field_(std::move(field)) {}

namespace {

Vec2 read_vec2(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("expected 2-vector");
  return {j[0].get<double>(), j[1].get<double>()};
}

Vec3 read_vec3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json intrinsics_json(const CameraIntrinsics& k) {
  return json{{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy},
              {"width", k.width}, {"height", k.height}};
}

CameraIntrinsics read_intrinsics(const json& j) {
  CameraIntrinsics k;
  k.fx = j.at("fx").get<double>();
  k.fy = j.at("fy").get<double>();
  k.cx = j.at("cx").get<double>();
  k.cy = j.at("cy").get<double>();
  k.width = j.at("width").get<int>();
  k.height = j.at("height").get<int>();
  return k;
}

Keyframe read_keyframe(const json& j) {
  Keyframe kf;
  kf.id = j.at("id").get<KeyframeId>();
  kf.timestamp = j.at("timestamp").get<double>();
  const json& q = j.at("q");
  if (!q.is_array() || q.size() != 4) throw std::invalid_argument("q must be [w,x,y,z]");
  const Eigen::Quaterniond quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
                                q[3].get<double>());
  const double n = quat.norm();
  if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-6) {
    throw InvariantViolation("q", "quaternion norm is not 1 within 1e-6");
  }
  kf.pose = Pose::from_quaternion(quat, read_vec3(j.at("t")));
  kf.mu_p = j.at("mu_p").get<double>();
  kf.sigma_p = j.at("sigma_p").get<double>();
  if (!std::isfinite(kf.mu_p) || kf.mu_p < 0) throw InvariantViolation("mu_p", "must be >= 0");
  if (!std::isfinite(kf.sigma_p) || kf.sigma_p < 0) {
    throw InvariantViolation("sigma_p", "must be >= 0");
  }
  kf.sigma_p = std::max(kf.sigma_p, kMinSigmaP);
  return kf;
}

SegmentObservation read_observation(const json& j, int descriptor_dim) {
  SegmentObservation obs;
  obs.centroid = read_vec2(j.at("centroid"));
  const json& c = j.at("cov");
  if (!c.is_array() || c.size() != 3) throw std::invalid_argument("cov must be [p00,p01,p11]");
  obs.covariance << c[0].get<double>(), c[1].get<double>(), c[1].get<double>(),
      c[2].get<double>();
  obs.pixel_count = j.at("pixel_count").get<int>();
  obs.size_px = std::sqrt(std::max(0.0, largest_eigenvalue(obs.covariance)));
  if (j.contains("size_px") &&
      std::abs(j["size_px"].get<double>() - obs.size_px) > 1e-6) {
    throw InvariantViolation("size_px", "does not match sqrt of largest covariance eigenvalue");
  }
  if (j.contains("descriptors")) {
    for (const json& d : j["descriptors"]) {
      if (!d.is_array() || static_cast<int>(d.size()) != descriptor_dim) {
        throw InvariantViolation("descriptors", "length differs from declared dimension");
      }
      Descriptor v(descriptor_dim);
      for (int k = 0; k < descriptor_dim; ++k) v(k) = d[static_cast<std::size_t>(k)].get<double>();
      obs.descriptors.push_back(std::move(v));
    }
  }
  const std::string bad = check_observation(obs);
  if (!bad.empty()) throw InvariantViolation(bad, "observation record");
  return obs;
}

}  // namespace

FlightLog parse_flight_log(std::istream& in) {
  FlightLog log;
  bool have_header = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw LogParseError(lineno, e.what());
    }
    try {
      const std::string type = j.at("type").get<std::string>();
      if (!have_header) {
        if (type != "header") throw LogParseError(lineno, "first record must be the header");
        const int version = j.at("version").get<int>();
        if (version != kLogVersion) {
          throw LogParseError(lineno, "unsupported log version " + std::to_string(version));
        }
        log.intrinsics = read_intrinsics(j.at("intrinsics"));
        if (!log.intrinsics.is_valid()) throw InvariantViolation("intrinsics", "out of range");
        log.descriptor_dim = j.value("descriptor_dim", 0);
        if (log.descriptor_dim < 0) throw InvariantViolation("descriptor_dim", "negative");
        if (j.contains("meta")) {
          for (const auto& [k, v] : j["meta"].items()) log.meta[k] = v.get<std::string>();
        }
        have_header = true;
      } else if (type == "keyframe") {
        Keyframe kf = read_keyframe(j);
        if (!log.keyframes.empty() && kf.id <= log.keyframes.back().id) {
          throw InvariantViolation("id", "keyframe ids must be strictly increasing");
        }
        log.keyframes.push_back(std::move(kf));
      } else if (type == "obs" || type == "mask") {
        const KeyframeId kid = j.at("keyframe").get<KeyframeId>();
        if (log.keyframes.empty() || log.keyframes.back().id != kid) {
          throw LogParseError(lineno, "record does not follow its keyframe");
        }
        if (type == "obs") {
          log.keyframes.back().observations.push_back(read_observation(j, log.descriptor_dim));
        } else {
          const auto runs = j.at("rle").get<std::vector<std::uint32_t>>();
          const BinaryMask mask =
              decode_rle(runs, log.intrinsics.width, log.intrinsics.height);
          if (auto obs = summarize_mask(mask)) {
            log.keyframes.back().observations.push_back(std::move(*obs));
          }
        }
      } else if (type == "header") {
        throw LogParseError(lineno, "duplicate header");
      } else {
        throw LogParseError(lineno, "unknown record type '" + type + "'");
      }
    } catch (const LogParseError&) {
      throw;
    } catch (const InvariantViolation& e) {
      throw InvariantViolation(e.field(), "line " + std::to_string(lineno) + ": " + e.what());
    } catch (const std::exception& e) {
      throw LogParseError(lineno, e.what());
    }
  }
  if (!have_header) throw LogParseError(lineno, "missing header");
  return log;
}

FlightLog load_flight_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse_flight_log(in);
}

void write_flight_log(const FlightLog& log, std::ostream& out) {
  json header{{"type", "header"},
              {"version", kLogVersion},
              {"intrinsics", intrinsics_json(log.intrinsics)},
              {"descriptor_dim", log.descriptor_dim}};
  if (!log.meta.empty()) header["meta"] = log.meta;
  out << header.dump() << '\n';
  for (const Keyframe& kf : log.keyframes) {
    const Eigen::Quaterniond q = kf.pose.quaternion();
    const json rec{{"type", "keyframe"},
                   {"id", kf.id},
                   {"timestamp", kf.timestamp},
                   {"q", {q.w(), q.x(), q.y(), q.z()}},
                   {"t", {kf.pose.translation.x(), kf.pose.translation.y(), kf.pose.translation.z()}},
                   {"mu_p", kf.mu_p},
                   {"sigma_p", kf.sigma_p}};
    out << rec.dump() << '\n';
    for (const SegmentObservation& obs : kf.observations) {
      json o{{"type", "obs"},
             {"keyframe", kf.id},
             {"centroid", {obs.centroid.x(), obs.centroid.y()}},
             {"cov", {obs.covariance(0, 0), obs.covariance(0, 1), obs.covariance(1, 1)}},
             {"size_px", obs.size_px},
             {"pixel_count", obs.pixel_count}};
      if (!obs.descriptors.empty()) {
        json ds = json::array();
        for (const Descriptor& d : obs.descriptors) {
          ds.push_back(std::vector<double>(d.data(), d.data() + d.size()));
        }
        o["descriptors"] = std::move(ds);
      }
      out << o.dump() << '\n';
    }
  }
}

void save_flight_log(const FlightLog& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_flight_log(log, out);
}

}  // namespace segmap
