#include "segmap/pipeline.hpp"

#include "segmap/reconstruction.hpp"
#include "segmap/tracker.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace segmap {

MappingResult map_from_log(const FlightLog& log, const PipelineConfig& cfg) {
  if (!cfg.is_valid()) throw std::invalid_argument("invalid pipeline configuration");
  MappingResult out;
  const std::vector<Track> tracks = track_log(log, cfg.tracker, &out.dropped_tracks);
  out.completed_tracks = tracks.size();
  MapBuildResult built = build_map(log, tracks, cfg.reconstruction, config_hash(cfg));
  out.map = std::move(built.map);
  out.diverged = built.diverged;
  out.too_short = built.too_short;
  return out;
}

Region SurveyScenario::region() const {
  return {Vec3(0.0, -0.5 * width, 0.0), Vec3(length, 0.5 * width, relief)};
}

FlightSpec SurveyScenario::flight(double keyframe_spacing) const {
  FlightSpec f;
  f.waypoints = {Vec3(-run_in, lateral_offset, altitude), Vec3(length + run_in, lateral_offset, altitude)};
  f.keyframe_spacing = keyframe_spacing;
  return f;
}

SimWorld survey_world(const SurveyScenario& s, std::uint64_t seed) {
  const Region r = s.region();
  return generate_world(seed, static_cast<double>(s.objects) / r.area(), r, s.extent_min,
                        s.extent_max);
}

SimulatedFlight survey_flight(const SurveyScenario& s, const SimWorld& world, double keyframe_spacing,
                              std::uint64_t seed) {
  return simulate_flight(world, s.flight(keyframe_spacing), s.noise, s.camera, seed);
}

namespace {

std::string num(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double parse_num(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw std::invalid_argument("bad number '" + s + "'");
  return v;
}

int parse_int(const std::string& s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw std::invalid_argument("bad integer '" + s + "'");
  return v;
}

constexpr const char* kHypHeader = "offset_i,offset_j,n_assoc,roll,pitch,yaw,tx,ty,tz,accepted";

}  // namespace

void write_hypotheses_csv(std::ostream& out, std::span<const AlignmentHypothesis> hyps) {
  out << kHypHeader << '\n';
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const AlignmentHypothesis& h : hyps) {
    const Vec3 t = h.transform.translation;
    out << h.offset_i << ',' << h.offset_j << ',' << h.score() << ','
        << num(h.registered ? h.roll : nan) << ',' << num(h.registered ? h.pitch : nan) << ','
        << num(h.registered ? h.yaw : nan) << ',' << num(h.registered ? t.x() : nan) << ','
        << num(h.registered ? t.y() : nan) << ',' << num(h.registered ? t.z() : nan) << ','
        << (h.accepted ? 1 : 0) << '\n';
  }
}

std::vector<AlignmentHypothesis> read_hypotheses_csv(std::istream& in, double alpha_lim) {
  std::string line;
  if (!std::getline(in, line) || line != kHypHeader) {
    throw std::invalid_argument("hypothesis report has an unexpected header");
  }
  std::vector<AlignmentHypothesis> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 10) {
      throw std::invalid_argument("hypothesis report line " + std::to_string(lineno) + " has " +
                                  std::to_string(cells.size()) + " fields");
    }
    try {
      AlignmentHypothesis h;
      h.offset_i = parse_int(cells[0]);
      h.offset_j = parse_int(cells[1]);
      const int n = parse_int(cells[2]);
      if (n < 0) throw std::invalid_argument("negative association count");
      h.selected.resize(static_cast<std::size_t>(n));
      h.roll = parse_num(cells[3]);
      h.pitch = parse_num(cells[4]);
      h.yaw = parse_num(cells[5]);
      h.transform.translation = Vec3(parse_num(cells[6]), parse_num(cells[7]), parse_num(cells[8]));
      h.registered = std::isfinite(h.roll) && std::isfinite(h.pitch);
      if (h.registered) h.transform.rotation = rotation_ypr(h.yaw, h.pitch, h.roll);
      h.angular_ok = h.registered && std::max(std::abs(h.roll), std::abs(h.pitch)) <= alpha_lim;
      h.accepted = parse_int(cells[9]) != 0;
      out.push_back(std::move(h));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("hypothesis report line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace segmap
