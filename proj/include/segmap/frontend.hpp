#pragma once

#include "segmap/observation.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace segmap {

/// Malformed log line. what() carries the 1-based line number.
class LogParseError : public std::runtime_error {
 public:
  LogParseError(std::size_t line, const std::string& msg);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// A record parsed fine but breaks a data-model invariant.
class InvariantViolation : public std::runtime_error {
 public:
  InvariantViolation(std::string field, const std::string& msg);
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

inline constexpr int kLogVersion = 1;

FlightLog load_flight_log(const std::filesystem::path& path);
FlightLog parse_flight_log(std::istream& in);
void save_flight_log(const FlightLog& log, const std::filesystem::path& path);
void write_flight_log(const FlightLog& log, std::ostream& out);

/// Greedy distance gating: frame 0, then every frame at least `min_travel`
/// meters from the previously selected one.
std::vector<std::size_t> gate_keyframes(std::span<const Pose> poses, double min_travel);

/// Row-major binary raster.
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  BinaryMask() = default;
  BinaryMask(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, 0) {}
  bool at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v = true) {
    pixels[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
  }
};

/// Decodes alternating zero/one run lengths (first run is zeros) over a
/// row-major raster. Throws std::invalid_argument when the runs overflow the
/// raster.
BinaryMask decode_rle(std::span<const std::uint32_t> runs, int width, int height);
std::vector<std::uint32_t> encode_rle(const BinaryMask& mask);

/// Centroid, population covariance and size descriptor of a mask. Returns
/// nullopt for masks of two pixels or fewer.
std::optional<SegmentObservation> summarize_mask(const BinaryMask& mask);
std::optional<SegmentObservation> summarize_pixels(std::span<const Eigen::Vector2i> pixels);

}  // namespace segmap
