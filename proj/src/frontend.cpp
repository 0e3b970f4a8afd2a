#include "segmap/frontend.hpp"

#include <cmath>

namespace segmap {

double largest_eigenvalue(const Mat2& m) {
  const double a = m(0, 0);
  const double d = m(1, 1);
  const double b = 0.5 * (m(0, 1) + m(1, 0));
  const double mean = 0.5 * (a + d);
  const double radius = std::hypot(0.5 * (a - d), b);
  return mean + radius;
}

double smallest_eigenvalue(const Mat2& m) {
  const double a = m(0, 0);
  const double d = m(1, 1);
  const double b = 0.5 * (m(0, 1) + m(1, 0));
  const double mean = 0.5 * (a + d);
  const double radius = std::hypot(0.5 * (a - d), b);
  return mean - radius;
}

std::string check_observation(const SegmentObservation& obs) {
  if (!obs.centroid.allFinite()) return "centroid";
  if (!obs.covariance.allFinite() ||
      std::abs(obs.covariance(0, 1) - obs.covariance(1, 0)) >= 1e-9 ||
      smallest_eigenvalue(obs.covariance) < -1e-9) {
    return "covariance";
  }
  const double lmax = std::max(0.0, largest_eigenvalue(obs.covariance));
  if (!std::isfinite(obs.size_px) || std::abs(obs.size_px - std::sqrt(lmax)) > 1e-6) {
    return "size_px";
  }
  if (obs.pixel_count <= 2) return "pixel_count";
  return {};
}

std::vector<std::size_t> gate_keyframes(std::span<const Pose> poses, double min_travel) {
  std::vector<std::size_t> selected;
  if (poses.empty()) return selected;
  selected.push_back(0);
  Vec3 last = poses[0].translation;
  for (std::size_t i = 1; i < poses.size(); ++i) {
    if ((poses[i].translation - last).norm() >= min_travel) {
      selected.push_back(i);
      last = poses[i].translation;
    }
  }
  return selected;
}

BinaryMask decode_rle(std::span<const std::uint32_t> runs, int width, int height) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("mask raster must be non-empty");
  BinaryMask mask(width, height);
  const std::size_t total = mask.pixels.size();
  std::size_t pos = 0;
  bool value = false;
  for (const std::uint32_t run : runs) {
    if (pos + run > total) throw std::invalid_argument("RLE runs exceed mask raster");
    if (value) std::fill_n(mask.pixels.begin() + static_cast<std::ptrdiff_t>(pos), run, 1);
    pos += run;
    value = !value;
  }
  return mask;
}

std::vector<std::uint32_t> encode_rle(const BinaryMask& mask) {
  std::vector<std::uint32_t> runs;
  std::uint8_t current = 0;
  std::uint32_t count = 0;
  for (const std::uint8_t p : mask.pixels) {
    const std::uint8_t v = p ? 1 : 0;
    if (v != current) {
      runs.push_back(count);
      count = 0;
      current = v;
    }
    ++count;
  }
  runs.push_back(count);
  return runs;
}

std::optional<SegmentObservation> summarize_pixels(std::span<const Eigen::Vector2i> pixels) {
  if (pixels.size() <= 2) return std::nullopt;
  const double n = static_cast<double>(pixels.size());
  Vec2 mean = Vec2::Zero();
  for (const auto& p : pixels) mean += p.cast<double>();
  mean /= n;
  Mat2 cov = Mat2::Zero();
  for (const auto& p : pixels) {
    const Vec2 d = p.cast<double>() - mean;
    cov += d * d.transpose();
  }
  cov /= n;
  cov(1, 0) = cov(0, 1);

  SegmentObservation obs;
  obs.centroid = mean;
  obs.covariance = cov;
  obs.size_px = std::sqrt(std::max(0.0, largest_eigenvalue(cov)));
  obs.pixel_count = static_cast<int>(pixels.size());
  return obs;
}

std::optional<SegmentObservation> summarize_mask(const BinaryMask& mask) {
  std::vector<Eigen::Vector2i> pixels;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (mask.at(x, y)) pixels.emplace_back(x, y);
    }
  }
  return summarize_pixels(pixels);
}

}  // namespace segmap
