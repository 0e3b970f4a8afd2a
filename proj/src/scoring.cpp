#include "segmap/scoring.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace segmap {

bool vio_shift_gate(const Vec2& c_prev, const Vec2& c_curr, double mu_p, double sigma_p,
                    double v_lim) {
  const double shift = (c_prev - c_curr).norm();
  return std::abs(shift - mu_p) / sigma_p < v_lim;
}

double relative_size_difference(double h_i, double h_j) {
  const double sum = h_i + h_j;
  if (!(sum > 0.0)) throw std::domain_error("relative size difference needs h_i + h_j > 0");
  return 2.0 * std::abs(h_i - h_j) / sum;
}

double size_score(double h_i, double h_j, double h_lim) {
  const double r = relative_size_difference(h_i, h_j);
  if (r < h_lim) return 1.0 + std::cos(std::numbers::pi * r / h_lim);
  return 0.0;
}

double feature_score(std::span<const Descriptor> desc_a, std::span<const Descriptor> desc_b,
                     double ratio_test) {
  if (desc_a.empty() || desc_b.empty()) return 1.0;
  const auto dim = desc_a.front().size();
  for (const auto& d : desc_a) {
    if (d.size() != dim) throw std::invalid_argument("descriptor dimension mismatch");
  }
  for (const auto& d : desc_b) {
    if (d.size() != dim) throw std::invalid_argument("descriptor dimension mismatch");
  }
  const bool a_smaller = desc_a.size() <= desc_b.size();
  const auto queries = a_smaller ? desc_a : desc_b;
  const auto pool = a_smaller ? desc_b : desc_a;

  std::size_t survivors = 0;
  for (const Descriptor& q : queries) {
    double best = std::numeric_limits<double>::infinity();
    double second = std::numeric_limits<double>::infinity();
    for (const Descriptor& p : pool) {
      const double d = (q - p).norm();
      if (d < best) {
        second = best;
        best = d;
      } else if (d < second) {
        second = d;
      }
    }
    // A lone candidate has no competitor and always survives.
    if (std::isinf(second)) {
      ++survivors;
    } else if (second > 0.0 && best / second < ratio_test) {
      ++survivors;
    }
  }
  return static_cast<double>(survivors) / static_cast<double>(queries.size());
}

double similarity(double q_s, double q_f) { return std::sqrt(q_s * q_f); }

}  // namespace segmap
