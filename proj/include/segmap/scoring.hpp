#pragma once

#include "segmap/observation.hpp"

#include <span>
#include <stdexcept>

namespace segmap {

/// Passes when the centroid displacement agrees with the tracked-feature
/// displacement statistics: | |c_prev - c_curr| - mu_p | / sigma_p < v_lim.
bool vio_shift_gate(const Vec2& c_prev, const Vec2& c_curr, double mu_p, double sigma_p,
                    double v_lim);

/// 2|a - b| / (a + b), in [0, 2]. Throws std::domain_error when a + b <= 0.
double relative_size_difference(double h_i, double h_j);

/// 1 + cos(pi r / h_lim) for r < h_lim, else 0.
double size_score(double h_i, double h_j, double h_lim);

/// Fraction of descriptors of the smaller set whose nearest neighbour in the
/// other set survives the distance ratio test. Empty sets score 1.
double feature_score(std::span<const Descriptor> desc_a, std::span<const Descriptor> desc_b,
                     double ratio_test);

/// Geometric mean of the size and feature scores.
double similarity(double q_s, double q_f);

}  // namespace segmap
