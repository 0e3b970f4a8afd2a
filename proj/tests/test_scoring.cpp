#include "segmap/scoring.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace segmap;

TEST_CASE("VIO shift gate") {
  const Vec2 c0(100, 100);
  const double mu = 12.0, sigma = 2.0;
  CHECK(vio_shift_gate(c0, c0 + Vec2(mu, 0), mu, sigma, 4.0));
  CHECK_FALSE(vio_shift_gate(c0, c0 + Vec2(0, mu + 4.1 * sigma), mu, sigma, 4.0));
  CHECK(vio_shift_gate(c0, c0 - Vec2(mu - 3.9 * sigma, 0), mu, sigma, 4.0));
  CHECK_FALSE(vio_shift_gate(c0, c0 + Vec2(mu + 4.0 * sigma, 0), mu, sigma, 4.0));
}

TEST_CASE("relative size difference") {
  CHECK(relative_size_difference(3.7, 3.7) == 0.0);
  CHECK(relative_size_difference(1.0, 3.0) == 1.0);
  CHECK(relative_size_difference(3.0, 1.0) == 1.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  for (int t = 0; t < 100; ++t) {
    const double a = u(rng), b = u(rng), k = u(rng);
    CHECK(relative_size_difference(k * a, k * b) ==
          doctest::Approx(relative_size_difference(a, b)).epsilon(1e-12));
    const double r = relative_size_difference(a, b);
    CHECK(r >= 0.0);
    CHECK(r <= 2.0);
  }
  CHECK_THROWS_AS(relative_size_difference(0.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(relative_size_difference(-1.0, 0.5), std::domain_error);
}

TEST_CASE("size score") {
  CHECK(size_score(5.0, 5.0, 0.2) == 2.0);
  // r = 0.1 = h_lim/2 with sizes 1 and 1.1/0.9*... pick h_i, h_j so r is exact.
  // r = 2|a-b|/(a+b) = 0.1 for a = 1.05, b = 0.95.
  CHECK(std::abs(size_score(1.05, 0.95, 2.0 * relative_size_difference(1.05, 0.95)) - 1.0) < 1e-12);
  CHECK(size_score(1.0, 3.0, 1.0) == 0.0);  // r == h_lim
  CHECK(size_score(1.0, 3.0, 0.2) == 0.0);
  for (double r = 0.0; r < 0.2; r += 0.01) {
    const double a = 1.0, b = (2.0 + r) / (2.0 - r);  // 2(b-a)/(a+b) = r
    const double s = size_score(a, b, 0.2);
    CHECK(s >= 0.0);
    CHECK(s <= 2.0);
    CHECK(s == doctest::Approx(1.0 + std::cos(std::numbers::pi * r / 0.2)).epsilon(1e-12));
  }
}

TEST_CASE("feature score") {
  std::vector<Descriptor> a;
  for (int k = 0; k < 4; ++k) {
    Descriptor d = Descriptor::Zero(3);
    d(k % 3) = 10.0 * (k + 1);
    a.push_back(d);
  }
  CHECK(feature_score(a, a, 0.75) == 1.0);
  CHECK(feature_score({}, {}, 0.75) == 1.0);
  CHECK(feature_score(a, {}, 0.75) == 1.0);

  // Two queries with a clear nearest neighbour, two that sit halfway between
  // a pair of candidates and fail the ratio test.
  std::vector<Descriptor> refs;
  for (double x : {0.0, 10.0, 100.0, 102.0}) refs.push_back(Descriptor::Constant(1, x));
  std::vector<Descriptor> queries;
  for (double x : {0.1, 10.1, 101.0, 101.0}) queries.push_back(Descriptor::Constant(1, x));
  CHECK(feature_score(queries, refs, 0.75) == 0.5);

  const std::vector<Descriptor> wrong{Descriptor::Zero(2)};
  CHECK_THROWS_AS(feature_score(a, wrong, 0.75), std::invalid_argument);
}

TEST_CASE("similarity") {
  CHECK(similarity(2.0, 0.5) == 1.0);
  CHECK(similarity(0.0, 0.7) == 0.0);
  CHECK(similarity(2.0, 1.0) == std::sqrt(2.0));
}
