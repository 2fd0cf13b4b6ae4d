#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "ssrecon/errors.hpp"
#include "ssrecon/sampling.hpp"
#include "test_support.hpp"

using namespace ssrecon;

TEST_CASE("acceleration 1 gives all-ones probabilities") {
  const MaskDensity d = build_density(test::column_dist(16, 1.0, 2, 8.0));
  CHECK(d.probs.isOnes(0.0));
  Rng rng(1);
  CHECK(draw_mask(d, rng).count() == 16);
}

TEST_CASE("column density hits the target sum") {
  const MaskDensity d = build_density(test::column_dist(32, 4.0, 4, 8.0));
  CHECK(std::abs(d.probs.sum() - 8.0) <= 0.08);
  CHECK(d.acceleration() == doctest::Approx(4.0).epsilon(0.01));
  CHECK(d.probs.maxCoeff() <= 1.0);
  CHECK(d.probs.minCoeff() > 0.0);
}

TEST_CASE("centre lines are always sampled") {
  for (double accel : {1.5, 2.0, 4.0, 6.0}) {
    for (double degree : {1.0, 4.0, 8.0}) {
      const MaskDensity d = build_density(test::column_dist(32, accel, 4, degree));
      // Centre of length 4 is DC, +1, -1, +2.
      for (Index j : {0, 1, 31, 2}) CHECK(d.probs[j] == 1.0);
    }
  }
}

TEST_CASE("density decreases away from DC") {
  const MaskDensity d = build_density(test::column_dist(32, 4.0, 2, 4.0));
  for (Index f = 1; f < 16; ++f) CHECK(d.probs[f + 1] <= d.probs[f]);
  // Centre of length 2 is DC and +1; the rest is symmetric in the signed frequency.
  for (Index f = 2; f < 16; ++f) CHECK(d.probs[32 - f] == doctest::Approx(d.probs[f]));
}

TEST_CASE("2D Bernoulli density hits its target") {
  MaskDistribution dist;
  dist.kind = MaskKind::bernoulli2d_polynomial;
  dist.shape = GridShape{8, 8};
  dist.target_accel = 3.0;
  dist.n_center = 2;
  dist.degree = 2.0;
  const MaskDensity d = build_density(dist);
  CHECK(d.acceleration() == doctest::Approx(3.0).epsilon(0.01));
  CHECK(d.probs[0] == 1.0);
  CHECK(d.probs[1] == 1.0);
  CHECK(d.probs[8] == 1.0);
  CHECK(d.probs[9] == 1.0);
}

TEST_CASE("column kind on a 2D grid broadcasts down rows") {
  MaskDistribution dist = test::column_dist(8, 2.0, 2, 1.0);
  dist.shape = GridShape{4, 8};
  const MaskDensity d = build_density(dist);
  CHECK(d.line_probs.size() == 8);
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const SamplingMask m = draw_mask(d, rng);
    for (Index c = 0; c < 8; ++c)
      for (Index r = 1; r < 4; ++r) CHECK(m.contains(r * 8 + c) == m.contains(c));
  }
}

TEST_CASE("unattainable acceleration is a configuration error") {
  CHECK_THROWS_AS(build_density(test::column_dist(16, 9.0, 2, 8.0)), ConfigError);
  CHECK_THROWS_AS(build_density(test::column_dist(16, 0.5, 2, 8.0)), ConfigError);
  CHECK_THROWS_AS(build_density(test::column_dist(16, 2.0, 0, 8.0)), ConfigError);
}

TEST_CASE("empirical inclusion frequencies match the density") {
  const MaskDensity d = build_density(test::column_dist(32, 4.0, 4, 8.0));
  Rng rng(11);
  const int draws = 100000;
  RealVector freq = RealVector::Zero(32);
  for (int t = 0; t < draws; ++t) freq += draw_mask(d, rng).diagonal();
  freq /= draws;
  CHECK((freq - d.probs).cwiseAbs().maxCoeff() <= 0.01);
}

TEST_CASE("realised acceleration concentrates around the target") {
  const MaskDensity d = build_density(test::column_dist(32, 4.0, 4, 8.0));
  Rng rng(12);
  double total = 0.0;
  const int draws = 10000;
  for (int t = 0; t < draws; ++t) total += static_cast<double>(draw_mask(d, rng).count());
  CHECK(32.0 / (total / draws) == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("same seed draws the same mask") {
  const MaskDensity d = build_density(test::column_dist(32, 4.0, 4, 8.0));
  Rng a(5), b(5);
  CHECK(draw_mask(d, a) == draw_mask(d, b));
  RealVector ones = RealVector::Ones(6);
  CHECK(draw_mask(ones, a).count() == 6);
}

TEST_CASE("k values") {
  RealVector p(3), pt(3);
  p << 1.0, 0.5, 0.3;
  pt << 0.5, 0.5, 0.0;
  const RealVector k = compute_k(p, pt);
  CHECK(k[0] == 0.0);
  CHECK(k[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(k[2] == doctest::Approx(0.7).epsilon(1e-14));
}

TEST_CASE("compensation weight values") {
  RealVector p(2), pt(2);
  p << 1.0, 0.5;
  pt << 0.5, 0.5;
  const RealVector P = compute_P(p, pt);
  CHECK(P[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(P[1] == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("P (1 - k) = 1 on random valid pairs") {
  Rng rng(9);
  RealVector p(200), pt(200);
  for (Index j = 0; j < 200; ++j) {
    p[j] = 0.01 + 0.99 * rng.uniform();
    pt[j] = 0.99 * rng.uniform();
  }
  const RealVector k = compute_k(p, pt), P = compute_P(p, pt);
  for (Index j = 0; j < 200; ++j) CHECK(std::abs(P[j] * (1.0 - k[j]) - 1.0) <= 1e-12);
}

TEST_CASE("mask condition violations name the index") {
  RealVector p(2), pt(2);
  p << 0.5, 0.0;
  pt << 0.5, 0.5;
  CHECK_THROWS_WITH_AS(compute_k(p, pt), doctest::Contains("p_1"), ValidationError);
  p << 0.5, 0.5;
  pt << 1.0, 0.5;
  CHECK_THROWS_WITH_AS(compute_P(p, pt), doctest::Contains("ptilde_0"), ValidationError);
  p << 1.0, 0.5;
  pt << 1.0, 0.5;
  CHECK_NOTHROW(validate_mask_conditions(p, pt));
  CHECK(compute_P(p, pt)[0] == 1.0);
}

TEST_CASE("mask kind names") {
  CHECK(mask_kind_from_string("column_polynomial") == MaskKind::column_polynomial);
  CHECK(to_string(MaskKind::bernoulli2d_polynomial) == "bernoulli2d_polynomial");
  CHECK_THROWS_AS(mask_kind_from_string("radial"), ConfigError);
}
