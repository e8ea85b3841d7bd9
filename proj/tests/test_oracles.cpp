#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "degcert/models.hpp"
#include "degcert/oracles.hpp"

using namespace degcert;
using homotopy::FrameLoop;
using oracles::Rotor;
using skewlin::Matrix;
using skewlin::SpecialOrthogonalMatrix;
using Catch::Approx;

namespace {

const Tolerances kTol{};
constexpr double kPi = std::numbers::pi;

FrameLoop constant_identity_loop(int n, int samples) {
  std::vector<SpecialOrthogonalMatrix> frames(size_t(samples) + 1,
                                              SpecialOrthogonalMatrix::identity(n));
  return FrameLoop::create_uniform(
      std::move(frames), [n](double) { return SpecialOrthogonalMatrix::identity(n); },
      kTol);
}

FrameLoop block_plane_loop(int n, int turns, int samples) {
  std::vector<SpecialOrthogonalMatrix> frames;
  for (int k = 0; k <= samples; ++k) {
    const double a = 2 * kPi * turns * double(k) / samples;
    Matrix r = Matrix::Identity(n, n);
    r(0, 0) = std::cos(a);
    r(0, 1) = -std::sin(a);
    r(1, 0) = std::sin(a);
    r(1, 1) = std::cos(a);
    frames.push_back(skewlin::validate_so(r));
  }
  return FrameLoop::create_uniform(std::move(frames), {}, kTol);
}

/// The worked SO(3) loop embedded block-diagonally into SO(n).
FrameLoop embedded_jt_loop(int n, int samples) {
  std::vector<SpecialOrthogonalMatrix> frames;
  for (int k = 0; k <= samples; ++k) {
    Matrix r = Matrix::Identity(n, n);
    r.topLeftCorner(3, 3) = models::jt_frame(2 * kPi * double(k) / samples);
    frames.push_back(skewlin::validate_so(r));
  }
  return FrameLoop::create_uniform(std::move(frames), {}, kTol);
}

}  // namespace

TEST_CASE("geometric product of basis blades", "[oracles]") {
  CHECK(oracles::reorder_sign(0b001, 0b010) == 1);   // e1 e2 = +e12
  CHECK(oracles::reorder_sign(0b010, 0b001) == -1);  // e2 e1 = -e12
  CHECK(oracles::reorder_sign(0b001, 0b001) == 1);   // e1 e1 = +1

  // (e1 e2)^2 = -1
  Rotor e12 = Rotor::scalar(3, 0.0);
  e12.c[0b011] = 1.0;
  Rotor sq = oracles::geometric_product(e12, e12);
  CHECK(sq.c[0] == Approx(-1.0));
  CHECK(sq.nonscalar_norm() < 1e-15);
}

TEST_CASE("bivector exponential matches the complex closed form", "[oracles]") {
  // exp(a * e12) = cos a + sin a * e12
  for (double a : {0.3, 1.7, 4.0}) {
    Rotor r = oracles::detail::exp_bivector(4, {{0b0011, a}});
    CHECK(r.c[0] == Approx(std::cos(a)).margin(1e-13));
    CHECK(r.c[0b0011] == Approx(std::sin(a)).margin(1e-13));
    CHECK(r.norm() == Approx(1.0).margin(1e-13));
  }
}

TEST_CASE("quaternion lift of the worked loop and its square", "[oracles]") {
  CHECK(oracles::quaternion_lift(constant_identity_loop(3, 24)) == 1);

  FrameLoop jt = models::jt_frame_loop(200);
  CHECK(oracles::quaternion_lift(jt) == -1);
  CHECK(oracles::quaternion_lift(homotopy::concatenate(jt, jt)) == 1);

  // too-coarse sampling -> rejected, not misclassified
  Tolerances loose = kTol;
  loose.delta_step = 3.0;
  std::vector<SpecialOrthogonalMatrix> frames;
  for (int k = 0; k <= 3; ++k)
    frames.push_back(skewlin::validate_so(models::jt_frame(2 * kPi * k / 3.0)));
  FrameLoop sparse = FrameLoop::create_uniform(std::move(frames), {}, loose);
  try {
    oracles::quaternion_lift(sparse, loose);
    FAIL("sparse loop must be rejected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::StepTooLarge);
  }
}

TEST_CASE("spin lift signs of known loops", "[oracles]") {
  for (int n : {3, 4, 5, 6}) CHECK(oracles::spin_lift_sign(constant_identity_loop(n, 16)) == 1);

  // Geodesic generator loop in SO(4): classifier says h = 1; oracle agrees.
  FrameLoop geo = block_plane_loop(4, 1, 96);
  CHECK(oracles::spin_lift_sign(geo) == -1);
  CHECK(homotopy::classify_loop(geo).h == 1);

  // Class is stable under SO(3) in SO(5) block embedding.
  CHECK(oracles::spin_lift_sign(embedded_jt_loop(5, 200)) == -1);
}

TEST_CASE("spin lift is multiplicative and agrees with the quaternion lift",
          "[oracles]") {
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 3 + trial % 3;
    FrameLoop a = models::random_so_loop(n, 7000 + trial, trial % 2 == 0, 128);
    FrameLoop b = models::random_so_loop(n, 8000 + trial, trial % 3 == 0, 128);
    const int sa = oracles::spin_lift_sign(a);
    const int sb = oracles::spin_lift_sign(b);
    CHECK(oracles::spin_lift_sign(homotopy::concatenate(a, b)) == sa * sb);
    if (n == 3) {
      CHECK(oracles::quaternion_lift(a) == sa);
      CHECK(oracles::quaternion_lift(b) == sb);
    }
  }
}

TEST_CASE("spin lift is invariant under refinement and keeps unit norm",
          "[oracles]") {
  FrameLoop coarse = models::random_so_loop(5, 9100, true, 96);
  FrameLoop fine = models::random_so_loop(5, 9100, true, 192);
  auto lc = oracles::spin_lift(coarse);
  auto lf = oracles::spin_lift(fine);
  CHECK(lc.sign == lf.sign);
  CHECK(lc.max_norm_drift < 1e-8);
  CHECK(lf.max_norm_drift < 1e-8);
  CHECK(lc.scalar_residual < 1e-6);
}

TEST_CASE("spin lift dimension cap and the n = 12 smoke case", "[oracles]") {
  try {
    oracles::spin_lift_sign(constant_identity_loop(13, 8));
    FAIL("n = 13 must be rejected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::WrongDimension);
  }
  CHECK(oracles::spin_lift_sign(block_plane_loop(12, 1, 64)) == -1);
}

TEST_CASE("spin lift rejects unclosed chains", "[oracles]") {
  // A loop-shaped object that fails to close (legal only under a loose
  // closure tolerance) must be flagged, not silently classified.
  Tolerances loose = kTol;
  loose.tol_closure = 3.0;
  std::vector<SpecialOrthogonalMatrix> frames;
  const int samples = 64;
  for (int k = 0; k <= samples; ++k) {
    const double a = kPi * double(k) / samples;  // half turn, open
    Matrix r = Matrix::Identity(3, 3);
    r(0, 0) = std::cos(a);
    r(0, 1) = -std::sin(a);
    r(1, 0) = std::sin(a);
    r(1, 1) = std::cos(a);
    frames.push_back(skewlin::validate_so(r));
  }
  FrameLoop open_path = FrameLoop::create_uniform(std::move(frames), {}, loose);
  try {
    oracles::spin_lift_sign(open_path, loose);
    FAIL("open chain must be rejected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotScalar);
  }
}
