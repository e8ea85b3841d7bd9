#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "degcert/homotopy.hpp"
#include "degcert/models.hpp"
#include "degcert/oracles.hpp"

using namespace degcert;
using homotopy::FrameLoop;
using skewlin::Matrix;
using skewlin::SkewSymmetricMatrix;
using skewlin::SpecialOrthogonalMatrix;
using Catch::Approx;

namespace {

const Tolerances kTol{};
constexpr double kPi = std::numbers::pi;

Matrix plane_rotation(int n, double angle) {
  Matrix r = Matrix::Identity(n, n);
  r(0, 0) = std::cos(angle);
  r(0, 1) = -std::sin(angle);
  r(1, 0) = std::sin(angle);
  r(1, 1) = std::cos(angle);
  return r;
}

FrameLoop geodesic_loop(int n, int turns, int samples) {
  std::vector<SpecialOrthogonalMatrix> frames;
  for (int k = 0; k <= samples; ++k) {
    const double t = double(k) / samples;
    frames.push_back(skewlin::validate_so(plane_rotation(n, 2 * kPi * turns * t)));
  }
  auto sampler = [n, turns](double t) {
    return skewlin::validate_so(plane_rotation(n, 2 * kPi * turns * t));
  };
  return FrameLoop::create_uniform(std::move(frames), sampler, kTol);
}

FrameLoop constant_loop(const Matrix& r, int samples) {
  std::vector<SpecialOrthogonalMatrix> frames(size_t(samples) + 1,
                                              skewlin::validate_so(r));
  auto fixed = skewlin::validate_so(r);
  return FrameLoop::create_uniform(std::move(frames), [fixed](double) { return fixed; },
                                   kTol);
}

}  // namespace

TEST_CASE("normalize_base_point moves loops to the identity", "[homotopy]") {
  const Matrix r0 = models::jt_frame(1.1);
  FrameLoop constant = constant_loop(r0, 32);
  FrameLoop normalized = homotopy::normalize_base_point(constant);
  for (size_t k = 0; k < normalized.size(); ++k)
    CHECK(skewlin::max_abs(normalized.sample(k).matrix() - Matrix::Identity(3, 3)) <
          1e-12);

  // A loop already based at the identity is unchanged.
  FrameLoop jt = models::jt_frame_loop(64);
  FrameLoop jt_norm = homotopy::normalize_base_point(jt);
  for (size_t k = 0; k < jt.size(); ++k)
    CHECK(skewlin::max_abs(jt.sample(k).matrix() - jt_norm.sample(k).matrix()) < 1e-12);
}

TEST_CASE("lift of constant and geodesic loops", "[homotopy]") {
  auto lifted = homotopy::lift_loop(
      homotopy::normalize_base_point(constant_loop(Matrix::Identity(4, 4), 16)));
  for (const auto& p : lifted.points) CHECK(p.max_abs_entry() < 1e-12);

  // Single-block geodesic: the lift is forced to t * 2pi * Y1.
  auto geo = homotopy::lift_loop(geodesic_loop(4, 1, 64));
  for (size_t k = 0; k < geo.points.size(); ++k) {
    Matrix expect = Matrix::Zero(4, 4);
    expect(0, 1) = -2 * kPi * geo.params[k];
    expect(1, 0) = 2 * kPi * geo.params[k];
    CHECK(skewlin::max_abs(geo.points[k].full() - expect) < 1e-8);
  }
}

TEST_CASE("lift of the worked loop reaches the published endpoint", "[homotopy]") {
  FrameLoop jt = models::jt_frame_loop(200);
  auto lifted = homotopy::lift_loop(jt);
  Matrix k_expect(3, 3);
  k_expect << 0, -1, 0, 1, 0, 1, 0, -1, 0;
  k_expect *= kPi * std::numbers::sqrt2;
  CHECK(skewlin::max_abs(lifted.endpoint().full() - k_expect) < 1e-8);

  // lift invariants: exactness and continuity
  for (size_t k = 0; k < lifted.points.size(); ++k) {
    const Matrix f = models::jt_frame(2 * kPi * lifted.params[k]);
    CHECK(skewlin::max_abs(skewlin::skew_exp(lifted.points[k]).matrix() - f) < 1e-9);
    if (k > 0)
      CHECK(skewlin::max_abs(lifted.points[k].full() - lifted.points[k - 1].full()) <=
            kTol.delta_lift);
  }
}

TEST_CASE("classify: constant trivial, worked loop nontrivial", "[homotopy]") {
  auto trivial = homotopy::classify(homotopy::lift_loop(
      homotopy::normalize_base_point(constant_loop(Matrix::Identity(3, 3), 20))));
  CHECK(trivial.h == 0);
  CHECK(trivial.parity == homotopy::Parity::Trivial);
  for (long k : trivial.k_list) CHECK(k == 0);

  auto verdict = homotopy::classify_loop(models::jt_frame_loop(200));
  REQUIRE(verdict.k_list.size() == 1);
  CHECK(verdict.k_list[0] == 1);
  CHECK(verdict.h == 1);
  CHECK(verdict.parity == homotopy::Parity::Nontrivial);
  CHECK(verdict.max_int_residual < 1e-6);
}

TEST_CASE("classify the doubled worked loop as trivial", "[homotopy]") {
  FrameLoop jt = models::jt_frame_loop(200);
  FrameLoop doubled = homotopy::concatenate(jt, jt);
  auto verdict = homotopy::classify_loop(doubled);
  CHECK(verdict.parity == homotopy::Parity::Trivial);
  CHECK(verdict.h % 2 == 0);
  CHECK(oracles::spin_lift_sign(doubled) == 1);
}

TEST_CASE("classify rejects n=2 and unquantized endpoints", "[homotopy]") {
  auto lifted = homotopy::lift_loop(geodesic_loop(2, 1, 64));
  try {
    homotopy::classify(lifted);
    FAIL("n=2 must be rejected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::WrongDimension);
  }

  homotopy::LiftedCurve corrupt;
  Matrix bad = Matrix::Zero(3, 3);
  bad(0, 1) = -kPi / 2;
  bad(1, 0) = kPi / 2;
  corrupt.points = {SkewSymmetricMatrix::zero(3),
                    SkewSymmetricMatrix::from_matrix(bad)};
  corrupt.params = {0.0, 1.0};
  try {
    homotopy::classify(corrupt);
    FAIL("unquantized endpoint must be rejected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotQuantized);
  }
}

TEST_CASE("winding numbers of explicit SO(2) loops", "[homotopy]") {
  CHECK(homotopy::winding_number(
            homotopy::normalize_base_point(constant_loop(Matrix::Identity(2, 2), 16)))
            .value == 0);
  CHECK(homotopy::winding_number(geodesic_loop(2, 1, 64)).value == 1);
  CHECK(homotopy::winding_number(geodesic_loop(2, -2, 128)).value == -2);

  // Giant steps are rejected rather than silently unwrapped.
  Tolerances loose = kTol;
  loose.delta_step = 3.0;
  std::vector<SpecialOrthogonalMatrix> frames;
  for (int k = 0; k <= 3; ++k)
    frames.push_back(skewlin::validate_so(plane_rotation(2, 2 * kPi * k / 3.0)));
  FrameLoop sparse = FrameLoop::create_uniform(std::move(frames), {}, loose);
  try {
    homotopy::winding_number(sparse, loose);
    FAIL("sparse loop must be rejected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::StepTooLarge);
  }
}

TEST_CASE("concatenate validates dimensions and reverse undoes a loop", "[homotopy]") {
  CHECK_THROWS_AS(
      homotopy::concatenate(geodesic_loop(3, 1, 64), geodesic_loop(4, 1, 64)), Error);

  for (int n : {3, 4, 5}) {
    FrameLoop c = models::random_so_loop(n, 42 + n, true, 128);
    auto verdict =
        homotopy::classify_loop(homotopy::concatenate(c, homotopy::reverse(c)));
    CHECK(verdict.parity == homotopy::Parity::Trivial);
  }
}

TEST_CASE("parity is a homomorphism (oracle cross-check)", "[homotopy]") {
  for (int trial = 0; trial < 6; ++trial) {
    const int n = 3 + trial % 4;
    const bool na = trial % 2 == 0, nb = trial % 3 == 0;
    FrameLoop a = models::random_so_loop(n, 1000 + trial, na, 128);
    FrameLoop b = models::random_so_loop(n, 2000 + trial, nb, 128);
    FrameLoop ab = homotopy::concatenate(a, b);
    auto pa = homotopy::classify_loop(a).parity;
    auto pb = homotopy::classify_loop(b).parity;
    auto pab = homotopy::classify_loop(ab).parity;
    const bool expect_nontrivial =
        (pa == homotopy::Parity::Nontrivial) != (pb == homotopy::Parity::Nontrivial);
    CHECK((pab == homotopy::Parity::Nontrivial) == expect_nontrivial);
    CHECK(oracles::spin_lift_sign(ab) == (expect_nontrivial ? -1 : 1));
  }

  // winding adds under concatenation and negates under reverse
  FrameLoop wa = models::random_winding_loop(7, 2, 128);
  FrameLoop wb = models::random_winding_loop(8, -1, 128);
  CHECK(homotopy::winding_number(homotopy::concatenate(wa, wb)).value == 1);
  CHECK(homotopy::winding_number(homotopy::reverse(wa)).value == -2);
}

TEST_CASE("classify is invariant under refinement, reparametrization, conjugation "
          "and base normalization",
          "[homotopy]") {
  for (int trial = 0; trial < 4; ++trial) {
    const int n = 3 + trial;
    const bool target = trial % 2 == 0;
    FrameLoop coarse = models::random_so_loop(n, 3000 + trial, target, 96);
    FrameLoop fine = models::random_so_loop(n, 3000 + trial, target, 192);
    auto p0 = homotopy::classify_loop(coarse).parity;
    CHECK(homotopy::classify_loop(fine).parity == p0);

    // reparametrize: same samples, smoothly skewed parameters
    std::vector<SpecialOrthogonalMatrix> samples;
    std::vector<double> params;
    for (size_t k = 0; k < coarse.size(); ++k) {
      samples.push_back(coarse.sample(k));
      const double t = coarse.param(k);
      params.push_back(0.7 * t + 0.3 * t * t);
    }
    auto repar_sampler = [coarse](double s) {
      const double t = (-0.7 + std::sqrt(0.49 + 1.2 * s)) / 0.6;
      return coarse.sample_at(t);
    };
    FrameLoop repar =
        FrameLoop::create(std::move(samples), std::move(params), repar_sampler, kTol);
    CHECK(homotopy::classify_loop(repar).parity == p0);

    // conjugate the whole loop by a fixed rotation
    Matrix gen = Matrix::Zero(n, n);
    std::uint64_t ctr = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double v = models::detail::uniform(4000 + trial, ctr++, -1.0, 1.0);
        gen(i, j) = v;
        gen(j, i) = -v;
      }
    auto q = skewlin::skew_exp(SkewSymmetricMatrix::from_matrix(gen));
    std::vector<SpecialOrthogonalMatrix> conj;
    for (size_t k = 0; k < coarse.size(); ++k)
      conj.push_back(skewlin::validate_so(q.matrix() * coarse.sample(k).matrix() *
                                          q.matrix().transpose()));
    auto conj_sampler = [coarse, q](double t) {
      return skewlin::validate_so(q.matrix() * coarse.sample_at(t).matrix() *
                                  q.matrix().transpose());
    };
    FrameLoop conj_loop =
        FrameLoop::create(std::move(conj), coarse.params(), conj_sampler, kTol);
    CHECK(homotopy::classify_loop(conj_loop).parity == p0);

    // left-translate, then rely on normalize_base_point
    std::vector<SpecialOrthogonalMatrix> shifted;
    for (size_t k = 0; k < coarse.size(); ++k)
      shifted.push_back(skewlin::validate_so(q.matrix() * coarse.sample(k).matrix()));
    auto shift_sampler = [coarse, q](double t) {
      return skewlin::validate_so(q.matrix() * coarse.sample_at(t).matrix());
    };
    FrameLoop shifted_loop =
        FrameLoop::create(std::move(shifted), coarse.params(), shift_sampler, kTol);
    CHECK(homotopy::classify_loop(shifted_loop).parity == p0);
  }
}

TEST_CASE("parity of a reversed loop is unchanged", "[homotopy]") {
  for (int trial = 0; trial < 4; ++trial) {
    FrameLoop c = models::random_so_loop(3 + trial, 5000 + trial, trial % 2 == 0, 128);
    CHECK(homotopy::classify_loop(homotopy::reverse(c)).parity ==
          homotopy::classify_loop(c).parity);
  }
}
