#pragma once

// Built-in model families and known-class loop generators used by fixtures,
// demos and property tests. All randomness is counter-based (splitmix64) so
// the same seed reproduces the same family on any platform.

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "degcert/oracles.hpp"
#include "degcert/transport.hpp"

namespace degcert::models {

using homotopy::FrameLoop;
using skewlin::Matrix;
using skewlin::Vector;
using transport::HamiltonianSampler;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic uniform double in [0, 1) keyed by (seed, counter).
inline double uniform01(std::uint64_t seed, std::uint64_t counter) {
  return double(splitmix64(seed ^ (0xd1b54a32d192ed03ULL * (counter + 1))) >> 11) *
         0x1.0p-53;
}

inline double uniform(std::uint64_t seed, std::uint64_t counter, double lo, double hi) {
  return lo + (hi - lo) * uniform01(seed, counter);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Closed-form SO(3) loop of the T (x) tau_2 Jahn-Teller frame family.

/// Frame at loop parameter theta in [0, 2*pi]; F(0) = I, rotation angle theta
/// about the fixed axis (-1, 0, 1)/sqrt(2).
inline Matrix jt_frame(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Matrix f(3, 3);
  f << 0.5 * (c + 1), -s / std::numbers::sqrt2, 0.5 * (c - 1),
       s / std::numbers::sqrt2, c, s / std::numbers::sqrt2,
       0.5 * (c - 1), -s / std::numbers::sqrt2, 0.5 * (c + 1);
  return f;
}

/// The explicit lift of jt_frame: exp(jt_lift(theta)) = jt_frame(theta).
inline Matrix jt_lift(double theta) {
  Matrix a(3, 3);
  a << 0, -1, 0,
       1, 0, 1,
       0, -1, 0;
  return (theta / std::numbers::sqrt2) * a;
}

inline FrameLoop jt_frame_loop(int num_samples, const Tolerances& tol = {}) {
  if (num_samples < 16)
    fail(ErrorCode::Precondition, "models.jt_frame_loop", "need at least 16 samples");
  std::vector<skewlin::SpecialOrthogonalMatrix> samples;
  samples.reserve(size_t(num_samples) + 1);
  for (int k = 0; k <= num_samples; ++k) {
    const double theta = 2 * std::numbers::pi * double(k) / double(num_samples);
    samples.push_back(skewlin::SpecialOrthogonalMatrix::validate(jt_frame(theta), tol));
  }
  auto sampler = [tol](double t) {
    return skewlin::SpecialOrthogonalMatrix::validate(
        jt_frame(2 * std::numbers::pi * t), tol);
  };
  return FrameLoop::create_uniform(std::move(samples), sampler, tol);
}

/// Symmetric 3x3 family whose eigenframe loop around the origin is exactly
/// jt_frame: H(Q) = |Q| * F(theta) diag(0,1,2) F(theta)^T, theta = atan2.
/// Continuous everywhere, degenerate exactly at Q = 0.
inline HamiltonianSampler jt_hamiltonian() {
  HamiltonianSampler h;
  h.dim = 3;
  h.eval = [](const Vector& q) {
    const double r = q.norm();
    const double theta = std::atan2(q[1], q[0]);
    const Matrix f = jt_frame(theta);
    Matrix lam = Matrix::Zero(3, 3);
    lam(1, 1) = r;
    lam(2, 2) = 2 * r;
    return Matrix(f * lam * f.transpose());
  };
  return h;
}

// ---------------------------------------------------------------------------
// Two-level conical-intersection families.

/// Degenerate only at the origin; eigenvalues +/- |(x, y)|.
inline Matrix two_level_ci(double x, double y) {
  Matrix h(2, 2);
  h << x, y, y, -x;
  return h;
}

/// Exactly two conical intersections at (+/-a, 0): the off/diagonal pair is
/// the real/imaginary part of ((x-a) + iy) * ((x+a) + iy), so a loop around
/// both centers turns the eigenframe by a full 2*pi (winding 1) while every
/// eigenvector returns with its sign intact.
inline Matrix two_center_ci(double x, double y, double a) {
  const double f = x * x - y * y - a * a;
  const double g = 2 * x * y;
  Matrix h(2, 2);
  h << f, g, g, -f;
  return h;
}

inline HamiltonianSampler two_level_sampler() {
  HamiltonianSampler h;
  h.dim = 2;
  h.eval = [](const Vector& q) { return two_level_ci(q[0], q[1]); };
  return h;
}

inline HamiltonianSampler two_center_sampler(double a) {
  HamiltonianSampler h;
  h.dim = 2;
  h.eval = [a](const Vector& q) { return two_center_ci(q[0], q[1], a); };
  return h;
}

// ---------------------------------------------------------------------------
// Embedded block model: the 3x3 Jahn-Teller family coupled into a larger
// space. H = [[H3, eps*C], [eps*C^T, H_rest]] with H_rest = diag(3, 4, ...)
// (band gap 1 at eps = 0) and C a smooth bounded coupling, columns of norm
// 4. With this strength the projection condition first fails around
// eps ~ 0.75, well before the bands collide.

inline HamiltonianSampler embedded_block(int n, double eps, std::uint64_t seed) {
  if (n < 4)
    fail(ErrorCode::Precondition, "models.embedded_block", "need n >= 4");
  if (eps < 0 || eps >= 1)
    fail(ErrorCode::Precondition, "models.embedded_block", "need 0 <= eps < 1");

  const int rest = n - 3;
  // Three seeded coefficient matrices; the constant part dominates.
  Matrix c0(3, rest), c1(3, rest), c2(3, rest);
  std::uint64_t ctr = 0;
  for (int j = 0; j < rest; ++j) {
    for (int i = 0; i < 3; ++i) {
      c0(i, j) = detail::uniform(seed, ctr++, -1.0, 1.0);
      c1(i, j) = detail::uniform(seed, ctr++, -0.3, 0.3);
      c2(i, j) = detail::uniform(seed, ctr++, -0.3, 0.3);
    }
    const double nrm = c0.col(j).norm();
    if (nrm > 1e-12) c0.col(j) *= 4.0 / nrm;
  }

  HamiltonianSampler h3 = jt_hamiltonian();
  HamiltonianSampler h;
  h.dim = n;
  h.eval = [n, rest, eps, c0, c1, c2, h3](const Vector& q) {
    Matrix hm = Matrix::Zero(n, n);
    hm.topLeftCorner(3, 3) = h3.eval(q);
    for (int j = 0; j < rest; ++j) hm(3 + j, 3 + j) = 3.0 + j;
    const Matrix c = c0 + std::cos(q[0]) * c1 + std::sin(q[1]) * c2;
    hm.topRightCorner(3, rest) = eps * c;
    hm.bottomLeftCorner(rest, 3) = eps * c.transpose();
    return hm;
  };
  return h;
}

/// Coupling norm of the embedded model at a parameter point (test helper).
inline double embedded_block_coupling_norm(int n, std::uint64_t seed, const Vector& q) {
  HamiltonianSampler h = embedded_block(n, 0.5, seed);
  const Matrix hm = h.eval(q);
  return (hm.topRightCorner(3, n - 3) / 0.5).norm();
}

// ---------------------------------------------------------------------------
// Spin-1/2 monopole: H = Q . sigma, complex Hermitian, degenerate at Q = 0.

inline Eigen::Matrix2cd spin_half_monopole(const Vector& q) {
  using namespace std::complex_literals;
  Eigen::Matrix2cd h;
  h << q[2], q[0] - 1i * q[1],
       q[0] + 1i * q[1], -q[2];
  return h;
}

// ---------------------------------------------------------------------------
// Random families and loops.

/// H(Q) = S0 + Q1*S1 + Q2*S2 with seeded symmetric coefficients and a spread
/// diagonal, for invariance/property tests.
inline HamiltonianSampler random_symmetric_family(int n, std::uint64_t seed) {
  std::vector<Matrix> coeff(3, Matrix::Zero(n, n));
  std::uint64_t ctr = 0;
  for (auto& s : coeff) {
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const double v = detail::uniform(seed, ctr++, -0.5, 0.5);
        s(i, j) = v;
        s(j, i) = v;
      }
  }
  for (int i = 0; i < n; ++i) coeff[0](i, i) += 2.0 * i;  // keep bands separated
  HamiltonianSampler h;
  h.dim = n;
  h.eval = [coeff](const Vector& q) {
    return Matrix(coeff[0] + q[0] * coeff[1] + q[1] * coeff[2]);
  };
  return h;
}

namespace detail {

/// Smooth loop of geodesic arcs: F(t) = prod_i exp(a_i(t) G_i) with bump
/// profiles vanishing at both ends, so F(0) = F(1) = I exactly. Each arc
/// generator is decomposed once; exp(a G) then scales its block angles.
struct RandomLoopArcs {
  struct Arc {
    skewlin::CanonicalSkewForm form;
    int freq;
    double phase;
  };
  std::vector<Arc> arcs;
  bool nontrivial;

  RandomLoopArcs(int n, std::uint64_t seed, bool target_nontrivial)
      : nontrivial(target_nontrivial) {
    constexpr int num_arcs = 3;
    for (int a = 0; a < num_arcs; ++a) {
      Matrix gen = Matrix::Zero(n, n);
      std::uint64_t ctr = 1000 * std::uint64_t(a);
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          const double v = uniform(seed, ctr++, -1.0, 1.0);
          gen(i, j) = v;
          gen(j, i) = -v;
        }
      gen *= uniform(seed, 900 + std::uint64_t(a), 0.4, 1.1) / gen.norm() * n / 3.0;
      arcs.push_back(
          {skewlin::skew_canonical_form(skewlin::SkewSymmetricMatrix::from_matrix(gen)),
           1 + int(uniform(seed, 950 + std::uint64_t(a), 0.0, 2.0)),
           uniform(seed, 980 + std::uint64_t(a), 0.0, 2 * std::numbers::pi)});
    }
  }

  Matrix frame(double t) const {
    const int n = arcs.front().form.dim();
    Matrix f = Matrix::Identity(n, n);
    const double s = std::sin(std::numbers::pi * t);
    for (const auto& arc : arcs) {
      const double amp = s * s * std::cos(2 * std::numbers::pi * arc.freq * t + arc.phase);
      skewlin::CanonicalSkewForm scaled = arc.form;
      for (double& ang : scaled.angles) ang *= amp;
      f *= skewlin::exp_from_canonical(scaled);
    }
    if (nontrivial) {
      // Generator loop: one full turn in the (e1, e2) plane.
      Matrix rot = Matrix::Identity(n, n);
      const double th = 2 * std::numbers::pi * t;
      rot(0, 0) = std::cos(th);
      rot(0, 1) = -std::sin(th);
      rot(1, 0) = std::sin(th);
      rot(1, 1) = std::cos(th);
      f *= rot;
    }
    return f;
  }
};

}  // namespace detail

/// Smooth random loop in SO(n) of known class: a product of geodesic arcs
/// that return to I, post-composed with a generator loop when a nontrivial
/// class is requested. The class is verified by the spin oracle for n <= 12.
inline FrameLoop random_so_loop(int n, std::uint64_t seed, bool nontrivial,
                                int num_samples = 128, const Tolerances& tol = {}) {
  if (n < 3)
    fail(ErrorCode::Precondition, "models.random_so_loop", "need n >= 3");
  auto arcs = std::make_shared<detail::RandomLoopArcs>(n, seed, nontrivial);
  std::vector<skewlin::SpecialOrthogonalMatrix> samples;
  samples.reserve(size_t(num_samples) + 1);
  for (int k = 0; k <= num_samples; ++k) {
    const double t = double(k) / double(num_samples);
    samples.push_back(skewlin::SpecialOrthogonalMatrix::validate(arcs->frame(t), tol));
  }
  auto sampler = [arcs, tol](double t) {
    return skewlin::SpecialOrthogonalMatrix::validate(arcs->frame(t), tol);
  };
  FrameLoop loop = FrameLoop::create_uniform(std::move(samples), sampler, tol);
  if (n <= oracles::kMaxSpinDim) {
    const int expect = nontrivial ? -1 : 1;
    if (oracles::spin_lift_sign(loop, tol) != expect)
      fail(ErrorCode::NumericalFailure, "models.random_so_loop",
           "generated loop failed oracle verification of its target class");
  }
  return loop;
}

/// SO(2) loop with prescribed winding plus a seeded smooth wiggle.
inline FrameLoop random_winding_loop(std::uint64_t seed, int winding,
                                     int num_samples = 128, const Tolerances& tol = {}) {
  const double c1 = detail::uniform(seed, 1, -0.6, 0.6);
  const double c2 = detail::uniform(seed, 2, -0.4, 0.4);
  const double p1 = detail::uniform(seed, 3, 0.0, 2 * std::numbers::pi);
  auto angle = [=](double t) {
    return 2 * std::numbers::pi * winding * t +
           c1 * (std::sin(2 * std::numbers::pi * t + p1) - std::sin(p1)) +
           c2 * std::sin(4 * std::numbers::pi * t);
  };
  auto frame = [=](double t) {
    const double th = angle(t);
    Matrix f(2, 2);
    f << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    return f;
  };
  std::vector<skewlin::SpecialOrthogonalMatrix> samples;
  for (int k = 0; k <= num_samples; ++k)
    samples.push_back(skewlin::SpecialOrthogonalMatrix::validate(
        frame(double(k) / num_samples), tol));
  auto sampler = [frame, tol](double t) {
    return skewlin::SpecialOrthogonalMatrix::validate(frame(t), tol);
  };
  return FrameLoop::create_uniform(std::move(samples), sampler, tol);
}

// ---------------------------------------------------------------------------
// Named model dispatch (CLI-facing).

enum class ModelName {
  TwoLevelCi,
  TwoCenterCi,
  JtTTau2,
  EmbeddedBlock,
  RandomSymmetricFamily,
  SpinHalfMonopole,
};

struct ModelSpec {
  ModelName name;
  std::map<std::string, double> params;
  std::uint64_t seed = 0;
};

inline ModelName model_name_from_string(const std::string& s) {
  if (s == "two_level_ci") return ModelName::TwoLevelCi;
  if (s == "two_center_ci") return ModelName::TwoCenterCi;
  if (s == "jt_t_tau2") return ModelName::JtTTau2;
  if (s == "embedded_block") return ModelName::EmbeddedBlock;
  if (s == "random_symmetric_family") return ModelName::RandomSymmetricFamily;
  if (s == "spin_half_monopole") return ModelName::SpinHalfMonopole;
  fail(ErrorCode::ConfigInvalid, "models", "unknown model: " + s);
}

namespace detail {

inline double require_param(const ModelSpec& spec, const std::string& key) {
  auto it = spec.params.find(key);
  if (it == spec.params.end())
    fail(ErrorCode::ConfigInvalid, "models",
         "model is missing required parameter '" + key + "'");
  return it->second;
}

inline double param_or(const ModelSpec& spec, const std::string& key, double dflt) {
  auto it = spec.params.find(key);
  return it == spec.params.end() ? dflt : it->second;
}

}  // namespace detail

/// Real symmetric sampler for a named model (the monopole is complex and
/// handled by the stone module instead).
inline HamiltonianSampler make_sampler(const ModelSpec& spec) {
  switch (spec.name) {
    case ModelName::TwoLevelCi:
      return two_level_sampler();
    case ModelName::TwoCenterCi:
      return two_center_sampler(detail::param_or(spec, "a", 1.0));
    case ModelName::JtTTau2:
      return jt_hamiltonian();
    case ModelName::EmbeddedBlock:
      return embedded_block(int(detail::require_param(spec, "n")),
                            detail::param_or(spec, "eps", 0.05), spec.seed);
    case ModelName::RandomSymmetricFamily:
      return random_symmetric_family(int(detail::require_param(spec, "n")), spec.seed);
    case ModelName::SpinHalfMonopole:
      fail(ErrorCode::ConfigInvalid, "models",
           "spin_half_monopole is complex Hermitian; use the stone-test pipeline");
  }
  fail(ErrorCode::ConfigInvalid, "models", "unhandled model");
}

}  // namespace degcert::models
