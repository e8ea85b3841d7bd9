#pragma once

// Geometric-phase sweep test for complex Hermitian families: track the
// continuously unwrapped cyclic phase over a family of loops sweeping a
// closed surface and read off the integer it advances by.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include "degcert/report.hpp"
#include "degcert/skewlin.hpp"

namespace degcert::stone {

using skewlin::Vector;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Parameter-dependent complex Hermitian matrix family.
struct ComplexHamiltonianSampler {
  int dim = 0;
  std::function<ComplexMatrix(const Vector&)> eval;
};

/// Family of parameter loops sweeping a closed surface; the first and last
/// loops are points. `ring_sampler`, when present, produces the loop at any
/// sweep position s in [0, 1] (enables refinement between rings).
struct SurfaceSweep {
  std::vector<std::vector<Vector>> loops;  // each: ordered ring of points
  std::function<std::vector<Vector>(double)> ring_sampler;
  std::vector<double> positions;  // sweep coordinate per ring, 0..1

  static SurfaceSweep from_loops(std::vector<std::vector<Vector>> loops,
                                 const Tolerances& tol = {}) {
    SurfaceSweep sw;
    sw.loops = std::move(loops);
    sw.validate(tol);
    sw.positions.resize(sw.loops.size());
    for (size_t i = 0; i < sw.loops.size(); ++i)
      sw.positions[i] = double(i) / double(sw.loops.size() - 1);
    return sw;
  }

  /// Sphere of given center/radius: rings of constant polar angle, swept
  /// pole to pole, each ring sampled counterclockwise in azimuth.
  static SurfaceSweep sphere(const Vector& center, double radius, int num_rings,
                             int ring_samples, bool reverse_orientation = false,
                             const Tolerances& tol = {}) {
    if (center.size() != 3)
      fail(ErrorCode::Precondition, "stone.sweep", "sphere center must be a 3-vector");
    if (num_rings < 3 || ring_samples < 3)
      fail(ErrorCode::Precondition, "stone.sweep", "sweep too coarse");
    auto ring_at = [center, radius, ring_samples, reverse_orientation](double s) {
      const double polar = std::numbers::pi * s;
      std::vector<Vector> ring;
      ring.reserve(size_t(ring_samples));
      for (int j = 0; j < ring_samples; ++j) {
        // Default orientation is fixed so the monopole's lower band on the
        // outward unit sphere comes out at k = -1.
        const double az =
            (reverse_orientation ? 1.0 : -1.0) * 2 * std::numbers::pi * j / ring_samples;
        Vector q(3);
        q << center[0] + radius * std::sin(polar) * std::cos(az),
            center[1] + radius * std::sin(polar) * std::sin(az),
            center[2] + radius * std::cos(polar);
        ring.push_back(q);
      }
      return ring;
    };
    SurfaceSweep sw;
    sw.ring_sampler = ring_at;
    sw.positions.resize(size_t(num_rings));
    for (int i = 0; i < num_rings; ++i) {
      sw.positions[size_t(i)] = double(i) / double(num_rings - 1);
      sw.loops.push_back(ring_at(sw.positions[size_t(i)]));
    }
    sw.validate(tol);
    return sw;
  }

  void validate(const Tolerances& tol) const {
    if (loops.size() < 3)
      fail(ErrorCode::Precondition, "stone.sweep", "need at least three loops");
    auto diameter = [](const std::vector<Vector>& ring) {
      double d = 0;
      for (size_t a = 0; a < ring.size(); ++a)
        for (size_t b = a + 1; b < ring.size(); ++b)
          d = std::max(d, (ring[a] - ring[b]).norm());
      return d;
    };
    if (diameter(loops.front()) > tol.tol_point || diameter(loops.back()) > tol.tol_point)
      fail(ErrorCode::Precondition, "stone.sweep",
           "first and last loops must be degenerate to points");
    for (size_t i = 0; i + 1 < loops.size(); ++i) {
      double h = 0;
      for (const auto& p : loops[i]) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : loops[i + 1]) best = std::min(best, (p - q).norm());
        h = std::max(h, best);
      }
      if (h > tol.sweep_step)
        fail(ErrorCode::Precondition, "stone.sweep",
             "consecutive sweep loops are too far apart (Hausdorff " +
                 std::to_string(h) + ")");
    }
  }
};

/// Cyclic geometric phase of a closed chain of states by the Pancharatnam
/// product: gamma = -arg prod <psi_j | psi_j+1>, gauge invariant under
/// per-state phase changes. An exactly duplicated closing state is dropped.
inline double berry_phase(std::vector<ComplexVector> states, const Tolerances& tol = {}) {
  (void)tol;
  if (states.size() >= 2 &&
      (states.front() - states.back()).cwiseAbs().maxCoeff() < 1e-14)
    states.pop_back();
  if (states.size() < 2)
    fail(ErrorCode::Precondition, "stone.berry_phase", "need at least two states");
  std::complex<double> prod(1.0, 0.0);
  for (size_t j = 0; j < states.size(); ++j) {
    const std::complex<double> ov = states[j].dot(states[(j + 1) % states.size()]);
    if (std::abs(ov) <= 0.1)
      fail(ErrorCode::OverlapVanishes, "stone.berry_phase",
           "consecutive state overlap " + std::to_string(std::abs(ov)) +
               " too small at index " + std::to_string(j),
           {{"sample_index", std::to_string(j)}});
    prod *= ov / std::abs(ov);
  }
  double gamma = -std::arg(prod);
  if (gamma <= -std::numbers::pi) gamma = std::numbers::pi;  // range (-pi, pi]
  return gamma;
}

struct SweepResult {
  std::vector<double> gammas;  // unwrapped, gammas[0] = 0
  long k = 0;
  double residual = 0.0;
};

namespace detail {

inline ComplexVector band_state(const ComplexHamiltonianSampler& h, const Vector& q,
                                int band, const Tolerances& tol) {
  const ComplexMatrix hm = h.eval(q);
  const double herm = (hm - hm.adjoint()).cwiseAbs().maxCoeff();
  if (herm > tol.tol_sym)
    fail(ErrorCode::Precondition, "stone.sampler",
         "sampled matrix is not Hermitian (residual " + std::to_string(herm) + ")");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hm);
  if (es.info() != Eigen::Success)
    fail(ErrorCode::NumericalFailure, "stone.sampler", "eigensolver did not converge");
  const auto& vals = es.eigenvalues();
  const int n = int(vals.size());
  if (band < 0 || band >= n)
    fail(ErrorCode::Precondition, "stone.sampler", "band index out of range");
  const double range = vals[n - 1] - vals[0];
  const double gap_lo = band > 0 ? vals[band] - vals[band - 1]
                                 : std::numeric_limits<double>::infinity();
  const double gap_hi = band + 1 < n ? vals[band + 1] - vals[band]
                                     : std::numeric_limits<double>::infinity();
  // Absolute floor besides the relative test (for 2x2 the range IS the gap).
  const double floor = 1e-12 * (1.0 + vals.cwiseAbs().maxCoeff());
  if (range <= floor || std::min(gap_lo, gap_hi) < tol.tol_gap * range)
    fail(ErrorCode::DegenerateOnSurface, "stone.stone_test",
         "selected band is degenerate on the surface");
  return es.eigenvectors().col(band);
}

inline double ring_phase(const ComplexHamiltonianSampler& h,
                         const std::vector<Vector>& ring, int band,
                         const Tolerances& tol) {
  std::vector<ComplexVector> states;
  states.reserve(ring.size());
  for (const auto& q : ring) states.push_back(band_state(h, q, band, tol));
  return berry_phase(std::move(states), tol);
}

}  // namespace detail

/// Track the unwrapped cyclic phase across the sweep; k = gamma_N / 2pi.
/// Jumps of pi or more between consecutive loops are bisected through the
/// ring sampler when one exists, otherwise reported as discontinuities.
inline std::pair<SweepResult, TestReport> stone_test(const ComplexHamiltonianSampler& h,
                                                     const SurfaceSweep& sweep, int band,
                                                     const Tolerances& tol = {}) {
  SweepResult result;
  result.gammas.push_back(0.0);

  double current = 0.0;  // unwrapped phase
  double current_raw = detail::ring_phase(h, sweep.loops.front(), band, tol);

  std::function<void(double, double, double, int)> advance =
      [&](double s_lo, double s_hi, double gamma_hi_raw, int depth) {
        double delta = gamma_hi_raw - current_raw;
        while (delta > std::numbers::pi) delta -= 2 * std::numbers::pi;
        while (delta <= -std::numbers::pi) delta += 2 * std::numbers::pi;
        const bool jump = std::abs(delta) >= std::numbers::pi * (1 - 1e-9);
        if (jump) {
          if (!sweep.ring_sampler || depth >= tol.max_depth)
            fail(ErrorCode::SweepDiscontinuous, "stone.stone_test",
                 "phase jump of " + std::to_string(std::abs(delta)) +
                     " between sweep loops" +
                     (sweep.ring_sampler ? " after refinement" : " (sweep not refinable)"),
                 {{"s_lo", std::to_string(s_lo)}, {"s_hi", std::to_string(s_hi)}});
          const double s_mid = 0.5 * (s_lo + s_hi);
          const double gamma_mid =
              detail::ring_phase(h, sweep.ring_sampler(s_mid), band, tol);
          advance(s_lo, s_mid, gamma_mid, depth + 1);
          advance(s_mid, s_hi, gamma_hi_raw, depth + 1);
          return;
        }
        current += delta;
        current_raw = gamma_hi_raw;
      };

  for (size_t i = 1; i < sweep.loops.size(); ++i) {
    advance(sweep.positions[i - 1], sweep.positions[i],
            detail::ring_phase(h, sweep.loops[i], band, tol), 0);
    result.gammas.push_back(current);
  }

  const double ratio = current / (2 * std::numbers::pi);
  result.k = std::lround(ratio);
  result.residual = std::abs(ratio - double(result.k));
  if (result.residual > tol.k_round_tol)
    fail(ErrorCode::NotQuantized, "stone.stone_test",
         "final phase is not an integer multiple of 2*pi (residual " +
             std::to_string(result.residual) + ")");

  TestReport report;
  report.stone_k = result.k;
  report.diagnostics["stone_residual"] = result.residual;
  if (result.k != 0) {
    report.verdict = Verdict::DegeneracyCertified;
    report.reason = Reason::NonzeroStoneK;
  }
  return {result, report};
}

}  // namespace degcert::stone
