#pragma once

// The p-dimensional test applied to projections of p eigenvectors onto a
// fixed reference subspace: overlap condition, Gram-Schmidt frames in the
// reference coordinates, and the projected degeneracy test.

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <utility>
#include <vector>

#include "degcert/transport.hpp"

namespace degcert::subspace {

using skewlin::Matrix;
using skewlin::Vector;

/// Fires when the overlap condition holds but the projected set still looks
/// numerically dependent. That combination is impossible mathematically, so
/// a nonzero count means a bug somewhere in this pipeline.
inline std::atomic<long>& independence_assertion_failures() {
  static std::atomic<long> count{0};
  return count;
}

/// Fixed p-dimensional reference subspace of R^n, stored as an n x p
/// orthonormal basis.
struct ReferenceSubspace {
  Matrix basis;  // n x p, orthonormal columns

  static ReferenceSubspace from_basis(const Matrix& basis) {
    const int n = int(basis.rows()), p = int(basis.cols());
    if (p < 1 || p >= n)
      fail(ErrorCode::Precondition, "subspace.reference", "need 1 <= p < n");
    if (skewlin::max_abs(basis.transpose() * basis - Matrix::Identity(p, p)) > 1e-10)
      fail(ErrorCode::Precondition, "subspace.reference",
           "reference basis is not orthonormal");
    return ReferenceSubspace{basis};
  }

  /// First p coordinate directions of R^n.
  static ReferenceSubspace coordinates(int n, int p) {
    return from_basis(Matrix::Identity(n, n).leftCols(p));
  }

  int ambient_dim() const { return int(basis.rows()); }
  int dim() const { return int(basis.cols()); }
};

/// Classical Gram-Schmidt on the columns of a p x p coefficient matrix, in
/// index order. No orientation fixing here; that is a per-sequence decision.
inline Matrix gram_schmidt_frame(const Matrix& phi, double pivot_min = 1e-12) {
  const int p = int(phi.cols());
  Matrix q(phi.rows(), p);
  for (int j = 0; j < p; ++j) {
    Vector v = phi.col(j);
    for (int i = 0; i < j; ++i) v -= q.col(i).dot(v) * q.col(i);
    for (int i = 0; i < j; ++i) v -= q.col(i).dot(v) * q.col(i);
    const double nrm = v.norm();
    if (nrm < pivot_min)
      fail(ErrorCode::RankDeficient, "subspace.gram_schmidt_frame",
           "column " + std::to_string(j) + " is dependent on its predecessors");
    q.col(j) = v / nrm;
  }
  return q;
}

/// Per-sample projection diagnostics plus the Gram-Schmidt frames, oriented
/// det +1 on the first sample and propagated by continuity.
struct ProjectionDiagnostics {
  std::vector<Vector> overlaps;  // p squared norms per sample, in [0, 1]
  double min_overlap = 1.0;
  bool condition_met = false;
  std::vector<Matrix> frames_gs;  // p x p special orthogonal frames
  double min_sigma = 1.0;         // smallest singular value across samples
  int worst_sample = 0;
  int worst_index = 0;
};

/// Project the selected eigenvector columns onto the reference subspace and
/// check the strict overlap bound min <phi|phi> > 1 - 1/p (+margin). Then
/// verify independence directly (smallest singular value) and build the
/// Gram-Schmidt frames.
inline ProjectionDiagnostics project_and_check(const std::vector<Matrix>& frames,
                                               const ReferenceSubspace& ref,
                                               const Tolerances& tol = {}) {
  if (frames.empty())
    fail(ErrorCode::Precondition, "subspace.project_and_check", "no frames given");
  const int p = ref.dim();
  if (int(frames.front().cols()) != p)
    fail(ErrorCode::DimensionMismatch, "subspace.project_and_check",
         "selected band width must equal the reference dimension");

  ProjectionDiagnostics diag;
  const double bound = 1.0 - 1.0 / double(p) + tol.margin;
  for (size_t k = 0; k < frames.size(); ++k) {
    const Matrix phi = ref.basis.transpose() * frames[k];  // p x p coefficients
    Vector ov(p);
    for (int i = 0; i < p; ++i) {
      ov[i] = phi.col(i).squaredNorm();
      if (ov[i] < diag.min_overlap) {
        diag.min_overlap = ov[i];
        diag.worst_sample = int(k);
        diag.worst_index = i;
      }
    }
    diag.overlaps.push_back(std::move(ov));
  }
  if (!(diag.min_overlap > bound))
    fail(ErrorCode::ConditionViolated, "subspace.project_and_check",
         "projection overlap " + std::to_string(diag.min_overlap) +
             " at sample " + std::to_string(diag.worst_sample) + ", vector " +
             std::to_string(diag.worst_index) + " does not exceed 1 - 1/p + margin",
         {{"sample_index", std::to_string(diag.worst_sample)},
          {"vector_index", std::to_string(diag.worst_index)},
          {"min_overlap", std::to_string(diag.min_overlap)}});
  diag.condition_met = true;

  for (size_t k = 0; k < frames.size(); ++k) {
    const Matrix phi = ref.basis.transpose() * frames[k];
    const double sigma = phi.jacobiSvd().singularValues().minCoeff();
    diag.min_sigma = std::min(diag.min_sigma, sigma);
    if (sigma <= tol.sigma_min) {
      independence_assertion_failures()++;
      fail(ErrorCode::RankDeficient, "subspace.project_and_check",
           "projected set numerically dependent despite the overlap condition: "
           "this indicates a bug, aborting",
           {{"sample_index", std::to_string(k)}, {"sigma", std::to_string(sigma)}});
    }
    diag.frames_gs.push_back(gram_schmidt_frame(phi));
  }

  // Orientation: det +1 on the first frame by final-column flip, propagated
  // to all samples (Gram-Schmidt is continuous, so the determinant cannot
  // change along the sequence).
  if (diag.frames_gs.front().determinant() < 0)
    for (auto& f : diag.frames_gs) f.col(p - 1) = -f.col(p - 1);
  return diag;
}

/// Degeneracy test on the projected frames: transport the selected band,
/// check the overlap condition, build SO(p) frames and classify their loop.
/// `band_lo` selects eigenvectors [band_lo, band_lo + p) by eigenvalue index.
/// `interior_points`, when given, are extra parameter points (inside the
/// would-be surface) where the overlap condition is spot-checked.
inline TestReport subspace_degeneracy_test(const transport::HamiltonianSampler& h,
                                           const transport::ParameterLoop& loop,
                                           const ReferenceSubspace& ref, int band_lo,
                                           const Tolerances& tol = {},
                                           const std::vector<Vector>& interior_points = {}) {
  const int p = ref.dim();
  if (ref.ambient_dim() != h.dim)
    fail(ErrorCode::DimensionMismatch, "subspace.degeneracy_test",
         "reference subspace lives in a different ambient dimension");
  if (band_lo < 0 || band_lo + p > h.dim)
    fail(ErrorCode::Precondition, "subspace.degeneracy_test",
         "band selection out of range");

  const transport::TransportResult tr = transport::transport_frames(h, loop, tol);
  std::vector<Matrix> selected;
  selected.reserve(tr.frames.size());
  for (const auto& f : tr.frames) selected.push_back(f.middleCols(band_lo, p));

  ProjectionDiagnostics diag = project_and_check(selected, ref, tol);

  for (const auto& q : interior_points) {
    transport::detail::EigenSample es = transport::detail::eigensample(h, q, tol, -1.0);
    const Matrix phi = ref.basis.transpose() * es.vectors.middleCols(band_lo, p);
    for (int i = 0; i < p; ++i)
      if (!(phi.col(i).squaredNorm() > 1.0 - 1.0 / double(p) + tol.margin))
        fail(ErrorCode::ConditionViolated, "subspace.degeneracy_test",
             "overlap condition fails at an interior spot-check point");
  }

  TestReport report;
  report.surface_condition_checked =
      interior_points.empty() ? "loop_only" : "loop_plus_interior_samples";
  report.diagnostics["min_gap"] = tr.min_gap;
  report.diagnostics["overlap_quality"] = tr.overlap_quality;
  report.diagnostics["min_overlap"] = diag.min_overlap;
  report.diagnostics["condition_margin"] =
      diag.min_overlap - (1.0 - 1.0 / double(p));
  report.diagnostics["min_sigma"] = diag.min_sigma;

  const transport::ClosureKind kind = transport::detail::classify_closure_matrix(
      diag.frames_gs.front().transpose() * diag.frames_gs.back(), tol.tol_perm,
      "subspace.degeneracy_test");
  if (kind == transport::ClosureKind::Permuted)
    fail(ErrorCode::PermutedClosure, "subspace.degeneracy_test",
         "projected frame closure is a nontrivial permutation");
  if (kind == transport::ClosureKind::SignReversal) {
    report.verdict = Verdict::DegeneracyCertified;
    report.reason = Reason::SignReversal;
    return report;
  }

  std::vector<skewlin::SpecialOrthogonalMatrix> samples;
  samples.reserve(diag.frames_gs.size());
  for (size_t k = 0; k + 1 < diag.frames_gs.size(); ++k)
    samples.push_back(skewlin::SpecialOrthogonalMatrix::validate(diag.frames_gs[k], tol));
  samples.push_back(samples.front());  // closure snap, as in the full test

  homotopy::FrameLoop::Sampler sampler;
  if (loop.refinable()) {
    const bool flipped = gram_schmidt_frame(ref.basis.transpose() *
                                            tr.frames.front().middleCols(band_lo, p))
                             .determinant() < 0;
    auto shared = std::make_shared<transport::TransportResult>(tr);
    sampler = [h, loop, shared, ref, band_lo, p, flipped, tol](double t) {
      const auto& params = shared->params;
      auto it = std::upper_bound(params.begin(), params.end(), t);
      size_t k = it == params.begin() ? 0 : size_t(std::distance(params.begin(), it)) - 1;
      transport::detail::EigenSample cur =
          transport::detail::eigensample(h, loop.point_at(t), tol, t);
      transport::detail::check_gap(cur.values, tol, t);
      if (transport::detail::match_to_previous(shared->frames[k], cur) < tol.overlap_min)
        fail(ErrorCode::OverlapTooWeak, "subspace.frame_sampler",
             "cannot track frames to the requested parameter",
             {{"t", std::to_string(t)}});
      Matrix g = gram_schmidt_frame(ref.basis.transpose() *
                                    cur.vectors.middleCols(band_lo, p));
      if (flipped) g.col(p - 1) = -g.col(p - 1);
      return skewlin::SpecialOrthogonalMatrix::validate(g, tol);
    };
  }
  homotopy::FrameLoop frame_loop =
      homotopy::FrameLoop::create(std::move(samples), tr.params, std::move(sampler), tol);

  if (p == 2) {
    const homotopy::WindingNumber w =
        homotopy::winding_number(homotopy::normalize_base_point(frame_loop, tol), tol);
    report.winding = w.value;
    report.diagnostics["winding_residual"] = w.residual;
    if (w.value != 0) {
      report.verdict = Verdict::DegeneracyCertified;
      report.reason = Reason::NonzeroWinding;
    }
    return report;
  }

  const homotopy::HomotopyVerdict verdict = homotopy::classify_loop(frame_loop, tol);
  report.k_list = verdict.k_list;
  report.h = verdict.h;
  report.diagnostics["max_int_residual"] = verdict.max_int_residual;
  if (verdict.parity == homotopy::Parity::Nontrivial) {
    report.verdict = Verdict::DegeneracyCertified;
    report.reason = Reason::NontrivialLoop;
  }
  return report;
}

}  // namespace degcert::subspace
