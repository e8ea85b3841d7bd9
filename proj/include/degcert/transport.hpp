#pragma once

// Eigenframe transport for real symmetric Hamiltonian families: continuous
// eigenvector matching along a parameter loop, closure analysis, and the
// end-to-end degeneracy test.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <utility>
#include <vector>

#include "degcert/homotopy.hpp"
#include "degcert/report.hpp"

namespace degcert::transport {

using skewlin::Matrix;
using skewlin::Vector;

/// Parameter-dependent real symmetric matrix family. `eval` must return a
/// matrix symmetric within tol_sym for every point it is queried at.
struct HamiltonianSampler {
  int dim = 0;
  std::function<Matrix(const Vector&)> eval;
};

/// Closed polyline in parameter space. point_at(t) walks the polyline by
/// cumulative chord length, t in [0, 1].
class ParameterLoop {
 public:
  static ParameterLoop from_vertices(std::vector<Vector> vertices, int num_samples,
                                     bool refinable = true) {
    if (vertices.size() < 3)
      fail(ErrorCode::Precondition, "transport.parameter_loop",
           "need at least three vertices (closed polyline)");
    if ((vertices.front() - vertices.back()).norm() > 1e-12)
      fail(ErrorCode::Precondition, "transport.parameter_loop",
           "polyline must be closed (first vertex = last vertex)");
    for (size_t i = 0; i + 1 < vertices.size(); ++i)
      if ((vertices[i + 1] - vertices[i]).norm() == 0.0)
        fail(ErrorCode::Precondition, "transport.parameter_loop",
             "consecutive vertices must be distinct");
    if (num_samples < 4)
      fail(ErrorCode::Precondition, "transport.parameter_loop",
           "need at least four samples");
    return ParameterLoop(std::move(vertices), num_samples, refinable);
  }

  static ParameterLoop circle(double cx, double cy, double radius, int num_samples,
                              int num_vertices = 0) {
    return ellipse(cx, cy, radius, radius, num_samples, num_vertices);
  }

  static ParameterLoop ellipse(double cx, double cy, double rx, double ry,
                               int num_samples, int num_vertices = 0) {
    if (num_vertices <= 0) num_vertices = std::max(512, 4 * num_samples);
    std::vector<Vector> verts;
    verts.reserve(size_t(num_vertices) + 1);
    for (int i = 0; i <= num_vertices; ++i) {
      const double th = 2 * std::numbers::pi * double(i) / double(num_vertices);
      Vector q(2);
      q << cx + rx * std::cos(th), cy + ry * std::sin(th);
      verts.push_back(q);
    }
    verts.back() = verts.front();
    return from_vertices(std::move(verts), num_samples, true);
  }

  int ambient_dim() const { return int(vertices_.front().size()); }
  int num_samples() const { return num_samples_; }
  bool refinable() const { return refinable_; }
  const std::vector<Vector>& vertices() const { return vertices_; }

  Vector point_at(double t) const {
    t = std::clamp(t, 0.0, 1.0);
    const double target = t * cumulative_.back();
    auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), target);
    size_t seg = size_t(std::distance(cumulative_.begin(), it));
    if (seg == 0) return vertices_.front();
    seg -= 1;
    const double lo = cumulative_[seg];
    const double hi = cumulative_[seg + 1];
    const double frac = hi > lo ? (target - lo) / (hi - lo) : 0.0;
    return vertices_[seg] + frac * (vertices_[seg + 1] - vertices_[seg]);
  }

 private:
  ParameterLoop(std::vector<Vector> verts, int num_samples, bool refinable)
      : vertices_(std::move(verts)), num_samples_(num_samples), refinable_(refinable) {
    cumulative_.resize(vertices_.size());
    cumulative_[0] = 0.0;
    for (size_t i = 1; i < vertices_.size(); ++i)
      cumulative_[i] = cumulative_[i - 1] + (vertices_[i] - vertices_[i - 1]).norm();
  }

  std::vector<Vector> vertices_;
  int num_samples_;
  bool refinable_;
  std::vector<double> cumulative_;
};

namespace detail {

/// Classic O(n^3) Hungarian algorithm, minimizing total cost.
inline std::vector<int> min_cost_assignment(const Matrix& cost) {
  const int n = int(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

struct EigenSample {
  Vector values;
  Matrix vectors;
};

inline EigenSample eigensample(const HamiltonianSampler& h, const Vector& q,
                               const Tolerances& tol, double t) {
  Matrix hm = h.eval(q);
  if (hm.rows() != h.dim || hm.cols() != h.dim)
    fail(ErrorCode::DimensionMismatch, "transport.sampler",
         "sampler returned a matrix of the wrong size");
  const double sym = skewlin::max_abs(hm - hm.transpose());
  if (sym > tol.tol_sym)
    fail(ErrorCode::Precondition, "transport.sampler",
         "sampled matrix is not symmetric (residual " + std::to_string(sym) + ")",
         {{"t", std::to_string(t)}});
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (hm + hm.transpose()));
  if (es.info() != Eigen::Success)
    fail(ErrorCode::NumericalFailure, "transport.sampler",
         "eigensolver did not converge", {{"t", std::to_string(t)}});
  return {es.eigenvalues(), es.eigenvectors()};
}

inline void check_gap(const Vector& values, const Tolerances& tol, double t) {
  const int n = int(values.size());
  if (n < 2) return;
  const double range = values[n - 1] - values[0];
  double min_gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i + 1 < n; ++i) min_gap = std::min(min_gap, values[i + 1] - values[i]);
  // Absolute floor besides the relative test: for two-level families the
  // range IS the gap, so a purely relative check could never fire.
  const double floor = 1e-12 * (1.0 + values.cwiseAbs().maxCoeff());
  if (range <= floor || min_gap < tol.tol_gap * range)
    fail(ErrorCode::DegenerateOnLoop, "transport.transport_frames",
         "eigenvalue gap " + std::to_string(min_gap) + " at t=" + std::to_string(t) +
             " is degenerate relative to the spectral range",
         {{"t", std::to_string(t)}, {"min_gap", std::to_string(min_gap)}});
}

/// Match `cur`'s columns to `prev` by maximal |overlap| assignment, permute
/// and sign-fix. Returns the worst matched overlap.
inline double match_to_previous(const Matrix& prev, EigenSample& cur) {
  const int n = int(prev.cols());
  const Matrix overlap = (prev.transpose() * cur.vectors).cwiseAbs();
  const Matrix cost = Matrix::Ones(n, n) - overlap;
  const std::vector<int> col_of_row = min_cost_assignment(cost);
  Matrix permuted(n, n);
  Vector values(n);
  double worst = 1.0;
  for (int i = 0; i < n; ++i) {
    const int j = col_of_row[i];
    Vector v = cur.vectors.col(j);
    const double ov = prev.col(i).dot(v);
    if (ov < 0) v = -v;
    permuted.col(i) = v;
    values[i] = cur.values[j];
    worst = std::min(worst, std::abs(ov));
  }
  cur.vectors = std::move(permuted);
  cur.values = std::move(values);
  return worst;
}

}  // namespace detail

/// Continuous eigenframes along the loop, plus closure diagnostics.
struct TransportResult {
  std::vector<Matrix> frames;       // orthonormal, matched, det +1
  std::vector<Vector> eigenvalues;  // matched ordering per sample
  std::vector<double> params;
  double min_gap = 0.0;          // smallest adjacent gap anywhere on the loop
  double spectral_range = 0.0;   // max - min eigenvalue over the loop
  double overlap_quality = 1.0;  // worst matched overlap
  Matrix closure;                // frames[0]^T * frames[last]
};

/// Eigendecompose along the loop and chain frames by optimal-assignment
/// column matching with positive matched overlaps. Steps whose overlap falls
/// below overlap_min (or whose frame step exceeds 0.8 * delta_step) are
/// bisected through the parameter loop, when it is refinable.
inline TransportResult transport_frames(const HamiltonianSampler& h,
                                        const ParameterLoop& loop,
                                        const Tolerances& tol = {}) {
  const int num = loop.num_samples();
  TransportResult out;

  detail::EigenSample first =
      detail::eigensample(h, loop.point_at(0.0), tol, 0.0);
  detail::check_gap(first.values, tol, 0.0);
  if (first.vectors.determinant() < 0)
    first.vectors.col(h.dim - 1) = -first.vectors.col(h.dim - 1);
  out.frames.push_back(first.vectors);
  out.eigenvalues.push_back(first.values);
  out.params.push_back(0.0);

  double min_gap = std::numeric_limits<double>::infinity();
  double lo_val = first.values[0], hi_val = first.values[h.dim - 1];
  auto track_spectrum = [&](const Vector& vals) {
    // Values arriving here may be permuted into matched order; gaps are a
    // property of the sorted spectrum.
    Vector sorted = vals;
    std::sort(sorted.data(), sorted.data() + sorted.size());
    for (int i = 0; i + 1 < h.dim; ++i)
      min_gap = std::min(min_gap, sorted[i + 1] - sorted[i]);
    lo_val = std::min(lo_val, sorted[0]);
    hi_val = std::max(hi_val, sorted[h.dim - 1]);
  };
  track_spectrum(first.values);

  // Advance from the last accepted sample to t, bisecting as needed.
  std::function<void(double, int)> advance = [&](double t, int depth) {
    detail::EigenSample cur = detail::eigensample(h, loop.point_at(t), tol, t);
    detail::check_gap(cur.values, tol, t);
    const double worst = detail::match_to_previous(out.frames.back(), cur);
    const double step = skewlin::max_abs(cur.vectors - out.frames.back());
    if (worst < tol.overlap_min || step > 0.8 * tol.delta_step) {
      if (depth >= tol.max_depth)
        fail(ErrorCode::OverlapTooWeak, "transport.transport_frames",
             "matched overlap " + std::to_string(worst) +
                 " below threshold and refinement exhausted",
             {{"t", std::to_string(t)}});
      if (!loop.refinable())
        fail(ErrorCode::RefinementUnavailable, "transport.transport_frames",
             "matched overlap " + std::to_string(worst) +
                 " below threshold and the loop is not refinable",
             {{"t", std::to_string(t)}});
      const double t_mid = 0.5 * (out.params.back() + t);
      advance(t_mid, depth + 1);
      advance(t, depth + 1);
      return;
    }
    out.overlap_quality = std::min(out.overlap_quality, worst);
    track_spectrum(cur.values);
    out.frames.push_back(cur.vectors);
    out.eigenvalues.push_back(cur.values);
    out.params.push_back(t);
  };

  for (int k = 1; k <= num; ++k) advance(double(k) / double(num), 0);

  out.min_gap = min_gap;
  out.spectral_range = hi_val - lo_val;
  out.closure = out.frames.front().transpose() * out.frames.back();
  return out;
}

enum class ClosureKind { ClosedLoop, SignReversal, Permuted };

inline const char* to_string(ClosureKind k) {
  switch (k) {
    case ClosureKind::ClosedLoop: return "CLOSED_LOOP";
    case ClosureKind::SignReversal: return "SIGN_REVERSAL";
    case ClosureKind::Permuted: return "PERMUTED";
  }
  return "?";
}

namespace detail {

struct SignedPermutation {
  std::vector<int> perm;   // column j of the closure hits row perm[j]
  std::vector<int> signs;  // +/-1 per column
};

inline SignedPermutation decompose_signed_permutation(const Matrix& c, double tol_perm,
                                                      const char* stage) {
  const int n = int(c.rows());
  SignedPermutation sp{std::vector<int>(n, -1), std::vector<int>(n, 0)};
  std::vector<char> row_used(n, 0);
  Matrix residual = c;
  for (int j = 0; j < n; ++j) {
    int best_row = 0;
    double best = 0.0;
    for (int i = 0; i < n; ++i)
      if (std::abs(c(i, j)) > best) {
        best = std::abs(c(i, j));
        best_row = i;
      }
    if (std::abs(best - 1.0) > tol_perm || row_used[best_row])
      fail(ErrorCode::NotSignedPermutation, stage,
           "loop closure is not a signed permutation");
    row_used[best_row] = 1;
    sp.perm[j] = best_row;
    sp.signs[j] = c(best_row, j) > 0 ? 1 : -1;
    residual(best_row, j) -= double(sp.signs[j]);
  }
  if (skewlin::max_abs(residual) > tol_perm)
    fail(ErrorCode::NotSignedPermutation, stage,
         "loop closure deviates from a signed permutation by " +
             std::to_string(skewlin::max_abs(residual)));
  return sp;
}

inline ClosureKind classify_closure_matrix(const Matrix& c, double tol_perm,
                                           const char* stage) {
  const SignedPermutation sp = decompose_signed_permutation(c, tol_perm, stage);
  const int n = int(c.rows());
  bool is_diag = true, all_plus = true;
  for (int j = 0; j < n; ++j) {
    if (sp.perm[j] != j) is_diag = false;
    if (sp.signs[j] != 1) all_plus = false;
  }
  if (!is_diag) return ClosureKind::Permuted;
  return all_plus ? ClosureKind::ClosedLoop : ClosureKind::SignReversal;
}

}  // namespace detail

/// Interpret the transport closure: identity (proceed to the homotopy test),
/// diagonal with -1 entries (sign reversal: degeneracy certified directly),
/// or a genuine permutation (inconsistent transport, an error).
inline ClosureKind closure_classify(const TransportResult& t, const Tolerances& tol = {}) {
  return detail::classify_closure_matrix(t.closure, tol.tol_perm,
                                         "transport.closure_classify");
}

namespace detail {

/// FrameLoop over the transported frames. The sampler eigendecomposes at new
/// parameters and matches columns/signs to the nearest accepted sample, so
/// refinement stays on the same continuous branch.
inline homotopy::FrameLoop make_frame_loop(const HamiltonianSampler& h,
                                           const ParameterLoop& loop,
                                           const TransportResult& tr,
                                           const Tolerances& tol) {
  std::vector<skewlin::SpecialOrthogonalMatrix> samples;
  samples.reserve(tr.frames.size());
  for (size_t k = 0; k + 1 < tr.frames.size(); ++k)
    samples.push_back(skewlin::SpecialOrthogonalMatrix::validate(tr.frames[k], tol));
  // Snap the closure: the final frame equals the first up to tol_perm once
  // the closure has been classified CLOSED_LOOP.
  samples.push_back(samples.front());

  homotopy::FrameLoop::Sampler sampler;
  if (loop.refinable()) {
    auto shared = std::make_shared<TransportResult>(tr);
    sampler = [h, loop, shared, tol](double t) {
      const auto& params = shared->params;
      auto it = std::upper_bound(params.begin(), params.end(), t);
      size_t k = it == params.begin() ? 0 : size_t(std::distance(params.begin(), it)) - 1;
      EigenSample cur = eigensample(h, loop.point_at(t), tol, t);
      check_gap(cur.values, tol, t);
      const double worst = match_to_previous(shared->frames[k], cur);
      if (worst < tol.overlap_min)
        fail(ErrorCode::OverlapTooWeak, "transport.frame_sampler",
             "cannot track frames to the requested parameter",
             {{"t", std::to_string(t)}});
      return skewlin::SpecialOrthogonalMatrix::validate(cur.vectors, tol);
    };
  }
  return homotopy::FrameLoop::create(std::move(samples), tr.params, std::move(sampler),
                                     tol);
}

}  // namespace detail

/// Full pipeline: transport, closure analysis, then (for closed loops) the
/// homotopy classifier or the SO(2) winding. One-sided: a trivial class never
/// certifies absence of degeneracies.
inline TestReport run_degeneracy_test(const HamiltonianSampler& h,
                                      const ParameterLoop& loop,
                                      const Tolerances& tol = {}) {
  const TransportResult tr = transport_frames(h, loop, tol);
  const ClosureKind kind = closure_classify(tr, tol);

  TestReport report;
  report.diagnostics["min_gap"] = tr.min_gap;
  report.diagnostics["spectral_range"] = tr.spectral_range;
  report.diagnostics["overlap_quality"] = tr.overlap_quality;

  if (kind == ClosureKind::Permuted)
    fail(ErrorCode::PermutedClosure, "transport.run_degeneracy_test",
         "transport closure is a nontrivial permutation: inconsistent transport");

  if (kind == ClosureKind::SignReversal) {
    // With an orientation-fixed initial frame the -1 entries come in pairs.
    int flips = 0;
    for (int i = 0; i < h.dim; ++i)
      if (tr.closure(i, i) < 0) ++flips;
    if (flips % 2 != 0)
      fail(ErrorCode::NumericalFailure, "transport.run_degeneracy_test",
           "odd number of sign reversals with det +1 closure");
    report.verdict = Verdict::DegeneracyCertified;
    report.reason = Reason::SignReversal;
    return report;
  }

  const homotopy::FrameLoop frames = detail::make_frame_loop(h, loop, tr, tol);
  if (h.dim == 2) {
    const homotopy::WindingNumber w =
        homotopy::winding_number(homotopy::normalize_base_point(frames, tol), tol);
    report.winding = w.value;
    report.diagnostics["winding_residual"] = w.residual;
    if (w.value != 0) {
      report.verdict = Verdict::DegeneracyCertified;
      report.reason = Reason::NonzeroWinding;
    }
    return report;
  }

  const homotopy::HomotopyVerdict verdict = homotopy::classify_loop(frames, tol);
  report.k_list = verdict.k_list;
  report.h = verdict.h;
  report.diagnostics["max_int_residual"] = verdict.max_int_residual;
  if (verdict.parity == homotopy::Parity::Nontrivial) {
    report.verdict = Verdict::DegeneracyCertified;
    report.reason = Reason::NontrivialLoop;
  }
  return report;
}

}  // namespace degcert::transport
