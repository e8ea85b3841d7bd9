#pragma once

// Loops in SO(n), their lifts into so(n) by branch-matched continuation, and
// the parity classifier. n = 2 gets its own integer winding path.

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "degcert/skewlin.hpp"

namespace degcert::homotopy {

using skewlin::Matrix;
using skewlin::SkewSymmetricMatrix;
using skewlin::SpecialOrthogonalMatrix;

/// Closed, discretely sampled loop in SO(n). Validated on construction:
/// closure within tol_closure, steps within delta_step, params strictly
/// increasing from 0 to 1. `sampler`, when present, produces F(t) at new
/// parameters consistently with the stored samples (used for refinement).
class FrameLoop {
 public:
  using Sampler = std::function<SpecialOrthogonalMatrix(double)>;

  static FrameLoop create(std::vector<SpecialOrthogonalMatrix> samples,
                          std::vector<double> params, Sampler sampler,
                          const Tolerances& tol) {
    if (samples.size() < 2 || samples.size() != params.size())
      fail(ErrorCode::Precondition, "homotopy.frame_loop",
           "need matching sample/parameter lists with at least two entries");
    const int n = samples.front().dim();
    for (const auto& s : samples)
      if (s.dim() != n)
        fail(ErrorCode::DimensionMismatch, "homotopy.frame_loop",
             "inconsistent sample dimensions");
    if (std::abs(params.front()) > 1e-12 || std::abs(params.back() - 1.0) > 1e-12)
      fail(ErrorCode::Precondition, "homotopy.frame_loop",
           "parameters must run from 0 to 1");
    for (size_t k = 0; k + 1 < params.size(); ++k) {
      if (params[k + 1] <= params[k])
        fail(ErrorCode::Precondition, "homotopy.frame_loop",
             "parameters must be strictly increasing");
      const double step =
          skewlin::max_abs(samples[k + 1].matrix() - samples[k].matrix());
      if (step > tol.delta_step)
        fail(ErrorCode::DegenerateSamples, "homotopy.frame_loop",
             "step " + std::to_string(step) + " at k=" + std::to_string(k) +
                 " exceeds delta_step",
             {{"sample_index", std::to_string(k)}});
    }
    const double closure =
        skewlin::max_abs(samples.back().matrix() - samples.front().matrix());
    if (closure > tol.tol_closure)
      fail(ErrorCode::Precondition, "homotopy.frame_loop",
           "loop does not close: residual " + std::to_string(closure));
    return FrameLoop(std::move(samples), std::move(params), std::move(sampler));
  }

  static FrameLoop create_uniform(std::vector<SpecialOrthogonalMatrix> samples,
                                  Sampler sampler, const Tolerances& tol) {
    const size_t m = samples.size();
    std::vector<double> ts(m);
    for (size_t k = 0; k < m; ++k) ts[k] = double(k) / double(m - 1);
    return create(std::move(samples), std::move(ts), std::move(sampler), tol);
  }

  int dim() const { return samples_.front().dim(); }
  size_t size() const { return samples_.size(); }
  const SpecialOrthogonalMatrix& sample(size_t k) const { return samples_[k]; }
  double param(size_t k) const { return params_[k]; }
  const std::vector<double>& params() const { return params_; }
  bool refinable() const { return bool(sampler_); }
  SpecialOrthogonalMatrix sample_at(double t) const {
    if (!sampler_)
      fail(ErrorCode::RefinementUnavailable, "homotopy.frame_loop",
           "loop has no sampler");
    return sampler_(t);
  }

 private:
  FrameLoop(std::vector<SpecialOrthogonalMatrix> samples, std::vector<double> params,
            Sampler sampler)
      : samples_(std::move(samples)),
        params_(std::move(params)),
        sampler_(std::move(sampler)) {}

  std::vector<SpecialOrthogonalMatrix> samples_;
  std::vector<double> params_;
  Sampler sampler_;
};

/// Left-multiply every sample by F(0)^T so the loop starts at the identity.
/// The homotopy class is unchanged.
inline FrameLoop normalize_base_point(const FrameLoop& loop, const Tolerances& tol = {}) {
  const Matrix base_t = loop.sample(0).matrix().transpose();
  std::vector<SpecialOrthogonalMatrix> samples;
  samples.reserve(loop.size());
  for (size_t k = 0; k < loop.size(); ++k)
    samples.push_back(
        SpecialOrthogonalMatrix::validate(base_t * loop.sample(k).matrix(), tol));
  FrameLoop::Sampler sampler;
  if (loop.refinable())
    sampler = [loop, base_t, tol](double t) {
      return SpecialOrthogonalMatrix::validate(base_t * loop.sample_at(t).matrix(), tol);
    };
  return FrameLoop::create(std::move(samples), loop.params(), std::move(sampler), tol);
}

/// Discretized curve in so(n) with exp(points[k]) = F(t_k) and points[0] = 0.
struct LiftedCurve {
  std::vector<SkewSymmetricMatrix> points;
  std::vector<double> params;

  int dim() const { return points.front().dim(); }
  const SkewSymmetricMatrix& endpoint() const { return points.back(); }
};

namespace detail {

inline double skew_dist(const SkewSymmetricMatrix& a, const SkewSymmetricMatrix& b) {
  return skewlin::max_abs(a.full() - b.full());
}

struct LiftState {
  const FrameLoop* loop;
  const Tolerances* tol;
  std::vector<SkewSymmetricMatrix>* points;
  std::vector<double>* params;
};

/// Advance the lift from (t_lo, guide) to t_hi, bisecting the interval on
/// branch ambiguity or continuity violations. Appends every accepted point.
inline SkewSymmetricMatrix lift_advance(LiftState& st, double t_lo,
                                        const SkewSymmetricMatrix& guide,
                                        const SpecialOrthogonalMatrix& f_lo,
                                        double t_hi,
                                        const SpecialOrthogonalMatrix& f_hi,
                                        int depth) {
  std::optional<SkewSymmetricMatrix> lifted;
  std::string why;
  try {
    SkewSymmetricMatrix cand = skewlin::nearest_log(f_hi, guide, *st.tol);
    if (skew_dist(cand, guide) > st.tol->delta_lift)
      why = "lift continuity violated";
    else
      lifted = std::move(cand);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::BranchAmbiguous && e.code() != ErrorCode::AngleNearPi &&
        e.code() != ErrorCode::NumericalFailure)
      throw;
    why = e.brief();
  }

  if (!lifted) {
    const double direct_step = skewlin::max_abs(f_hi.matrix() - f_lo.matrix());
    if (depth >= st.tol->max_depth) {
      if (direct_step > st.tol->delta_step)
        fail(ErrorCode::DegenerateSamples, "homotopy.lift_loop",
             "samples violate delta_step even after refinement",
             {{"t_lo", std::to_string(t_lo)}, {"t_hi", std::to_string(t_hi)}});
      fail(ErrorCode::MaxDepthExceeded, "homotopy.lift_loop",
           "refinement depth exhausted: " + why,
           {{"t_lo", std::to_string(t_lo)}, {"t_hi", std::to_string(t_hi)}});
    }
    if (!st.loop->refinable())
      fail(ErrorCode::RefinementUnavailable, "homotopy.lift_loop",
           "no sampler available to refine ambiguous interval: " + why,
           {{"t_lo", std::to_string(t_lo)}, {"t_hi", std::to_string(t_hi)}});
    const double t_mid = 0.5 * (t_lo + t_hi);
    const SpecialOrthogonalMatrix f_mid = st.loop->sample_at(t_mid);
    SkewSymmetricMatrix g_mid =
        lift_advance(st, t_lo, guide, f_lo, t_mid, f_mid, depth + 1);
    return lift_advance(st, t_mid, g_mid, f_mid, t_hi, f_hi, depth + 1);
  }

  st.points->push_back(*lifted);
  st.params->push_back(t_hi);
  return *lifted;
}

}  // namespace detail

/// Lift a loop based at the identity into so(n): points[0] = 0 and each next
/// point is the logarithm branch nearest the previous one. Intervals where
/// branch matching is ambiguous are bisected through the loop's sampler.
inline LiftedCurve lift_loop(const FrameLoop& loop, const Tolerances& tol = {}) {
  const int n = loop.dim();
  if (skewlin::max_abs(loop.sample(0).matrix() - Matrix::Identity(n, n)) > tol.tol_closure)
    fail(ErrorCode::Precondition, "homotopy.lift_loop",
         "loop must be based at the identity (normalize_base_point first)");

  LiftedCurve curve;
  curve.points.push_back(SkewSymmetricMatrix::zero(n));
  curve.params.push_back(loop.param(0));
  detail::LiftState st{&loop, &tol, &curve.points, &curve.params};
  SkewSymmetricMatrix guide = curve.points.front();
  for (size_t k = 0; k + 1 < loop.size(); ++k) {
    guide = detail::lift_advance(st, loop.param(k), guide, loop.sample(k),
                                 loop.param(k + 1), loop.sample(k + 1), 0);
  }
  return curve;
}

enum class Parity { Trivial, Nontrivial };

inline const char* to_string(Parity p) {
  return p == Parity::Trivial ? "trivial" : "nontrivial";
}

/// Outcome of the parity classifier: block angles of the lift endpoint are
/// 2*pi*k_i; the loop is trivial iff the k_i sum to an even number.
struct HomotopyVerdict {
  std::vector<long> k_list;  // |k_i|, matching the endpoint form's angle order
  long h = 0;                // sum of k_list
  Parity parity = Parity::Trivial;
  skewlin::CanonicalSkewForm endpoint_form;
  double max_int_residual = 0.0;
};

inline HomotopyVerdict classify(const LiftedCurve& lifted, const Tolerances& tol = {}) {
  const int n = lifted.dim();
  if (n == 2)
    fail(ErrorCode::WrongDimension, "homotopy.classify",
         "n = 2 loops carry an integer winding; use winding_number");
  if (n < 3)
    fail(ErrorCode::WrongDimension, "homotopy.classify", "need dimension >= 3");

  skewlin::CanonicalSkewForm form = skewlin::skew_canonical_form(lifted.endpoint(), tol);
  HomotopyVerdict verdict{{}, 0, Parity::Trivial, std::move(form), 0.0};
  long signed_sum = 0;
  for (double a : verdict.endpoint_form.angles) {
    const double ratio = a / (2 * std::numbers::pi);
    const long k = std::lround(ratio);
    const double res = std::abs(ratio - double(k));
    verdict.max_int_residual = std::max(verdict.max_int_residual, res);
    verdict.k_list.push_back(std::labs(k));
    verdict.h += std::labs(k);
    signed_sum += k;
  }
  if (verdict.max_int_residual > tol.k_round_tol)
    fail(ErrorCode::NotQuantized, "homotopy.classify",
         "endpoint angles are not integer multiples of 2*pi (residual " +
             std::to_string(verdict.max_int_residual) + "): refine the lift");
  verdict.parity = (signed_sum % 2 != 0) ? Parity::Nontrivial : Parity::Trivial;
  return verdict;
}

struct WindingNumber {
  long value = 0;
  double residual = 0.0;
};

/// Integer winding of an SO(2) loop via nearest-branch angle unwrapping.
inline WindingNumber winding_number(const FrameLoop& loop, const Tolerances& tol = {}) {
  if (loop.dim() != 2)
    fail(ErrorCode::WrongDimension, "homotopy.winding_number", "loop must be in SO(2)");
  double prev_raw =
      std::atan2(loop.sample(0).matrix()(1, 0), loop.sample(0).matrix()(0, 0));
  double total = 0.0;
  for (size_t k = 1; k < loop.size(); ++k) {
    const double raw =
        std::atan2(loop.sample(k).matrix()(1, 0), loop.sample(k).matrix()(0, 0));
    double delta = raw - prev_raw;
    while (delta > std::numbers::pi) delta -= 2 * std::numbers::pi;
    while (delta < -std::numbers::pi) delta += 2 * std::numbers::pi;
    if (std::abs(delta) >= std::numbers::pi / 2)
      fail(ErrorCode::StepTooLarge, "homotopy.winding_number",
           "angle step " + std::to_string(delta) + " at k=" + std::to_string(k),
           {{"sample_index", std::to_string(k)}});
    total += delta;
    prev_raw = raw;
  }
  const double ratio = total / (2 * std::numbers::pi);
  WindingNumber w{std::lround(ratio), std::abs(ratio - double(std::lround(ratio)))};
  if (w.residual >= tol.k_round_tol)
    fail(ErrorCode::NotQuantized, "homotopy.winding_number",
         "winding residual " + std::to_string(w.residual) + " too large");
  return w;
}

namespace detail {

inline void require_based(const FrameLoop& loop, const char* stage) {
  const int n = loop.dim();
  if (skewlin::max_abs(loop.sample(0).matrix() - Matrix::Identity(n, n)) > 1e-8)
    fail(ErrorCode::Precondition, stage, "loop must be based at the identity");
}

}  // namespace detail

/// Path concatenation with parameter rescaling; both loops based at I.
inline FrameLoop concatenate(const FrameLoop& a, const FrameLoop& b,
                             const Tolerances& tol = {}) {
  if (a.dim() != b.dim())
    fail(ErrorCode::DimensionMismatch, "homotopy.concatenate",
         "loops live in different SO(n)");
  detail::require_based(a, "homotopy.concatenate");
  detail::require_based(b, "homotopy.concatenate");

  std::vector<SpecialOrthogonalMatrix> samples;
  std::vector<double> params;
  for (size_t k = 0; k < a.size(); ++k) {
    samples.push_back(a.sample(k));
    params.push_back(0.5 * a.param(k));
  }
  for (size_t k = 1; k < b.size(); ++k) {
    samples.push_back(b.sample(k));
    params.push_back(0.5 + 0.5 * b.param(k));
  }
  FrameLoop::Sampler sampler;
  if (a.refinable() && b.refinable())
    sampler = [a, b](double t) {
      return t <= 0.5 ? a.sample_at(2 * t) : b.sample_at(2 * t - 1);
    };
  return FrameLoop::create(std::move(samples), std::move(params), std::move(sampler), tol);
}

/// Orientation reversal t -> 1 - t.
inline FrameLoop reverse(const FrameLoop& a, const Tolerances& tol = {}) {
  std::vector<SpecialOrthogonalMatrix> samples;
  std::vector<double> params;
  for (size_t k = a.size(); k-- > 0;) {
    samples.push_back(a.sample(k));
    params.push_back(1.0 - a.param(k));
  }
  FrameLoop::Sampler sampler;
  if (a.refinable()) sampler = [a](double t) { return a.sample_at(1.0 - t); };
  return FrameLoop::create(std::move(samples), std::move(params), std::move(sampler), tol);
}

namespace detail {

inline FrameLoop segment(const FrameLoop& loop, size_t lo, size_t hi,
                         const Tolerances& tol) {
  const double t_lo = loop.param(lo), t_hi = loop.param(hi);
  std::vector<SpecialOrthogonalMatrix> samples;
  std::vector<double> params;
  for (size_t k = lo; k <= hi; ++k) {
    samples.push_back(loop.sample(k));
    params.push_back((loop.param(k) - t_lo) / (t_hi - t_lo));
  }
  params.front() = 0.0;
  params.back() = 1.0;
  FrameLoop::Sampler sampler;
  if (loop.refinable())
    sampler = [loop, t_lo, t_hi](double t) {
      return loop.sample_at(t_lo + t * (t_hi - t_lo));
    };
  // Cut samples sit within tol_closure of I, so the segment closes within
  // twice that.
  Tolerances seg_tol = tol;
  seg_tol.tol_closure = 2 * tol.tol_closure;
  return FrameLoop::create(std::move(samples), std::move(params), std::move(sampler),
                           seg_tol);
}

}  // namespace detail

/// Normalize, lift and classify. An identity return in the loop's interior
/// splits it there: exp has no continuous local inverse around a lift point
/// with nonzero angles 2*pi*k sitting over I (the branch plane would have to
/// jump), but a loop through I is exactly a concatenation of based loops, and
/// the parity multiplies over the segments.
inline HomotopyVerdict classify_loop(const FrameLoop& loop_in, const Tolerances& tol = {}) {
  const FrameLoop loop = normalize_base_point(loop_in, tol);
  const int n = loop.dim();
  const Matrix eye = Matrix::Identity(n, n);

  std::vector<size_t> cuts{0};
  for (size_t k = 1; k + 1 < loop.size(); ++k)
    if (skewlin::max_abs(loop.sample(k).matrix() - eye) <= tol.tol_closure)
      cuts.push_back(k);
  cuts.push_back(loop.size() - 1);

  HomotopyVerdict total{{},
                        0,
                        Parity::Trivial,
                        skewlin::skew_canonical_form(SkewSymmetricMatrix::zero(n), tol),
                        0.0};
  long signed_parity = 0;
  for (size_t s = 0; s + 1 < cuts.size(); ++s) {
    if (cuts[s + 1] == cuts[s]) continue;
    const FrameLoop seg = detail::segment(loop, cuts[s], cuts[s + 1], tol);
    HomotopyVerdict v = classify(lift_loop(seg, tol), tol);
    total.k_list.insert(total.k_list.end(), v.k_list.begin(), v.k_list.end());
    total.h += v.h;
    signed_parity += v.h;
    total.max_int_residual = std::max(total.max_int_residual, v.max_int_residual);
    total.endpoint_form = std::move(v.endpoint_form);
  }
  std::sort(total.k_list.rbegin(), total.k_list.rend());
  total.parity = (signed_parity % 2 != 0) ? Parity::Nontrivial : Parity::Trivial;
  return total;
}

}  // namespace degcert::homotopy
