#pragma once

// Independent brute-force checks of the loop parity: quaternion double-cover
// lift for n = 3 and a Clifford-algebra Spin(n) rotor lift for 3 <= n <= 12.
// These exist to validate the classifier, so they share no code with it
// beyond the principal logarithm of small increments.

#include <array>
#include <mutex>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "degcert/homotopy.hpp"

namespace degcert::oracles {

using homotopy::FrameLoop;
using skewlin::Matrix;

inline constexpr int kMaxSpinDim = 12;

/// Sign of the canonical reordering when multiplying basis blades a and b
/// (bitmask encoding, Euclidean metric: repeated generators square to +1).
inline int reorder_sign(std::uint32_t a, std::uint32_t b) {
  a >>= 1;
  int swaps = 0;
  while (a) {
    swaps += std::popcount(a & b);
    a >>= 1;
  }
  return (swaps & 1) ? -1 : 1;
}

/// Element of the even Clifford algebra of R^n: 2^n coefficients indexed by
/// blade bitmask; odd-grade entries stay identically zero.
struct Rotor {
  int n = 0;
  std::vector<double> c;  // size 2^n

  static Rotor scalar(int n, double value = 1.0) {
    Rotor r;
    r.n = n;
    r.c.assign(size_t(1) << n, 0.0);
    r.c[0] = value;
    return r;
  }

  double norm() const {
    double s = 0.0;
    for (double v : c) s += v * v;
    return std::sqrt(s);
  }

  double nonscalar_norm() const {
    double s = 0.0;
    for (size_t m = 1; m < c.size(); ++m) s += c[m] * c[m];
    return std::sqrt(s);
  }
};

namespace detail {

/// Even-grade blade masks plus the precomputed reordering signs of all
/// even x even products, cached per dimension (thread-safe lazy build).
struct EvenTable {
  std::vector<std::uint32_t> masks;   // even masks, ascending
  std::vector<int> index_of;          // 2^n: mask -> position in `masks`
  std::vector<std::int8_t> sign;      // masks.size()^2 reordering signs
};

inline const EvenTable& even_table(int n) {
  static std::array<EvenTable, kMaxSpinDim + 1> cache;
  static std::array<std::once_flag, kMaxSpinDim + 1> built;
  std::call_once(built[size_t(n)], [n] {
    EvenTable& t = cache[size_t(n)];
    const std::uint32_t dim = std::uint32_t(1) << n;
    t.index_of.assign(dim, -1);
    for (std::uint32_t m = 0; m < dim; ++m)
      if ((std::popcount(m) & 1u) == 0) {
        t.index_of[m] = int(t.masks.size());
        t.masks.push_back(m);
      }
    const size_t sz = t.masks.size();
    t.sign.resize(sz * sz);
    for (size_t ia = 0; ia < sz; ++ia)
      for (size_t ib = 0; ib < sz; ++ib)
        t.sign[ia * sz + ib] = std::int8_t(reorder_sign(t.masks[ia], t.masks[ib]));
  });
  return cache[size_t(n)];
}

}  // namespace detail

inline Rotor geometric_product(const Rotor& a, const Rotor& b) {
  const auto& t = detail::even_table(a.n);
  const size_t sz = t.masks.size();
  Rotor out = Rotor::scalar(a.n, 0.0);
  for (size_t ia = 0; ia < sz; ++ia) {
    const double ca = a.c[t.masks[ia]];
    if (ca == 0.0) continue;
    const std::int8_t* row = t.sign.data() + ia * sz;
    const std::uint32_t ma = t.masks[ia];
    for (size_t ib = 0; ib < sz; ++ib) {
      const double cb = b.c[t.masks[ib]];
      if (cb == 0.0) continue;
      out.c[ma ^ t.masks[ib]] += row[ib] * ca * cb;
    }
  }
  return out;
}

namespace detail {

struct BivectorTerm {
  std::uint32_t mask;
  double coeff;
};

/// Left-multiply `r` by a sparse bivector (sum of e_i e_j terms).
inline Rotor mul_bivector_left(const std::vector<BivectorTerm>& biv, const Rotor& r) {
  const auto& t = even_table(r.n);
  const size_t sz = t.masks.size();
  Rotor out = Rotor::scalar(r.n, 0.0);
  for (const auto& term : biv) {
    const std::int8_t* row = t.sign.data() + size_t(t.index_of[term.mask]) * sz;
    for (size_t ib = 0; ib < sz; ++ib) {
      const double cv = r.c[t.masks[ib]];
      if (cv == 0.0) continue;
      out.c[term.mask ^ t.masks[ib]] += row[ib] * term.coeff * cv;
    }
  }
  return out;
}

/// exp of a bivector by scaling-and-squaring with a truncated series
/// (at most 20 terms, term tolerance 1e-14).
inline Rotor exp_bivector(int n, std::vector<BivectorTerm> biv) {
  double norm = 0.0;
  for (const auto& t : biv) norm += t.coeff * t.coeff;
  norm = std::sqrt(norm);
  int squarings = 0;
  while (norm > 0.5) {
    norm *= 0.5;
    ++squarings;
  }
  const double scale = 1.0 / double(1 << squarings);
  for (auto& t : biv) t.coeff *= scale;

  Rotor acc = Rotor::scalar(n);
  Rotor term = Rotor::scalar(n);
  for (int k = 1; k <= 20; ++k) {
    term = mul_bivector_left(biv, term);
    for (double& v : term.c) v /= double(k);
    for (size_t m = 0; m < acc.c.size(); ++m) acc.c[m] += term.c[m];
    if (term.norm() <= 1e-14) break;
  }
  for (int s = 0; s < squarings; ++s) acc = geometric_product(acc, acc);
  return acc;
}

}  // namespace detail

struct SpinLift {
  int sign = 1;                 // +1 trivial loop, -1 nontrivial
  double max_norm_drift = 0.0;  // worst |norm - 1| before renormalization
  double scalar_residual = 0.0; // non-scalar mass of the accumulated rotor
};

/// Accumulate, step by step, the Spin(n) rotor covering the loop. The loop is
/// nontrivial exactly when the accumulated rotor ends at -1.
inline SpinLift spin_lift(const FrameLoop& loop_in, const Tolerances& tol = {}) {
  const int n = loop_in.dim();
  if (n < 3 || n > kMaxSpinDim)
    fail(ErrorCode::WrongDimension, "oracles.spin_lift",
         "spin oracle handles 3 <= n <= " + std::to_string(kMaxSpinDim));
  const FrameLoop loop = homotopy::normalize_base_point(loop_in, tol);

  SpinLift result;
  Rotor total = Rotor::scalar(n);
  for (size_t k = 0; k + 1 < loop.size(); ++k) {
    const Matrix incr = loop.sample(k + 1).matrix() * loop.sample(k).matrix().transpose();
    double max_angle = 0.0;
    skewlin::SkewSymmetricMatrix b = skewlin::principal_log(
        skewlin::SpecialOrthogonalMatrix::validate(incr, tol), tol, &max_angle);
    if (max_angle >= std::numbers::pi / 2)
      fail(ErrorCode::StepTooLarge, "oracles.spin_lift",
           "increment rotation angle " + std::to_string(max_angle) +
               " at k=" + std::to_string(k),
           {{"sample_index", std::to_string(k)}});
    std::vector<detail::BivectorTerm> biv;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double v = b(i, j);
        if (v != 0.0)
          biv.push_back({(std::uint32_t(1) << i) | (std::uint32_t(1) << j), -0.5 * v});
      }
    // With the exp(-B/2) convention each step's rotor covers the inverse
    // increment, so the ordered product accumulates on the right.
    total = geometric_product(total, detail::exp_bivector(n, biv));
    const double nr = total.norm();
    result.max_norm_drift = std::max(result.max_norm_drift, std::abs(nr - 1.0));
    for (double& v : total.c) v /= nr;
  }

  result.scalar_residual = total.nonscalar_norm();
  if (result.scalar_residual > 1e-6 || std::abs(std::abs(total.c[0]) - 1.0) > 1e-6)
    fail(ErrorCode::NotScalar, "oracles.spin_lift",
         "accumulated rotor is not +/-1: loop not closed or precision lost",
         {{"residual", std::to_string(result.scalar_residual)}});
  result.sign = total.c[0] > 0 ? 1 : -1;
  return result;
}

inline int spin_lift_sign(const FrameLoop& loop, const Tolerances& tol = {}) {
  return spin_lift(loop, tol).sign;
}

namespace detail {

using Quaternion = std::array<double, 4>;  // (w, x, y, z)

/// Stable rotation-matrix -> unit quaternion conversion (largest-pivot branch).
inline Quaternion quaternion_from_rotation(const Matrix& m) {
  Quaternion q{};
  const double tr = m(0, 0) + m(1, 1) + m(2, 2);
  if (tr > 0) {
    double s = std::sqrt(tr + 1.0) * 2;
    q = {0.25 * s, (m(2, 1) - m(1, 2)) / s, (m(0, 2) - m(2, 0)) / s,
         (m(1, 0) - m(0, 1)) / s};
  } else if (m(0, 0) > m(1, 1) && m(0, 0) > m(2, 2)) {
    double s = std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2)) * 2;
    q = {(m(2, 1) - m(1, 2)) / s, 0.25 * s, (m(0, 1) + m(1, 0)) / s,
         (m(0, 2) + m(2, 0)) / s};
  } else if (m(1, 1) > m(2, 2)) {
    double s = std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2)) * 2;
    q = {(m(0, 2) - m(2, 0)) / s, (m(0, 1) + m(1, 0)) / s, 0.25 * s,
         (m(1, 2) + m(2, 1)) / s};
  } else {
    double s = std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1)) * 2;
    q = {(m(1, 0) - m(0, 1)) / s, (m(0, 2) + m(2, 0)) / s, (m(1, 2) + m(2, 1)) / s,
         0.25 * s};
  }
  double nr = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  for (double& v : q) v /= nr;
  return q;
}

inline double dot(const Quaternion& a, const Quaternion& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}

}  // namespace detail

/// Double-cover lift through unit quaternions (n = 3 only): start at +1,
/// keep each sample's quaternion on the branch nearest the previous one, and
/// report the sign of the final quaternion.
inline int quaternion_lift(const FrameLoop& loop_in, const Tolerances& tol = {}) {
  if (loop_in.dim() != 3)
    fail(ErrorCode::WrongDimension, "oracles.quaternion_lift", "needs n = 3");
  const FrameLoop loop = homotopy::normalize_base_point(loop_in, tol);

  const double min_dot = std::cos(std::numbers::pi / 4);  // step angle < pi/2
  detail::Quaternion prev{1.0, 0.0, 0.0, 0.0};
  for (size_t k = 1; k < loop.size(); ++k) {
    detail::Quaternion q = detail::quaternion_from_rotation(loop.sample(k).matrix());
    const double d = detail::dot(prev, q);
    if (std::abs(d) <= min_dot)
      fail(ErrorCode::StepTooLarge, "oracles.quaternion_lift",
           "increment rotation angle >= pi/2 at k=" + std::to_string(k),
           {{"sample_index", std::to_string(k)}});
    if (d < 0)
      for (double& v : q) v = -v;
    prev = q;
  }
  if (std::abs(std::abs(prev[0]) - 1.0) > 1e-6)
    fail(ErrorCode::NotScalar, "oracles.quaternion_lift",
         "final quaternion is not +/-identity");
  return prev[0] > 0 ? 1 : -1;
}

}  // namespace degcert::oracles
