#pragma once

// Validated SO(n) / so(n) matrix types, the canonical block form of skew
// matrices, and exponential / logarithm maps between them. Everything here is
// a pure function of its inputs.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "degcert/config.hpp"

namespace degcert::skewlin {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

/// Element of SO(n): orthogonal within tol_orth, det +1 within tol_det.
class SpecialOrthogonalMatrix {
 public:
  static SpecialOrthogonalMatrix validate(const Matrix& m, double tol_orth,
                                          double tol_det = 1e-8) {
    if (m.rows() != m.cols() || m.rows() < 1)
      fail(ErrorCode::WrongDimension, "skewlin.validate_so", "matrix must be square");
    const int n = int(m.rows());
    const double orth_res = max_abs(m.transpose() * m - Matrix::Identity(n, n));
    if (orth_res > tol_orth)
      fail(ErrorCode::NotOrthogonal, "skewlin.validate_so",
           "orthogonality residual " + std::to_string(orth_res) + " exceeds tolerance",
           {{"residual", std::to_string(orth_res)}});
    const double det = m.determinant();
    if (std::abs(det - 1.0) > tol_det) {
      if (std::abs(det + 1.0) <= tol_det)
        fail(ErrorCode::NegativeDeterminant, "skewlin.validate_so",
             "orthogonal but det = -1: improperly oriented frame");
      fail(ErrorCode::NotOrthogonal, "skewlin.validate_so",
           "determinant " + std::to_string(det) + " is not +1");
    }
    return SpecialOrthogonalMatrix(m);
  }

  static SpecialOrthogonalMatrix validate(const Matrix& m, const Tolerances& tol) {
    return validate(m, tol.tol_orth, tol.tol_det);
  }

  static SpecialOrthogonalMatrix identity(int n) {
    return SpecialOrthogonalMatrix(Matrix::Identity(n, n));
  }

  /// Wrap a matrix already known to be in SO(n) (e.g. a product of validated
  /// elements). Debug builds still pay for a loose sanity check.
  static SpecialOrthogonalMatrix trusted(Matrix m) {
    return SpecialOrthogonalMatrix(std::move(m));
  }

  int dim() const { return int(m_.rows()); }
  const Matrix& matrix() const { return m_; }

 private:
  explicit SpecialOrthogonalMatrix(Matrix m) : m_(std::move(m)) {}
  Matrix m_;
};

/// Element of so(n). Storage holds only the strict upper triangle, so the
/// materialized matrix satisfies A = -A^T exactly.
class SkewSymmetricMatrix {
 public:
  static SkewSymmetricMatrix zero(int n) { return SkewSymmetricMatrix(n); }

  /// Accepts any matrix whose symmetric part is below `skew_tol` and stores
  /// the skew part (A - A^T)/2.
  static SkewSymmetricMatrix from_matrix(const Matrix& a, double skew_tol = 1e-9) {
    if (a.rows() != a.cols())
      fail(ErrorCode::WrongDimension, "skewlin.skew", "matrix must be square");
    const double sym_res = max_abs(a + a.transpose()) / 2.0;
    if (sym_res > skew_tol)
      fail(ErrorCode::Precondition, "skewlin.skew",
           "matrix is not antisymmetric (residual " + std::to_string(sym_res) + ")");
    SkewSymmetricMatrix out(int(a.rows()));
    int k = 0;
    for (int i = 0; i < out.n_; ++i)
      for (int j = i + 1; j < out.n_; ++j) out.upper_[k++] = 0.5 * (a(i, j) - a(j, i));
    return out;
  }

  int dim() const { return n_; }

  double operator()(int i, int j) const {
    if (i == j) return 0.0;
    if (i < j) return upper_[index(i, j)];
    return -upper_[index(j, i)];
  }

  Matrix full() const {
    Matrix a = Matrix::Zero(n_, n_);
    int k = 0;
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j < n_; ++j) {
        a(i, j) = upper_[k];
        a(j, i) = -upper_[k];
        ++k;
      }
    return a;
  }

  double max_abs_entry() const {
    double m = 0.0;
    for (double v : upper_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  explicit SkewSymmetricMatrix(int n) : n_(n), upper_(size_t(n) * (n - 1) / 2, 0.0) {}
  int index(int i, int j) const { return i * n_ - i * (i + 1) / 2 + (j - i - 1); }

  int n_;
  std::vector<double> upper_;
};

/// Canonical block decomposition A = R D R^T where D consists of 2x2 blocks
/// [[0, a_i], [-a_i, 0]] (plus a zero 1x1 block for odd n). Angles are sorted
/// by decreasing magnitude; all are >= 0 except that, when A has no kernel,
/// the last angle may carry a minus sign so the rotor can keep det +1.
struct CanonicalSkewForm {
  SpecialOrthogonalMatrix rotor;
  std::vector<double> angles;  // floor(n/2) entries
  bool has_zero_block;         // true iff dimension is odd

  int dim() const { return rotor.dim(); }

  Matrix block_diagonal() const {
    const int n = dim();
    Matrix d = Matrix::Zero(n, n);
    for (size_t i = 0; i < angles.size(); ++i) {
      d(2 * i, 2 * i + 1) = angles[i];
      d(2 * i + 1, 2 * i) = -angles[i];
    }
    return d;
  }

  Matrix reconstruct() const {
    const Matrix& r = rotor.matrix();
    return r * block_diagonal() * r.transpose();
  }
};

namespace detail {

/// Oriented rotation plane: the skew contribution is a * (u w^T - w u^T),
/// whose exponential rotates u toward -w by angle a... measured consistently
/// by plane_angle below.
struct Plane {
  Vector u, w;
  Matrix generator() const { return u * w.transpose() - w * u.transpose(); }
};

/// Angle of R restricted to the oriented plane (u, w): equals a (mod 2pi)
/// when R = exp(a * (u w^T - w u^T)) on that plane.
inline double plane_angle(const Matrix& r, const Plane& p) {
  return std::atan2(-p.w.dot(r * p.u), p.u.dot(r * p.u));
}

/// Component of a skew matrix G on the oriented plane (u, w).
inline double plane_component(const Matrix& g, const Plane& p) {
  return -p.w.dot(g * p.u);
}

inline void orient_first_component_positive(Vector& u, Vector& w) {
  for (int i = 0; i < u.size(); ++i) {
    if (std::abs(u[i]) > 1e-10) {
      if (u[i] < 0) {
        u = -u;
        w = -w;
      }
      return;
    }
  }
}

inline void orient_first_component_positive(Vector& u) {
  for (int i = 0; i < u.size(); ++i) {
    if (std::abs(u[i]) > 1e-10) {
      if (u[i] < 0) u = -u;
      return;
    }
  }
}

/// Gram-Schmidt of v against the columns collected in `basis` (n x k).
inline Vector project_out(const Matrix& basis, int used, const Vector& v) {
  Vector r = v;
  for (int c = 0; c < used; ++c) r -= basis.col(c).dot(r) * basis.col(c);
  // second pass for numerical hygiene
  for (int c = 0; c < used; ++c) r -= basis.col(c).dot(r) * basis.col(c);
  return r;
}

}  // namespace detail

/// Canonical form via the symmetric eigenproblem of -A^2. Planes are
/// extracted greedily in eigenvector index order (eigenvalues descending);
/// within each plane u is the (purified) eigenvector and w = -A u / a. The
/// plane split inside a degenerate eigenspace follows Gram-Schmidt order and
/// each u is oriented so its first nonzero component is positive.
inline CanonicalSkewForm skew_canonical_form(const SkewSymmetricMatrix& skew,
                                             const Tolerances& tol = {}) {
  const int n = skew.dim();
  const Matrix a = skew.full();
  const Matrix a2 = a * a;
  Matrix m = -0.5 * (a2 + a2.transpose());  // symmetrized -A^2, PSD

  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success)
    fail(ErrorCode::NumericalFailure, "skewlin.skew_canonical_form",
         "symmetric eigensolver did not converge");

  // Angle below which a direction is treated as kernel; dropping it perturbs
  // the reconstruction by at most kernel_eps. Pinned just above the noise
  // floor of ||A u||, independent of the reconstruction tolerance.
  const double kernel_eps = 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff());

  Matrix used = Matrix::Zero(n, n);  // accumulated orthonormal columns
  int used_count = 0;
  struct PlaneRec {
    Vector u, w;
    double angle;
  };
  std::vector<PlaneRec> planes;
  std::vector<Vector> kernel;

  // Eigenvalues descending, but natural index order inside equal-value
  // clusters (this is the deterministic Gram-Schmidt order of the contract).
  std::vector<int> order;
  {
    const double mu_max = std::abs(es.eigenvalues()[n - 1]);
    const double ceps = 1e-12 * std::max(1.0, mu_max);
    int idx = n - 1;
    while (idx >= 0) {
      int lo = idx;
      while (lo - 1 >= 0 && es.eigenvalues()[idx] - es.eigenvalues()[lo - 1] < ceps) --lo;
      for (int j = lo; j <= idx; ++j) order.push_back(j);
      idx = lo - 1;
    }
  }

  for (int idx : order) {
    Vector r = detail::project_out(used, used_count, es.eigenvectors().col(idx));
    const double rn = r.norm();
    if (rn < 1e-6) continue;  // consumed by an earlier plane
    Vector u = r / rn;
    double alpha = (a * u).norm();
    if (alpha > kernel_eps) {
      // Purify u toward the invariant plane: -A^2 kills kernel leakage and
      // damps smaller-angle contamination inside merged eigenvalue clusters.
      for (int it = 0; it < 2; ++it) {
        Vector t = -(a * (a * u));
        t = detail::project_out(used, used_count, t);
        const double tn = t.norm();
        if (tn < 1e-12) break;
        u = (t.dot(u) < 0 ? Vector(-t / tn) : Vector(t / tn));
      }
      alpha = (a * u).norm();
    }
    if (alpha <= kernel_eps) {
      detail::orient_first_component_positive(u);
      kernel.push_back(u);
      used.col(used_count++) = u;
      continue;
    }
    if (used_count + 2 > n)
      fail(ErrorCode::NumericalFailure, "skewlin.skew_canonical_form",
           "rotation plane does not fit the remaining space");
    // Inside nearly-degenerate eigenvalue clusters the raw partner -Au/alpha
    // can lean on earlier planes; re-orthonormalizing it keeps the rotor
    // orthogonal without hurting the reconstruction (the plane split in such
    // clusters is free).
    Vector w = -(a * u) / alpha;
    w = detail::project_out(used, used_count, w);
    w -= u.dot(w) * u;
    const double wn = w.norm();
    if (wn < 0.5)
      fail(ErrorCode::NumericalFailure, "skewlin.skew_canonical_form",
           "plane partner collapsed during orthogonalization");
    w /= wn;
    detail::orient_first_component_positive(u, w);
    planes.push_back({u, w, alpha});
    used.col(used_count++) = u;
    used.col(used_count++) = w;
  }

  if (used_count != n || int(2 * planes.size() + kernel.size()) != n)
    fail(ErrorCode::NumericalFailure, "skewlin.skew_canonical_form",
         "plane extraction did not span the space");

  std::stable_sort(planes.begin(), planes.end(),
                   [](const PlaneRec& x, const PlaneRec& y) { return x.angle > y.angle; });

  Matrix r(n, n);
  std::vector<double> angles;
  angles.reserve(n / 2);
  int col = 0;
  for (const auto& p : planes) {
    r.col(col++) = p.u;
    r.col(col++) = p.w;
    angles.push_back(p.angle);
  }
  for (const auto& kvec : kernel) r.col(col++) = kvec;
  for (size_t i = planes.size(); i < size_t(n / 2); ++i) angles.push_back(0.0);

  if (r.determinant() < 0) {
    if (!kernel.empty()) {
      r.col(n - 1) = -r.col(n - 1);  // kernel column flip: reconstruction unchanged
    } else {
      // No kernel: negate the smallest angle and flip its w column.
      const int last = int(planes.size()) - 1;
      r.col(2 * last + 1) = -r.col(2 * last + 1);
      angles[last] = -angles[last];
    }
  }

  CanonicalSkewForm form{SpecialOrthogonalMatrix::validate(r, tol), std::move(angles),
                         (n % 2) != 0};
  const double recon = max_abs(form.reconstruct() - a);
  if (recon > tol.tol_recon)
    fail(ErrorCode::NumericalFailure, "skewlin.skew_canonical_form",
         "reconstruction residual " + std::to_string(recon) + " exceeds tolerance");
  return form;
}

/// Exponential evaluated from an existing canonical decomposition.
inline Matrix exp_from_canonical(const CanonicalSkewForm& form) {
  const int n = form.dim();
  Matrix b = Matrix::Identity(n, n);
  for (size_t i = 0; i < form.angles.size(); ++i) {
    const double c = std::cos(form.angles[i]);
    const double s = std::sin(form.angles[i]);
    b(2 * i, 2 * i) = c;
    b(2 * i, 2 * i + 1) = s;
    b(2 * i + 1, 2 * i) = -s;
    b(2 * i + 1, 2 * i + 1) = c;
  }
  const Matrix& r = form.rotor.matrix();
  return r * b * r.transpose();
}

/// exp: so(n) -> SO(n) through the canonical form, one 2x2 rotation per block.
inline SpecialOrthogonalMatrix skew_exp(const SkewSymmetricMatrix& a,
                                        const Tolerances& tol = {}) {
  return SpecialOrthogonalMatrix::validate(
      exp_from_canonical(skew_canonical_form(a, tol)), tol);
}

namespace detail {

/// Cluster of (numerically equal) rotation angles of R: the eigenspace of
/// (R + R^T)/2 for one repeated cosine.
struct AngleCluster {
  Matrix basis;      // n x d, orthonormal
  double cos_mean;   // representative cosine
  double sin_scale;  // Frobenius estimate of sin(theta) on the cluster
};

inline std::vector<AngleCluster> cluster_rotation_angles(const Matrix& r) {
  const int n = int(r.rows());
  const Matrix s = 0.5 * (r + r.transpose());
  const Matrix w = 0.5 * (r - r.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  if (es.info() != Eigen::Success)
    fail(ErrorCode::NumericalFailure, "skewlin.log", "eigensolver did not converge");

  const double cluster_tol = 1e-10;
  std::vector<AngleCluster> clusters;
  int idx = n - 1;
  while (idx >= 0) {
    int lo = idx;
    while (lo - 1 >= 0 &&
           es.eigenvalues()[idx] - es.eigenvalues()[lo - 1] < cluster_tol)
      --lo;
    const int d = idx - lo + 1;
    Matrix basis(n, d);
    double cmean = 0.0;
    for (int j = 0; j < d; ++j) {
      basis.col(j) = es.eigenvectors().col(lo + j);
      cmean += es.eigenvalues()[lo + j];
    }
    cmean /= d;
    const Matrix wc = basis.transpose() * w * basis;
    clusters.push_back({std::move(basis), cmean, wc.norm() / std::sqrt(double(d))});
    idx = lo - 1;
  }
  return clusters;
}

}  // namespace detail

/// Principal logarithm: the unique skew A with exp(A) = R and all canonical
/// angles in [0, pi). Rejects inputs with a rotation angle within tol_pi of
/// pi (eigenvalue -1), where the principal branch is ill-conditioned.
inline SkewSymmetricMatrix principal_log(const SpecialOrthogonalMatrix& rot,
                                         const Tolerances& tol = {},
                                         double* max_angle_out = nullptr) {
  const int n = rot.dim();
  const Matrix& r = rot.matrix();
  Matrix a = Matrix::Zero(n, n);
  double max_angle = 0.0;

  for (const auto& cl : detail::cluster_rotation_angles(r)) {
    if (cl.cos_mean <= std::cos(std::numbers::pi - tol.tol_pi))
      fail(ErrorCode::AngleNearPi, "skewlin.principal_log",
           "rotation angle within tol_pi of pi: principal branch ill-conditioned");
    if (cl.sin_scale <= 1e-12) continue;  // fixed subspace, angle 0

    // Rotation planes of the restricted skew part; its kernel (fixed
    // directions merged into the same cosine cluster) contributes nothing.
    const Matrix w = 0.5 * (r - r.transpose());
    const Matrix wc = cl.basis.transpose() * w * cl.basis;
    CanonicalSkewForm sub = skew_canonical_form(
        SkewSymmetricMatrix::from_matrix(0.5 * (wc - wc.transpose()), 1e-9), tol);
    for (size_t j = 0; j < sub.angles.size(); ++j) {
      if (sub.angles[j] == 0.0) continue;  // padded kernel-pair entries
      detail::Plane p{cl.basis * sub.rotor.matrix().col(2 * long(j)),
                      cl.basis * sub.rotor.matrix().col(2 * long(j) + 1)};
      if (sub.angles[j] < 0) p.w = -p.w;  // undo det repair: positive angle
      const double theta = detail::plane_angle(r, p);
      if (theta >= std::numbers::pi - tol.tol_pi)
        fail(ErrorCode::AngleNearPi, "skewlin.principal_log",
             "plane angle out of the principal range");
      if (theta <= 0) {
        // Noise-level sine in a cluster mixing tiny rotations with fixed
        // directions; dropping the plane perturbs exp by at most |theta|.
        if (theta > -1e-10) continue;
        fail(ErrorCode::NumericalFailure, "skewlin.principal_log",
             "negative plane angle beyond noise level");
      }
      a += theta * p.generator();
      max_angle = std::max(max_angle, theta);
    }
  }

  SkewSymmetricMatrix out = SkewSymmetricMatrix::from_matrix(0.5 * (a - a.transpose()), 1e-9);
  const double recon = max_abs(skew_exp(out, tol).matrix() - r);
  if (recon > tol.tol_recon)
    fail(ErrorCode::NumericalFailure, "skewlin.principal_log",
         "exp(log R) residual " + std::to_string(recon) + " exceeds tolerance");
  if (max_angle_out) *max_angle_out = max_angle;
  return out;
}

/// Logarithm branch nearest to `guide`: decompose R into angle clusters,
/// align oriented planes to the guide's canonical planes inside each cluster,
/// then per plane pick the 2*pi branch closest to the guide's component.
/// Fails with BRANCH_AMBIGUOUS when two branches are within tie_tol of each
/// other or the plane alignment is too weak to trust.
inline SkewSymmetricMatrix nearest_log(const SpecialOrthogonalMatrix& rot,
                                       const SkewSymmetricMatrix& guide,
                                       const Tolerances& tol = {}) {
  const int n = rot.dim();
  if (guide.dim() != n)
    fail(ErrorCode::DimensionMismatch, "skewlin.nearest_log", "guide dimension mismatch");
  const Matrix& r = rot.matrix();
  const Matrix g = guide.full();

  const CanonicalSkewForm gform = skew_canonical_form(guide, tol);
  const double step_res = max_abs(exp_from_canonical(gform) - r);
  if (step_res > tol.delta_step)
    fail(ErrorCode::BranchAmbiguous, "skewlin.nearest_log",
         "R is not a small step from exp(guide): residual " + std::to_string(step_res),
         {{"residual", std::to_string(step_res)}});

  // Guide planes with a meaningful angle carry the branch information; the
  // guide's kernel constrains nothing (its lift component is simply near 0).
  std::vector<detail::Plane> gplanes;
  for (size_t i = 0; i < gform.angles.size(); ++i) {
    if (std::abs(gform.angles[i]) <= 1e-8) continue;
    Vector u = gform.rotor.matrix().col(2 * i);
    Vector w = gform.rotor.matrix().col(2 * i + 1);
    if (gform.angles[i] < 0) w = -w;
    gplanes.push_back({u, w});
  }

  const auto clusters = detail::cluster_rotation_angles(r);
  const Matrix wfull = 0.5 * (r - r.transpose());

  Matrix a = Matrix::Zero(n, n);
  Matrix expa = Matrix::Identity(n, n);  // exp(a), accumulated per plane

  // Per oriented invariant plane of R: lift its rotation angle onto the
  // 2*pi branch nearest the guide's component on that plane.
  auto add_plane = [&](const detail::Plane& p) {
    const double theta = detail::plane_angle(r, p);
    const double b = detail::plane_component(g, p);
    const double m = std::round((b - theta) / (2 * std::numbers::pi));
    const double lifted = theta + 2 * std::numbers::pi * m;
    const double d1 = std::abs(b - lifted);
    const double d2 = 2 * std::numbers::pi - d1;
    if (d2 - d1 < tol.tie_tol)
      fail(ErrorCode::BranchAmbiguous, "skewlin.nearest_log",
           "two logarithm branches equally near the guide",
           {{"distance_gap", std::to_string(d2 - d1)}});
    const Matrix gen = p.generator();
    a += lifted * gen;
    // planes are mutually orthogonal, so exp accumulates additively
    expa += std::sin(lifted) * gen -
            (1.0 - std::cos(lifted)) *
                (p.u * p.u.transpose() + p.w * p.w.transpose());
  };

  for (const auto& cl : clusters) {
    const int d = int(cl.basis.cols());
    const bool near_minus_one = cl.cos_mean < 0;

    // Exact invariant planes inside the cluster: canonical structure of the
    // restricted skew part resolves even nearby-but-distinct tiny angles.
    const Matrix wc = cl.basis.transpose() * wfull * cl.basis;
    const CanonicalSkewForm sub = skew_canonical_form(
        SkewSymmetricMatrix::from_matrix(0.5 * (wc - wc.transpose()), 1e-9), tol);

    int rotating = 0;
    for (size_t j = 0; j < sub.angles.size(); ++j) {
      if (sub.angles[j] == 0.0) continue;  // padded kernel-pair entries
      detail::Plane p{cl.basis * sub.rotor.matrix().col(2 * long(j)),
                      cl.basis * sub.rotor.matrix().col(2 * long(j) + 1)};
      if (sub.angles[j] < 0) p.w = -p.w;  // undo det repair: positive measurement
      add_plane(p);
      ++rotating;
    }

    // Where the skew part vanishes R acts as +/-I; branch content there can
    // only come from the guide's planes, paired by projection.
    const int kernel_dims = d - 2 * rotating;
    if (kernel_dims == 0) continue;
    Matrix kbasis(n, kernel_dims);
    for (int j = 0; j < kernel_dims; ++j)
      kbasis.col(j) = cl.basis * sub.rotor.matrix().col(2 * rotating + j);

    Matrix built = Matrix::Zero(n, kernel_dims);
    int built_count = 0;
    auto take = [&](const Vector& seed) -> std::optional<Vector> {
      Vector v = kbasis * (kbasis.transpose() * seed);
      v = detail::project_out(built, built_count, v);
      const double vn = v.norm();
      if (vn < 0.5) return std::nullopt;
      return Vector(v / vn);
    };
    for (const auto& gp : gplanes) {
      if (built_count + 2 > kernel_dims) break;
      auto uo = take(gp.u);
      if (!uo) continue;
      built.col(built_count++) = *uo;  // tentatively claim u
      auto wo = take(gp.w);
      if (!wo) {
        --built_count;
        continue;
      }
      add_plane({*uo, *wo});
      built.col(built_count++) = *wo;
    }
    if (near_minus_one && built_count < kernel_dims)
      fail(ErrorCode::BranchAmbiguous, "skewlin.nearest_log",
           "half-turn subspace not covered by the guide: +/-pi branches tie");
  }

  SkewSymmetricMatrix out = SkewSymmetricMatrix::from_matrix(0.5 * (a - a.transpose()), 1e-9);
  const double recon = max_abs(expa - r);
  if (recon > tol.tol_recon)
    fail(ErrorCode::BranchAmbiguous, "skewlin.nearest_log",
         "branch-matched log failed to reconstruct: residual " + std::to_string(recon));
  return out;
}

/// validate_so as a free function (spec-facing spelling).
inline SpecialOrthogonalMatrix validate_so(const Matrix& m, double tol_orth = 1e-10,
                                           double tol_det = 1e-8) {
  return SpecialOrthogonalMatrix::validate(m, tol_orth, tol_det);
}

}  // namespace degcert::skewlin
