#pragma once

#include "tu1/tensor.hpp"
#include "tu1/transforms.hpp"

#include <Eigen/SVD>

namespace tu1 {

/// The two matrix modes of slice-wise norms. Stored 0-based.
struct SliceModePair {
  int k1 = 0;
  int k2 = 1;

  void validate(int order) const {
    if (k1 == k2) throw std::invalid_argument("slice mode pair must be distinct");
    if (k1 < 0 || k2 < 0 || k1 >= order || k2 >= order) {
      throw std::invalid_argument("slice mode pair out of range");
    }
  }
};

namespace detail {

inline double sgn_phase(double z) { return z > 0 ? 1.0 : (z < 0 ? -1.0 : 0.0); }
inline cplx sgn_phase(const cplx& z) {
  const double m = std::abs(z);
  return m > 0 ? z / m : cplx(0, 0);
}

}  // namespace detail

/// Nonzero count of U(z) with entries below rel_tol of the max modulus treated
/// as zero. The transformed tensor is never exactly sparse in floating point.
template <typename S>
Index u0_norm(const Tensor<S>& z, const TransformFamily& fam, double rel_tol = 1e-12) {
  const Tensor<S> t = apply_U(z, fam);
  const double cutoff = rel_tol * max_abs(t);
  Index count = 0;
  for (const S& v : t.data()) {
    if (detail::modulus(v) > cutoff) ++count;
  }
  return count;
}

template <typename S>
double u1_norm(const Tensor<S>& z, const TransformFamily& fam) {
  return elementwise_norms(apply_U(z, fam)).l1;
}

template <typename S>
double uinf_norm(const Tensor<S>& z, const TransformFamily& fam) {
  return max_abs(apply_U(z, fam));
}

template <typename S>
Eigen::VectorXd singular_values(const Matrix<S>& m) {
  return Eigen::JacobiSVD<Matrix<S>>(m).singularValues();
}

/// Sum over all (k1,k2)-slices of U(z) of matrix nuclear norms.
template <typename S>
double slice_nuclear_norm(const Tensor<S>& z, const TransformFamily& fam, SliceModePair pair) {
  pair.validate(z.order());
  const Tensor<S> t = apply_U(z, fam);
  SliceScan scan(t, pair.k1, pair.k2);
  Matrix<S> m;
  double total = 0;
  for (Index s = 0; s < scan.count(); ++s) {
    scan.gather(t, s, m);
    total += singular_values(m).sum();
  }
  return total;
}

/// Max over all (k1,k2)-slices of U(a) of matrix spectral norms.
template <typename S>
double slice_spectral_norm(const Tensor<S>& a, const TransformFamily& fam, SliceModePair pair) {
  pair.validate(a.order());
  const Tensor<S> t = apply_U(a, fam);
  SliceScan scan(t, pair.k1, pair.k2);
  Matrix<S> m;
  double best = 0;
  for (Index s = 0; s < scan.count(); ++s) {
    scan.gather(t, s, m);
    const Eigen::VectorXd sv = singular_values(m);
    if (sv.size() > 0) best = std::max(best, sv(0));
  }
  return best;
}

/// Elementwise shrinkage z -> z * max(1 - tau/|z|, 0), the proximal operator of
/// tau * ||.||_1 for both real and complex scalars.
template <typename S>
Tensor<S> soft_threshold(const Tensor<S>& a, double tau) {
  if (!(tau > 0)) throw std::invalid_argument("soft_threshold: tau must be positive");
  Tensor<S> out = a;
  for (S& v : out.data()) {
    const double m = detail::modulus(v);
    v = m > tau ? v * S((m - tau) / m) : S(0);
  }
  return out;
}

/// Singular value thresholding: U * max(S - tau, 0) * V^H, the proximal
/// operator of tau * ||.||_*. Returns the thresholded matrix and the sum of the
/// surviving singular values (the nuclear norm of the result).
template <typename S>
std::pair<Matrix<S>, double> svt_with_norm(const Matrix<S>& m, double tau) {
  if (tau < 0) throw std::invalid_argument("svt: tau must be nonnegative");
  Eigen::JacobiSVD<Matrix<S>> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::VectorXd sv = svd.singularValues();
  double nuc = 0;
  for (Index i = 0; i < sv.size(); ++i) {
    sv(i) = std::max(sv(i) - tau, 0.0);
    nuc += sv(i);
  }
  Matrix<S> out = svd.matrixU() * sv.template cast<S>().asDiagonal() * svd.matrixV().adjoint();
  return {std::move(out), nuc};
}

template <typename S>
Matrix<S> svt(const Matrix<S>& m, double tau) {
  return svt_with_norm(m, tau).first;
}

/// The F = 0 element of the subdifferential of the U1 norm at a:
/// U^{-1}(sgn(U(a))).
template <typename S>
Tensor<S> u1_subgradient_witness(const Tensor<S>& a, const TransformFamily& fam) {
  Tensor<S> t = apply_U(a, fam);
  for (S& v : t.data()) v = detail::sgn_phase(v);
  return apply_U_inverse(t, fam);
}

/// Checks that g belongs to the subdifferential of the U1 norm at a:
/// U(g - witness) must vanish on the support of U(a) and have max modulus at
/// most one elsewhere.
template <typename S>
bool u1_subgradient_member(const Tensor<S>& g, const Tensor<S>& a, const TransformFamily& fam,
                           double tol = 1e-9) {
  Tensor<S> ta = apply_U(a, fam);
  Tensor<S> f = apply_U(g, fam);
  const double support_cut = 1e-12 * max_abs(ta);
  for (Index i = 0; i < ta.numel(); ++i) {
    const double m = detail::modulus(ta[i]);
    if (m > support_cut) {
      if (detail::modulus(f[i] - detail::sgn_phase(ta[i])) > tol) return false;
    } else {
      if (detail::modulus(f[i]) > 1.0 + tol) return false;
    }
  }
  return true;
}

}  // namespace tu1
