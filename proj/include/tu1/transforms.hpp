#pragma once

#include "tu1/tensor.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

namespace tu1 {

/// Unitary-normalized discrete Fourier matrix: entries w^{jk}/sqrt(n) with
/// w = exp(-2*pi*i/n), 0-based j,k.
inline Matrix<cplx> dfm(Index n) {
  if (n < 1) throw std::invalid_argument("dfm: size must be positive");
  Matrix<cplx> f(n, n);
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (Index j = 0; j < n; ++j) {
    for (Index k = 0; k < n; ++k) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(j * k) / static_cast<double>(n);
      f(j, k) = cplx(std::cos(ang) * s, std::sin(ang) * s);
    }
  }
  return f;
}

/// Orthonormal DCT-II matrix. Row 0 is the constant vector 1/sqrt(n).
inline Matrix<double> dcm(Index n) {
  if (n < 1) throw std::invalid_argument("dcm: size must be positive");
  Matrix<double> d(n, n);
  const double c0 = std::sqrt(1.0 / static_cast<double>(n));
  const double c = std::sqrt(2.0 / static_cast<double>(n));
  for (Index j = 0; j < n; ++j) {
    for (Index k = 0; k < n; ++k) {
      const double ang =
          std::numbers::pi * (2.0 * static_cast<double>(k) + 1.0) * static_cast<double>(j) /
          (2.0 * static_cast<double>(n));
      d(j, k) = (j == 0 ? c0 : c) * std::cos(ang);
    }
  }
  return d;
}

/// Deterministic random orthogonal matrix: QR of a seeded Gaussian matrix with
/// the sign convention R_ii > 0.
inline Matrix<double> random_orthogonal(Index n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("random_orthogonal: size must be positive");
  std::mt19937_64 rng(seed);
  auto unit = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  Matrix<double> g(n, n);
  // Box-Muller on raw engine output keeps the matrix reproducible across
  // standard library implementations.
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      double u1 = unit();
      while (u1 <= 0.0) u1 = unit();
      const double u2 = unit();
      g(i, j) = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
  }
  Eigen::HouseholderQR<Matrix<double>> qr(g);
  Matrix<double> q = qr.householderQ() * Matrix<double>::Identity(n, n);
  const Matrix<double> r = qr.matrixQR().template triangularView<Eigen::Upper>();
  for (Index k = 0; k < n; ++k) {
    if (r(k, k) < 0) q.col(k) = -q.col(k);
  }
  return q;
}

template <typename S>
double unitarity_defect(const Matrix<S>& u) {
  return (u.adjoint() * u - Matrix<S>::Identity(u.cols(), u.cols())).norm();
}

/// Nearest unitary matrix to g in Frobenius norm (polar factor), i.e. the
/// maximizer of Re tr(U^H g) over unitary U.
template <typename S>
Matrix<S> polar_unitary(const Matrix<S>& g) {
  Eigen::JacobiSVD<Matrix<S>> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix<S> u = svd.matrixU() * svd.matrixV().adjoint();
  if (unitarity_defect(u) > 1e-10) {
    Eigen::JacobiSVD<Matrix<S>> again(u, Eigen::ComputeFullU | Eigen::ComputeFullV);
    u = again.matrixU() * again.matrixV().adjoint();
  }
  return u;
}

enum class ModeRole { Identity, Learnable, Fixed };

/// Per-mode transform assignment defining the operator U. Fixed modes carry a
/// validated unitary matrix; Learnable modes are placeholders whose factors
/// live in the solver state; Identity modes are untouched.
class TransformFamily {
 public:
  explicit TransformFamily(int order) : roles_(static_cast<std::size_t>(order), ModeRole::Identity) {
    if (order < 1) throw std::invalid_argument("transform family order must be at least 1");
    fixed_cplx_.resize(static_cast<std::size_t>(order));
    fixed_real_.resize(static_cast<std::size_t>(order));
  }

  static TransformFamily identity(int order) { return TransformFamily(order); }

  int order() const { return static_cast<int>(roles_.size()); }

  ModeRole role(int mode) const {
    check_mode(mode);
    return roles_[static_cast<std::size_t>(mode)];
  }

  void set_learnable(int mode) {
    check_mode(mode);
    roles_[static_cast<std::size_t>(mode)] = ModeRole::Learnable;
    fixed_real_[static_cast<std::size_t>(mode)].reset();
    fixed_cplx_[static_cast<std::size_t>(mode)].reset();
  }

  void set_identity(int mode) {
    check_mode(mode);
    roles_[static_cast<std::size_t>(mode)] = ModeRole::Identity;
    fixed_real_[static_cast<std::size_t>(mode)].reset();
    fixed_cplx_[static_cast<std::size_t>(mode)].reset();
  }

  void set_fixed(int mode, Matrix<double> u) {
    check_mode(mode);
    check_unitary(unitarity_defect(u));
    roles_[static_cast<std::size_t>(mode)] = ModeRole::Fixed;
    fixed_cplx_[static_cast<std::size_t>(mode)] = u.cast<cplx>();
    fixed_real_[static_cast<std::size_t>(mode)] = std::move(u);
  }

  void set_fixed(int mode, Matrix<cplx> u) {
    check_mode(mode);
    check_unitary(unitarity_defect(u));
    roles_[static_cast<std::size_t>(mode)] = ModeRole::Fixed;
    if (u.imag().cwiseAbs().maxCoeff() == 0.0) {
      fixed_real_[static_cast<std::size_t>(mode)] = u.real();
    } else {
      fixed_real_[static_cast<std::size_t>(mode)].reset();
    }
    fixed_cplx_[static_cast<std::size_t>(mode)] = std::move(u);
  }

  /// True when every fixed matrix is real, so the whole pipeline can stay in
  /// real arithmetic.
  bool is_real() const {
    for (std::size_t k = 0; k < roles_.size(); ++k) {
      if (roles_[k] == ModeRole::Fixed && !fixed_real_[k].has_value()) return false;
    }
    return true;
  }

  std::vector<int> learnable_modes() const { return modes_with(ModeRole::Learnable); }
  std::vector<int> fixed_modes() const { return modes_with(ModeRole::Fixed); }

  const Matrix<cplx>& fixed_matrix_complex(int mode) const {
    require_fixed(mode);
    return *fixed_cplx_[static_cast<std::size_t>(mode)];
  }

  const Matrix<double>& fixed_matrix_real(int mode) const {
    require_fixed(mode);
    const auto& m = fixed_real_[static_cast<std::size_t>(mode)];
    if (!m) throw std::invalid_argument("fixed transform on mode " + std::to_string(mode) +
                                        " is complex; promote the tensor first");
    return *m;
  }

  template <typename S>
  const Matrix<S>& fixed_matrix(int mode) const {
    if constexpr (std::is_same_v<S, double>) {
      return fixed_matrix_real(mode);
    } else {
      return fixed_matrix_complex(mode);
    }
  }

 private:
  void check_mode(int mode) const {
    if (mode < 0 || mode >= order()) throw std::out_of_range("transform mode out of range");
  }
  void require_fixed(int mode) const {
    check_mode(mode);
    if (roles_[static_cast<std::size_t>(mode)] != ModeRole::Fixed) {
      throw std::invalid_argument("mode " + std::to_string(mode) + " has no fixed transform");
    }
  }
  static void check_unitary(double defect) {
    if (!(defect <= 1e-10)) {
      throw std::invalid_argument("fixed transform is not unitary (defect " +
                                  std::to_string(defect) + ")");
    }
  }
  std::vector<int> modes_with(ModeRole r) const {
    std::vector<int> out;
    for (int k = 0; k < order(); ++k) {
      if (roles_[static_cast<std::size_t>(k)] == r) out.push_back(k);
    }
    return out;
  }

  std::vector<ModeRole> roles_;
  std::vector<std::optional<Matrix<cplx>>> fixed_cplx_;
  std::vector<std::optional<Matrix<double>>> fixed_real_;
};

/// Applies every fixed transform of the family on its mode. Learnable and
/// Identity modes are untouched; learnable factors are solver state, not part
/// of the operator.
template <typename S>
Tensor<S> apply_U(const Tensor<S>& a, const TransformFamily& fam) {
  if (a.order() != fam.order()) throw std::invalid_argument("tensor/family order mismatch");
  Tensor<S> out = a;
  for (int mode : fam.fixed_modes()) {
    const Matrix<S>& u = fam.template fixed_matrix<S>(mode);
    if (u.cols() != a.extent(mode)) {
      throw std::invalid_argument("fixed transform size does not match mode extent");
    }
    out = mode_product(out, u, mode);
  }
  return out;
}

template <typename S>
Tensor<S> apply_U_inverse(const Tensor<S>& a, const TransformFamily& fam) {
  if (a.order() != fam.order()) throw std::invalid_argument("tensor/family order mismatch");
  Tensor<S> out = a;
  for (int mode : fam.fixed_modes()) {
    const Matrix<S>& u = fam.template fixed_matrix<S>(mode);
    if (u.rows() != a.extent(mode)) {
      throw std::invalid_argument("fixed transform size does not match mode extent");
    }
    out = mode_product(out, Matrix<S>(u.adjoint()), mode);
  }
  return out;
}

}  // namespace tu1
