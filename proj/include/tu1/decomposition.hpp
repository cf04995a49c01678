#pragma once

#include "tu1/norms.hpp"
#include "tu1/tensor.hpp"
#include "tu1/transforms.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <limits>
#include <utility>
#include <vector>

namespace tu1 {

template <typename S>
struct TdslResult {
  Tensor<S> Z1;               // core; every (k1,k2)-slice of U(Z1) has rank <= r
  std::vector<Matrix<S>> U;   // learned factors, ascending learnable-mode order
  Index r = 0;                // achieved slice-wise numerical rank of U(Z1)
  double residual = 0;        // ||A - reconstruction||_F at the last iterate
  std::vector<double> residual_history;
};

/// Reconstructs the data tensor from a slice-wise low-rank core: applies the
/// conjugate-transposed learned factors on the learnable modes. The fixed
/// transforms are folded into the core (the core stores the inverse-transformed
/// low-rank tensor), so this matches A = Z x U_hat^T ... x U^T with
/// Z = U(Z1).
template <typename S>
Tensor<S> tdsl_reconstruct(const TdslResult<S>& dec, const TransformFamily& fam) {
  const std::vector<int> learnable = fam.learnable_modes();
  Tensor<S> x = dec.Z1;
  for (std::size_t i = 0; i < learnable.size(); ++i) {
    x = mode_product(x, Matrix<S>(dec.U[i].adjoint()), learnable[i]);
  }
  return x;
}

/// Alternating slice-wise low-rank decomposition of a fully observed tensor:
/// (a) best slice-wise rank-r approximation of U(A x learned factors) via
/// per-slice truncated SVD, (b) orthogonal Procrustes update of each learnable
/// factor against the current core. Both steps solve their subproblem exactly,
/// so the reconstruction residual never increases. Stops when the improvement
/// drops below 1e-10 or after `iters` rounds.
template <typename S>
TdslResult<S> tdsl_decompose(const Tensor<S>& a, const TransformFamily& fam,
                             const SliceModePair& pair, Index r, int iters = 50) {
  pair.validate(a.order());
  if (fam.order() != a.order()) throw std::invalid_argument("tensor/family order mismatch");
  const Index rmax = std::min(a.extent(pair.k1), a.extent(pair.k2));
  if (r < 1 || r > rmax) throw std::invalid_argument("target slice rank out of range");
  if (iters < 1) throw std::invalid_argument("iters must be at least 1");
  const std::vector<int> learnable = fam.learnable_modes();
  for (int m : learnable) {
    if (m == pair.k1 || m == pair.k2) {
      throw std::invalid_argument("slice modes cannot be learnable");
    }
  }

  std::vector<Matrix<S>> u;
  u.reserve(learnable.size());
  for (int m : learnable) u.push_back(Matrix<S>::Identity(a.extent(m), a.extent(m)));

  auto to_core = [&](Tensor<S> x) {
    for (std::size_t i = 0; i < learnable.size(); ++i) x = mode_product(x, u[i], learnable[i]);
    return x;
  };
  auto to_data = [&](Tensor<S> z) {
    for (std::size_t i = 0; i < learnable.size(); ++i) {
      z = mode_product(z, Matrix<S>(u[i].adjoint()), learnable[i]);
    }
    return z;
  };

  TdslResult<S> out;
  out.residual_history.reserve(static_cast<std::size_t>(iters));
  Tensor<S> z1 = a;
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < iters; ++it) {
    Tensor<S> t = apply_U(to_core(a), fam);
    SliceScan scan(t, pair.k1, pair.k2);
    Matrix<S> sl;
    for (Index sidx = 0; sidx < scan.count(); ++sidx) {
      scan.gather(t, sidx, sl);
      Eigen::JacobiSVD<Matrix<S>> svd(sl, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const auto& sv = svd.singularValues();
      const Index keep = std::min<Index>(r, sv.size());
      sl = svd.matrixU().leftCols(keep) *
           sv.head(keep).template cast<S>().asDiagonal() *
           svd.matrixV().leftCols(keep).adjoint();
      scan.scatter(sl, sidx, t);
    }
    z1 = apply_U_inverse(t, fam);

    Tensor<S> b = a;
    for (std::size_t li = 0; li < learnable.size(); ++li) {
      const int kn = learnable[li];
      Tensor<S> c = z1;
      for (std::size_t mi = li + 1; mi < learnable.size(); ++mi) {
        c = mode_product(c, Matrix<S>(u[mi].adjoint()), learnable[mi]);
      }
      const Matrix<S> g = mode_unfold(c, kn) * mode_unfold(b, kn).adjoint();
      u[li] = polar_unitary(g);
      b = mode_product(b, u[li], kn);
    }

    Tensor<S> diff = a;
    diff -= to_data(z1);
    const double res = frobenius_norm(diff);
    out.residual_history.push_back(res);
    if (prev - res < 1e-10) break;
    prev = res;
  }

  out.residual = out.residual_history.back();
  out.Z1 = std::move(z1);
  out.U = std::move(u);

  Tensor<S> t = apply_U(out.Z1, fam);
  SliceScan scan(t, pair.k1, pair.k2);
  Matrix<S> sl;
  Index achieved = 0;
  for (Index sidx = 0; sidx < scan.count(); ++sidx) {
    scan.gather(t, sidx, sl);
    Eigen::JacobiSVD<Matrix<S>> svd(sl);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || !(sv(0) > 0)) continue;
    Index k = 0;
    for (Index i = 0; i < sv.size(); ++i) {
      if (sv(i) > 1e-8 * sv(0)) ++k;
    }
    achieved = std::max(achieved, k);
  }
  out.r = achieved;
  return out;
}

struct TdstSparsity {
  Index u0 = 0;   // entries of U(A) above the relative threshold
  double u1 = 0;  // sum of moduli of U(A)
  std::vector<double> energy_levels;  // queried cumulative energy fractions
  std::vector<Index> energy_counts;   // coefficients needed to reach each level
};

/// Sparsity statistics of U(A) under a fully specified transform family
/// (no learnable modes): a diagnostic for how well the family sparsifies the
/// data. The energy profile reports how many of the largest coefficients are
/// needed to capture each queried fraction of the squared Frobenius mass.
template <typename S>
TdstSparsity tdst_sparsity(const Tensor<S>& a, const TransformFamily& fam,
                           double rel_tol = 1e-12) {
  if (!fam.learnable_modes().empty()) {
    throw std::invalid_argument("sparsity profile needs a fully specified family");
  }
  const auto t = apply_U(a, fam);
  TdstSparsity out;
  out.energy_levels = {0.5, 0.9, 0.99, 0.999};

  std::vector<double> energy;
  energy.reserve(static_cast<std::size_t>(t.numel()));
  double max_mod = 0;
  for (const auto& v : t.data()) {
    const double m = detail::modulus(v);
    max_mod = std::max(max_mod, m);
    out.u1 += m;
    energy.push_back(m * m);
  }
  const double cut = rel_tol * max_mod;
  for (const double e : energy) {
    if (e > cut * cut) ++out.u0;
  }
  std::sort(energy.begin(), energy.end(), std::greater<>());
  double total = 0;
  for (const double e : energy) total += e;
  for (const double level : out.energy_levels) {
    if (total <= 0) {
      out.energy_counts.push_back(0);
      continue;
    }
    const double target = level * total;
    double acc = 0;
    Index count = 0;
    for (const double e : energy) {
      acc += e;
      ++count;
      if (acc >= target) break;
    }
    out.energy_counts.push_back(count);
  }
  return out;
}

}  // namespace tu1
