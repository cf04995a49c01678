#pragma once

#include "tu1/mask.hpp"
#include "tu1/tensor.hpp"
#include "tu1/transforms.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

namespace tu1 {
namespace detail {

// Deterministic draws built from raw mt19937_64 output, so streams are stable
// across standard library implementations.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double gaussian(std::mt19937_64& rng) {
  double u1 = unit_uniform(rng);
  while (u1 == 0.0) u1 = unit_uniform(rng);
  const double u2 = unit_uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Unbiased draw in [0, n) by rejection.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = max - max % n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace detail

enum class FactorSource { Dcm, RandomOrthogonal };

struct SyntheticSpec {
  std::vector<Index> shape;
  Index R = 1;
  std::uint64_t seed = 0;        // drives the core and the atom choice
  std::uint64_t basis_seed = 0;  // drives random synthesis bases only
  FactorSource source = FactorSource::Dcm;

  void validate() const {
    if (shape.empty()) throw std::invalid_argument("synthetic shape must be nonempty");
    Index min_extent = std::numeric_limits<Index>::max();
    for (Index e : shape) {
      if (e < 1) throw std::invalid_argument("synthetic extents must be positive");
      min_extent = std::min(min_extent, e);
    }
    if (R < 1 || R > min_extent) {
      throw std::invalid_argument("rank parameter must lie in [1, min extent]");
    }
  }
};

/// Orthonormal basis whose columns serve as factor atoms. Chosen so that the
/// matching analysis transform (its transpose) maps each atom to a canonical
/// unit vector; for Dcm the analysis transform is dcm(n) itself.
inline Matrix<double> synthesis_basis(FactorSource source, Index n, std::uint64_t seed) {
  switch (source) {
    case FactorSource::Dcm:
      return dcm(n).transpose();
    case FactorSource::RandomOrthogonal:
      return random_orthogonal(n, seed);
  }
  throw std::invalid_argument("unknown factor source");
}

/// Seed of the mode-k synthesis basis, fixed so the basis can be rebuilt
/// without replaying the generator's stream.
inline std::uint64_t mode_basis_seed(std::uint64_t seed, int mode) {
  return detail::splitmix64(seed ^ (0x51ull + static_cast<std::uint64_t>(mode) *
                                                  0x9e3779b97f4a7c15ull));
}

/// Analysis transform that sparsifies mode k of data drawn from this spec:
/// the transpose of the mode-k synthesis basis.
inline Matrix<double> analysis_transform(const SyntheticSpec& spec, int mode) {
  const Index n = spec.shape.at(static_cast<std::size_t>(mode));
  return synthesis_basis(spec.source, n, mode_basis_seed(spec.basis_seed, mode)).transpose();
}

/// Transform family matched to the generator: fixed analysis transforms on
/// the first n_fixed modes (default: first half), learnable on the rest.
inline TransformFamily matched_family(const SyntheticSpec& spec, int n_fixed = -1) {
  const int h = static_cast<int>(spec.shape.size());
  if (n_fixed < 0) n_fixed = h / 2;
  if (n_fixed > h) throw std::invalid_argument("more fixed modes than tensor modes");
  TransformFamily fam(h);
  for (int k = 0; k < n_fixed; ++k) fam.set_fixed(k, analysis_transform(spec, k));
  for (int k = n_fixed; k < h; ++k) fam.set_learnable(k);
  return fam;
}

/// Low-rank tensor M = G0 x_1 U_1 ... x_h U_h with G0 an R^h core of iid
/// standard normals and each U_k made of R distinct atom columns drawn from
/// the synthesis basis of mode k. Deterministic per seed.
inline RTensor gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const int h = static_cast<int>(spec.shape.size());

  std::vector<Index> core_shape(static_cast<std::size_t>(h), spec.R);
  RTensor g0(core_shape);
  for (double& v : g0.data()) v = detail::gaussian(rng);

  RTensor m = std::move(g0);
  for (int k = 0; k < h; ++k) {
    const Index n = spec.shape[static_cast<std::size_t>(k)];
    const Matrix<double> basis =
        synthesis_basis(spec.source, n, mode_basis_seed(spec.basis_seed, k));
    std::vector<Index> cols(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) cols[static_cast<std::size_t>(i)] = i;
    for (Index j = 0; j < spec.R; ++j) {
      const Index pick = j + static_cast<Index>(detail::uniform_below(
                                 rng, static_cast<std::uint64_t>(n - j)));
      std::swap(cols[static_cast<std::size_t>(j)], cols[static_cast<std::size_t>(pick)]);
    }
    Matrix<double> u(n, spec.R);
    for (Index j = 0; j < spec.R; ++j) u.col(j) = basis.col(cols[static_cast<std::size_t>(j)]);
    m = mode_product(m, u, k);
  }
  return m;
}

/// Uniform-without-replacement sampling support with exactly round(p * numel)
/// observed entries. Deterministic per seed.
inline MaskIndexSet gen_mask(const std::vector<Index>& shape, double p, std::uint64_t seed) {
  if (!(p >= 0.0) || !(p <= 1.0)) throw std::invalid_argument("sampling rate must lie in [0,1]");
  Index n = 1;
  for (Index e : shape) {
    if (e < 1) throw std::invalid_argument("mask extents must be positive");
    n *= e;
  }
  const Index m = static_cast<Index>(std::llround(p * static_cast<double>(n)));
  std::mt19937_64 rng(seed);
  std::vector<Index> idx(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  std::vector<std::uint8_t> observed(static_cast<std::size_t>(n), 0);
  for (Index j = 0; j < m; ++j) {
    const Index pick =
        j + static_cast<Index>(detail::uniform_below(rng, static_cast<std::uint64_t>(n - j)));
    std::swap(idx[static_cast<std::size_t>(j)], idx[static_cast<std::size_t>(pick)]);
    observed[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])] = 1;
  }
  return MaskIndexSet(shape, std::move(observed));
}

inline double relative_error(const RTensor& m, const RTensor& m_hat) {
  RTensor diff = m;
  diff -= m_hat;
  const double denom = frobenius_norm(m);
  if (denom == 0.0) throw std::invalid_argument("relative error undefined for zero reference");
  return frobenius_norm(diff) / denom;
}

/// 10 log10(peak^2 / MSE); identical inputs yield +infinity.
inline double psnr(const RTensor& reference, const RTensor& estimate, double peak) {
  reference.check_same_shape(estimate);
  if (!(peak > 0)) throw std::invalid_argument("peak must be positive");
  double mse = 0;
  const auto& r = reference.data();
  const auto& e = estimate.data();
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double d = r[i] - e[i];
    mse += d * d;
  }
  mse /= static_cast<double>(r.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

}  // namespace tu1
