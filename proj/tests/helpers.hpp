#pragma once

#include "tu1/synthetic.hpp"
#include "tu1/tensor.hpp"

#include <random>
#include <vector>

namespace tu1::testing {

inline double randn(std::mt19937_64& rng) { return detail::gaussian(rng); }

template <typename S>
S rand_scalar(std::mt19937_64& rng) {
  if constexpr (std::is_same_v<S, cplx>) {
    return cplx(randn(rng), randn(rng));
  } else {
    return randn(rng);
  }
}

template <typename S = double>
Tensor<S> rand_tensor(const std::vector<Index>& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tensor<S> t(shape);
  for (auto& v : t.data()) v = rand_scalar<S>(rng);
  return t;
}

template <typename S = double>
Matrix<S> rand_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix<S> m(rows, cols);
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) m(r, c) = rand_scalar<S>(rng);
  }
  return m;
}

}  // namespace tu1::testing
