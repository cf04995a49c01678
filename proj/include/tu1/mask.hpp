#pragma once

#include "tu1/tensor.hpp"

namespace tu1 {

/// Support set of observed entries, stored as a boolean array aligned with the
/// tensor's flat (column-major) layout.
class MaskIndexSet {
 public:
  MaskIndexSet() = default;

  MaskIndexSet(std::vector<Index> shape, std::vector<std::uint8_t> observed)
      : shape_(std::move(shape)), observed_(std::move(observed)) {
    Index n = 1;
    for (Index e : shape_) {
      if (e < 1) throw std::invalid_argument("mask extents must be positive");
      n *= e;
    }
    if (static_cast<Index>(observed_.size()) != n) {
      throw std::invalid_argument("mask length does not match shape product");
    }
    for (std::uint8_t b : observed_) count_ += (b != 0);
  }

  static MaskIndexSet full(std::vector<Index> shape) {
    Index n = 1;
    for (Index e : shape) n *= e;
    return MaskIndexSet(std::move(shape), std::vector<std::uint8_t>(static_cast<std::size_t>(n), 1));
  }

  const std::vector<Index>& shape() const { return shape_; }
  Index numel() const { return static_cast<Index>(observed_.size()); }
  Index observed_count() const { return count_; }
  double sampling_rate() const {
    return static_cast<double>(count_) / static_cast<double>(numel());
  }
  bool observed(Index flat) const { return observed_[static_cast<std::size_t>(flat)] != 0; }

  template <typename S>
  void check_compatible(const Tensor<S>& t) const {
    if (t.shape() != shape_) throw std::invalid_argument("mask/tensor shape mismatch");
  }

 private:
  std::vector<Index> shape_;
  std::vector<std::uint8_t> observed_;
  Index count_ = 0;
};

/// Keeps observed entries, zeroes the rest.
template <typename S>
Tensor<S> psi_project(const Tensor<S>& a, const MaskIndexSet& mask) {
  mask.check_compatible(a);
  Tensor<S> out = a;
  for (Index i = 0; i < out.numel(); ++i) {
    if (!mask.observed(i)) out[i] = S(0);
  }
  return out;
}

/// Complementary projection: zeroes observed entries.
template <typename S>
Tensor<S> psi_project_complement(const Tensor<S>& a, const MaskIndexSet& mask) {
  mask.check_compatible(a);
  Tensor<S> out = a;
  for (Index i = 0; i < out.numel(); ++i) {
    if (mask.observed(i)) out[i] = S(0);
  }
  return out;
}

}  // namespace tu1
