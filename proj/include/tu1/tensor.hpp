#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tu1 {

using Index = std::int64_t;
using cplx = std::complex<double>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

namespace detail {

inline double modulus(double x) { return std::abs(x); }
inline double modulus(const cplx& x) { return std::abs(x); }
inline double squared_modulus(double x) { return x * x; }
inline double squared_modulus(const cplx& x) { return std::norm(x); }
inline double conj_mul(double a, double b) { return a * b; }
inline cplx conj_mul(const cplx& a, const cplx& b) { return a * std::conj(b); }

}  // namespace detail

/// Dense h-order tensor with column-major layout (first mode varies fastest).
/// Shapes are immutable after construction; all free-function operations on
/// tensors are pure and safe to call concurrently.
template <typename Scalar>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<Index> shape) : shape_(std::move(shape)) {
    validate_shape();
    data_.assign(static_cast<std::size_t>(numel_), Scalar(0));
  }

  Tensor(std::vector<Index> shape, std::vector<Scalar> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape();
    if (static_cast<Index>(data_.size()) != numel_) {
      throw std::invalid_argument("tensor data length does not match shape product");
    }
  }

  static Tensor zeros(std::vector<Index> shape) { return Tensor(std::move(shape)); }

  int order() const { return static_cast<int>(shape_.size()); }
  const std::vector<Index>& shape() const { return shape_; }
  Index extent(int mode) const {
    check_mode(mode);
    return shape_[static_cast<std::size_t>(mode)];
  }
  Index numel() const { return numel_; }
  /// Column-major stride of a mode: product of all earlier extents.
  Index stride(int mode) const {
    check_mode(mode);
    return stride_[static_cast<std::size_t>(mode)];
  }

  void check_mode(int mode) const {
    if (mode < 0 || mode >= order()) {
      throw std::out_of_range("mode " + std::to_string(mode) + " out of range for order " +
                              std::to_string(order()) + " tensor");
    }
  }

  Scalar& operator[](Index flat) { return data_[static_cast<std::size_t>(flat)]; }
  const Scalar& operator[](Index flat) const { return data_[static_cast<std::size_t>(flat)]; }

  Index flat_index(std::span<const Index> idx) const {
    if (static_cast<int>(idx.size()) != order()) {
      throw std::invalid_argument("index arity does not match tensor order");
    }
    Index flat = 0;
    for (int k = 0; k < order(); ++k) {
      const Index i = idx[static_cast<std::size_t>(k)];
      if (i < 0 || i >= shape_[static_cast<std::size_t>(k)]) {
        throw std::out_of_range("index out of range on mode " + std::to_string(k));
      }
      flat += i * stride_[static_cast<std::size_t>(k)];
    }
    return flat;
  }

  Scalar& at(std::span<const Index> idx) { return data_[static_cast<std::size_t>(flat_index(idx))]; }
  const Scalar& at(std::span<const Index> idx) const {
    return data_[static_cast<std::size_t>(flat_index(idx))];
  }

  template <typename... Is>
  Scalar& operator()(Is... is) {
    const std::array<Index, sizeof...(Is)> idx{static_cast<Index>(is)...};
    return at(std::span<const Index>(idx));
  }
  template <typename... Is>
  const Scalar& operator()(Is... is) const {
    const std::array<Index, sizeof...(Is)> idx{static_cast<Index>(is)...};
    return at(std::span<const Index>(idx));
  }

  std::span<Scalar> data() { return data_; }
  std::span<const Scalar> data() const { return data_; }

  Tensor& operator+=(const Tensor& o) {
    check_same_shape(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Tensor& operator-=(const Tensor& o) {
    check_same_shape(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Tensor& operator*=(Scalar s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
  friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
  friend Tensor operator*(Tensor a, Scalar s) { return a *= s; }
  friend Tensor operator*(Scalar s, Tensor a) { return a *= s; }

  void check_same_shape(const Tensor& o) const {
    if (shape_ != o.shape_) throw std::invalid_argument("tensor shape mismatch");
  }

 private:
  void validate_shape() {
    if (shape_.empty()) throw std::invalid_argument("tensor order must be at least 1");
    numel_ = 1;
    stride_.resize(shape_.size());
    for (std::size_t k = 0; k < shape_.size(); ++k) {
      if (shape_[k] < 1) throw std::invalid_argument("tensor extents must be positive");
      stride_[k] = numel_;
      numel_ *= shape_[k];
    }
  }

  std::vector<Index> shape_;
  std::vector<Index> stride_;
  std::vector<Scalar> data_;
  Index numel_ = 0;
};

using RTensor = Tensor<double>;
using CTensor = Tensor<cplx>;

// ---------------------------------------------------------------------------
// Elementwise reductions

struct ElementwiseNorms {
  Index l0 = 0;    // entries with modulus strictly greater than zero
  double l1 = 0;   // sum of moduli
  double linf = 0; // max modulus
  double fro = 0;  // root sum of squared moduli
};

template <typename S>
ElementwiseNorms elementwise_norms(const Tensor<S>& a) {
  ElementwiseNorms n;
  double sq = 0;
  for (const S& v : a.data()) {
    const double m = detail::modulus(v);
    if (m > 0) ++n.l0;
    n.l1 += m;
    n.linf = std::max(n.linf, m);
    sq += detail::squared_modulus(v);
  }
  n.fro = std::sqrt(sq);
  return n;
}

template <typename S>
double frobenius_norm(const Tensor<S>& a) {
  double sq = 0;
  for (const S& v : a.data()) sq += detail::squared_modulus(v);
  return std::sqrt(sq);
}

template <typename S>
double max_abs(const Tensor<S>& a) {
  double m = 0;
  for (const S& v : a.data()) m = std::max(m, detail::modulus(v));
  return m;
}

template <typename S>
double max_abs_diff(const Tensor<S>& a, const Tensor<S>& b) {
  a.check_same_shape(b);
  double m = 0;
  for (Index i = 0; i < a.numel(); ++i) m = std::max(m, detail::modulus(a[i] - b[i]));
  return m;
}

/// Inner product sum_i a_i * conj(b_i).
template <typename S>
S inner(const Tensor<S>& a, const Tensor<S>& b) {
  a.check_same_shape(b);
  S acc(0);
  for (Index i = 0; i < a.numel(); ++i) acc += detail::conj_mul(a[i], b[i]);
  return acc;
}

// ---------------------------------------------------------------------------
// Real/complex promotion

inline CTensor to_complex(const RTensor& a) {
  std::vector<cplx> d(static_cast<std::size_t>(a.numel()));
  for (Index i = 0; i < a.numel(); ++i) d[static_cast<std::size_t>(i)] = cplx(a[i], 0.0);
  return CTensor(a.shape(), std::move(d));
}

/// Drops imaginary parts after checking they are below rel_tol relative to the
/// maximum modulus of the tensor.
inline RTensor to_real(const CTensor& a, double rel_tol = 1e-12) {
  const double scale = max_abs(a);
  double max_imag = 0;
  for (const cplx& v : a.data()) max_imag = std::max(max_imag, std::abs(v.imag()));
  if (max_imag > rel_tol * std::max(scale, 1e-300)) {
    throw std::runtime_error("tensor has non-negligible imaginary part (" +
                             std::to_string(max_imag) + " vs scale " + std::to_string(scale) + ")");
  }
  std::vector<double> d(static_cast<std::size_t>(a.numel()));
  for (Index i = 0; i < a.numel(); ++i) d[static_cast<std::size_t>(i)] = a[i].real();
  return RTensor(a.shape(), std::move(d));
}

// ---------------------------------------------------------------------------
// Mode-n unfolding and folding
//
// Column ordering: the entry at multi-index (i_0,...,i_{h-1}) lands in column
// j = sum_{k != n} i_k * J_k with J_k = prod_{m < k, m != n} I_m. With the
// column-major layout this means column j = l + r * stride(n), where l indexes
// the modes before n and r the modes after n.

template <typename S>
Matrix<S> mode_unfold(const Tensor<S>& a, int mode) {
  a.check_mode(mode);
  const Index rows = a.extent(mode);
  const Index n_left = a.stride(mode);
  const Index n_right = a.numel() / (n_left * rows);
  Matrix<S> m(rows, a.numel() / rows);
  const S* src = a.data().data();
  for (Index r = 0; r < n_right; ++r) {
    const Index block = r * n_left * rows;
    for (Index i = 0; i < rows; ++i) {
      const S* run = src + block + i * n_left;
      for (Index l = 0; l < n_left; ++l) m(i, l + r * n_left) = run[l];
    }
  }
  return m;
}

template <typename S>
Tensor<S> mode_fold(const Matrix<S>& m, int mode, std::vector<Index> shape) {
  Tensor<S> out(std::move(shape));
  out.check_mode(mode);
  const Index rows = out.extent(mode);
  const Index n_left = out.stride(mode);
  const Index n_right = out.numel() / (n_left * rows);
  if (m.rows() != rows || m.cols() != out.numel() / rows) {
    throw std::invalid_argument("matrix dimensions do not match fold target shape");
  }
  S* dst = out.data().data();
  for (Index r = 0; r < n_right; ++r) {
    const Index block = r * n_left * rows;
    for (Index i = 0; i < rows; ++i) {
      S* run = dst + block + i * n_left;
      for (Index l = 0; l < n_left; ++l) run[l] = m(i, l + r * n_left);
    }
  }
  return out;
}

/// Mode-n product: replaces extent I_n by u.rows(); the mode-n unfolding of the
/// result equals u * mode_unfold(a, n).
template <typename S>
Tensor<S> mode_product(const Tensor<S>& a, const Matrix<S>& u, int mode) {
  a.check_mode(mode);
  const Index in_n = a.extent(mode);
  if (u.cols() != in_n) {
    throw std::invalid_argument("mode_product: matrix columns (" + std::to_string(u.cols()) +
                                ") do not match mode extent (" + std::to_string(in_n) + ")");
  }
  const Index out_n = u.rows();
  std::vector<Index> out_shape = a.shape();
  out_shape[static_cast<std::size_t>(mode)] = out_n;
  Tensor<S> out(std::move(out_shape));

  const Index n_left = a.stride(mode);
  const Index n_right = a.numel() / (n_left * in_n);
  const S* src = a.data().data();
  S* dst = out.data().data();
  if (n_left == 1) {
    // Contiguous unfolding: one GEMM over all trailing modes.
    Eigen::Map<const Matrix<S>> in(src, in_n, n_right);
    Eigen::Map<Matrix<S>> o(dst, out_n, n_right);
    o.noalias() = u * in;
  } else {
    for (Index r = 0; r < n_right; ++r) {
      Eigen::Map<const Matrix<S>> in(src + r * n_left * in_n, n_left, in_n);
      Eigen::Map<Matrix<S>> o(dst + r * n_left * out_n, n_left, out_n);
      o.noalias() = in * u.transpose();
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Matrix slices
//
// A slice fixes all but two modes. Rows of the returned matrix follow the
// lower-numbered free mode, columns the higher-numbered one.

template <typename S>
Matrix<S> slice(const Tensor<S>& a, const std::vector<std::pair<int, Index>>& fixed) {
  const int h = a.order();
  if (static_cast<int>(fixed.size()) != h - 2) {
    throw std::invalid_argument("slice: exactly two modes must remain free");
  }
  std::vector<char> is_fixed(static_cast<std::size_t>(h), 0);
  Index base = 0;
  for (const auto& [mode, idx] : fixed) {
    a.check_mode(mode);
    if (is_fixed[static_cast<std::size_t>(mode)]) {
      throw std::invalid_argument("slice: duplicate fixed mode");
    }
    if (idx < 0 || idx >= a.extent(mode)) throw std::out_of_range("slice: index out of range");
    is_fixed[static_cast<std::size_t>(mode)] = 1;
    base += idx * a.stride(mode);
  }
  int free_a = -1, free_b = -1;
  for (int k = 0; k < h; ++k) {
    if (is_fixed[static_cast<std::size_t>(k)]) continue;
    (free_a < 0 ? free_a : free_b) = k;
  }
  Matrix<S> m(a.extent(free_a), a.extent(free_b));
  const S* src = a.data().data();
  const Index sa = a.stride(free_a), sb = a.stride(free_b);
  for (Index y = 0; y < m.cols(); ++y)
    for (Index x = 0; x < m.rows(); ++x) m(x, y) = src[base + x * sa + y * sb];
  return m;
}

/// Enumerates the base offsets of all (a,b)-slices of a shape, in ascending
/// order of the remaining modes' multi-index (earlier modes vary fastest).
class SliceScan {
 public:
  template <typename S>
  SliceScan(const Tensor<S>& t, int mode_a, int mode_b) {
    const int h = t.order();
    t.check_mode(mode_a);
    t.check_mode(mode_b);
    if (mode_a == mode_b) throw std::invalid_argument("slice modes must be distinct");
    if (mode_a > mode_b) std::swap(mode_a, mode_b);
    rows_ = t.extent(mode_a);
    cols_ = t.extent(mode_b);
    row_stride_ = t.stride(mode_a);
    col_stride_ = t.stride(mode_b);
    count_ = 1;
    for (int k = 0; k < h; ++k) {
      if (k == mode_a || k == mode_b) continue;
      extents_.push_back(t.extent(k));
      strides_.push_back(t.stride(k));
      count_ *= t.extent(k);
    }
  }

  Index count() const { return count_; }
  Index rows() const { return rows_; }
  Index cols() const { return cols_; }

  Index base_offset(Index slice_idx) const {
    Index off = 0;
    for (std::size_t k = 0; k < extents_.size(); ++k) {
      off += (slice_idx % extents_[k]) * strides_[k];
      slice_idx /= extents_[k];
    }
    return off;
  }

  template <typename S>
  void gather(const Tensor<S>& t, Index slice_idx, Matrix<S>& m) const {
    m.resize(rows_, cols_);
    const S* src = t.data().data() + base_offset(slice_idx);
    for (Index y = 0; y < cols_; ++y)
      for (Index x = 0; x < rows_; ++x) m(x, y) = src[x * row_stride_ + y * col_stride_];
  }

  template <typename S>
  void scatter(const Matrix<S>& m, Index slice_idx, Tensor<S>& t) const {
    S* dst = t.data().data() + base_offset(slice_idx);
    for (Index y = 0; y < cols_; ++y)
      for (Index x = 0; x < rows_; ++x) dst[x * row_stride_ + y * col_stride_] = m(x, y);
  }

 private:
  Index rows_ = 0, cols_ = 0, row_stride_ = 0, col_stride_ = 0, count_ = 0;
  std::vector<Index> extents_;
  std::vector<Index> strides_;
};

}  // namespace tu1
