#pragma once

#include "tu1/tensor.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace tu1 {

inline constexpr std::uint32_t kTensorFormatVersion = 1;
inline constexpr std::array<char, 4> kTensorMagic = {'T', 'U', '1', 'T'};
inline constexpr int kMaxTensorOrder = 8;

namespace detail {

inline void put_u32le(std::ostream& os, std::uint32_t v) {
  std::array<char, 4> b;
  for (int i = 0; i < 4; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b.data(), b.size());
}

inline void put_u64le(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> b;
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b.data(), b.size());
}

inline void put_f64le(std::ostream& os, double d) { put_u64le(os, std::bit_cast<std::uint64_t>(d)); }

inline void read_exact(std::istream& is, char* p, std::size_t n) {
  is.read(p, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n) throw std::runtime_error("truncated tensor file");
}

inline std::uint32_t get_u32le(std::istream& is) {
  std::array<char, 4> b;
  read_exact(is, b.data(), b.size());
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[static_cast<std::size_t>(i)]))
         << (8 * i);
  }
  return v;
}

inline std::uint64_t get_u64le(std::istream& is) {
  std::array<char, 8> b;
  read_exact(is, b.data(), b.size());
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[static_cast<std::size_t>(i)]))
         << (8 * i);
  }
  return v;
}

inline double get_f64le(std::istream& is) { return std::bit_cast<double>(get_u64le(is)); }

// Enumerates column-major flat offsets in C order (last mode fastest), the
// order in which values are laid out on disk.
class COrderWalk {
 public:
  explicit COrderWalk(const std::vector<Index>& shape)
      : shape_(shape), idx_(shape.size(), 0), strides_(shape.size(), 1) {
    for (std::size_t k = 1; k < shape.size(); ++k) strides_[k] = strides_[k - 1] * shape[k - 1];
  }

  Index flat() const { return flat_; }

  void advance() {
    for (std::size_t k = shape_.size(); k-- > 0;) {
      flat_ += strides_[k];
      if (++idx_[k] < shape_[k]) return;
      flat_ -= strides_[k] * shape_[k];
      idx_[k] = 0;
    }
  }

 private:
  std::vector<Index> shape_;
  std::vector<Index> idx_;
  std::vector<Index> strides_;
  Index flat_ = 0;
};

}  // namespace detail

template <typename S>
void write_tensor(std::ostream& os, const Tensor<S>& t) {
  static_assert(std::is_same_v<S, double> || std::is_same_v<S, cplx>);
  if (t.order() > kMaxTensorOrder) throw std::invalid_argument("tensor order exceeds format limit");
  os.write(kTensorMagic.data(), kTensorMagic.size());
  detail::put_u32le(os, kTensorFormatVersion);
  const std::uint8_t kind = std::is_same_v<S, cplx> ? 1 : 0;
  os.put(static_cast<char>(kind));
  os.put(static_cast<char>(t.order()));
  for (Index e : t.shape()) detail::put_u64le(os, static_cast<std::uint64_t>(e));
  detail::COrderWalk walk(t.shape());
  const auto data = t.data();
  for (Index i = 0; i < t.numel(); ++i, walk.advance()) {
    const S& v = data[static_cast<std::size_t>(walk.flat())];
    if constexpr (std::is_same_v<S, cplx>) {
      detail::put_f64le(os, v.real());
      detail::put_f64le(os, v.imag());
    } else {
      detail::put_f64le(os, v);
    }
  }
  if (!os) throw std::runtime_error("tensor write failed");
}

template <typename S>
void write_tensor(const std::string& path, const Tensor<S>& t) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_tensor(os, t);
}

using TensorVariant = std::variant<RTensor, CTensor>;

inline TensorVariant read_tensor(std::istream& is) {
  std::array<char, 4> magic;
  detail::read_exact(is, magic.data(), magic.size());
  if (magic != kTensorMagic) throw std::runtime_error("not a tensor file (bad magic)");
  const std::uint32_t version = detail::get_u32le(is);
  if (version != kTensorFormatVersion) throw std::runtime_error("unsupported tensor file version");
  char kind_c = 0, order_c = 0;
  detail::read_exact(is, &kind_c, 1);
  detail::read_exact(is, &order_c, 1);
  const int kind = static_cast<unsigned char>(kind_c);
  const int order = static_cast<unsigned char>(order_c);
  if (kind != 0 && kind != 1) throw std::runtime_error("unknown scalar kind in tensor file");
  if (order < 1 || order > kMaxTensorOrder) throw std::runtime_error("tensor order out of range");
  std::vector<Index> shape(static_cast<std::size_t>(order));
  std::uint64_t numel = 1;
  for (auto& e : shape) {
    const std::uint64_t v = detail::get_u64le(is);
    if (v < 1 || v > (std::uint64_t{1} << 32)) throw std::runtime_error("bad extent in tensor file");
    numel *= v;
    if (numel > (std::uint64_t{1} << 36)) throw std::runtime_error("tensor file too large");
    e = static_cast<Index>(v);
  }
  auto fill = [&](auto& t) {
    detail::COrderWalk walk(t.shape());
    auto data = t.data();
    using S = std::remove_reference_t<decltype(data[0])>;
    for (Index i = 0; i < t.numel(); ++i, walk.advance()) {
      if constexpr (std::is_same_v<S, cplx>) {
        const double re = detail::get_f64le(is);
        const double im = detail::get_f64le(is);
        data[static_cast<std::size_t>(walk.flat())] = cplx(re, im);
      } else {
        data[static_cast<std::size_t>(walk.flat())] = detail::get_f64le(is);
      }
    }
  };
  if (kind == 1) {
    CTensor t(shape);
    fill(t);
    return t;
  }
  RTensor t(shape);
  fill(t);
  return t;
}

inline TensorVariant read_tensor(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  return read_tensor(is);
}

/// Reads a tensor file that must hold real scalars.
inline RTensor read_tensor_real(const std::string& path) {
  TensorVariant v = read_tensor(path);
  if (auto* r = std::get_if<RTensor>(&v)) return std::move(*r);
  throw std::runtime_error("expected a real tensor file: " + path);
}

}  // namespace tu1
