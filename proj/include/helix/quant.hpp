#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <vector>

#include "helix/genome.hpp"

namespace helix::quant {

/// Per-tensor uniform quantization parameters. Stored codes are offset-binary:
/// real value = (code - zero_point) * scale.
struct QuantSpec {
  int bit_width = 8;
  double scale = 1.0;
  std::int64_t zero_point = 0;

  std::int64_t max_code() const { return (std::int64_t{1} << bit_width) - 1; }

  void validate() const {
    if (bit_width < 2 || bit_width > 32) throw Error("QuantSpec: bit_width must be in [2,32]");
    if (!(scale > 0.0) || !std::isfinite(scale)) throw Error("QuantSpec: scale must be positive");
    if (zero_point < 0 || zero_point > max_code()) throw Error("QuantSpec: zero_point out of range");
  }

  friend bool operator==(const QuantSpec&, const QuantSpec&) = default;
};

struct FixedTensor {
  std::vector<std::size_t> shape;
  std::vector<std::int64_t> data;  // offset-binary codes in [0, 2^bit_width - 1]
  QuantSpec spec;

  std::size_t size() const { return data.size(); }
  std::int64_t signed_at(std::size_t i) const { return data[i] - spec.zero_point; }
  std::vector<std::int64_t> signed_values() const {
    std::vector<std::int64_t> v(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) v[i] = signed_at(i);
    return v;
  }

  friend bool operator==(const FixedTensor&, const FixedTensor&) = default;
};

inline std::size_t element_count(std::span<const std::size_t> shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

/// Round half away from zero.
inline std::int64_t round_half_away(double v) {
  return static_cast<std::int64_t>(v < 0.0 ? -std::floor(-v + 0.5) : std::floor(v + 0.5));
}

/// Symmetric min/max calibration: the range [-m, m] (m = max |x|) is split into
/// 2^bits - 1 steps and zero sits at code 2^(bits-1).
inline QuantSpec calibrate(std::span<const double> x, int bit_width) {
  QuantSpec spec;
  spec.bit_width = bit_width;
  if (bit_width < 2 || bit_width > 32) throw Error("quantize: bit_width must be in [2,32]");
  double m = 0.0;
  for (double v : x) {
    if (!std::isfinite(v)) throw Error("quantize: non-finite input");
    m = std::max(m, std::abs(v));
  }
  spec.scale = m > 0.0 ? 2.0 * m / static_cast<double>(spec.max_code()) : 1.0;
  spec.zero_point = std::int64_t{1} << (bit_width - 1);
  return spec;
}

inline std::int64_t quantize_value(double v, const QuantSpec& spec) {
  std::int64_t q = round_half_away(v / spec.scale) + spec.zero_point;
  return std::clamp<std::int64_t>(q, 0, spec.max_code());
}

inline FixedTensor quantize_with(std::span<const double> x, std::vector<std::size_t> shape,
                                 const QuantSpec& spec) {
  spec.validate();
  if (element_count(shape) != x.size()) throw Error("quantize: shape does not match data");
  FixedTensor t{std::move(shape), {}, spec};
  t.data.reserve(x.size());
  for (double v : x) t.data.push_back(quantize_value(v, spec));
  return t;
}

inline FixedTensor quantize(std::span<const double> x, std::vector<std::size_t> shape,
                            int bit_width) {
  if (x.empty()) throw Error("quantize: empty tensor");
  return quantize_with(x, std::move(shape), calibrate(x, bit_width));
}

inline FixedTensor quantize(std::span<const double> x, int bit_width) {
  return quantize(x, {x.size()}, bit_width);
}

inline std::vector<double> dequantize(const FixedTensor& t) {
  std::vector<double> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    out[i] = static_cast<double>(t.signed_at(i)) * t.spec.scale;
  return out;
}

/// quantize then dequantize in one pass.
inline std::vector<double> fake_quantize(std::span<const double> x, int bit_width) {
  if (x.empty()) return {};
  QuantSpec spec = calibrate(x, bit_width);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = static_cast<double>(quantize_value(x[i], spec) - spec.zero_point) * spec.scale;
  return out;
}

// ---------------------------------------------------------------------------
// Bit slicing. Plane k holds bits [k*bits_per_plane, (k+1)*bits_per_plane) of
// every stored code, least significant plane first.

struct Plane {
  std::vector<std::int64_t> values;
  int shift = 0;  // radix shift applied when recomposing
};

inline std::vector<Plane> slice_codes(std::span<const std::int64_t> codes, int bit_width,
                                      int bits_per_plane) {
  if (bits_per_plane <= 0) throw Error("slice: bits_per_plane must be positive");
  const int n = (bit_width + bits_per_plane - 1) / bits_per_plane;
  const std::int64_t mask = (std::int64_t{1} << bits_per_plane) - 1;
  std::vector<Plane> planes(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    Plane& p = planes[static_cast<std::size_t>(k)];
    p.shift = k * bits_per_plane;
    p.values.resize(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) p.values[i] = (codes[i] >> p.shift) & mask;
  }
  return planes;
}

/// Splits weight codes into cell planes of `bits_per_cell` bits each.
inline std::vector<Plane> slice_weights(const FixedTensor& w, int bits_per_cell) {
  if (bits_per_cell <= 0) throw Error("slice_weights: bits_per_cell must be positive");
  return slice_codes(w.data, w.spec.bit_width, bits_per_cell);
}

/// One 1-bit plane per input bit, LSB first.
inline std::vector<Plane> bitserial_inputs(const FixedTensor& x) {
  return slice_codes(x.data, x.spec.bit_width, 1);
}

inline std::vector<std::int64_t> recompose(std::span<const Plane> planes) {
  if (planes.empty()) return {};
  std::vector<std::int64_t> out(planes.front().values.size(), 0);
  for (const Plane& p : planes)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += p.values[i] << p.shift;
  return out;
}

// ---------------------------------------------------------------------------

/// Accumulator wide enough for 32-bit by 32-bit products summed over any
/// practical row length.
__extension__ using wide_int = __int128;

/// y = W x over signed integers, W row-major rows x cols.
template <typename Acc = std::int64_t>
std::vector<Acc> integer_matvec(std::span<const std::int64_t> w, std::size_t rows, std::size_t cols,
                                std::span<const std::int64_t> x) {
  if (w.size() != rows * cols || x.size() != cols) throw Error("integer_matvec: shape mismatch");
  std::vector<Acc> y(rows, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    Acc acc = 0;
    for (std::size_t c = 0; c < cols; ++c) acc += static_cast<Acc>(w[r * cols + c]) * x[c];
    y[r] = acc;
  }
  return y;
}

// ---------------------------------------------------------------------------
// Binary container:
//   "HXFT" | u32 version=1 | u32 ndim | u64 dims[ndim] | u32 bit_width |
//   f64 scale | i64 zero_point | u64 count | payload
// Payload codes are little-endian unsigned integers of 1, 2, 4 or 8 bytes,
// the narrowest width that holds bit_width bits.

namespace detail {

template <typename T>
void put_le(std::ostream& os, T value) {
  using U = std::make_unsigned_t<T>;
  U u;
  std::memcpy(&u, &value, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) os.put(static_cast<char>((u >> (8 * i)) & 0xff));
}

inline void put_f64(std::ostream& os, double v) { put_le(os, std::bit_cast<std::int64_t>(v)); }

template <typename T>
T get_le(std::istream& is) {
  using U = std::make_unsigned_t<T>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    int c = is.get();
    if (c == std::char_traits<char>::eof()) throw Error("tensor container: truncated");
    u |= static_cast<U>(static_cast<unsigned char>(c)) << (8 * i);
  }
  T v;
  std::memcpy(&v, &u, sizeof(T));
  return v;
}

inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_le<std::int64_t>(is)); }

inline std::size_t payload_bytes(int bit_width) {
  if (bit_width <= 8) return 1;
  if (bit_width <= 16) return 2;
  if (bit_width <= 32) return 4;
  return 8;
}

}  // namespace detail

inline void write_tensor(std::ostream& os, const FixedTensor& t) {
  t.spec.validate();
  os.write("HXFT", 4);
  detail::put_le<std::uint32_t>(os, 1);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.shape.size()));
  for (std::size_t d : t.shape) detail::put_le<std::uint64_t>(os, d);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.spec.bit_width));
  detail::put_f64(os, t.spec.scale);
  detail::put_le<std::int64_t>(os, t.spec.zero_point);
  detail::put_le<std::uint64_t>(os, t.data.size());
  const std::size_t width = detail::payload_bytes(t.spec.bit_width);
  for (std::int64_t v : t.data) {
    auto u = static_cast<std::uint64_t>(v);
    for (std::size_t i = 0; i < width; ++i) os.put(static_cast<char>((u >> (8 * i)) & 0xff));
  }
  if (!os) throw Error("tensor container: write failed");
}

inline FixedTensor read_tensor(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "HXFT", 4) != 0)
    throw Error("tensor container: bad magic");
  if (detail::get_le<std::uint32_t>(is) != 1) throw Error("tensor container: unsupported version");
  FixedTensor t;
  auto ndim = detail::get_le<std::uint32_t>(is);
  if (ndim > 16) throw Error("tensor container: too many dimensions");
  for (std::uint32_t i = 0; i < ndim; ++i)
    t.shape.push_back(static_cast<std::size_t>(detail::get_le<std::uint64_t>(is)));
  t.spec.bit_width = static_cast<int>(detail::get_le<std::uint32_t>(is));
  t.spec.scale = detail::get_f64(is);
  t.spec.zero_point = detail::get_le<std::int64_t>(is);
  t.spec.validate();
  auto count = detail::get_le<std::uint64_t>(is);
  if (count != element_count(t.shape)) throw Error("tensor container: count does not match shape");
  const std::size_t width = detail::payload_bytes(t.spec.bit_width);
  t.data.resize(count);
  for (auto& v : t.data) {
    std::uint64_t u = 0;
    for (std::size_t i = 0; i < width; ++i) {
      int c = is.get();
      if (c == std::char_traits<char>::eof()) throw Error("tensor container: truncated payload");
      u |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
    }
    v = static_cast<std::int64_t>(u);
    if (v > t.spec.max_code()) throw Error("tensor container: code exceeds bit width");
  }
  return t;
}

}  // namespace helix::quant
