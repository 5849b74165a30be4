#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "segctl/error.hpp"

namespace segctl {

/// Grid coordinate, x fastest. Unused axes of 2D grids stay at 0.
struct GridIndex {
  int x = 0;
  int y = 0;
  int z = 0;

  friend bool operator==(const GridIndex&, const GridIndex&) = default;
};

/// Extents of a 2D or 3D regular grid. 2D grids keep nz == 1.
struct Dims {
  int nx = 1;
  int ny = 1;
  int nz = 1;
  int rank = 2;

  static Dims make2(int nx, int ny) { return Dims{nx, ny, 1, 2}; }
  static Dims make3(int nx, int ny, int nz) { return Dims{nx, ny, nz, 3}; }

  std::size_t size() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
           static_cast<std::size_t>(nz);
  }

  bool valid() const {
    return (rank == 2 || rank == 3) && nx >= 1 && ny >= 1 && nz >= 1 &&
           (rank == 3 || nz == 1);
  }

  bool contains(const GridIndex& p) const {
    return p.x >= 0 && p.y >= 0 && p.z >= 0 && p.x < nx && p.y < ny && p.z < nz;
  }

  std::size_t linear(const GridIndex& p) const {
    return (static_cast<std::size_t>(p.z) * static_cast<std::size_t>(ny) +
            static_cast<std::size_t>(p.y)) *
               static_cast<std::size_t>(nx) +
           static_cast<std::size_t>(p.x);
  }

  GridIndex index(std::size_t k) const {
    GridIndex p;
    p.x = static_cast<int>(k % static_cast<std::size_t>(nx));
    k /= static_cast<std::size_t>(nx);
    p.y = static_cast<int>(k % static_cast<std::size_t>(ny));
    p.z = static_cast<int>(k / static_cast<std::size_t>(ny));
    return p;
  }

  double diagonal() const {
    double d2 = static_cast<double>(nx) * nx + static_cast<double>(ny) * ny;
    if (rank == 3) d2 += static_cast<double>(nz) * nz;
    return std::sqrt(d2);
  }

  friend bool operator==(const Dims&, const Dims&) = default;
};

/// Calls fn(neighbor_linear_index) for each 4-neighbor (2D) or 6-neighbor (3D).
template <typename Fn>
inline void for_each_neighbor(const Dims& d, std::size_t k, Fn&& fn) {
  const GridIndex p = d.index(k);
  const std::size_t sx = 1;
  const std::size_t sy = static_cast<std::size_t>(d.nx);
  const std::size_t sz = sy * static_cast<std::size_t>(d.ny);
  if (p.x > 0) fn(k - sx);
  if (p.x + 1 < d.nx) fn(k + sx);
  if (p.y > 0) fn(k - sy);
  if (p.y + 1 < d.ny) fn(k + sy);
  if (d.rank == 3) {
    if (p.z > 0) fn(k - sz);
    if (p.z + 1 < d.nz) fn(k + sz);
  }
}

/// Dense single-valued grid field.
template <typename T>
class Field {
 public:
  Field() = default;
  explicit Field(Dims dims, T fill = T{}) : dims_(dims), values_(dims.size(), fill) {
    if (!dims.valid()) throw Error(errc::invalid_argument, "invalid grid extents");
  }

  const Dims& dims() const { return dims_; }
  std::size_t size() const { return values_.size(); }

  T& operator[](std::size_t k) { return values_[k]; }
  const T& operator[](std::size_t k) const { return values_[k]; }
  T& at(const GridIndex& p) { return values_[dims_.linear(p)]; }
  const T& at(const GridIndex& p) const { return values_[dims_.linear(p)]; }

  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }

  friend bool operator==(const Field&, const Field&) = default;

 private:
  Dims dims_;
  std::vector<T> values_;
};

using ScalarField = Field<double>;

/// One label in {1..N} per voxel; label N is background.
using LabelMap = Field<int>;

/// n-channel intensity grid, channel-interleaved storage.
class ImageVolume {
 public:
  ImageVolume() = default;
  ImageVolume(Dims dims, int channels, double fill = 0.0)
      : dims_(dims), channels_(channels), values_(dims.size() * channels, fill) {
    if (!dims.valid()) throw Error(errc::invalid_argument, "invalid grid extents");
    if (channels < 1) throw Error(errc::invalid_argument, "channel count must be >= 1");
  }

  const Dims& dims() const { return dims_; }
  int channels() const { return channels_; }
  std::size_t voxels() const { return dims_.size(); }

  double& operator()(std::size_t k, int c) { return values_[k * channels_ + c]; }
  double operator()(std::size_t k, int c) const { return values_[k * channels_ + c]; }
  double& at(const GridIndex& p, int c = 0) { return (*this)(dims_.linear(p), c); }
  double at(const GridIndex& p, int c = 0) const { return (*this)(dims_.linear(p), c); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const ImageVolume&, const ImageVolume&) = default;

 private:
  Dims dims_;
  int channels_ = 1;
  std::vector<double> values_;
};

inline void require_same_dims(const Dims& a, const Dims& b, const char* what) {
  if (!(a == b)) throw Error(errc::dimension_mismatch, what);
}

/// g(I) = 1 + sum over axes and channels of the squared central difference;
/// one-sided differences on the border.
inline ScalarField gradient_magnitude_sq(const ImageVolume& img) {
  const Dims& d = img.dims();
  ScalarField g(d, 1.0);
  const std::array<int, 3> extent{d.nx, d.ny, d.nz};
  const std::array<std::size_t, 3> stride{1, static_cast<std::size_t>(d.nx),
                                          static_cast<std::size_t>(d.nx) * d.ny};
  for (std::size_t k = 0; k < d.size(); ++k) {
    const GridIndex p = d.index(k);
    const std::array<int, 3> pos{p.x, p.y, p.z};
    double acc = 0.0;
    for (int axis = 0; axis < d.rank; ++axis) {
      if (extent[axis] < 2) continue;
      std::size_t lo = k, hi = k;
      double h = 1.0;
      if (pos[axis] > 0 && pos[axis] + 1 < extent[axis]) {
        lo = k - stride[axis];
        hi = k + stride[axis];
        h = 2.0;
      } else if (pos[axis] == 0) {
        hi = k + stride[axis];
      } else {
        lo = k - stride[axis];
      }
      for (int c = 0; c < img.channels(); ++c) {
        const double dv = (img(hi, c) - img(lo, c)) / h;
        acc += dv * dv;
      }
    }
    g[k] = 1.0 + acc;
  }
  return g;
}

/// Dice overlap of one label between two maps; 1 when the label is absent from both.
/// Median value (lower middle for even counts).
inline double median_of(const ScalarField& f) {
  if (f.size() == 0) throw Error(errc::invalid_argument, "median_of: empty field");
  std::vector<double> v(f.values().begin(), f.values().end());
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>((v.size() - 1) / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

inline double dice(const LabelMap& a, const LabelMap& b, int label) {
  require_same_dims(a.dims(), b.dims(), "dice: label maps differ in extents");
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const bool ia = a[k] == label;
    const bool ib = b[k] == label;
    na += ia;
    nb += ib;
    both += ia && ib;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

/// FNV-1a over the raw label words; used for snapshot and replay checks.
inline std::uint64_t checksum(const LabelMap& labels) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 1099511628211ULL;
    }
  };
  mix(static_cast<std::uint64_t>(labels.dims().nx));
  mix(static_cast<std::uint64_t>(labels.dims().ny));
  mix(static_cast<std::uint64_t>(labels.dims().nz));
  for (int v : labels.values()) mix(static_cast<std::uint64_t>(static_cast<std::uint32_t>(v)));
  return h;
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xfu];
    v >>= 4;
  }
  return s;
}

}  // namespace segctl
