#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "segctl/grid.hpp"

namespace segctl {

/// Test image with its ground-truth partition. Label n_labels is background.
struct SyntheticImage {
  std::string name;
  ImageVolume image;
  LabelMap reference;
  int n_labels = 2;
};

/// Gaussian samples from mt19937_64 via Box-Muller, so noise is identical on every standard library.
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed) : rng_(seed) {}

  double uniform() { return (static_cast<double>(rng_() >> 11) + 0.5) * 0x1.0p-53; }

  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double a = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

namespace detail {

inline bool in_ellipse(const GridIndex& p, double cx, double cy, double rx, double ry) {
  const double dx = (p.x - cx) / rx, dy = (p.y - cy) / ry;
  return dx * dx + dy * dy <= 1.0;
}

inline void add_noise(ImageVolume& img, double sigma, std::uint64_t seed) {
  if (sigma <= 0.0) return;
  NoiseSource noise(seed);
  for (double& v : img.values()) v += sigma * noise.gaussian();
}

inline SyntheticImage blank(const std::string& name, int n, int labels) {
  const Dims d = Dims::make2(n, n);
  return SyntheticImage{name, ImageVolume(d, 1, 0.0), LabelMap(d, labels), labels};
}

}  // namespace detail

/// Ellipse at 180 on a 60 background.
inline SyntheticImage two_region(double sigma, std::uint64_t seed, int n = 64) {
  auto s = detail::blank("two_region_s" + std::to_string(static_cast<int>(sigma)), n, 2);
  const Dims& d = s.reference.dims();
  for (std::size_t k = 0; k < d.size(); ++k) {
    const bool fg = detail::in_ellipse(d.index(k), 0.5 * n, 0.45 * n, 0.3 * n, 0.22 * n);
    s.reference[k] = fg ? 1 : 2;
    s.image(k, 0) = fg ? 180.0 : 60.0;
  }
  detail::add_noise(s.image, sigma, seed);
  return s;
}

/// Two disks of different brightness on a dark background; N = 3.
inline SyntheticImage two_disk(double sigma, std::uint64_t seed, int n = 64) {
  auto s = detail::blank("two_disk_s" + std::to_string(static_cast<int>(sigma)), n, 3);
  const Dims& d = s.reference.dims();
  for (std::size_t k = 0; k < d.size(); ++k) {
    const GridIndex p = d.index(k);
    int l = 3;
    double v = 40.0;
    if (detail::in_ellipse(p, 0.3 * n, 0.35 * n, 0.17 * n, 0.17 * n)) {
      l = 1;
      v = 200.0;
    } else if (detail::in_ellipse(p, 0.68 * n, 0.65 * n, 0.2 * n, 0.2 * n)) {
      l = 2;
      v = 120.0;
    }
    s.reference[k] = l;
    s.image(k, 0) = v;
  }
  detail::add_noise(s.image, sigma, seed);
  return s;
}

/// Object at 120 on a background split into 60 and 180 halves: the object's
/// intensity lies between the two background modes.
inline SyntheticImage split_background(double sigma, std::uint64_t seed, int n = 64) {
  auto s = detail::blank("split_background", n, 2);
  const Dims& d = s.reference.dims();
  for (std::size_t k = 0; k < d.size(); ++k) {
    const GridIndex p = d.index(k);
    const bool fg = detail::in_ellipse(p, 0.5 * n, 0.5 * n, 0.22 * n, 0.3 * n);
    s.reference[k] = fg ? 1 : 2;
    s.image(k, 0) = fg ? 120.0 : (p.x < n / 2 ? 60.0 : 180.0);
  }
  detail::add_noise(s.image, sigma, seed);
  return s;
}

/// Striped object (100/160) inside a striped background (70/190) of the
/// orthogonal orientation; the intensity ranges overlap.
inline SyntheticImage stripes(double sigma, std::uint64_t seed, int n = 64) {
  auto s = detail::blank("stripes", n, 2);
  const Dims& d = s.reference.dims();
  for (std::size_t k = 0; k < d.size(); ++k) {
    const GridIndex p = d.index(k);
    const bool fg = p.x >= n / 4 && p.x < 3 * n / 4 && p.y >= n / 4 && p.y < 3 * n / 4;
    s.reference[k] = fg ? 1 : 2;
    if (fg)
      s.image(k, 0) = (p.x / 4) % 2 ? 100.0 : 160.0;
    else
      s.image(k, 0) = (p.y / 4) % 2 ? 70.0 : 190.0;
  }
  detail::add_noise(s.image, sigma, seed);
  return s;
}

/// Thin bright bars, 3 voxels wide.
inline SyntheticImage thin_bars(double sigma, std::uint64_t seed, int n = 64) {
  auto s = detail::blank("thin_bars", n, 2);
  const Dims& d = s.reference.dims();
  for (std::size_t k = 0; k < d.size(); ++k) {
    const GridIndex p = d.index(k);
    const bool vertical = p.x >= n / 3 && p.x < n / 3 + 3 && p.y >= 6 && p.y < n - 6;
    const bool horizontal = p.y >= 2 * n / 3 && p.y < 2 * n / 3 + 3 && p.x >= 6 && p.x < n - 6;
    const bool fg = vertical || horizontal;
    s.reference[k] = fg ? 1 : 2;
    s.image(k, 0) = fg ? 200.0 : 50.0;
  }
  detail::add_noise(s.image, sigma, seed);
  return s;
}

/// Ring of width 3.
inline SyntheticImage thin_ring(double sigma, std::uint64_t seed, int n = 64) {
  auto s = detail::blank("thin_ring", n, 2);
  const Dims& d = s.reference.dims();
  for (std::size_t k = 0; k < d.size(); ++k) {
    const GridIndex p = d.index(k);
    const double r = std::hypot(p.x - 0.5 * n, p.y - 0.5 * n);
    const bool fg = r >= 0.3 * n && r < 0.3 * n + 3.0;
    s.reference[k] = fg ? 1 : 2;
    s.image(k, 0) = fg ? 190.0 : 70.0;
  }
  detail::add_noise(s.image, sigma, seed);
  return s;
}

/// Builds an image by name; names follow `<generator>` or `<generator>_s<sigma>`.
inline SyntheticImage make_synthetic(const std::string& name, std::uint64_t seed) {
  auto sigma_of = [&](const std::string& prefix) {
    return std::stod(name.substr(prefix.size()));
  };
  if (name.rfind("two_region_s", 0) == 0) return two_region(sigma_of("two_region_s"), seed);
  if (name.rfind("two_disk_s", 0) == 0) return two_disk(sigma_of("two_disk_s"), seed);
  if (name == "split_background") return split_background(5.0, seed);
  if (name == "stripes") return stripes(5.0, seed);
  if (name == "thin_bars") return thin_bars(10.0, seed);
  if (name == "thin_ring") return thin_ring(10.0, seed);
  throw Error(errc::invalid_argument, "unknown synthetic image '" + name + "'");
}

inline std::vector<std::string> synthetic_suite_names() {
  return {"two_region_s0", "two_region_s10", "two_region_s25", "split_background",
          "stripes",       "thin_bars",      "thin_ring",      "two_disk_s10"};
}

}  // namespace segctl
