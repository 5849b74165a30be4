#pragma once

#include <algorithm>
#include <limits>
#include <span>
#include <vector>

#include "segctl/grid.hpp"
#include "segctl/levelset.hpp"

namespace segctl {

/// First-order statistics of every label region. Index 0 holds label 1.
struct RegionStats {
  int channels = 1;
  std::vector<std::vector<double>> sum;   // [label-1][channel]
  std::vector<std::size_t> count;         // [label-1]
  std::vector<std::vector<double>> mean;  // [label-1][channel]

  int labels() const { return static_cast<int>(count.size()); }
  const std::vector<double>& mean_of(int label) const { return mean[static_cast<std::size_t>(label - 1)]; }
};

/// Exact per-label means; an empty label takes the global image mean.
inline RegionStats update_stats(const ImageVolume& img, const LabelMap& labels, int n_labels) {
  require_same_dims(img.dims(), labels.dims(), "update_stats: image and labels differ in extents");
  const int nc = img.channels();
  RegionStats s;
  s.channels = nc;
  s.sum.assign(static_cast<std::size_t>(n_labels), std::vector<double>(static_cast<std::size_t>(nc), 0.0));
  s.count.assign(static_cast<std::size_t>(n_labels), 0);
  std::vector<double> global(static_cast<std::size_t>(nc), 0.0);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const int l = labels[k];
    if (l < 1 || l > n_labels) throw Error(errc::unknown_label, "update_stats: label out of range");
    auto& acc = s.sum[static_cast<std::size_t>(l - 1)];
    for (int c = 0; c < nc; ++c) {
      acc[static_cast<std::size_t>(c)] += img(k, c);
      global[static_cast<std::size_t>(c)] += img(k, c);
    }
    ++s.count[static_cast<std::size_t>(l - 1)];
  }
  for (auto& g : global) g /= static_cast<double>(labels.size());
  s.mean.resize(static_cast<std::size_t>(n_labels));
  for (std::size_t i = 0; i < s.mean.size(); ++i) {
    if (s.count[i] == 0) {
      s.mean[i] = global;
      continue;
    }
    s.mean[i].resize(static_cast<std::size_t>(nc));
    for (int c = 0; c < nc; ++c)
      s.mean[i][static_cast<std::size_t>(c)] = s.sum[i][static_cast<std::size_t>(c)] / static_cast<double>(s.count[i]);
  }
  return s;
}

inline RegionStats update_stats(const ImageVolume& img, const LabelMap& labels) {
  int n = 0;
  for (int l : labels.values()) n = std::max(n, l);
  return update_stats(img, labels, n);
}

/// Squared distance between the voxel's intensity and a label mean, summed over channels.
inline double residual_sq(const ImageVolume& img, const RegionStats& stats, int label, std::size_t k) {
  const auto& mu = stats.mean_of(label);
  double r = 0.0;
  for (int c = 0; c < img.channels(); ++c) {
    const double e = img(k, c) - mu[static_cast<std::size_t>(c)];
    r += e * e;
  }
  return r;
}

/// (I(x) - mu_i)^2 * delta(phi_i(x)).
inline double g_region(const ImageVolume& img, const RegionStats& stats, const LevelSetField& field,
                       std::size_t k) {
  const double d = delta(field[k], field.params());
  if (d == 0.0) return 0.0;
  return residual_sq(img, stats, field.label(), k) * d;
}

/// Cheapest competing label at x. Only labels whose band reaches x (delta > 0)
/// take part; with no such competitor the term is 0.
inline double g_competitor(const ImageVolume& img, const RegionStats& stats,
                           std::span<const LevelSetField> fields, int label, std::size_t k) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& f : fields) {
    if (f.label() == label) continue;
    if (delta(f[k], f.params()) == 0.0) continue;
    best = std::min(best, g_region(img, stats, f, k));
  }
  return std::isinf(best) ? 0.0 : best;
}

/// Intrinsic speed G_i = -(g_i - g_i^c).
inline double compose_G(double g_own, double g_comp) { return -(g_own - g_comp); }

inline double compose_G(const ImageVolume& img, const RegionStats& stats, std::span<const LevelSetField> fields,
                        int label, std::size_t k) {
  const LevelSetField& own = fields[static_cast<std::size_t>(label - 1)];
  return compose_G(g_region(img, stats, own, k), g_competitor(img, stats, fields, label, k));
}

/// Pointwise bound on |G_i| over all labels and times:
/// delta_max * sum_c max((I-min_c)^2, (I-max_c)^2). Region means never leave
/// [min_c, max_c], so the bound holds for any reachable partition.
inline ScalarField g_M_bound(const ImageVolume& img, const HeavisideParams& params) {
  const int nc = img.channels();
  std::vector<double> lo(static_cast<std::size_t>(nc), std::numeric_limits<double>::infinity());
  std::vector<double> hi(static_cast<std::size_t>(nc), -std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < img.voxels(); ++k)
    for (int c = 0; c < nc; ++c) {
      lo[static_cast<std::size_t>(c)] = std::min(lo[static_cast<std::size_t>(c)], img(k, c));
      hi[static_cast<std::size_t>(c)] = std::max(hi[static_cast<std::size_t>(c)], img(k, c));
    }
  ScalarField out(img.dims(), 0.0);
  for (std::size_t k = 0; k < img.voxels(); ++k) {
    double b = 0.0;
    for (int c = 0; c < nc; ++c) {
      const double a = img(k, c) - lo[static_cast<std::size_t>(c)];
      const double z = img(k, c) - hi[static_cast<std::size_t>(c)];
      b += std::max(a * a, z * z);
    }
    out[k] = params.delta_max() * b;
  }
  return out;
}

}  // namespace segctl
