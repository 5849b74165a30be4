#pragma once

#include <functional>
#include <limits>
#include <queue>
#include <span>
#include <utility>
#include <vector>

#include "segctl/grid.hpp"

namespace segctl {

inline constexpr double kUnreached = std::numeric_limits<double>::infinity();

struct SeedSet {
  int label = 0;
  std::vector<GridIndex> voxels;
};

/// Shortest-path distance on the 4/6-neighbour grid graph from any source
/// voxel. Edge weight is the mean of the endpoint costs. The queue orders by
/// (distance, linear index) so equal-distance pops are deterministic.
inline ScalarField geodesic_distance(const ScalarField& gcost, std::span<const std::size_t> sources) {
  const Dims& d = gcost.dims();
  ScalarField dist(d, kUnreached);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> queue;
  for (std::size_t s : sources) {
    if (dist[s] != 0.0) {
      dist[s] = 0.0;
      queue.emplace(0.0, s);
    }
  }
  std::vector<char> done(d.size(), 0);
  while (!queue.empty()) {
    const auto [dk, k] = queue.top();
    queue.pop();
    if (done[k]) continue;
    done[k] = 1;
    for_each_neighbor(d, k, [&](std::size_t n) {
      if (done[n]) return;
      const double cand = dk + 0.5 * (gcost[k] + gcost[n]);
      if (cand < dist[n]) {
        dist[n] = cand;
        queue.emplace(cand, n);
      }
    });
  }
  return dist;
}

inline std::vector<std::size_t> linear_indices(const Dims& d, std::span<const GridIndex> voxels) {
  std::vector<std::size_t> out;
  out.reserve(voxels.size());
  for (const auto& p : voxels) {
    if (!d.contains(p)) throw Error(errc::out_of_bounds, "voxel outside the grid");
    out.push_back(d.linear(p));
  }
  return out;
}

/// Geodesic distance from a seed set; gcost must be >= 1 (the 1 + |grad I|^2 form).
inline ScalarField seed_distance(const ScalarField& gcost, const SeedSet& seeds) {
  if (seeds.voxels.empty()) throw Error(errc::empty_seed_set, "seed_distance: empty seed set");
  const auto src = linear_indices(gcost.dims(), seeds.voxels);
  return geodesic_distance(gcost, src);
}

/// Argmin over label distances; dists[i] belongs to label i+1. Ties go to the smaller label.
inline LabelMap assign_labels(std::span<const ScalarField> dists) {
  if (dists.empty()) throw Error(errc::invalid_argument, "assign_labels: no distance fields");
  const Dims& d = dists[0].dims();
  LabelMap out(d, 0);
  for (std::size_t k = 0; k < d.size(); ++k) {
    double best = kUnreached;
    int arg = 0;
    for (std::size_t i = 0; i < dists.size(); ++i) {
      if (dists[i][k] < best) {
        best = dists[i][k];
        arg = static_cast<int>(i) + 1;
      }
    }
    if (arg == 0) throw Error(errc::unreached_voxel, "assign_labels: voxel unreached by every label");
    out[k] = arg;
  }
  return out;
}

/// Distance-clustering speed for label `label` at voxel k: pushed out where it
/// is not the closest label, pulled in where it is and no competitor is.
inline double natural_speed_dist(int label, std::size_t k, std::span<const ScalarField> dists,
                                 const ScalarField& g_gamma) {
  const double own = dists[static_cast<std::size_t>(label - 1)][k];
  double others = kUnreached;
  for (std::size_t j = 0; j < dists.size(); ++j)
    if (static_cast<int>(j) + 1 != label) others = std::min(others, dists[j][k]);
  const double lowest = std::min(own, others);
  const double g_own = own != lowest ? g_gamma[k] : 0.0;
  const double g_comp = others != lowest ? g_gamma[k] : 0.0;
  return -(g_own - g_comp);
}

}  // namespace segctl
