#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <vector>

#include "segctl/grid.hpp"
#include "segctl/input.hpp"
#include "segctl/session.hpp"

namespace segctl {

/// Per-label voxel sets, index label-1.
///   correct:       labelled i and truly i
///   misclassified: labelled i but truly something else
///   unreached:     truly i but labelled something else
struct ErrorDecomposition {
  std::vector<std::vector<std::size_t>> correct, misclassified, unreached;
};

inline ErrorDecomposition decompose_errors(const LabelMap& current, const LabelMap& reference, int n_labels) {
  require_same_dims(current.dims(), reference.dims(), "decompose_errors: extents differ");
  ErrorDecomposition e;
  const auto n = static_cast<std::size_t>(n_labels);
  e.correct.assign(n, {});
  e.misclassified.assign(n, {});
  e.unreached.assign(n, {});
  for (std::size_t k = 0; k < current.size(); ++k) {
    const int c = current[k], r = reference[k];
    if (c < 1 || c > n_labels || r < 1 || r > n_labels) throw Error(errc::unknown_label, "decompose_errors: label out of range");
    if (c == r) {
      e.correct[static_cast<std::size_t>(c - 1)].push_back(k);
    } else {
      e.misclassified[static_cast<std::size_t>(c - 1)].push_back(k);
      e.unreached[static_cast<std::size_t>(r - 1)].push_back(k);
    }
  }
  return e;
}

/// A connected set of wrongly labelled voxels that share one true label.
struct ErrorComponent {
  int label = 0;  // true label
  std::size_t anchor = 0;  // smallest linear index
  std::vector<std::size_t> voxels;
};

inline std::vector<ErrorComponent> error_components(const LabelMap& current, const LabelMap& reference) {
  require_same_dims(current.dims(), reference.dims(), "error_components: extents differ");
  const Dims& d = current.dims();
  std::vector<char> seen(d.size(), 0);
  std::vector<ErrorComponent> out;
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (seen[k] || current[k] == reference[k]) continue;
    ErrorComponent c;
    c.label = reference[k];
    c.anchor = k;
    std::deque<std::size_t> queue{k};
    seen[k] = 1;
    while (!queue.empty()) {
      const std::size_t v = queue.front();
      queue.pop_front();
      c.voxels.push_back(v);
      for_each_neighbor(d, v, [&](std::size_t n) {
        if (seen[n] || current[n] == reference[n] || reference[n] != c.label) return;
        seen[n] = 1;
        queue.push_back(n);
      });
    }
    std::sort(c.voxels.begin(), c.voxels.end());
    out.push_back(std::move(c));
  }
  return out;
}

/// Voxel of `members` farthest (in BFS layers) from any non-member or the grid
/// edge; ties go to the smaller linear index.
inline std::size_t most_interior(const Dims& d, const std::vector<std::size_t>& members) {
  std::vector<int> depth(d.size(), -1);
  std::vector<char> in(d.size(), 0);
  for (std::size_t k : members) in[k] = 1;
  std::deque<std::size_t> queue;
  const std::size_t full = d.rank == 3 ? 6 : 4;
  for (std::size_t k : members) {
    std::size_t inside = 0;
    for_each_neighbor(d, k, [&](std::size_t n) { inside += in[n]; });
    if (inside < full) {
      depth[k] = 1;
      queue.push_back(k);
    }
  }
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop_front();
    for_each_neighbor(d, v, [&](std::size_t n) {
      if (in[n] && depth[n] < 0) {
        depth[n] = depth[v] + 1;
        queue.push_back(n);
      }
    });
  }
  std::size_t best = members.front();
  for (std::size_t k : members)
    if (depth[k] > depth[best] || (depth[k] == depth[best] && k < best)) best = k;
  return best;
}

/// Ball of Euclidean radius `radius` around `centre`, clipped to `members`.
/// The synthetic user clips to the true region of the stroke label.
inline std::vector<GridIndex> brush_stroke(const Dims& d, const std::vector<std::size_t>& members, std::size_t centre,
                                           int radius) {
  const GridIndex c = d.index(centre);
  std::vector<GridIndex> out;
  for (std::size_t k : members) {
    const GridIndex p = d.index(k);
    const double r2 = double(p.x - c.x) * (p.x - c.x) + double(p.y - c.y) * (p.y - c.y) +
                      double(p.z - c.z) * (p.z - c.z);
    if (r2 <= double(radius) * radius) out.push_back(p);
  }
  return out;
}

struct UserPolicy {
  double stop_fraction = 0.005;
  double stop_dice = 0.95;
};

/// Next corrective stroke, or none once the remaining error is acceptable.
inline std::optional<Stroke> synthetic_user_step(const LabelMap& current, const LabelMap& reference, int n_labels,
                                                 int brush, const UserPolicy& policy = {}) {
  require_same_dims(current.dims(), reference.dims(), "synthetic_user_step: extents differ");
  if (min_foreground_dice(current, reference, n_labels) >= policy.stop_dice) return std::nullopt;
  const auto comps = error_components(current, reference);
  if (comps.empty()) return std::nullopt;
  const ErrorComponent* best = &comps.front();
  for (const auto& c : comps)
    if (c.voxels.size() > best->voxels.size() || (c.voxels.size() == best->voxels.size() && c.anchor < best->anchor))
      best = &c;
  if (static_cast<double>(best->voxels.size()) < policy.stop_fraction * static_cast<double>(current.size()))
    return std::nullopt;
  const Dims& d = current.dims();
  Stroke s;
  s.label = best->label;
  std::vector<std::size_t> truth;
  for (std::size_t k = 0; k < reference.size(); ++k)
    if (reference[k] == best->label) truth.push_back(k);
  s.voxels = brush_stroke(d, truth, most_interior(d, best->voxels), brush);
  return s;
}

/// Per-label seed squares of half-width `half` around the most interior voxel
/// of each label's reference region, clipped to that region.
inline std::vector<SeedSet> interior_seeds(const LabelMap& reference, int n_labels, int half = 2) {
  const Dims& d = reference.dims();
  std::vector<SeedSet> out;
  for (int l = 1; l <= n_labels; ++l) {
    std::vector<std::size_t> members;
    for (std::size_t k = 0; k < d.size(); ++k)
      if (reference[k] == l) members.push_back(k);
    if (members.empty()) continue;
    const GridIndex c = d.index(most_interior(d, members));
    SeedSet s{l, {}};
    for (std::size_t k : members) {
      const GridIndex p = d.index(k);
      if (std::abs(p.x - c.x) <= half && std::abs(p.y - c.y) <= half && std::abs(p.z - c.z) <= half)
        s.voxels.push_back(p);
    }
    out.push_back(std::move(s));
  }
  return out;
}

struct SyntheticRun {
  bool success = false;       // user stopped before the budget ran out
  bool budget_breached = false;
  long impulses = 0;
  long ticks = 0;
  long actuated = 0;
  double final_dice = 0.0;
  long last_stroke_tick = -1;
  double v_after_last_stroke = std::numeric_limits<double>::quiet_NaN();  // V right after that impulse
};

/// Closed loop with the synthetic user: review every R ticks, stroke the
/// largest error, stop when the user is satisfied or the budget is spent.
/// `tail_ticks` more ticks run after the user stops.
inline SyntheticRun run_synthetic_user(Session& s, const LabelMap& reference, int budget, long max_ticks,
                                       const UserPolicy& policy = {},
                                       const std::vector<std::pair<long, Stroke>>& injected = {},
                                       long tail_ticks = 0) {
  SyntheticRun r;
  const int R = s.config().review_interval;
  std::size_t next_injection = 0;
  while (s.loop().tick < max_ticks) {
    for (int i = 0; i < R && s.loop().tick < max_ticks; ++i) {
      while (next_injection < injected.size() && injected[next_injection].first <= s.loop().tick) {
        s.ingest_stroke(injected[next_injection].second);
        r.last_stroke_tick = s.loop().tick;
        r.v_after_last_stroke = s.loop().sample().V;
        ++next_injection;
      }
      s.tick();
    }
    if (next_injection < injected.size()) continue;
    const auto stroke = synthetic_user_step(s.labels(), reference, s.config().n_labels, s.config().brush, policy);
    if (!stroke) {
      r.success = true;
      break;
    }
    if (r.impulses >= budget) {
      r.budget_breached = true;
      break;
    }
    s.ingest_stroke(*stroke);
    ++r.impulses;
    r.last_stroke_tick = s.loop().tick;
    r.v_after_last_stroke = s.loop().sample().V;
  }
  for (long i = 0; i < tail_ticks; ++i) s.tick();
  r.ticks = s.loop().tick;
  r.actuated = s.metrics().actuated;
  r.final_dice = min_foreground_dice(s.labels(), reference, s.config().n_labels);
  return r;
}

}  // namespace segctl
