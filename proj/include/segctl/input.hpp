#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include "segctl/distance.hpp"
#include "segctl/grid.hpp"
#include "segctl/levelset.hpp"

namespace segctl {

/// One user scribble: voxel set for a label, event time, and per-label sequence number.
struct Stroke {
  int label = 0;
  std::vector<GridIndex> voxels;
  double t = 0.0;
  int k = 0;

  friend bool operator==(const Stroke&, const Stroke&) = default;
};

struct InputField {
  int label = 0;
  ScalarField values;
};

/// U_i per label; index 0 holds label 1.
using AggregateInput = std::vector<ScalarField>;

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// `stroke <session-id> <label> <t> <k> <n> <x0> <y0> [<z0>] ...`
inline std::string format_stroke(const std::string& session_id, const Stroke& s, int rank) {
  std::string out = "stroke " + session_id + ' ' + std::to_string(s.label) + ' ' + format_double(s.t) + ' ' +
                    std::to_string(s.k) + ' ' + std::to_string(s.voxels.size());
  for (const auto& p : s.voxels) {
    out += ' ' + std::to_string(p.x) + ' ' + std::to_string(p.y);
    if (rank == 3) out += ' ' + std::to_string(p.z);
  }
  return out;
}

struct ParsedStroke {
  std::string session_id;
  Stroke stroke;
};

inline ParsedStroke parse_stroke(const std::string& line, int rank) {
  std::istringstream in(line);
  std::string tag, t_text;
  ParsedStroke out;
  long n = -1;
  if (!(in >> tag >> out.session_id >> out.stroke.label >> t_text >> out.stroke.k >> n) || tag != "stroke")
    throw Error(errc::malformed_log, "bad stroke line: " + line);
  const auto res = std::from_chars(t_text.data(), t_text.data() + t_text.size(), out.stroke.t);
  if (res.ec != std::errc() || res.ptr != t_text.data() + t_text.size() || !std::isfinite(out.stroke.t))
    throw Error(errc::malformed_log, "bad stroke time: " + t_text);
  if (n < 0) throw Error(errc::malformed_log, "negative stroke voxel count");
  out.stroke.voxels.resize(static_cast<std::size_t>(n));
  for (auto& p : out.stroke.voxels) {
    if (!(in >> p.x >> p.y)) throw Error(errc::malformed_log, "stroke coordinates truncated");
    if (rank == 3 && !(in >> p.z)) throw Error(errc::malformed_log, "stroke coordinates truncated");
  }
  std::string extra;
  if (in >> extra) throw Error(errc::malformed_log, "trailing tokens after stroke coordinates");
  return out;
}

/// Kernel support of one stroke: (d_max - d) / d_max clamped to [0, 1], d the
/// geodesic distance to the stroke.
inline ScalarField stroke_kernel_region(const Stroke& stroke, const ScalarField& gcost, double d_max) {
  if (stroke.voxels.empty()) throw Error(errc::empty_seed_set, "stroke_kernel_region: empty stroke");
  if (!(d_max > 0.0)) throw Error(errc::invalid_argument, "stroke_kernel_region: d_max must be positive");
  const auto src = linear_indices(gcost.dims(), stroke.voxels);
  const ScalarField d = geodesic_distance(gcost, src);
  ScalarField u(gcost.dims(), 0.0);
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = d[k] >= d_max ? 0.0 : (d_max - d[k]) / d_max;
  return u;
}

struct DiffusionParams {
  double dt = 0.25;
  double u_cap = 4.0;
  HeavisideParams gate;
};

/// Explicit steps of du/dt = u + div(H((u/g_M)^2 - 1) grad u). Face
/// conductance is the mean of the two voxel gates; where g_M is 0 the gate is
/// open. Values are clamped to [0, u_cap] after every step.
inline InputField diffuse_input(const InputField& u, const ScalarField& g_M, int steps, const DiffusionParams& p) {
  require_same_dims(u.values.dims(), g_M.dims(), "diffuse_input: extents differ");
  if (p.dt > 0.25 || !(p.dt > 0.0)) throw Error(errc::invalid_argument, "diffuse_input: dt must lie in (0, 0.25]");
  const Dims& d = g_M.dims();
  InputField cur = u;
  for (double v : cur.values.values())
    if (!std::isfinite(v)) throw Error(errc::non_finite, "diffuse_input: non-finite input");
  ScalarField gate(d, 0.0);
  for (int s = 0; s < steps; ++s) {
    for (std::size_t k = 0; k < d.size(); ++k) {
      if (g_M[k] == 0.0) {
        gate[k] = 1.0;
      } else {
        const double r = cur.values[k] / g_M[k];
        gate[k] = heaviside(r * r - 1.0, p.gate);
      }
    }
    ScalarField next(d, 0.0);
    for (std::size_t k = 0; k < d.size(); ++k) {
      double flux = 0.0;
      const double uk = cur.values[k];
      for_each_neighbor(d, k, [&](std::size_t n) {
        const double c = 0.5 * (gate[k] + gate[n]);
        if (c > 0.0) flux += c * (cur.values[n] - uk);
      });
      next[k] = std::clamp(uk + p.dt * (uk + flux), 0.0, p.u_cap);
    }
    cur.values = std::move(next);
  }
  return cur;
}

/// U_i = u_i - sum_{j != i} u_j.
inline AggregateInput accumulate_region(std::span<const ScalarField> u) {
  AggregateInput out;
  if (u.empty()) return out;
  const Dims& d = u[0].dims();
  for (const auto& f : u) require_same_dims(d, f.dims(), "accumulate_region: extents differ");
  for (std::size_t i = 0; i < u.size(); ++i) {
    ScalarField ui(d, 0.0);
    for (std::size_t k = 0; k < d.size(); ++k) {
      double others = 0.0;
      for (std::size_t j = 0; j < u.size(); ++j)
        if (j != i) others += u[j][k];
      ui[k] = u[i][k] - others;
    }
    out.push_back(std::move(ui));
  }
  return out;
}

/// Geodesic distance from the stroke: 0 on the stroke, +inf where unreachable.
inline ScalarField stroke_distance_input(const Stroke& stroke, const ScalarField& gcost) {
  if (stroke.voxels.empty()) throw Error(errc::empty_seed_set, "stroke_distance_input: empty stroke");
  const auto src = linear_indices(gcost.dims(), stroke.voxels);
  return geodesic_distance(gcost, src);
}

/// U_i = -(min own distance) + (min distance of any other label).
/// `nearest[j]` is label j+1's pointwise minimum over its input distances.
inline ScalarField accumulate_distance(std::span<const ScalarField> nearest, int label) {
  const Dims& d = nearest[0].dims();
  ScalarField out(d, 0.0);
  for (std::size_t k = 0; k < d.size(); ++k) {
    const double own = nearest[static_cast<std::size_t>(label - 1)][k];
    double others = kUnreached;
    for (std::size_t j = 0; j < nearest.size(); ++j)
      if (static_cast<int>(j) + 1 != label) others = std::min(others, nearest[j][k]);
    out[k] = (std::isinf(own) && std::isinf(others)) ? 0.0 : others - own;
  }
  return out;
}

}  // namespace segctl
