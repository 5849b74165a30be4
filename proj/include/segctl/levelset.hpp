#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "segctl/grid.hpp"

namespace segctl {

struct HeavisideParams {
  double epsilon = 1.5;

  double delta_max() const { return 1.0 / epsilon; }
  double clamp_value() const { return epsilon + 1.0; }

  friend bool operator==(const HeavisideParams&, const HeavisideParams&) = default;
};

/// Regularized step of half-width epsilon.
inline double heaviside(double phi, const HeavisideParams& p) {
  if (phi >= p.epsilon) return 1.0;
  if (phi <= -p.epsilon) return 0.0;
  const double s = phi / p.epsilon;
  return 0.5 * (1.0 + s + std::sin(std::numbers::pi * s) / std::numbers::pi);
}

/// Derivative of heaviside(); zero outside [-epsilon, epsilon].
inline double delta(double phi, const HeavisideParams& p) {
  if (std::abs(phi) > p.epsilon) return 0.0;
  return (1.0 + std::cos(std::numbers::pi * phi / p.epsilon)) / (2.0 * p.epsilon);
}

/// How voxels outside the image are treated when building the initial signed field.
enum class BorderMode {
  outside,    // the image exterior counts as not belonging to the label
  replicate,  // the image exterior continues whatever lies at the border
};

/// Per-label signed field, positive inside. Values are kept in
/// [-(epsilon+1), epsilon+1]; voxels at the clamp value form the exterior of
/// the narrow band and only move when band maintenance pulls them toward a
/// nearby zero crossing.
class LevelSetField {
 public:
  LevelSetField() = default;
  LevelSetField(Dims dims, int label, HeavisideParams params)
      : values_(dims, -params.clamp_value()), label_(label), params_(params) {}

  const Dims& dims() const { return values_.dims(); }
  int label() const { return label_; }
  const HeavisideParams& params() const { return params_; }

  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }
  std::size_t size() const { return values_.size(); }
  const ScalarField& values() const { return values_; }
  ScalarField& values() { return values_; }

  bool active(std::size_t k) const { return std::abs(values_[k]) < params_.epsilon; }
  bool in_band(std::size_t k) const { return std::abs(values_[k]) < params_.clamp_value(); }

  std::vector<std::size_t> band() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < size(); ++k)
      if (in_band(k)) out.push_back(k);
    return out;
  }

  friend bool operator==(const LevelSetField&, const LevelSetField&) = default;

 private:
  ScalarField values_;
  int label_ = 0;
  HeavisideParams params_;
};

inline bool inside(double phi) { return phi >= 0.0; }

/// Signed distance (voxel centres, boundary halfway between voxels) to the
/// region of `label`, clamped to +-(epsilon+1).
inline LevelSetField init_from_labels(const LabelMap& labels, int label, const HeavisideParams& params,
                                      BorderMode border = BorderMode::outside) {
  const Dims& d = labels.dims();
  LevelSetField field(d, label, params);
  const double cap = params.clamp_value();
  const int r = static_cast<int>(std::ceil(cap + 0.5));
  const int rz = d.rank == 3 ? r : 0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    const GridIndex p = d.index(k);
    const bool in = labels[k] == label;
    double best = cap + 0.5;
    for (int dz = -rz; dz <= rz; ++dz)
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const double dist = std::sqrt(static_cast<double>(dx * dx + dy * dy + dz * dz));
          if (dist >= best) continue;
          GridIndex q{p.x + dx, p.y + dy, p.z + dz};
          bool q_in;
          if (d.contains(q)) {
            q_in = labels.at(q) == label;
          } else if (border == BorderMode::outside) {
            q_in = false;
          } else {
            q.x = std::clamp(q.x, 0, d.nx - 1);
            q.y = std::clamp(q.y, 0, d.ny - 1);
            q.z = std::clamp(q.z, 0, d.nz - 1);
            q_in = labels.at(q) == label;
          }
          if (q_in != in) best = dist;
        }
    const double mag = std::min(cap, best - 0.5);
    field[k] = in ? mag : -mag;
  }
  return field;
}

/// A frozen voxel (|phi| >= epsilon) next to a zero crossing is brought to its
/// distance from the crossing, at least 0.5, so a moving front keeps an active
/// voxel ahead of it. A voxel never moves away from zero here and never changes
/// sign.
inline void maintain_band(LevelSetField& field) {
  const Dims& d = field.dims();
  const double eps = field.params().epsilon;
  const ScalarField before = field.values();
  for (std::size_t k = 0; k < d.size(); ++k) {
    const double v = before[k];
    if (std::abs(v) < eps) continue;
    const double s = inside(v) ? 1.0 : -1.0;
    double nearest = std::abs(v);
    for_each_neighbor(d, k, [&](std::size_t n) {
      if (inside(before[n]) != inside(v) || before[n] == 0.0) nearest = std::min(nearest, s * before[n] + 1.0);
    });
    const double mag = std::min(std::abs(v), std::max(nearest, 0.5));
    field[k] = s * mag;
  }
}

namespace detail {

template <typename StepAt>
inline LevelSetField evolve(const LevelSetField& field, const ScalarField& speed, StepAt step_at) {
  require_same_dims(field.dims(), speed.dims(), "evolve_step: speed extents differ");
  const HeavisideParams& p = field.params();
  LevelSetField next = field;
  for (std::size_t k = 0; k < field.size(); ++k) {
    const double phi = field[k];
    if (!field.active(k)) continue;
    const double v = speed[k];
    if (!std::isfinite(v)) throw Error(errc::non_finite, "evolve_step: non-finite speed on band");
    const double dt = step_at(k);
    if (dt * std::abs(v) * p.delta_max() > 0.5 * (1.0 + 1e-12))
      throw Error(errc::invalid_argument, "evolve_step: time step exceeds the stability cap");
    next[k] = std::clamp(phi + dt * v * delta(phi, p), -p.clamp_value(), p.clamp_value());
  }
  maintain_band(next);
  return next;
}

}  // namespace detail

/// Explicit Euler step phi <- phi + dt * speed * delta(phi) on the band,
/// followed by band maintenance. dt must satisfy dt*|speed|/epsilon <= 0.5.
inline LevelSetField evolve_step(const LevelSetField& field, const ScalarField& speed, double dt) {
  if (!(dt > 0.0)) throw Error(errc::invalid_argument, "evolve_step: dt must be positive");
  return detail::evolve(field, speed, [dt](std::size_t) { return dt; });
}

/// Same as above with a per-voxel time step (local stepping); each voxel's
/// step must satisfy the cap on its own speed.
inline LevelSetField evolve_step(const LevelSetField& field, const ScalarField& speed, const ScalarField& dt) {
  require_same_dims(field.dims(), dt.dims(), "evolve_step: time-step extents differ");
  return detail::evolve(field, speed, [&dt](std::size_t k) { return dt[k]; });
}

/// Largest uniform dt satisfying the explicit stability cap on the band of `field`.
inline double stable_dt(const LevelSetField& field, const ScalarField& speed, double dt_max) {
  double vmax = 0.0;
  for (std::size_t k = 0; k < field.size(); ++k)
    if (field.active(k)) vmax = std::max(vmax, std::abs(speed[k]));
  if (vmax == 0.0) return dt_max;
  return std::min(dt_max, 0.5 / (vmax * field.params().delta_max()));
}

/// True when every adjacent opposite-sign pair lies inside the band.
inline bool band_covers_crossings(const LevelSetField& field) {
  const Dims& d = field.dims();
  for (std::size_t k = 0; k < d.size(); ++k) {
    bool ok = true;
    for_each_neighbor(d, k, [&](std::size_t n) {
      if (inside(field[k]) != inside(field[n]) && !(field.in_band(k) && field.in_band(n))) ok = false;
    });
    if (!ok) return false;
  }
  return true;
}

}  // namespace segctl
