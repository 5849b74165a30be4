#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "segctl/grid.hpp"
#include "segctl/input.hpp"
#include "segctl/levelset.hpp"

namespace segctl {

/// How the gain alpha^2 is scheduled. `linear` holds it at g_M + margin;
/// `saturated` divides that by |xi_hat| so the actuation magnitude stays at
/// g_M + margin however small the error is.
enum class GainLaw { linear, saturated };

inline const char* to_string(GainLaw g) { return g == GainLaw::linear ? "linear" : "saturated"; }

struct ControlParams {
  double alpha_margin = 1.0;
  GainLaw gain = GainLaw::saturated;
  double nu = 0.0;
  double rho = 1.5;
  HeavisideParams heaviside;
};

/// Per-label estimate of the intended segmentation; same band layout as the state.
using EstimatorField = LevelSetField;

struct LyapunovSample {
  double t = 0.0;
  double V = 0.0;
  double E = 0.0;
  double Vhat = 0.0;
};

/// xi = H(phi) - H(phi_target).
inline double label_error(double phi, double phi_target, const HeavisideParams& p) {
  return heaviside(phi, p) - heaviside(phi_target, p);
}

/// alpha^2 = g_M + margin, which keeps the gain above the intrinsic-speed bound.
inline double alpha_sq(double g_M, const ControlParams& p) { return g_M + p.alpha_margin; }

/// Scheduled gain at one voxel; never below g_M + margin.
inline double scheduled_alpha_sq(double g_M, double xi_hat, const ControlParams& p) {
  const double base = alpha_sq(g_M, p);
  if (p.gain == GainLaw::linear || xi_hat == 0.0) return base;
  return base / std::abs(xi_hat);
}

/// F = -alpha^2 * xi: over-segmented voxels (xi > 0) are pushed out, missing ones pulled in.
inline double control_signal(double xi_hat, double alpha_sq) { return -alpha_sq * xi_hat; }

/// e_U = H(phi_hat) - H(U).
inline double input_error(double phi_hat, double U, const HeavisideParams& p) {
  return heaviside(phi_hat, p) - heaviside(U, p);
}

/// Estimator speed xi_hat - |U| e_U.
inline double estimator_speed(double xi_hat, double U, double phi_hat, const HeavisideParams& p) {
  return xi_hat - std::abs(U) * input_error(phi_hat, U, p);
}

/// Explicit Euler of d(phi_hat)/dt = [xi_hat - |U| e_U] delta(phi_hat) on the estimator band.
inline EstimatorField estimator_step(const EstimatorField& est, const ScalarField& xi_hat, const ScalarField& U,
                                     double dt) {
  const HeavisideParams& p = est.params();
  ScalarField speed(est.dims(), 0.0);
  for (std::size_t k = 0; k < est.size(); ++k) {
    if (!est.active(k)) continue;
    if (!std::isfinite(U[k])) throw Error(errc::non_finite, "estimator_step: non-finite input on band");
    speed[k] = estimator_speed(xi_hat[k], U[k], est[k], p);
  }
  return evolve_step(est, speed, dt);
}

/// Half the summed squared values: the common shape of V, E and V_hat.
inline double half_sum_sq(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return 0.5 * s;
}

/// E = 1/2 sum_i sum_x |U_i| e_{U_i}^2.
inline double input_energy(std::span<const EstimatorField> est, std::span<const ScalarField> U) {
  double s = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const HeavisideParams& p = est[i].params();
    for (std::size_t k = 0; k < est[i].size(); ++k) {
      if (U[i][k] == 0.0) continue;
      const double e = input_error(est[i][k], U[i][k], p);
      s += std::abs(U[i][k]) * e * e;
    }
  }
  return 0.5 * s;
}

/// 1/2 sum_i sum_x (H(a_i) - H(b_i))^2; V_hat with (state, estimator), V with (state, target).
inline double labeling_energy(std::span<const LevelSetField> a, std::span<const LevelSetField> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const HeavisideParams& p = a[i].params();
    for (std::size_t k = 0; k < a[i].size(); ++k) {
      const double xi = label_error(a[i][k], b[i][k], p);
      s += xi * xi;
    }
  }
  return 0.5 * s;
}

/// rho * sum_x delta^2(phi_i) xi_i^2 <= sum_x xi_i^2 for every label i.
inline bool rate_condition_check(std::span<const LevelSetField> state, std::span<const LevelSetField> target,
                                 double rho) {
  for (std::size_t i = 0; i < state.size(); ++i) {
    const HeavisideParams& p = state[i].params();
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t k = 0; k < state[i].size(); ++k) {
      const double xi = label_error(state[i][k], target[i][k], p);
      const double d = delta(state[i][k], p);
      lhs += d * d * xi * xi;
      rhs += xi * xi;
    }
    if (rho * lhs > rhs) return false;
  }
  return true;
}

inline double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

/// Jump on the stroke voxels: phi_hat <- sign(U), then phi <- phi_hat, for every
/// label. Index i of each span belongs to label i+1.
inline void apply_impulse(const Stroke& stroke, std::span<const ScalarField> U, std::span<LevelSetField> state,
                          std::span<EstimatorField> est) {
  const Dims& d = state[0].dims();
  const auto voxels = linear_indices(d, stroke.voxels);
  if (stroke.label < 1 || stroke.label > static_cast<int>(state.size()))
    throw Error(errc::unknown_label, "apply_impulse: stroke label out of range");
  for (std::size_t k : voxels)
    if (U[static_cast<std::size_t>(stroke.label - 1)][k] <= 0.0)
      throw Error(errc::impulse_inconsistent, "apply_impulse: aggregate input does not support the stroke label");
  for (std::size_t i = 0; i < state.size(); ++i) {
    for (std::size_t k : voxels) {
      est[i][k] = sign_of(U[i][k]);
      state[i][k] = est[i][k];
    }
    maintain_band(est[i]);
    maintain_band(state[i]);
  }
}

}  // namespace segctl
