#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "segctl/control.hpp"
#include "segctl/distance.hpp"
#include "segctl/grid.hpp"
#include "segctl/levelset.hpp"
#include "segctl/region.hpp"

namespace segctl {

enum class Dynamics { region, distance };

inline const char* to_string(Dynamics d) { return d == Dynamics::region ? "region" : "distance"; }

inline Dynamics parse_dynamics(const std::string& s) {
  if (s == "region") return Dynamics::region;
  if (s == "distance") return Dynamics::distance;
  throw Error(errc::invalid_argument, "unknown dynamics mode '" + s + "'");
}

/// Per-voxel argmax of the label fields; ties go to the smaller label.
inline LabelMap argmax_labels(const std::vector<LevelSetField>& phi) {
  const Dims& d = phi[0].dims();
  LabelMap labels(d, 1);
  for (std::size_t k = 0; k < d.size(); ++k) {
    std::size_t win = 0;
    for (std::size_t i = 1; i < phi.size(); ++i)
      if (phi[i][k] > phi[win][k]) win = i;
    labels[k] = static_cast<int>(win) + 1;
  }
  return labels;
}

/// The coupled state/estimator system of one session, without logging or input bookkeeping.
struct ClosedLoop {
  Dynamics mode = Dynamics::region;
  ControlParams control;
  double dt = 0.25;
  bool open_loop = false;  // F = 0 and no estimator: the automatic segmentation

  ImageVolume image;
  ScalarField g_gamma;  // 1 + |grad I|^2
  ScalarField g_M;      // bound on |G_i|

  std::vector<LevelSetField> phi;  // state, index label-1
  std::vector<EstimatorField> est;
  AggregateInput U;
  std::vector<ScalarField> dists;  // distance mode: per-label geodesic distance to its inputs
  std::optional<std::vector<LevelSetField>> target;  // oracle mode: known ideal segmentation

  LabelMap labels;
  RegionStats stats;
  double t = 0.0;
  long tick = 0;
  long alpha_violations = 0;

  int n_labels() const { return static_cast<int>(phi.size()); }
  const HeavisideParams& hp() const { return control.heaviside; }

  void init(const ImageVolume& img, const LabelMap& initial, int n, Dynamics dyn, const ControlParams& cp,
            double step) {
    require_same_dims(img.dims(), initial.dims(), "session image and initial labels differ in extents");
    mode = dyn;
    control = cp;
    dt = step;
    image = img;
    g_gamma = gradient_magnitude_sq(img);
    g_M = mode == Dynamics::region ? g_M_bound(img, hp()) : g_gamma;
    phi.clear();
    for (int l = 1; l <= n; ++l) phi.push_back(init_from_labels(initial, l, hp(), BorderMode::replicate));
    labels = argmax_labels(phi);
    est = phi;
    U.assign(static_cast<std::size_t>(n), ScalarField(img.dims(), 0.0));
    stats = update_stats(image, labels, n);
    t = 0.0;
    tick = 0;
  }

  /// Intrinsic speed of label l at voxel k.
  double intrinsic(int l, std::size_t k) const {
    if (mode == Dynamics::region) return compose_G(image, stats, phi, l, k);
    return natural_speed_dist(l, k, dists, g_gamma);
  }

  const std::vector<LevelSetField>& reference_for_state() const { return target ? *target : est; }

  /// One synchronized tick of state and estimator. State and estimator use a
  /// per-voxel step no larger than `dt`, capped by the explicit stability bound
  /// of their own speed and stiffness.
  void coupled_step() {
    const Dims& d = image.dims();
    const HeavisideParams& p = hp();
    const double dmax = p.delta_max();
    const auto& ref = reference_for_state();
    const std::size_t n = phi.size();

    if (mode == Dynamics::region) stats = update_stats(image, labels, n_labels());

    std::vector<ScalarField> xi(n, ScalarField(d, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < d.size(); ++k) xi[i][k] = label_error(phi[i][k], ref[i][k], p);

    std::vector<LevelSetField> next_phi;
    next_phi.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      ScalarField speed(d, 0.0);
      ScalarField step(d, dt);
      for (std::size_t k = 0; k < d.size(); ++k) {
        if (!phi[i].active(k)) continue;
        const double a2 = scheduled_alpha_sq(g_M[k], xi[i][k], control);
        if (a2 < g_M[k]) ++alpha_violations;
        double s = intrinsic(static_cast<int>(i) + 1, k);
        if (open_loop) {
          speed[k] = s;
          if (s != 0.0) step[k] = std::min(dt, 0.5 / (std::abs(s) * dmax));
          continue;
        }
        s += control_signal(xi[i][k], a2);
        // saturated gain: once on the reference the control cancels G exactly
        if (control.gain == GainLaw::saturated && xi[i][k] == 0.0) s = 0.0;
        speed[k] = s;
        double h = dt;
        if (s != 0.0) {
          h = std::min(h, 0.5 / (std::abs(s) * dmax));
          h = std::min(h, landing_step(phi[i][k], ref[i][k], s));
        }
        if (control.gain == GainLaw::linear) h = std::min(h, 0.5 / (a2 * dmax * dmax));
        step[k] = h;
      }
      next_phi.push_back(evolve_step(phi[i], speed, step));
    }

    if (!target && !open_loop) {
      for (std::size_t i = 0; i < n; ++i) {
        ScalarField speed(d, 0.0);
        ScalarField step(d, dt);
        for (std::size_t k = 0; k < d.size(); ++k) {
          if (!est[i].active(k)) continue;
          if (!std::isfinite(U[i][k])) throw Error(errc::non_finite, "estimator: non-finite input on band");
          const double s = estimator_speed(xi[i][k], U[i][k], est[i][k], p);
          speed[k] = s;
          double h = dt;
          if (s != 0.0) h = std::min(h, 0.5 / (std::abs(s) * dmax));
          h = std::min(h, 0.5 / ((1.0 + std::abs(U[i][k])) * dmax * dmax));
          step[k] = h;
        }
        est[i] = evolve_step(est[i], speed, step);
      }
    }

    phi = std::move(next_phi);
    labels = argmax_labels(phi);
    t += dt;
    ++tick;
  }

  /// Largest step that does not carry phi past `ref` when moving toward it.
  double landing_step(double phi_k, double ref_k, double s) const {
    const double gap = ref_k - phi_k;
    if (gap == 0.0 || (gap > 0.0) != (s > 0.0)) return dt;
    const double rate = std::abs(s) * delta(phi_k, hp());
    return rate > 0.0 ? std::abs(gap) / rate : dt;
  }

  LyapunovSample sample() const {
    LyapunovSample s;
    s.t = t;
    s.Vhat = labeling_energy(phi, reference_for_state());
    s.E = target ? 0.0 : input_energy(est, U);
    s.V = s.E + s.Vhat;
    return s;
  }

  bool rate_condition(double rho) const { return rate_condition_check(phi, reference_for_state(), rho); }
};

/// Binary target fields for oracle mode: +-(epsilon+1) by reference membership.
inline std::vector<LevelSetField> oracle_targets(const LabelMap& reference, int n, const HeavisideParams& p) {
  std::vector<LevelSetField> out;
  for (int l = 1; l <= n; ++l) {
    LevelSetField f(reference.dims(), l, p);
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = reference[k] == l ? p.clamp_value() : -p.clamp_value();
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace segctl
