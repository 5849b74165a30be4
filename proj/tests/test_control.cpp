#include <gtest/gtest.h>

#include <random>

#include "segctl/closed_loop.hpp"
#include "segctl/synth.hpp"

using namespace segctl;

namespace {

const HeavisideParams kP{1.5};

LevelSetField flat(Dims d, int label, std::initializer_list<double> v) {
  LevelSetField f(d, label, kP);
  std::size_t k = 0;
  for (double x : v) f[k++] = x;
  return f;
}

}  // namespace

TEST(LabelError, Examples) {
  EXPECT_EQ(label_error(0.7, 0.7, kP), 0.0);
  EXPECT_EQ(label_error(3.0, -3.0, kP), 1.0);
  EXPECT_DOUBLE_EQ(label_error(0.0, 3.0, kP), -0.5);
}

TEST(ControlSignal, Examples) {
  EXPECT_EQ(control_signal(0.0, 100.0), 0.0);
  EXPECT_EQ(control_signal(1.0, 100.0), -100.0);
  EXPECT_EQ(control_signal(-1.0, 100.0), 100.0);
}

TEST(Gain, NeverBelowBound) {
  ControlParams lin;
  lin.gain = GainLaw::linear;
  ControlParams sat;
  std::mt19937 rng(79);
  std::uniform_real_distribution<double> gm(0.0, 50000.0), xi(-1.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double g = gm(rng), x = xi(rng);
    EXPECT_GE(scheduled_alpha_sq(g, x, lin), g);
    EXPECT_GE(scheduled_alpha_sq(g, x, sat), g);
    EXPECT_EQ(scheduled_alpha_sq(g, x, lin), alpha_sq(g, lin));
  }
  // saturated: the actuation magnitude is the bound plus margin
  EXPECT_DOUBLE_EQ(std::abs(control_signal(0.25, scheduled_alpha_sq(10.0, 0.25, sat))), 11.0);
}

TEST(Estimator, Examples) {
  const Dims d = Dims::make2(3, 1);
  const EstimatorField est = flat(d, 1, {-0.5, 0.5, 1.5});
  const ScalarField zero(d, 0.0);
  EXPECT_EQ(estimator_step(est, zero, zero, 0.5), est);

  // H(U) = 1, H(phi_hat) = 0: e_U = -1, so the speed gains +|U|
  EXPECT_DOUBLE_EQ(estimator_speed(0.0, 5.0, -2.0, kP), 5.0);

  ScalarField U(d, 0.0);
  U[2] = 3.0;  // |phi_hat| = epsilon: delta vanishes, frozen
  ScalarField xi(d, 0.0);
  const EstimatorField next = estimator_step(est, xi, U, 0.5);
  EXPECT_EQ(next[2], est[2]);
}

TEST(Lyapunov, Examples) {
  const Dims d = Dims::make2(4, 1);
  const std::vector<LevelSetField> state{flat(d, 1, {3, 0.2, -0.4, -3})};
  const std::vector<LevelSetField> same = state;
  const std::vector<ScalarField> U0{ScalarField(d, 0.0)};
  EXPECT_EQ(labeling_energy(state, same), 0.0);
  EXPECT_EQ(input_energy(same, U0), 0.0);

  const std::vector<LevelSetField> target{flat(d, 1, {-3, 0.2, -0.4, 3})};
  EXPECT_DOUBLE_EQ(labeling_energy(state, target), 1.0);

  const std::vector<LevelSetField> est{flat(d, 1, {3, -3, -3, -3})};
  std::vector<ScalarField> U{ScalarField(d, 0.0)};
  U[0][0] = -2.0;  // |U| = 2, e_U = H(3) - H(-2) = 1
  EXPECT_DOUBLE_EQ(input_energy(est, U), 1.0);
}

TEST(Impulse, Examples) {
  const Dims d = Dims::make2(3, 1);
  Stroke s;
  s.label = 1;
  s.voxels = {{1, 0, 0}};
  std::vector<ScalarField> U{ScalarField(d, 0.0), ScalarField(d, 0.0)};
  U[0][1] = 0.7;
  U[1][1] = -0.7;

  std::vector<LevelSetField> state{flat(d, 1, {-0.5, -2.0, -0.5}), flat(d, 2, {0.5, 2.0, 0.5})};
  std::vector<EstimatorField> est{flat(d, 1, {-0.5, -0.4, -0.5}), flat(d, 2, {0.5, 0.4, 0.5})};
  apply_impulse(s, U, state, est);
  EXPECT_EQ(est[0][1], 1.0);  // -0.4 + 1.4
  EXPECT_EQ(state[0][1], 1.0);  // -2 + 3
  EXPECT_EQ(est[1][1], -1.0);
  EXPECT_EQ(state[1][1], -1.0);

  // second identical impulse: nothing left to change
  const auto state_before = state;
  const auto est_before = est;
  apply_impulse(s, U, state, est);
  EXPECT_EQ(state, state_before);
  EXPECT_EQ(est, est_before);
}

TEST(Impulse, RejectsUnsupportedStroke) {
  const Dims d = Dims::make2(2, 1);
  Stroke s;
  s.label = 1;
  s.voxels = {{0, 0, 0}};
  const std::vector<ScalarField> U{ScalarField(d, 0.0), ScalarField(d, 0.0)};
  std::vector<LevelSetField> state{flat(d, 1, {1, 1}), flat(d, 2, {-1, -1})};
  std::vector<EstimatorField> est = state;
  try {
    apply_impulse(s, U, state, est);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::impulse_inconsistent);
  }
}

TEST(RateCondition, Examples) {
  const Dims d = Dims::make2(4, 1);
  const std::vector<LevelSetField> a{flat(d, 1, {0, 0, 0, 0})};
  EXPECT_TRUE(rate_condition_check(a, a, 4.0));

  const std::vector<LevelSetField> off{flat(d, 1, {2.5, 2.5, -2.5, -2.5})};
  const std::vector<LevelSetField> off_t{flat(d, 1, {-2.5, 2.5, 2.5, -2.5})};
  EXPECT_TRUE(rate_condition_check(off, off_t, 1e6));

  const std::vector<LevelSetField> at_zero{flat(d, 1, {0, 0, 0, 0})};
  const std::vector<LevelSetField> below{flat(d, 1, {-3, -3, -3, -3})};
  EXPECT_FALSE(rate_condition_check(at_zero, below, 4.0));
  EXPECT_TRUE(rate_condition_check(at_zero, below, 2.0));
}

TEST(CoupledStep, FixedPointWithoutInput) {
  const SyntheticImage img = make_synthetic("two_disk_s0", 0);
  ClosedLoop loop;
  loop.init(img.image, img.reference, img.n_labels, Dynamics::region, ControlParams{}, 1.0);
  const auto phi = loop.phi;
  for (int i = 0; i < 5; ++i) loop.coupled_step();
  EXPECT_EQ(loop.phi, phi);
  EXPECT_EQ(loop.labels, img.reference);
}

TEST(CoupledStep, OpenLoopIsAutomaticSegmentation) {
  const SyntheticImage img = make_synthetic("two_region_s0", 0);
  // a 9x9 box inside the ellipse, everything else background
  LabelMap start(img.reference.dims(), img.n_labels);
  for (std::size_t k = 0; k < start.size(); ++k) {
    const GridIndex p = start.dims().index(k);
    if (std::abs(p.x - 32) <= 4 && std::abs(p.y - 29) <= 4) start[k] = 1;
  }
  ClosedLoop loop;
  loop.open_loop = true;
  loop.init(img.image, start, img.n_labels, Dynamics::region, ControlParams{}, 1.0);
  for (int i = 0; i < 400; ++i) loop.coupled_step();
  EXPECT_GE(dice(loop.labels, img.reference, 1), 0.99);
}

TEST(CoupledStep, AlphaHypothesisHoldsEverywhere) {
  for (const char* name : {"two_disk_s10", "split_background", "stripes"}) {
    const SyntheticImage img = make_synthetic(name, 3);
    ClosedLoop loop;
    loop.init(img.image, img.reference, img.n_labels, Dynamics::region, ControlParams{}, 1.0);
    loop.target = oracle_targets(img.reference, img.n_labels, loop.hp());
    // perturb the state so the controller has work to do
    for (auto& f : loop.phi)
      for (std::size_t k = 0; k < f.size(); k += 7) f[k] = -f[k];
    for (int i = 0; i < 30; ++i) loop.coupled_step();
    EXPECT_EQ(loop.alpha_violations, 0) << name;
  }
}
