#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "segctl/input.hpp"

using namespace segctl;

namespace {

Stroke stroke_at(int label, std::initializer_list<GridIndex> v) {
  Stroke s;
  s.label = label;
  s.voxels = v;
  return s;
}

Stroke random_stroke(std::mt19937& rng, Dims d, int label) {
  Stroke s;
  s.label = label;
  const int n = 1 + static_cast<int>(rng() % 5);
  for (int i = 0; i < n; ++i) s.voxels.push_back(d.index(rng() % d.size()));
  return s;
}

}  // namespace

TEST(StrokeKernel, Examples) {
  const ScalarField g(Dims::make2(7, 1), 1.0);
  const ScalarField u = stroke_kernel_region(stroke_at(1, {{0, 0, 0}}), g, 4.0);
  EXPECT_DOUBLE_EQ(u[0], 1.0);
  EXPECT_DOUBLE_EQ(u[2], 0.5);
  EXPECT_DOUBLE_EQ(u[4], 0.0);
  EXPECT_DOUBLE_EQ(u[6], 0.0);
}

TEST(StrokeKernel, Errors) {
  const ScalarField g(Dims::make2(3, 3), 1.0);
  EXPECT_THROW(stroke_kernel_region(Stroke{}, g, 4.0), Error);
  EXPECT_THROW(stroke_kernel_region(stroke_at(1, {{0, 0, 0}}), g, 0.0), Error);
  EXPECT_THROW(stroke_kernel_region(stroke_at(1, {{5, 0, 0}}), g, 2.0), Error);
}

TEST(StrokeKernel, BoundedAndLevelSetsAreGeodesicBalls) {
  std::mt19937 rng(61);
  std::uniform_real_distribution<double> cost(1.0, 20.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Dims d = Dims::make2(12, 10);
    ScalarField g(d, 1.0);
    for (double& v : g.values()) v = cost(rng);
    const Stroke s = random_stroke(rng, d, 1);
    const double dmax = 5.0 + trial;
    const ScalarField u = stroke_kernel_region(s, g, dmax);
    const ScalarField dist = seed_distance(g, SeedSet{1, s.voxels});
    for (std::size_t k = 0; k < d.size(); ++k) {
      EXPECT_GE(u[k], 0.0);
      EXPECT_LE(u[k], 1.0);
      EXPECT_NEAR(u[k], std::max(0.0, 1.0 - dist[k] / dmax), 1e-12);
    }
  }
}

TEST(DiffuseInput, ZeroIsFixedPoint) {
  const Dims d = Dims::make2(6, 6);
  const InputField u{1, ScalarField(d, 0.0)};
  const InputField out = diffuse_input(u, ScalarField(d, 3.0), 10, DiffusionParams{});
  for (double v : out.values.values()) EXPECT_EQ(v, 0.0);
}

TEST(DiffuseInput, UniformBelowBoundGrowsPointwise) {
  const Dims d = Dims::make2(5, 4);
  const InputField u{1, ScalarField(d, 0.5)};
  const InputField out = diffuse_input(u, ScalarField(d, 2.0), 1, DiffusionParams{});
  for (double v : out.values.values()) EXPECT_DOUBLE_EQ(v, 0.5 * 1.25);
}

TEST(DiffuseInput, SpikeSpreadsThroughOpenGate) {
  const Dims d = Dims::make2(3, 3);
  const double gm = 1.0, dt = 0.25;
  InputField u{1, ScalarField(d, 0.0)};
  u.values[4] = 2.0 * gm;
  const InputField out = diffuse_input(u, ScalarField(d, gm), 1, DiffusionParams{});
  // hand evaluation: gate H((u/g_M)^2 - 1) is H(3) = 1 at the spike and H(-1) at its neighbours
  const double e = 1.5;
  const double h_nb = 0.5 * (1.0 - 1.0 / e + std::sin(-std::numbers::pi / e) / std::numbers::pi);
  const double c = 0.5 * (1.0 + h_nb);
  EXPECT_NEAR(out.values[4], 2.0 + dt * (2.0 + 4.0 * c * (0.0 - 2.0)), 1e-12);
  EXPECT_LT(out.values[4], 2.0);
  for (std::size_t k : {1, 3, 5, 7}) EXPECT_NEAR(out.values[k], dt * c * 2.0, 1e-12);
  for (std::size_t k : {0, 2, 6, 8}) EXPECT_EQ(out.values[k], 0.0);
}

TEST(DiffuseInput, ClosedGateIsExponentialGrowth) {
  std::mt19937 rng(67);
  std::uniform_real_distribution<double> ud(0.0, 0.3);
  const Dims d = Dims::make2(8, 7);
  DiffusionParams p;
  p.gate.epsilon = 0.5;  // (u/g_M)^2 - 1 stays below -0.5 while u < 0.7 g_M
  InputField u{1, ScalarField(d, 0.0)};
  for (double& v : u.values.values()) v = ud(rng);
  const ScalarField gm(d, 1.0);
  const int steps = 3;  // 0.3 * 1.25^3 < 0.7
  const InputField out = diffuse_input(u, gm, steps, p);
  for (std::size_t k = 0; k < d.size(); ++k) {
    double expect = u.values[k];
    for (int s = 0; s < steps; ++s) expect = expect + p.dt * expect;
    EXPECT_EQ(out.values[k], expect);
    EXPECT_NEAR(out.values[k], u.values[k] * std::pow(1.0 + p.dt, steps), 1e-12);
  }
}

TEST(DiffuseInput, CapAndErrors) {
  const Dims d = Dims::make2(2, 2);
  const InputField big{1, ScalarField(d, 3.9)};
  const InputField capped = diffuse_input(big, ScalarField(d, 1.0), 5, DiffusionParams{});
  for (double v : capped.values.values()) EXPECT_LE(v, 4.0);
  InputField bad{1, ScalarField(d, 0.0)};
  bad.values[0] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(diffuse_input(bad, ScalarField(d, 1.0), 1, DiffusionParams{}), Error);
  DiffusionParams fast;
  fast.dt = 0.3;
  EXPECT_THROW(diffuse_input(big, ScalarField(d, 1.0), 1, fast), Error);
}

TEST(AccumulateRegion, Examples) {
  const Dims d = Dims::make2(1, 1);
  const std::vector<ScalarField> only{ScalarField(d, 0.8), ScalarField(d, 0.0)};
  EXPECT_DOUBLE_EQ(accumulate_region(only)[0][0], 0.8);
  const std::vector<ScalarField> two{ScalarField(d, 0.8), ScalarField(d, 0.3)};
  EXPECT_DOUBLE_EQ(accumulate_region(two)[0][0], 0.5);
  const std::vector<ScalarField> same{ScalarField(d, 0.6), ScalarField(d, 0.6)};
  EXPECT_DOUBLE_EQ(accumulate_region(same)[0][0], 0.0);
}

TEST(AccumulateRegion, AntisymmetricForTwoLabels) {
  std::mt19937 rng(71);
  std::uniform_real_distribution<double> ud(0.0, 4.0);
  const Dims d = Dims::make2(6, 5);
  for (int trial = 0; trial < 20; ++trial) {
    ScalarField a(d, 0.0), b(d, 0.0);
    for (std::size_t k = 0; k < d.size(); ++k) {
      a[k] = ud(rng);
      b[k] = ud(rng);
    }
    const std::vector<ScalarField> ab{a, b}, ba{b, a};
    const AggregateInput u = accumulate_region(ab), w = accumulate_region(ba);
    for (std::size_t k = 0; k < d.size(); ++k) {
      EXPECT_EQ(u[0][k], -u[1][k]);
      EXPECT_EQ(u[0][k], w[1][k]);
    }
  }
}

TEST(StrokeDistanceInput, Examples) {
  const ScalarField g(Dims::make2(5, 1), 1.0);
  const ScalarField u = stroke_distance_input(stroke_at(1, {{0, 0, 0}}), g);
  for (int k = 0; k < 5; ++k) EXPECT_DOUBLE_EQ(u[static_cast<std::size_t>(k)], k);
  // a 1-wide grid split by nothing is connected; an isolated component needs a grid with no path
  const ScalarField lone(Dims::make3(1, 1, 1), 1.0);
  EXPECT_EQ(stroke_distance_input(stroke_at(1, {{0, 0, 0}}), lone)[0], 0.0);
  EXPECT_THROW(stroke_distance_input(Stroke{}, g), Error);
}

TEST(StrokeDistanceInput, UnreachedIsInfinite) {
  // geodesic_distance only reaches voxels connected to a source
  const ScalarField g(Dims::make2(3, 1), 1.0);
  const std::vector<std::size_t> none;
  const ScalarField d = geodesic_distance(g, none);
  for (double v : d.values()) EXPECT_TRUE(std::isinf(v));
}

TEST(AccumulateDistance, Examples) {
  const Dims d = Dims::make2(1, 1);
  const std::vector<ScalarField> a{ScalarField(d, 2.0), ScalarField(d, 5.0)};
  EXPECT_DOUBLE_EQ(accumulate_distance(a, 1)[0], 3.0);
  const std::vector<ScalarField> b{ScalarField(d, 0.0), ScalarField(d, 4.0)};
  EXPECT_DOUBLE_EQ(accumulate_distance(b, 1)[0], 4.0);
  const std::vector<ScalarField> c{ScalarField(d, 3.0), ScalarField(d, 3.0)};
  EXPECT_DOUBLE_EQ(accumulate_distance(c, 1)[0], 0.0);
}

TEST(Accumulate, StrokeVoxelsSupportTheirLabel) {
  std::mt19937 rng(73);
  std::uniform_real_distribution<double> cost(1.0, 30.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Dims d = Dims::make2(10, 9);
    ScalarField g(d, 1.0);
    for (double& v : g.values()) v = cost(rng);
    const Stroke own = random_stroke(rng, d, 1);
    Stroke other = random_stroke(rng, d, 2);
    std::erase_if(other.voxels, [&](const GridIndex& p) {
      return std::find(own.voxels.begin(), own.voxels.end(), p) != own.voxels.end();
    });
    if (other.voxels.empty()) continue;
    const std::vector<ScalarField> u{stroke_kernel_region(own, g, 12.0), stroke_kernel_region(other, g, 12.0)};
    const AggregateInput ur = accumulate_region(u);
    const std::vector<ScalarField> near{stroke_distance_input(own, g), stroke_distance_input(other, g)};
    const ScalarField ud = accumulate_distance(near, 1);
    for (const auto& p : own.voxels) {
      EXPECT_GT(ur[0].at(p), 0.0);
      EXPECT_GT(ud.at(p), 0.0);
    }
  }
}

TEST(StrokeWire, FormatParseRoundTrip) {
  Stroke s = stroke_at(2, {{3, 4, 0}, {5, 6, 0}});
  s.t = 1.25;
  s.k = 3;
  const std::string line = format_stroke("abc", s, 2);
  EXPECT_EQ(line, "stroke abc 2 1.25 3 2 3 4 5 6");
  const ParsedStroke p = parse_stroke(line, 2);
  EXPECT_EQ(p.session_id, "abc");
  EXPECT_EQ(p.stroke, s);

  Stroke v = stroke_at(1, {{1, 2, 3}});
  EXPECT_EQ(parse_stroke(format_stroke("x", v, 3), 3).stroke, v);
}

TEST(StrokeWire, MalformedLinesRejected) {
  for (const char* bad : {"stroke abc 2 1.0 1 2 3 4 5", "stroke abc 2 nan 1 1 3 4", "stroke abc 2 1.0 1 1 3 4 9",
                          "strok abc 2 1.0 1 1 3 4", "stroke abc two 1.0 1 1 3 4", "stroke abc 2 1.0 1 -1"}) {
    EXPECT_THROW(parse_stroke(bad, 2), Error) << bad;
  }
}
