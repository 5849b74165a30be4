#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "segctl/distance.hpp"

using namespace segctl;

namespace {

// Plain Bellman-Ford over the same grid graph; no priority queue.
ScalarField bellman_ford(const ScalarField& g, const std::vector<std::size_t>& src) {
  const Dims& d = g.dims();
  ScalarField dist(d, kUnreached);
  for (std::size_t s : src) dist[s] = 0.0;
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t k = 0; k < d.size(); ++k)
      for_each_neighbor(d, k, [&](std::size_t n) {
        const double c = dist[k] + 0.5 * (g[k] + g[n]);
        if (c < dist[n]) {
          dist[n] = c;
          changed = true;
        }
      });
  }
  return dist;
}

ScalarField random_cost(std::mt19937& rng, Dims d) {
  std::uniform_real_distribution<double> u(1.0, 100.0);
  ScalarField g(d, 1.0);
  for (double& v : g.values()) v = u(rng);
  return g;
}

SeedSet random_seeds(std::mt19937& rng, Dims d, int label, int count) {
  SeedSet s{label, {}};
  for (int i = 0; i < count; ++i) s.voxels.push_back(d.index(rng() % d.size()));
  return s;
}

}  // namespace

TEST(SeedDistance, UnitChain) {
  const ScalarField g(Dims::make2(5, 1), 1.0);
  const ScalarField dist = seed_distance(g, SeedSet{1, {{0, 0, 0}}});
  for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(dist[static_cast<std::size_t>(i)], i);
}

TEST(SeedDistance, CornersOfCentredGrid) {
  const ScalarField g(Dims::make2(3, 3), 1.0);
  const ScalarField dist = seed_distance(g, SeedSet{1, {{1, 1, 0}}});
  for (std::size_t k : {0, 2, 6, 8}) EXPECT_DOUBLE_EQ(dist[k], 2.0);
  EXPECT_EQ(dist, bellman_ford(g, {4}));
}

TEST(SeedDistance, CostWall) {
  ScalarField g(Dims::make2(4, 1), 1.0);
  g[1] = 101.0;
  const ScalarField dist = seed_distance(g, SeedSet{1, {{0, 0, 0}}});
  EXPECT_DOUBLE_EQ(dist[1], 51.0);
  EXPECT_DOUBLE_EQ(dist[2], 102.0);
}

TEST(SeedDistance, EmptySeedsAndOutOfBounds) {
  const ScalarField g(Dims::make2(3, 3), 1.0);
  try {
    seed_distance(g, SeedSet{1, {}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), errc::empty_seed_set);
  }
  EXPECT_THROW(seed_distance(g, SeedSet{1, {{3, 0, 0}}}), Error);
}

TEST(SeedDistance, MatchesBellmanFordOracle) {
  std::mt19937 rng(41);
  for (int trial = 0; trial < 150; ++trial) {
    const Dims d = trial % 5 == 0 ? Dims::make3(2 + static_cast<int>(rng() % 6), 2 + static_cast<int>(rng() % 6),
                                                2 + static_cast<int>(rng() % 5))
                                  : Dims::make2(1 + static_cast<int>(rng() % 16), 1 + static_cast<int>(rng() % 16));
    const ScalarField g = random_cost(rng, d);
    const SeedSet s = random_seeds(rng, d, 1, 1 + static_cast<int>(rng() % 4));
    const ScalarField fast = seed_distance(g, s), slow = bellman_ford(g, linear_indices(d, s.voxels));
    for (std::size_t k = 0; k < d.size(); ++k) EXPECT_NEAR(fast[k], slow[k], 1e-9 * std::max(1.0, slow[k]));
  }
}

TEST(SeedDistance, ZeroExactlyOnSeeds) {
  std::mt19937 rng(43);
  const Dims d = Dims::make2(12, 9);
  const ScalarField g = random_cost(rng, d);
  const SeedSet s = random_seeds(rng, d, 1, 5);
  const ScalarField dist = seed_distance(g, s);
  const auto idx = linear_indices(d, s.voxels);
  for (std::size_t k = 0; k < d.size(); ++k)
    EXPECT_EQ(dist[k] == 0.0, std::find(idx.begin(), idx.end(), k) != idx.end());
}

TEST(SeedDistance, EnlargingSeedsNeverIncreasesDistance) {
  std::mt19937 rng(47);
  for (int trial = 0; trial < 100; ++trial) {
    const Dims d = Dims::make2(10, 10);
    const ScalarField g = random_cost(rng, d);
    SeedSet s = random_seeds(rng, d, 1, 2);
    const ScalarField before = seed_distance(g, s);
    const SeedSet extra = random_seeds(rng, d, 1, 3);
    s.voxels.insert(s.voxels.end(), extra.voxels.begin(), extra.voxels.end());
    const ScalarField after = seed_distance(g, s);
    for (std::size_t k = 0; k < d.size(); ++k) EXPECT_LE(after[k], before[k]);
  }
}

TEST(AssignLabels, Examples) {
  const ScalarField g(Dims::make2(5, 1), 1.0);
  const ScalarField a = seed_distance(g, SeedSet{1, {{0, 0, 0}}});
  const ScalarField b = seed_distance(g, SeedSet{2, {{4, 0, 0}}});

  const std::vector<ScalarField> one{a};
  const LabelMap single = assign_labels(one);
  for (int l : single.values()) EXPECT_EQ(l, 1);

  const std::vector<ScalarField> two{a, b};
  const LabelMap m = assign_labels(two);
  EXPECT_EQ(std::vector<int>(m.values().begin(), m.values().end()), (std::vector<int>{1, 1, 1, 2, 2}));

  const std::vector<ScalarField> same{a, a};
  const LabelMap tied = assign_labels(same);
  for (int l : tied.values()) EXPECT_EQ(l, 1);
}

TEST(AssignLabels, UnreachedVoxelIsAnError) {
  const std::vector<ScalarField> none{ScalarField(Dims::make2(2, 1), kUnreached)};
  EXPECT_THROW(assign_labels(none), Error);
}

TEST(AssignLabels, PermutationEquivariantAtTheArgmin) {
  std::mt19937 rng(53);
  for (int trial = 0; trial < 50; ++trial) {
    const Dims d = Dims::make2(9, 7);
    const ScalarField g = random_cost(rng, d);
    std::vector<ScalarField> dists;
    for (int l = 1; l <= 3; ++l) dists.push_back(seed_distance(g, random_seeds(rng, d, l, 2)));
    std::vector<int> perm{0, 1, 2};
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<ScalarField> permuted(3);
    for (int i = 0; i < 3; ++i) permuted[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = dists[static_cast<std::size_t>(i)];
    const LabelMap a = assign_labels(dists), b = assign_labels(permuted);
    for (std::size_t k = 0; k < d.size(); ++k) {
      const int la = a[k], lb = b[k];
      // the permuted winner attains the same minimum; exact ties may pick differently
      EXPECT_EQ(permuted[static_cast<std::size_t>(lb - 1)][k], dists[static_cast<std::size_t>(la - 1)][k]);
      int attaining = 0;
      for (const auto& f : dists) attaining += f[k] == dists[static_cast<std::size_t>(la - 1)][k];
      const bool tie = attaining > 1;
      if (!tie) {
        EXPECT_EQ(perm[static_cast<std::size_t>(la - 1)] + 1, lb);
      }
    }
  }
}

TEST(NaturalSpeedDist, Branches) {
  const Dims d = Dims::make2(3, 1);
  ScalarField gg(d, 7.0);
  ScalarField a(d, 0.0), b(d, 0.0);
  a[0] = 1.0; b[0] = 3.0;  // label 1 unique argmin
  a[1] = 4.0; b[1] = 2.0;  // label 2 unique argmin
  a[2] = 2.0; b[2] = 2.0;  // exact tie
  const std::vector<ScalarField> dists{a, b};
  EXPECT_DOUBLE_EQ(natural_speed_dist(1, 0, dists, gg), 7.0);
  EXPECT_DOUBLE_EQ(natural_speed_dist(1, 1, dists, gg), -7.0);
  EXPECT_DOUBLE_EQ(natural_speed_dist(2, 1, dists, gg), 7.0);
  EXPECT_DOUBLE_EQ(natural_speed_dist(1, 2, dists, gg), 0.0);
  EXPECT_DOUBLE_EQ(natural_speed_dist(2, 2, dists, gg), 0.0);
}
