// Copyright 2026 The pmean Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "pmean/cost.hpp"
#include "pmean/landscape.hpp"

namespace pmean {
namespace {

Point P(double a, double b = 0.0, double c = 0.0) { return Point{{a, b, c}}; }

// All-pairs minimax path level by Floyd-Warshall, then the pair maximum.
double brute_force_elevation(const ScalarField& f) {
  const std::size_t n = f.size();
  const auto& v = f.values;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> mm(n * n, inf);
  for (std::size_t i = 0; i < n; ++i) {
    mm[i * n + i] = v[i];
    for (auto j : f.grid->neighbors[i]) mm[i * n + j] = std::max(v[i], v[j]);
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i) {
      const double ik = mm[i * n + k];
      if (ik == inf) continue;
      for (std::size_t j = 0; j < n; ++j) {
        const double via = std::max(ik, mm[k * n + j]);
        if (via < mm[i * n + j]) mm[i * n + j] = via;
      }
    }
  const double gmin = *std::min_element(v.begin(), v.end());
  double best = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) best = std::max(best, mm[i * n + j] - (v[i] + v[j]) + gmin);
  return 2.0 * best;
}

TEST(Grid, CircleNodesAndWrap) {
  auto g = make_grid(Manifold::circle(), 8);
  ASSERT_EQ(g->size(), 8u);
  EXPECT_DOUBLE_EQ(g->nodes[3].coords[0], 3.0 / 8.0);
  auto nb = g->neighbors[0];
  std::sort(nb.begin(), nb.end());
  EXPECT_EQ(nb, (std::vector<std::uint32_t>{1, 7}));
}

TEST(Grid, TorusLatticeHasFourNeighbors) {
  auto g = make_grid(Manifold::torus(2), 16);
  ASSERT_EQ(g->size(), 256u);
  for (const auto& nb : g->neighbors) EXPECT_EQ(nb.size(), 4u);
}

TEST(Grid, IcosphereIsConnectedWithFiveOrSixNeighbors) {
  auto m = Manifold::sphere();
  auto g = make_grid(m, 600);
  EXPECT_GE(g->size(), 600u);
  int fives = 0;
  for (std::size_t i = 0; i < g->size(); ++i) {
    EXPECT_TRUE(is_valid(m, g->nodes[i]));
    const auto deg = g->neighbors[i].size();
    EXPECT_TRUE(deg == 5 || deg == 6);
    fives += deg == 5;
  }
  EXPECT_EQ(fives, 12);
  // Edge lengths stay close to the reported spacing.
  for (std::size_t i = 0; i < g->size(); ++i)
    for (auto j : g->neighbors[i]) {
      const double d = distance(m, g->nodes[i], g->nodes[j]);
      EXPECT_GT(d, 0.5 * g->spacing);
      EXPECT_LT(d, 1.5 * g->spacing);
    }
}

TEST(EvaluateField, ConstantAndCosine) {
  auto c = evaluate_field([](const Point&) { return 3.5; }, Manifold::circle(), 64);
  for (double x : c.values) EXPECT_EQ(x, 3.5);
  auto f = evaluate_field([](const Point& p) { return std::cos(2 * std::numbers::pi * p.coords[0]); },
                          Manifold::circle(), 4);
  const double want[] = {1, 0, -1, 0};
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(f.values[i], want[i], 1e-15);
}

TEST(EvaluateField, RejectsNonFinite) {
  EXPECT_THROW(evaluate_field([](const Point&) { return std::nan(""); }, Manifold::circle(), 64), NumericalError);
}

TEST(Minimizers, SingleWell) {
  auto f = evaluate_field([](const Point& p) { return std::cos(2 * std::numbers::pi * p.coords[0]); },
                          Manifold::circle(), 256);
  auto q = minimizers(f, 1e-12);
  ASSERT_EQ(q.basins.size(), 1u);
  EXPECT_TRUE(std::isinf(q.gap));
  EXPECT_EQ(q.basins[0].node, 128u);
  EXPECT_EQ(q.q, (std::vector<std::size_t>{128}));
}

TEST(Minimizers, SymmetricPairIsATie) {
  auto m = Manifold::circle();
  auto nu = uniform_empirical({P(0.0), P(0.5)});
  auto f = evaluate_field([&](const Point& t) { return H(m, nu, 2.0, t); }, m, 4096);
  auto q = minimizers(f, 1e-12);
  ASSERT_EQ(q.basins.size(), 2u);
  EXPECT_EQ(q.gap, 0.0);
  EXPECT_EQ(q.clusters.size(), 2u);
  EXPECT_EQ(q.basins[0].node, 1024u);
  EXPECT_EQ(q.basins[1].node, 3072u);
}

TEST(Minimizers, TwoAtomGap) {
  auto m = Manifold::circle();
  auto nu = uniform_empirical({P(0.0), P(0.4)});
  auto f = evaluate_field([&](const Point& t) { return H(m, nu, 2.0, t); }, m, 4096);
  auto q = minimizers(f, 1e-9);
  ASSERT_EQ(q.basins.size(), 2u);
  // Minima 0.04 at 0.2 and 0.09 at 0.7.
  EXPECT_NEAR(q.global_min, 0.04, 1e-6);
  EXPECT_NEAR(q.gap, 0.05, 1e-6);
  EXPECT_NEAR(f.grid->nodes[q.basins[0].node].coords[0], 0.2, 1.0 / 4096);
  // Every q member is strictly below every other basin.
  for (auto i : q.q) EXPECT_LT(f.values[i], q.basins[1].value);
}

TEST(Minimizers, PlateauCountsOnce) {
  auto f = evaluate_field([](const Point& p) { return std::max(std::abs(p.coords[0] - 0.5) - 0.1, 0.0); },
                          Manifold::circle(), 100);
  auto b = local_minima(f);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b[0].members.size(), 21u);
  EXPECT_EQ(b[0].node, 40u);
}

TEST(Elevation, SingleWellIsZero) {
  auto f = evaluate_field([](const Point& p) { return std::cos(2 * std::numbers::pi * p.coords[0]); },
                          Manifold::circle(), 64);
  EXPECT_EQ(elevation_constant(f).c_U, 0.0);
  EXPECT_EQ(brute_force_elevation(f), 0.0);
}

TEST(Elevation, SymmetricDoubleWell) {
  // Wells of depth 0 at 0.25 and 0.75 separated by barriers of height b.
  const double b = 0.3;
  auto f = evaluate_field(
      [&](const Point& p) { return b * 0.5 * (1 - std::cos(4 * std::numbers::pi * (p.coords[0] - 0.25))); },
      Manifold::circle(), 256);
  auto r = elevation_constant(f);
  EXPECT_NEAR(r.c_U, 2 * b, 1e-12);
  EXPECT_EQ(r.c_U, brute_force_elevation(f));
  EXPECT_NEAR(r.barrier, b, 1e-12);
  ASSERT_GE(r.barrier_path.size(), 2u);
  EXPECT_EQ(r.barrier_path.front(), r.argpair.first);
  EXPECT_EQ(r.barrier_path.back(), r.argpair.second);
  for (std::size_t i = 1; i < r.barrier_path.size(); ++i) {
    const auto& nb = f.grid->neighbors[r.barrier_path[i - 1]];
    EXPECT_NE(std::find(nb.begin(), nb.end(), r.barrier_path[i]), nb.end());
  }
}

TEST(Elevation, TwoAtomExample) {
  // Wells 0.04 (at 0.2) and 0.09 (at 0.7); lowest barrier 0.13 at the cut
  // loci 0.5 and 0.9, so c(U) = 2 (0.13 - 0.04 - 0.09 + 0.04) = 0.08.
  auto m = Manifold::circle();
  auto nu = uniform_empirical({P(0.0), P(0.4)});
  auto f = evaluate_field([&](const Point& t) { return H(m, nu, 2.0, t); }, m, 4096);
  auto r = elevation_constant(f);
  EXPECT_NEAR(r.c_U, 0.08, 2e-4);
  EXPECT_LE(r.c_U, 0.08);
  EXPECT_NEAR(r.barrier, 0.13, 1e-4);
  EXPECT_NEAR(f.values[r.argpair.first] + f.values[r.argpair.second], 0.13, 1e-6);
}

TEST(Elevation, OffsetInvariantAndScalesLinearly) {
  auto m = Manifold::circle();
  auto nu = uniform_empirical({P(0.0), P(0.4)});
  auto f = evaluate_field([&](const Point& t) { return H(m, nu, 2.0, t); }, m, 1024);
  const double c = elevation_constant(f).c_U;
  EXPECT_GT(c, 0.0);
  ScalarField g = f, h = f;
  for (auto& x : g.values) x += 7.25;
  for (auto& x : h.values) x *= 4.0;
  EXPECT_NEAR(elevation_constant(g).c_U, c, 1e-12);
  EXPECT_NEAR(elevation_constant(h).c_U, 4 * c, 1e-12);
}

TEST(Elevation, MatchesAllPairsOnRandomFields) {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    auto f = evaluate_field([](const Point&) { return 0.0; }, Manifold::circle(), 256);
    for (auto& x : f.values) x = u(gen);
    EXPECT_EQ(elevation_constant(f).c_U, brute_force_elevation(f)) << "trial " << trial;
  }
  for (int trial = 0; trial < 5; ++trial) {
    auto f = evaluate_field([](const Point&) { return 0.0; }, Manifold::torus(2), 12);
    for (auto& x : f.values) x = u(gen);
    EXPECT_EQ(elevation_constant(f).c_U, brute_force_elevation(f)) << "torus trial " << trial;
  }
  auto s = evaluate_field([](const Point&) { return 0.0; }, Manifold::sphere(), 150);
  for (auto& x : s.values) x = u(gen);
  EXPECT_EQ(elevation_constant(s).c_U, brute_force_elevation(s));
}

TEST(Gibbs, ZeroBetaIsCountingFraction) {
  auto m = Manifold::circle();
  auto nu = uniform_empirical({P(0.0), P(0.4)});
  auto f = evaluate_field([&](const Point& t) { return H(m, nu, 2.0, t); }, m, 1000);
  auto hood = nodes_within(*f.grid, P(0.2), 0.0505);
  EXPECT_EQ(hood.size(), 101u);
  EXPECT_NEAR(gibbs_mass(f, 0.0, hood), 101.0 / 1000.0, 1e-15);
  double prev = 0.0;
  for (double beta : {0.0, 1.0, 10.0, 50.0, 250.0, 2000.0}) {
    const double g = gibbs_mass(f, beta, hood);
    EXPECT_GT(g, prev);
    prev = g;
  }
  EXPECT_GT(prev, 0.999);
  EXPECT_THROW(gibbs_mass(f, -1.0, hood), ArgumentError);
}

TEST(Gibbs, RecommendedKExceedsGridEstimate) {
  for (double c : {0.0, 0.08, 1.0}) EXPECT_GT(recommended_k(c), c);
}

}  // namespace
}  // namespace pmean
