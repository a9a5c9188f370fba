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

#include <cmath>
#include <vector>

#include "pmean/cost.hpp"

namespace pmean {
namespace {

constexpr double kR = 0.28209479177387814;

Point P(double a, double b = 0.0, double c = 0.0) { return Point{{a, b, c}}; }

// Fourier series of delta^2 on (-1/2, 1/2], damped by the heat multiplier.
double kappa_p2_oracle(double s, double delta) {
  double v = 1.0 / 12.0;
  for (int k = 1; k < 4000; ++k) {
    v += std::pow(-1.0, k) * std::exp(-2.0 * kPi * kPi * k * k * s) * std::cos(2.0 * kPi * k * delta) /
         (kPi * kPi * k * k);
  }
  return v;
}

std::vector<Vec3> tangent_basis(const Manifold& m, const Point& x) {
  if (m.kind() == ManifoldKind::sphere) {
    auto f = detail::tangent_frame(detail::unit(x));
    return {f[0], f[1]};
  }
  std::vector<Vec3> basis;
  for (int k = 0; k < m.dim(); ++k) {
    Vec3 e{};
    e[k] = 1.0;
    basis.push_back(e);
  }
  return basis;
}

template <class F>
double central_difference(const Manifold& m, F&& f, const Point& x, const Vec3& e, double h) {
  return (f(exp(m, x, h * e)) - f(exp(m, x, -h * e))) / (2.0 * h);
}

TEST(PowerCost, RejectsSmallExponent) {
  EXPECT_THROW(PowerCost(0.5), ArgumentError);
  EXPECT_NO_THROW(PowerCost(1.0));
  EXPECT_DOUBLE_EQ(PowerCost(1.5)(0.25), 0.125);
}

TEST(GradientBound, Values) {
  EXPECT_DOUBLE_EQ(gradient_bound(Manifold::circle(), 2.0).K, 1.0);
  EXPECT_DOUBLE_EQ(gradient_bound(Manifold::circle(), 1.0).K, 1.0);
  EXPECT_DOUBLE_EQ(gradient_bound(Manifold::sphere(), 2.0).K, 2.0 * kPi * kR);
  EXPECT_DOUBLE_EQ(gradient_bound(Manifold::torus(2), 1.5).K_dd, 1.0);
}

TEST(H, Examples) {
  auto c = Manifold::circle();
  EXPECT_EQ(H(c, uniform_empirical({P(0.3)}), 2.0, P(0.3)), 0.0);
  auto nu = uniform_empirical({P(0.0), P(0.4)});
  EXPECT_NEAR(H(c, nu, 2.0, P(0.2)), 0.04, 1e-15);
  EXPECT_NEAR(H(c, nu, 2.0, P(0.7)), 0.09, 1e-15);
  EXPECT_THROW(H(c, nu, 0.9, P(0.2)), ArgumentError);
  RandomStream rng(1);
  for (auto m : {Manifold::circle(), Manifold::torus(3), Manifold::sphere()}) {
    std::vector<Point> pts;
    for (int i = 0; i < 5; ++i) pts.push_back(uniform_point(m, rng));
    auto mu = uniform_empirical(pts);
    for (int i = 0; i < 100; ++i) {
      double v = H(m, mu, 1.7, uniform_point(m, rng));
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, std::pow(m.diameter(), 1.7) + 1e-15);
    }
  }
}

TEST(GradH, Examples) {
  auto c = Manifold::circle();
  EXPECT_NEAR(grad_H(c, uniform_empirical({P(0.1), P(0.3)}), 2.0, P(0.2)).components[0], 0.0, 1e-15);
  EXPECT_NEAR(grad_H(c, uniform_empirical({P(0.3)}), 2.0, P(0.0)).components[0], -0.6, 1e-15);
  EXPECT_THROW(grad_H(c, uniform_empirical({P(0.3)}), 1.0, P(0.3)), NondifferentiableError);
  EXPECT_EQ(grad_H(c, uniform_empirical({P(0.3)}), 1.5, P(0.3)).components[0], 0.0);
}

TEST(GradH, MatchesFiniteDifferences) {
  for (auto m : {Manifold::circle(), Manifold::torus(2), Manifold::sphere()}) {
    RandomStream rng(17);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<Point> pts;
      for (int i = 0; i < 5; ++i) pts.push_back(uniform_point(m, rng));
      auto nu = uniform_empirical(pts);
      Point y = uniform_point(m, rng);
      // Stay away from atoms and their cut loci, where rho^p has kinks.
      bool near_kink = false;
      for (const auto& x : pts) {
        double d = distance(m, x, y);
        near_kink |= d < 1e-3 || d > m.diameter() - 1e-3;
        if (m.kind() == ManifoldKind::torus) {
          for (int k = 0; k < 2; ++k) near_kink |= std::abs(std::abs(detail::periodic_delta(x.coords[k], y.coords[k])) - 0.5) < 1e-3;
        }
      }
      if (near_kink) continue;
      TangentVector g = grad_H(m, nu, 1.5, y);
      for (const auto& e : tangent_basis(m, y)) {
        double fd = central_difference(m, [&](const Point& q) { return H(m, nu, 1.5, q); }, y, e, 1e-6);
        EXPECT_NEAR(dot(g.components, e), fd, 1e-5 * std::max(1.0, g.norm())) << m.name();
      }
    }
  }
}

TEST(KappaS, ClosedFormOracleForSquaredDistance) {
  auto c = Manifold::circle();
  HeatSmoothedCost series(c, 2.0, 5e-3);
  for (double s : {0.005, 0.02, 0.1, 0.7}) {
    for (double d : {0.0, 0.13, 0.42, 0.5}) {
      double oracle = kappa_p2_oracle(s, d);
      EXPECT_NEAR(series.value(s, P(0.2 + d), P(0.2)), oracle, 1e-12);
      EXPECT_NEAR(kappa_s(c, SmoothedCost(PowerCost(2.0), s), P(0.2 + d), P(0.2)), oracle, 5e-7);
    }
  }
}

TEST(KappaS, LocalVarianceAtSmallTime) {
  auto c = Manifold::circle();
  const double s = 0.01;
  double v = kappa_s(c, SmoothedCost(PowerCost(2.0), s, 8192), P(0.3), P(0.3));
  EXPECT_GT(v, 0.95 * s);
  EXPECT_LT(v, 1.05 * s);
}

TEST(KappaS, LargeTimeIsUniformAverage) {
  auto c = Manifold::circle();
  // int_0^1 rho^p dz = 2 (1/2)^{p+1} / (p+1).
  for (double p : {1.0, 1.5, 2.0}) {
    double avg = 2.0 * std::pow(0.5, p + 1.0) / (p + 1.0);
    EXPECT_NEAR(kappa_s(c, SmoothedCost(PowerCost(p), 5.0), P(0.1), P(0.6)), avg, 1e-6);
    EXPECT_NEAR(HeatSmoothedCost(c, p, 5e-3).value(5.0, P(0.1), P(0.6)), avg, 1e-12);
  }
}

TEST(KappaS, SymmetricInArguments) {
  for (auto m : {Manifold::circle(), Manifold::torus(2)}) {
    RandomStream rng(3);
    for (int i = 0; i < 10; ++i) {
      Point a = uniform_point(m, rng), b = uniform_point(m, rng);
      SmoothedCost sc(PowerCost(1.5), 0.03, m.dim() == 1 ? 2048 : 128);
      EXPECT_NEAR(kappa_s(m, sc, a, b), kappa_s(m, sc, b, a), 1e-6);
    }
  }
}

TEST(KappaS, SeriesAndQuadratureAgree) {
  RandomStream rng(29);
  for (auto m : {Manifold::circle(), Manifold::torus(2), Manifold::sphere()}) {
    const int nodes = m.kind() == ManifoldKind::circle ? 2048 : (m.kind() == ManifoldKind::torus ? 256 : 60);
    const double tol = m.kind() == ManifoldKind::circle ? 1e-6 : 1e-4;
    for (double p : {1.0, 1.5, 2.0}) {
      HeatSmoothedCost series(m, p, 5e-3);
      for (int i = 0; i < 4; ++i) {
        Point th = uniform_point(m, rng), y = uniform_point(m, rng);
        double s = 0.01 + 0.1 * rng.uniform();
        SmoothedCost sc(PowerCost(p), s, nodes);
        EXPECT_NEAR(series.value(s, th, y), kappa_s(m, sc, th, y), tol) << m.name() << " p=" << p;
        Vec3 gs = series.gradient(s, th, y).components;
        Vec3 gq = grad_kappa_s(m, sc, th, y).components;
        EXPECT_LE(norm(gs - gq), 10.0 * tol) << m.name() << " p=" << p;
      }
    }
  }
}

TEST(GradKappaS, ZeroAtCoincidence) {
  auto c = Manifold::circle();
  EXPECT_NEAR(grad_kappa_s(c, SmoothedCost(PowerCost(1.0), 0.02), P(0.4), P(0.4)).components[0], 0.0, 1e-12);
  EXPECT_NEAR(HeatSmoothedCost(c, 1.0, 5e-3).gradient(0.02, P(0.4), P(0.4)).components[0], 0.0, 1e-12);
}

TEST(GradKappaS, MatchesFiniteDifferencesAndBound) {
  auto c = Manifold::circle();
  // p = 1, s = 0.02, theta - y = 0.2.
  SmoothedCost sc(PowerCost(1.0), 0.02);
  double g = grad_kappa_s(c, sc, P(0.5), P(0.3)).components[0];
  double fd = central_difference(c, [&](const Point& q) { return kappa_s(c, sc, q, P(0.3)); }, P(0.5), Vec3{1, 0, 0},
                                 1e-5);
  EXPECT_NEAR(g, fd, 1e-5 * std::abs(g));

  for (auto m : {Manifold::circle(), Manifold::torus(2), Manifold::sphere()}) {
    RandomStream rng(41);
    for (double p : {1.0, 1.5, 2.0}) {
      HeatSmoothedCost series(m, p, 5e-3);
      const double K = gradient_bound(m, p).K;
      for (int i = 0; i < 100; ++i) {
        Point th = uniform_point(m, rng), y = uniform_point(m, rng);
        double s = 5e-3 + 0.3 * rng.uniform();
        TangentVector gv = series.gradient(s, th, y);
        EXPECT_LE(gv.norm(), K * (1.0 + 1e-6));
        for (const auto& e : tangent_basis(m, th)) {
          double d = central_difference(m, [&](const Point& q) { return series.value(s, q, y); }, th, e, 1e-5);
          EXPECT_NEAR(dot(gv.components, e), d, 1e-5 * std::max(gv.norm(), 1e-3 * K)) << m.name();
        }
      }
    }
  }
}

TEST(GradKappaS, ScoreEstimatorIsUnbiased) {
  for (auto m : {Manifold::circle(), Manifold::sphere()}) {
    HeatSmoothedCost series(m, 1.5, 5e-3);
    RandomStream rng(5);
    Point th = uniform_point(m, rng), y = uniform_point(m, rng);
    const double s = 0.05;
    SmoothedCost sc(PowerCost(1.5), s, 16);
    const int n = 200000;
    Vec3 mean{}, sq{};
    for (int i = 0; i < n; ++i) {
      Vec3 g = grad_kappa_s_score(m, sc, th, y, rng).components;
      for (int k = 0; k < 3; ++k) {
        mean[k] += g[k] / n;
        sq[k] += g[k] * g[k] / n;
      }
    }
    Vec3 exact = series.gradient(s, th, y).components;
    for (int k = 0; k < 3; ++k) {
      double se = std::sqrt(std::max(sq[k] - mean[k] * mean[k], 0.0) / n);
      EXPECT_NEAR(mean[k], exact[k], 4.0 * se + 1e-12) << m.name() << " component " << k;
    }
  }
}

TEST(HeatSmoothedCost, RejectsTimesBelowFloor) {
  HeatSmoothedCost series(Manifold::circle(), 2.0, 0.01);
  EXPECT_THROW(series.value(0.005, P(0.1), P(0.2)), DomainError);
  EXPECT_THROW(HeatSmoothedCost(Manifold::circle(), 2.0, 0.0), DomainError);
}

TEST(USmoothed, ExchangeIdentityOnCircle) {
  auto c = Manifold::circle();
  RandomStream rng(13);
  std::vector<Point> pts;
  for (int i = 0; i < 4; ++i) pts.push_back(uniform_point(c, rng));
  auto nu = uniform_empirical(pts);
  for (double p : {1.0, 2.0}) {
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      Point th = uniform_point(c, rng);
      worst = std::max(worst, std::abs(U_smoothed(c, nu, p, 0.02, 0.03, th) - U_smoothed(c, nu, p, 0.0, 0.05, th)));
    }
    EXPECT_LE(worst, 1e-6) << p;
  }
}

TEST(USmoothed, ExchangeIdentityOnTorusAndSphere) {
  auto nu_t = uniform_empirical({P(0.1, 0.2), P(0.6, 0.9)});
  auto t2 = Manifold::torus(2);
  EXPECT_NEAR(U_smoothed(t2, nu_t, 2.0, 0.03, 0.02, P(0.4, 0.4), 64),
              U_smoothed(t2, nu_t, 2.0, 0.0, 0.05, P(0.4, 0.4), 64), 1e-4);
  auto sp = Manifold::sphere();
  auto nu_s = uniform_empirical({P(0, 0, kR), P(kR, 0, 0)});
  Point th = normalize(sp, P(1, 1, 1));
  EXPECT_NEAR(U_smoothed(sp, nu_s, 1.5, 0.02, 0.03, th, 40), U_smoothed(sp, nu_s, 1.5, 0.0, 0.05, th, 40), 1e-4);
}

TEST(USmoothed, SmallTimeApproachesH) {
  auto c = Manifold::circle();
  auto nu = uniform_empirical({P(0.0), P(0.4)});
  for (double th : {0.1, 0.2, 0.7}) {
    // p = 2: smoothing adds the variance s1 + s2 exactly (away from cut loci).
    // Tolerance: O(h^2) trapezoid error across the antipodal kink, h = 1/2048.
    EXPECT_NEAR(U_smoothed(c, nu, 2.0, 1e-3, 1e-3, P(th)), H(c, nu, 2.0, P(th)) + 2e-3, 1e-7);
    double h1 = H(c, nu, 1.0, P(th));
    EXPECT_NEAR(U_smoothed(c, nu, 1.0, 1e-3, 1e-3, P(th)), h1, 0.02 * h1);
  }
}

TEST(USmoothed, SingleAtomLargeTimeIsFlat) {
  auto c = Manifold::circle();
  auto nu = uniform_empirical({P(0.25)});
  double ref = U_smoothed(c, nu, 1.5, 2.0, 2.0, P(0.0), 512);
  for (double th : {0.1, 0.3, 0.77}) EXPECT_NEAR(U_smoothed(c, nu, 1.5, 2.0, 2.0, P(th), 512), ref, 1e-6);
}

TEST(USmoothed, UniformConvergenceToH) {
  auto c = Manifold::circle();
  auto nu = DiscreteMeasure({P(0.1), P(0.35), P(0.8)}, {0.5, 0.3, 0.2});
  double previous = 0.0;
  for (double s : {0.01, 0.02, 0.05, 0.1}) {
    double worst = 0.0;
    for (int i = 0; i < 1024; i += 8) {  // every 8th node of a 1024 grid
      Point th = P(i / 1024.0);
      worst = std::max(worst, std::abs(U_smoothed(c, nu, 2.0, s, s, th, 512) - H(c, nu, 2.0, th)));
    }
    EXPECT_GT(worst, previous) << s;
    previous = worst;
  }
  EXPECT_THROW(U_smoothed(c, nu, 2.0, 0.01, 0.0, P(0.1)), DomainError);
}

}  // namespace
}  // namespace pmean
