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

#pragma once

// Power costs rho^p, their heat smoothings
//   kappa_s(theta, y) = int p(s, theta, z) rho^p(z, y) dz,
// and the objectives H_{p,nu}, U_{s1,s2}.
//
// Two independent routes compute kappa_s:
//  * SmoothedCost / kappa_s / grad_kappa_s integrate on a fixed grid anchored
//    at y (periodic trapezoid on circle/torus, Gauss x trapezoid in geodesic
//    polar coordinates on the sphere);
//  * HeatSmoothedCost expands rho^p(., y) in eigenfunctions of the Laplacian
//    and damps each mode by its heat multiplier. This is exact up to series
//    truncation and is what the annealing engine evaluates at every step.

#include <algorithm>
#include <array>
#include <optional>
#include <cmath>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "pmean/errors.hpp"
#include "pmean/manifold.hpp"
#include "pmean/measure.hpp"
#include "pmean/rng.hpp"

namespace pmean {

struct PowerCost {
  double p;

  explicit PowerCost(double exponent) : p(exponent) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw ArgumentError("power cost needs p >= 1");
  }

  double operator()(double rho) const { return p == 2.0 ? rho * rho : (p == 1.0 ? rho : std::pow(rho, p)); }
};

/// K = p D^{p-1} K'' bounds every gradient of a smoothed power cost; K'' = 1
/// because distance functions have unit gradient away from the cut locus.
struct GradientBound {
  double K;
  double K_dd = 1.0;
};

inline GradientBound gradient_bound(const Manifold& m, double p) {
  return {p * std::pow(m.diameter(), p - 1.0), 1.0};
}

/// grad_theta rho^p(theta, y) = -p rho^{p-2} log_theta(y); zero at theta = y.
inline TangentVector grad_power_cost(const Manifold& m, double p, const Point& theta, const Point& y) {
  TangentVector v = log(m, theta, y);
  double rho = v.norm();
  if (rho < 1e-12) return zero_tangent(theta);
  double scale = -p * (p == 2.0 ? 1.0 : std::pow(rho, p - 2.0));
  v.components = scale * v.components;
  return v;
}

/// H_{p,nu}(y) = sum_i w_i rho^p(y, x_i).
inline double H(const Manifold& m, const DiscreteMeasure& nu, double p, const Point& y) {
  PowerCost cost(p);
  double sum = 0.0;
  auto atoms = nu.atoms();
  auto weights = nu.weights();
  for (std::size_t i = 0; i < atoms.size(); ++i) sum += weights[i] * cost(distance(m, y, atoms[i]));
  return sum;
}

/// -p sum_i w_i rho^{p-2}(y, x_i) log_y(x_i). Atoms closer than 1e-12
/// contribute nothing for p > 1; for p = 1 the gradient does not exist there.
inline TangentVector grad_H(const Manifold& m, const DiscreteMeasure& nu, double p, const Point& y) {
  PowerCost cost(p);
  TangentVector out = zero_tangent(y);
  auto atoms = nu.atoms();
  auto weights = nu.weights();
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    TangentVector v = log(m, y, atoms[i]);
    double rho = v.norm();
    if (rho < 1e-12) {
      if (p == 1.0) throw NondifferentiableError("grad_H: p = 1 at an atom");
      continue;
    }
    double scale = -p * weights[i] * (p == 2.0 ? 1.0 : std::pow(rho, p - 2.0));
    out.components = out.components + scale * v.components;
  }
  return out;
}

namespace detail {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Composite 20-point Gauss-Legendre on [a, b] with `panels` equal panels;
/// the first panel is additionally split geometrically `grade` times
/// toward a to resolve an endpoint singularity.
inline QuadratureRule composite_gauss(double a, double b, int panels, int grade) {
  using Gauss = boost::math::quadrature::gauss<double, 20>;
  const auto& x = Gauss::abscissa();
  const auto& w = Gauss::weights();
  QuadratureRule rule;
  auto add_panel = [&](double lo, double hi) {
    double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    for (std::size_t i = 0; i < x.size(); ++i) {
      rule.nodes.push_back(mid - half * x[i]);
      rule.weights.push_back(half * w[i]);
      if (x[i] != 0.0) {
        rule.nodes.push_back(mid + half * x[i]);
        rule.weights.push_back(half * w[i]);
      }
    }
  };
  const double width = (b - a) / panels;
  double lo = a, hi = a + width;
  std::vector<std::pair<double, double>> graded;
  for (int g = 0; g < grade; ++g) {
    double m = lo + 0.5 * (hi - lo);
    graded.emplace_back(m, hi);
    hi = m;
  }
  graded.emplace_back(lo, hi);
  for (auto [l, h] : graded) add_panel(l, h);
  for (int k = 1; k < panels; ++k) add_panel(a + k * width, a + (k + 1) * width);
  return rule;
}

}  // namespace detail

/// kappa_s evaluated by fixed-grid quadrature. `nodes` is the grid size per
/// dimension on circle/torus and the number of polar nodes on the sphere
/// (the azimuthal grid has twice as many).
struct SmoothedCost {
  PowerCost base;
  double s;
  int nodes = 2048;

  SmoothedCost(PowerCost cost, double time, int n = 2048) : base(cost), s(time), nodes(n) {
    if (!(s > 0.0)) throw DomainError("smoothed cost needs s > 0");
    if (nodes < 16) throw ArgumentError("smoothed cost needs at least 16 nodes");
  }
};

namespace detail {

/// Visit quadrature nodes z (with weights summing to 1) of a grid anchored at
/// y so that rho(., y) is smooth between nodes. Calls f(z, weight, rho(z, y)).
template <class F>
void for_each_anchored_node(const Manifold& m, int nodes, const Point& y, F&& f) {
  if (m.kind() == ManifoldKind::sphere) {
    const double r = Manifold::sphere_radius();
    const int panels = std::max(1, nodes / 20);
    QuadratureRule polar = composite_gauss(0.0, kPi, panels, 0);
    const int n_az = 2 * nodes;
    auto frame = tangent_frame(unit(y));
    std::vector<Vec3> dirs(n_az);
    for (int b = 0; b < n_az; ++b) {
      double phi = 2.0 * kPi * b / n_az;
      dirs[b] = std::cos(phi) * frame[0] + std::sin(phi) * frame[1];
    }
    for (std::size_t a = 0; a < polar.nodes.size(); ++a) {
      double gamma = polar.nodes[a];
      double w = polar.weights[a] * std::sin(gamma) * r * r * 2.0 * kPi / n_az;
      for (int b = 0; b < n_az; ++b) f(exp(m, y, (r * gamma) * dirs[b]), w, r * gamma);
    }
    return;
  }
  const int d = m.dim();
  const double h = 1.0 / nodes;
  double w = 1.0;
  for (int i = 0; i < d; ++i) w *= h;
  std::array<int, 3> idx{0, 0, 0};
  long total = 1;
  for (int i = 0; i < d; ++i) total *= nodes;
  for (long flat = 0; flat < total; ++flat) {
    long rem = flat;
    Point z = y;
    double sq = 0.0;
    for (int i = 0; i < d; ++i) {
      idx[i] = static_cast<int>(rem % nodes);
      rem /= nodes;
      double off = idx[i] * h;
      z.coords[i] = wrap01(y.coords[i] + off);
      double delta = off > 0.5 ? 1.0 - off : off;
      sq += delta * delta;
    }
    f(z, w, std::sqrt(sq));
  }
}

}  // namespace detail

/// int p(s, theta, z) rho^p(z, y) dz by quadrature.
inline double kappa_s(const Manifold& m, const SmoothedCost& sc, const Point& theta, const Point& y) {
  double sum = 0.0;
  if (m.kind() != ManifoldKind::sphere) {
    // Tensor grid: heat kernel factorizes, tabulate each coordinate once.
    const int d = m.dim(), n = sc.nodes;
    std::array<std::vector<double>, 3> heat;
    for (int i = 0; i < d; ++i) {
      heat[i].resize(n);
      for (int j = 0; j < n; ++j) {
        heat[i][j] = detail::circle_heat(sc.s, y.coords[i] + static_cast<double>(j) / n - theta.coords[i]);
      }
    }
    long total = 1;
    for (int i = 0; i < d; ++i) total *= n;
    for (long flat = 0; flat < total; ++flat) {
      long rem = flat;
      double k = 1.0, sq = 0.0;
      for (int i = 0; i < d; ++i) {
        int j = static_cast<int>(rem % n);
        rem /= n;
        k *= heat[i][j];
        double off = static_cast<double>(j) / n;
        double delta = off > 0.5 ? 1.0 - off : off;
        sq += delta * delta;
      }
      sum += k * sc.base(std::sqrt(sq));
    }
    return sum / static_cast<double>(total);
  }
  detail::for_each_anchored_node(m, sc.nodes, y, [&](const Point& z, double w, double rho) {
    sum += w * heat_kernel(m, sc.s, theta, z) * sc.base(rho);
  });
  return sum;
}

/// int grad_theta p(s, theta, z) rho^p(z, y) dz by quadrature.
inline TangentVector grad_kappa_s(const Manifold& m, const SmoothedCost& sc, const Point& theta, const Point& y) {
  TangentVector out = zero_tangent(theta);
  if (m.kind() != ManifoldKind::sphere) {
    const int d = m.dim(), n = sc.nodes;
    std::array<std::vector<double>, 3> heat, dheat;
    for (int i = 0; i < d; ++i) {
      heat[i].resize(n);
      dheat[i].resize(n);
      for (int j = 0; j < n; ++j) {
        double delta = y.coords[i] + static_cast<double>(j) / n - theta.coords[i];
        heat[i][j] = detail::circle_heat(sc.s, delta);
        // d/dtheta of p(s, z - theta) is minus the delta-derivative.
        dheat[i][j] = -detail::circle_heat_derivative(sc.s, delta);
      }
    }
    long total = 1;
    for (int i = 0; i < d; ++i) total *= n;
    std::array<int, 3> idx{};
    for (long flat = 0; flat < total; ++flat) {
      long rem = flat;
      double sq = 0.0;
      for (int i = 0; i < d; ++i) {
        idx[i] = static_cast<int>(rem % n);
        rem /= n;
        double off = static_cast<double>(idx[i]) / n;
        double delta = off > 0.5 ? 1.0 - off : off;
        sq += delta * delta;
      }
      double c = sc.base(std::sqrt(sq));
      for (int i = 0; i < d; ++i) {
        double g = dheat[i][idx[i]];
        for (int l = 0; l < d; ++l) {
          if (l != i) g *= heat[l][idx[l]];
        }
        out.components[i] += g * c;
      }
    }
    out.components = (1.0 / static_cast<double>(total)) * out.components;
    return out;
  }
  detail::for_each_anchored_node(m, sc.nodes, y, [&](const Point& z, double w, double rho) {
    double weight = w * heat_kernel(m, sc.s, theta, z) * sc.base(rho);
    out.components = out.components + weight * grad_log_heat_kernel(m, sc.s, theta, z).components;
  });
  return out;
}

/// Unbiased one-sample estimate of grad_kappa_s: grad_theta log p(s, theta, z)
/// rho^p(z, y) with z ~ p(s, theta, .). Its variance grows like 1/s.
inline TangentVector grad_kappa_s_score(const Manifold& m, const SmoothedCost& sc, const Point& theta,
                                        const Point& y, RandomStream& rng) {
  Point z = sample_heat(m, sc.s, theta, rng);
  TangentVector g = grad_log_heat_kernel(m, sc.s, theta, z);
  g.components = sc.base(distance(m, z, y)) * g.components;
  return g;
}

/// kappa_s through the Laplacian eigenbasis. Built once per (manifold, p) for
/// all s >= s_min; value() and gradient() then cost O(#modes).
class HeatSmoothedCost {
 public:
  HeatSmoothedCost(const Manifold& m, double p, double s_min) : m_(m), cost_(p), s_min_(s_min) {
    if (!(s_min > 0.0)) throw DomainError("HeatSmoothedCost needs s_min > 0");
    if (m.kind() == ManifoldKind::sphere) {
      build_sphere();
    } else {
      build_torus();
    }
  }

  const Manifold& manifold() const noexcept { return m_; }
  double p() const noexcept { return cost_.p; }
  double s_min() const noexcept { return s_min_; }
  int modes() const noexcept { return kmax_; }

  double value(double s, const Point& theta, const Point& y) const {
    check(s);
    if (m_.kind() == ManifoldKind::sphere) {
      double x = std::clamp(dot(detail::unit(theta), detail::unit(y)), -1.0, 1.0);
      return sphere_series(s, x, false);
    }
    return torus_eval(s, theta, y, nullptr);
  }

  TangentVector gradient(double s, const Point& theta, const Point& y) const {
    check(s);
    TangentVector out = zero_tangent(theta);
    if (m_.kind() == ManifoldKind::sphere) {
      Vec3 u = detail::unit(theta), v = detail::unit(y);
      double x = std::clamp(dot(u, v), -1.0, 1.0);
      double dx = sphere_series(s, x, true);
      out.components = (dx / Manifold::sphere_radius()) * (v - x * u);
      return out;
    }
    torus_eval(s, theta, y, &out.components);
    return out;
  }

  /// Circle fast path: weights w_k with d/dtheta kappa_s = sum_k w_k sin(2 pi k delta),
  /// delta = theta - y. Computed once per s, reused across many evaluations.
  void circle_derivative_weights(double s, std::vector<double>& w) const {
    check(s);
    const int kmax = modes_for(s);
    const double q = std::exp(-2.0 * kPi * kPi * s);
    const double q2 = q * q;
    double damp = q, ratio = q * q2;  // q^{k^2}, q^{2k+1}
    w.resize(static_cast<std::size_t>(kmax));
    for (int k = 1; k <= kmax; ++k) {
      w[k - 1] = -4.0 * kPi * k * coeff_[k] * damp;
      damp *= ratio;
      ratio *= q2;
    }
  }

  static double circle_derivative(const std::vector<double>& weights, double delta) {
    const double ang = 2.0 * kPi * delta;
    const double s1 = std::sin(ang), c2 = 2.0 * std::cos(ang);
    double sk = s1, sk_prev = 0.0, sum = 0.0;
    for (double w : weights) {
      sum += w * sk;
      double sn = c2 * sk - sk_prev;
      sk_prev = sk;
      sk = sn;
    }
    return sum;
  }

  double circle_derivative(double s, double delta) const {
    std::vector<double> w;
    circle_derivative_weights(s, w);
    return circle_derivative(w, delta);
  }

 private:
  // Modes with damping above 1e-18 relative to the slowest one.
  int modes_for(double s) const {
    double lambda1 = m_.kind() == ManifoldKind::sphere ? 2.0 * kPi * s : 2.0 * kPi * kPi * s;
    int k = m_.kind() == ManifoldKind::sphere
                ? static_cast<int>(std::ceil(0.5 * (std::sqrt(1.0 + 4.0 * 41.5 / lambda1) - 1.0)))
                : static_cast<int>(std::ceil(std::sqrt(41.5 / lambda1)));
    return std::max(1, k);
  }

  void check(double s) const {
    if (!(s >= s_min_ * (1.0 - 1e-12))) throw DomainError("HeatSmoothedCost: s below the table's s_min");
  }

  // Sphere: rho^p(z, y) = f(angle) is zonal; by Funk-Hecke
  //   kappa_s = sum_l (2l+1) e^{-2 pi l(l+1) s} f_l P_l(cos angle),
  //   f_l = (1/2) int_0^pi (R g)^p P_l(cos g) sin g dg.
  void build_sphere() {
    kmax_ = modes_for(s_min_);
    const double r = Manifold::sphere_radius();
    auto rule = detail::composite_gauss(0.0, kPi, 4 * kmax_ + 40, cost_.p == std::floor(cost_.p) ? 0 : 20);
    coeff_.assign(kmax_ + 1, 0.0);
    for (std::size_t a = 0; a < rule.nodes.size(); ++a) {
      double g = rule.nodes[a];
      double x = std::cos(g);
      double base = 0.5 * rule.weights[a] * cost_(r * g) * std::sin(g);
      double p_prev = 1.0, p = x;
      coeff_[0] += base;
      if (kmax_ >= 1) coeff_[1] += base * x;
      for (int l = 1; l < kmax_; ++l) {
        double p_next = ((2.0 * l + 1.0) * x * p - l * p_prev) / (l + 1.0);
        p_prev = p;
        p = p_next;
        coeff_[l + 1] += base * p;
      }
    }
  }

  double sphere_series(double s, double x, bool derivative) const {
    const int lmax = std::min(kmax_, modes_for(s));
    double p_prev = 1.0, p = x, dp_prev = 0.0, dp = 1.0;
    double sum = derivative ? 0.0 : coeff_[0];
    for (int l = 1; l <= lmax; ++l) {
      double term = (2.0 * l + 1.0) * std::exp(-2.0 * kPi * l * (l + 1.0) * s) * coeff_[l];
      sum += term * (derivative ? dp : p);
      double p_next = ((2.0 * l + 1.0) * x * p - l * p_prev) / (l + 1.0);
      double dp_next = dp_prev + (2.0 * l + 1.0) * p;
      p_prev = p;
      p = p_next;
      dp_prev = dp;
      dp = dp_next;
    }
    return sum;
  }

  // Circle/torus: c_k = int_{[-1/2,1/2]^d} |delta|^p prod_i cos(2 pi k_i delta_i),
  // k in {0..K}^d. Even symmetry folds the cube onto [0,1/2]^d.
  void build_torus() {
    const int d = m_.dim();
    kmax_ = modes_for(s_min_);
    const int stride = kmax_ + 1;
    int panels = d == 3 ? 16 : 4 * kmax_ + 32;
    int grade = cost_.p == 2.0 ? 0 : (d == 3 ? 10 : 24);
    if (d == 1 && cost_.p == std::floor(cost_.p)) grade = 0;
    auto rule = detail::composite_gauss(0.0, 0.5, panels, grade);
    const std::size_t n = rule.nodes.size();
    // cos table [node][k], weights folded with the factor 2 per dimension.
    std::vector<double> cos_table(n * stride);
    for (std::size_t a = 0; a < n; ++a) {
      for (int k = 0; k < stride; ++k) cos_table[a * stride + k] = std::cos(2.0 * kPi * k * rule.nodes[a]);
    }
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) total *= stride;
    coeff_.assign(total, 0.0);
    if (d == 1) {
      for (std::size_t a = 0; a < n; ++a) {
        double f = 2.0 * rule.weights[a] * cost_(rule.nodes[a]);
        for (int k = 0; k < stride; ++k) coeff_[k] += f * cos_table[a * stride + k];
      }
    } else if (d == 2) {
      std::vector<double> partial(stride);
      for (std::size_t a = 0; a < n; ++a) {
        std::fill(partial.begin(), partial.end(), 0.0);
        const double xa = rule.nodes[a];
        for (std::size_t b = 0; b < n; ++b) {
          double xb = rule.nodes[b];
          double f = 2.0 * rule.weights[b] * cost_(std::sqrt(xa * xa + xb * xb));
          for (int k = 0; k < stride; ++k) partial[k] += f * cos_table[b * stride + k];
        }
        double wa = 2.0 * rule.weights[a];
        for (int k0 = 0; k0 < stride; ++k0) {
          double ca = wa * cos_table[a * stride + k0];
          for (int k1 = 0; k1 < stride; ++k1) coeff_[k0 * stride + k1] += ca * partial[k1];
        }
      }
    } else {
      std::vector<double> inner(stride), middle(stride * stride);
      for (std::size_t a = 0; a < n; ++a) {
        std::fill(middle.begin(), middle.end(), 0.0);
        const double xa = rule.nodes[a];
        for (std::size_t b = 0; b < n; ++b) {
          std::fill(inner.begin(), inner.end(), 0.0);
          const double xb = rule.nodes[b];
          for (std::size_t c = 0; c < n; ++c) {
            double xc = rule.nodes[c];
            double f = 2.0 * rule.weights[c] * cost_(std::sqrt(xa * xa + xb * xb + xc * xc));
            for (int k = 0; k < stride; ++k) inner[k] += f * cos_table[c * stride + k];
          }
          double wb = 2.0 * rule.weights[b];
          for (int k1 = 0; k1 < stride; ++k1) {
            double cb = wb * cos_table[b * stride + k1];
            for (int k2 = 0; k2 < stride; ++k2) middle[k1 * stride + k2] += cb * inner[k2];
          }
        }
        double wa = 2.0 * rule.weights[a];
        for (int k0 = 0; k0 < stride; ++k0) {
          double ca = wa * cos_table[a * stride + k0];
          for (int k = 0; k < stride * stride; ++k) coeff_[k0 * stride * stride + k] += ca * middle[k];
        }
      }
    }
  }

  double torus_eval(double s, const Point& theta, const Point& y, Vec3* grad) const {
    const int d = m_.dim();
    const int stride = kmax_ + 1;
    const int kmax = std::min(kmax_, modes_for(s));
    // Per-dimension tables: damped multiplicity * cos and the derivative factor.
    std::array<std::vector<double>, 3> cosv, dcos;
    for (int i = 0; i < d; ++i) {
      double delta = detail::periodic_delta(y.coords[i], theta.coords[i]);
      cosv[i].resize(kmax + 1);
      dcos[i].resize(kmax + 1);
      for (int k = 0; k <= kmax; ++k) {
        double mult = (k == 0 ? 1.0 : 2.0) * std::exp(-2.0 * kPi * kPi * k * k * s);
        cosv[i][k] = mult * std::cos(2.0 * kPi * k * delta);
        dcos[i][k] = -mult * 2.0 * kPi * k * std::sin(2.0 * kPi * k * delta);
      }
    }
    double value = 0.0;
    Vec3 g{};
    std::array<int, 3> k{0, 0, 0};
    long total = 1;
    for (int i = 0; i < d; ++i) total *= (kmax + 1);
    for (long flat = 0; flat < total; ++flat) {
      long rem = flat;
      std::size_t index = 0;
      for (int i = 0; i < d; ++i) {
        k[i] = static_cast<int>(rem % (kmax + 1));
        rem /= (kmax + 1);
        index = index * stride + k[i];
      }
      const double c = coeff_[index];
      double prod = c;
      for (int i = 0; i < d; ++i) prod *= cosv[i][k[i]];
      value += prod;
      if (grad) {
        for (int i = 0; i < d; ++i) {
          double term = c * dcos[i][k[i]];
          for (int l = 0; l < d; ++l) {
            if (l != i) term *= cosv[l][k[l]];
          }
          g[i] += term;
        }
      }
    }
    if (grad) *grad = g;
    return value;
  }

  Manifold m_;
  PowerCost cost_;
  double s_min_;
  int kmax_ = 0;
  std::vector<double> coeff_;
};

/// U_{s1,s2}(theta) = int kappa_{s1}(theta, y) nu_{s2}(y) dy; s1 = 0 means
/// the raw cost rho^p. Circle/torus: both integrals on the periodic grid with
/// `nodes` points per dimension. Sphere: outer integral on the polar grid,
/// kappa_{s1} through the eigen-expansion.
inline double U_smoothed(const Manifold& m, const DiscreteMeasure& nu, double p, double s1, double s2,
                         const Point& theta, int nodes = 2048) {
  if (!(s1 >= 0.0) || !(s2 > 0.0)) throw DomainError("U_smoothed needs s1 >= 0 and s2 > 0");
  PowerCost cost(p);
  SmoothedMeasure nu_s(nu, s2);
  if (m.kind() == ManifoldKind::circle || (m.kind() == ManifoldKind::torus && m.dim() == 1)) {
    // Shared grid anchored at theta: z_i = theta + i/n, y_j = theta + j/n, so
    // rho(z_i, y_j) depends on i - j only and every kink sits on a node.
    const int n = nodes;
    std::vector<double> rho_p(n), heat(n), dens(n);
    for (int j = 0; j < n; ++j) {
      double off = static_cast<double>(j) / n;
      rho_p[j] = cost(off > 0.5 ? 1.0 - off : off);
      if (s1 > 0.0) heat[j] = detail::circle_heat(s1, off);
      Point yj{{detail::wrap01(theta.coords[0] + off), 0.0, 0.0}};
      dens[j] = density_smoothed(m, nu_s, yj);
    }
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      double kap;
      if (s1 == 0.0) {
        kap = rho_p[j];
      } else {
        kap = 0.0;
        for (int i = 0; i < n; ++i) kap += heat[i] * rho_p[(i - j + n) % n];
        kap /= n;
      }
      sum += kap * dens[j];
    }
    return sum / n;
  }
  if (m.kind() == ManifoldKind::torus) {
    double sum = 0.0;
    SmoothedCost sc(cost, s1 > 0.0 ? s1 : 1.0, nodes);
    detail::for_each_anchored_node(m, nodes, theta, [&](const Point& y, double w, double rho) {
      double kap = s1 == 0.0 ? cost(rho) : kappa_s(m, sc, theta, y);
      sum += w * kap * density_smoothed(m, nu_s, y);
    });
    return sum;
  }
  std::optional<HeatSmoothedCost> series;
  if (s1 > 0.0) series.emplace(m, p, s1);
  double sum = 0.0;
  detail::for_each_anchored_node(m, nodes, theta, [&](const Point& y, double w, double rho) {
    double kap = s1 == 0.0 ? cost(rho) : series->value(s1, theta, y);
    sum += w * kap * density_smoothed(m, nu_s, y);
  });
  return sum;
}

}  // namespace pmean
