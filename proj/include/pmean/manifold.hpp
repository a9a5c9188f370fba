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

// Compact symmetric spaces of unit volume: the circle R/Z, flat tori
// (R/Z)^d for d <= 3, and the 2-sphere of radius R = 1/sqrt(4 pi).
//
// Heat-kernel convention: p(s, x, y) solves d/ds p = (1/2) Laplacian p, i.e.
// it is the transition density of Brownian motion with generator Delta/2.
// Under the competing convention (generator Delta) every s here is halved.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>

#include "pmean/errors.hpp"
#include "pmean/rng.hpp"

namespace pmean {

inline constexpr double kPi = std::numbers::pi;

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double c, const Vec3& a) { return {c * a[0], c * a[1], c * a[2]}; }

/// Chart coordinates. Circle uses coords[0] in [0,1); torus(d) uses the
/// first d entries, each in [0,1); sphere uses all three with |coords| = R.
/// Unused entries are zero.
struct Point {
  Vec3 coords{};

  friend bool operator==(const Point&, const Point&) = default;
};

/// Tangent vector at `base`. Circle/torus components are in the coordinate
/// frame; sphere components are ambient 3-vectors orthogonal to `base`.
struct TangentVector {
  Point base;
  Vec3 components{};

  double norm() const { return pmean::norm(components); }
};

enum class ManifoldKind { circle, torus, sphere };

class Manifold {
 public:
  static Manifold circle() { return Manifold(ManifoldKind::circle, 1); }

  static Manifold torus(int d) {
    if (d < 1 || d > 3) throw ArgumentError("torus dimension must be in 1..3");
    return Manifold(ManifoldKind::torus, d);
  }

  static Manifold sphere() { return Manifold(ManifoldKind::sphere, 2); }

  /// "circle", "torus:d" or "sphere".
  static Manifold parse(std::string_view name) {
    if (name == "circle") return circle();
    if (name == "sphere") return sphere();
    if (name.starts_with("torus:")) {
      int d = 0;
      auto tail = name.substr(6);
      auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), d);
      if (ec != std::errc{} || ptr != tail.data() + tail.size()) {
        throw ArgumentError("bad torus dimension in '" + std::string(name) + "'");
      }
      return torus(d);
    }
    throw ArgumentError("unknown manifold '" + std::string(name) + "'");
  }

  std::string name() const {
    switch (kind_) {
      case ManifoldKind::circle: return "circle";
      case ManifoldKind::torus: return "torus:" + std::to_string(dim_);
      case ManifoldKind::sphere: return "sphere";
    }
    return {};
  }

  ManifoldKind kind() const noexcept { return kind_; }
  int dim() const noexcept { return dim_; }
  /// Dimension r of the driving Brownian motion.
  int noise_dim() const noexcept { return kind_ == ManifoldKind::sphere ? 3 : dim_; }
  /// Number of chart coordinates per point.
  int chart_size() const noexcept { return kind_ == ManifoldKind::sphere ? 3 : dim_; }

  static constexpr double sphere_radius() { return 0.28209479177387814; }  // 1/sqrt(4 pi)

  double diameter() const noexcept {
    switch (kind_) {
      case ManifoldKind::circle: return 0.5;
      case ManifoldKind::torus: return 0.5 * std::sqrt(static_cast<double>(dim_));
      case ManifoldKind::sphere: return kPi * sphere_radius();
    }
    return 0.0;
  }

  double injectivity_radius() const noexcept { return kind_ == ManifoldKind::sphere ? diameter() : 0.5; }

  friend bool operator==(const Manifold&, const Manifold&) = default;

 private:
  Manifold(ManifoldKind kind, int dim) : kind_(kind), dim_(dim) {}

  ManifoldKind kind_;
  int dim_;
};

namespace detail {

inline double wrap01(double x) {
  double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

/// Signed periodic displacement in (-1/2, 1/2]; the antipode maps to +1/2.
inline double periodic_delta(double from, double to) {
  double d = to - from;
  d -= std::floor(d);
  return d > 0.5 ? d - 1.0 : d;
}

inline Vec3 unit(const Point& p) { return (1.0 / norm(p.coords)) * p.coords; }

/// Orthonormal tangent frame at unit vector u.
inline std::array<Vec3, 2> tangent_frame(const Vec3& u) {
  Vec3 e{1.0, 0.0, 0.0};
  if (std::abs(u[0]) > 0.9) e = {0.0, 1.0, 0.0};
  Vec3 e1 = e - dot(e, u) * u;
  e1 = (1.0 / norm(e1)) * e1;
  return {e1, cross(u, e1)};
}

// Periodic heat kernel on R/Z with generator (1/2) d^2/dx^2:
//   p(s, delta) = 1 + 2 sum_k exp(-2 pi^2 k^2 s) cos(2 pi k delta)
//               = sum_n (2 pi s)^{-1/2} exp(-(delta + n)^2 / (2 s)).
// The spectral form is used for s >= 0.01, the image sum below that.
inline constexpr double kSpectralThreshold = 0.01;

inline int image_count(double s) { return static_cast<int>(std::ceil(6.0 * std::sqrt(s) + 2.0)); }

inline double circle_heat(double s, double delta) {
  if (s >= kSpectralThreshold) {
    double sum = 1.0;
    for (int k = 1;; ++k) {
      double damp = std::exp(-2.0 * kPi * kPi * k * k * s);
      if (2.0 * damp < 1e-17) break;
      sum += 2.0 * damp * std::cos(2.0 * kPi * k * delta);
    }
    return sum;
  }
  delta = periodic_delta(0.0, delta);
  const int n_max = image_count(s);
  double sum = 0.0;
  for (int n = -n_max; n <= n_max; ++n) {
    double x = delta + n;
    sum += std::exp(-x * x / (2.0 * s));
  }
  return sum / std::sqrt(2.0 * kPi * s);
}

/// d/d(delta) of circle_heat.
inline double circle_heat_derivative(double s, double delta) {
  if (s >= kSpectralThreshold) {
    double sum = 0.0;
    for (int k = 1;; ++k) {
      double damp = std::exp(-2.0 * kPi * kPi * k * k * s);
      if (4.0 * kPi * k * damp < 1e-17) break;
      sum -= 4.0 * kPi * k * damp * std::sin(2.0 * kPi * k * delta);
    }
    return sum;
  }
  delta = periodic_delta(0.0, delta);
  const int n_max = image_count(s);
  double sum = 0.0;
  for (int n = -n_max; n <= n_max; ++n) {
    double x = delta + n;
    sum -= x / s * std::exp(-x * x / (2.0 * s));
  }
  return sum / std::sqrt(2.0 * kPi * s);
}

/// d/d(delta) of log circle_heat, stable for tiny s.
inline double circle_heat_log_derivative(double s, double delta) {
  if (s >= kSpectralThreshold) return circle_heat_derivative(s, delta) / circle_heat(s, delta);
  delta = periodic_delta(0.0, delta);
  const int n_max = image_count(s);
  double shift = delta * delta;  // n = 0 is the nearest image for delta in (-1/2, 1/2]
  double num = 0.0;
  double den = 0.0;
  for (int n = -n_max; n <= n_max; ++n) {
    double x = delta + n;
    double w = std::exp(-(x * x - shift) / (2.0 * s));
    num -= x / s * w;
    den += w;
  }
  return num / den;
}

// Sphere of area 1: p(s, x) = sum_l (2l+1) exp(-l(l+1) s / (2 R^2)) P_l(x),
// x = cos(angle). With 4 pi R^2 = 1 the exponent is -2 pi l(l+1) s.
struct LegendreSeries {
  double s;

  double damping(int l) const { return std::exp(-2.0 * kPi * l * (l + 1.0) * s); }

  /// Truncation order: tail bound below 1e-10 relative to the leading term.
  int order() const {
    int l = 1;
    while ((2.0 * l + 1.0) * damping(l) > 1e-16 || l < 2) ++l;
    return l;
  }

  double value(double x) const {
    const int lmax = order();
    double p_prev = 1.0, p = x;
    double sum = 1.0 + 3.0 * damping(1) * x;
    for (int l = 1; l < lmax; ++l) {
      double p_next = ((2.0 * l + 1.0) * x * p - l * p_prev) / (l + 1.0);
      p_prev = p;
      p = p_next;
      sum += (2.0 * l + 3.0) * damping(l + 1) * p;
    }
    return sum;
  }

  /// d/dx of value(x).
  double derivative(double x) const {
    const int lmax = order();
    // P_l, P'_l with P'_{l+1} = P'_{l-1} + (2l+1) P_l.
    double p_prev = 1.0, p = x;
    double dp_prev = 0.0, dp = 1.0;
    double sum = 3.0 * damping(1);
    for (int l = 1; l < lmax; ++l) {
      double p_next = ((2.0 * l + 1.0) * x * p - l * p_prev) / (l + 1.0);
      double dp_next = dp_prev + (2.0 * l + 1.0) * p;
      p_prev = p;
      p = p_next;
      dp_prev = dp;
      dp = dp_next;
      sum += (2.0 * l + 3.0) * damping(l + 1) * dp;
    }
    return sum;
  }

  /// P(cos(angle) >= x) for a heat-kernel displacement from a fixed point:
  /// (1/2) [ (1 - x) + sum_{l>=1} e_l (P_{l-1}(x) - P_{l+1}(x)) ].
  double polar_cdf(double x) const {
    const int lmax = order();
    double p_prev = 1.0, p = x;  // P_{l-1}, P_l at l = 1
    double sum = 1.0 - x;
    for (int l = 1; l <= lmax; ++l) {
      double p_next = ((2.0 * l + 1.0) * x * p - l * p_prev) / (l + 1.0);
      sum += damping(l) * (p_prev - p_next);
      p_prev = p;
      p = p_next;
    }
    return 0.5 * sum;
  }
};

}  // namespace detail

/// Reduce chart coordinates to the canonical range.
inline Point normalize(const Manifold& m, Point x) {
  if (m.kind() == ManifoldKind::sphere) {
    double r = norm(x.coords);
    if (!(r > 0.0)) throw ArgumentError("sphere point must be a nonzero vector");
    x.coords = (Manifold::sphere_radius() / r) * x.coords;
    return x;
  }
  for (int i = 0; i < 3; ++i) x.coords[i] = i < m.dim() ? detail::wrap01(x.coords[i]) : 0.0;
  return x;
}

inline bool is_valid(const Manifold& m, const Point& x) {
  if (m.kind() == ManifoldKind::sphere) {
    return std::abs(norm(x.coords) - Manifold::sphere_radius()) <= 1e-12;
  }
  for (int i = 0; i < 3; ++i) {
    double c = x.coords[i];
    if (i < m.dim() ? !(c >= 0.0 && c < 1.0) : c != 0.0) return false;
  }
  return true;
}

inline double distance(const Manifold& m, const Point& x, const Point& y) {
  if (m.kind() == ManifoldKind::sphere) {
    Vec3 u = detail::unit(x), v = detail::unit(y);
    return Manifold::sphere_radius() * std::atan2(norm(cross(u, v)), dot(u, v));
  }
  // |x - y| is exactly symmetric, unlike a wrapped signed difference.
  double sq = 0.0;
  for (int i = 0; i < m.dim(); ++i) {
    double d = std::abs(detail::wrap01(x.coords[i]) - detail::wrap01(y.coords[i]));
    d = std::min(d, 1.0 - d);
    sq += d * d;
  }
  return std::sqrt(sq);
}

inline TangentVector zero_tangent(const Point& x) { return {x, {}}; }

/// Geodesic endpoint exp_x(v).
inline Point exp(const Manifold& m, const Point& x, const Vec3& v) {
  if (m.kind() == ManifoldKind::sphere) {
    double len = norm(v);
    if (len == 0.0) return x;
    const double r = Manifold::sphere_radius();
    double angle = len / r;
    Point out{std::cos(angle) * x.coords + (std::sin(angle) * r / len) * v};
    return normalize(m, out);
  }
  Point out = x;
  for (int i = 0; i < m.dim(); ++i) out.coords[i] = detail::wrap01(x.coords[i] + v[i]);
  return out;
}

inline Point exp(const Manifold& m, const TangentVector& v) { return exp(m, v.base, v.components); }

/// Minimal-geodesic initial velocity from x to y, |log| = distance. Cut-locus
/// tie-break: circle/torus coordinates at exactly 1/2 go in the + direction;
/// sphere antipodes use the first canonical axis projected onto T_x.
inline TangentVector log(const Manifold& m, const Point& x, const Point& y) {
  TangentVector out{x, {}};
  if (m.kind() == ManifoldKind::sphere) {
    const double r = Manifold::sphere_radius();
    Vec3 u = detail::unit(x), v = detail::unit(y);
    double c = dot(u, v);
    Vec3 w = v - c * u;
    double sn = norm(w);
    double angle = std::atan2(norm(cross(u, v)), c);
    if (sn < 1e-14) {
      if (c > 0.0) return out;
      Vec3 e{1.0, 0.0, 0.0};
      Vec3 t = e - dot(e, u) * u;
      if (norm(t) < 1e-8) {
        e = {0.0, 1.0, 0.0};
        t = e - dot(e, u) * u;
      }
      out.components = (r * kPi / norm(t)) * t;
      return out;
    }
    out.components = (r * angle / sn) * w;
    return out;
  }
  for (int i = 0; i < m.dim(); ++i) out.components[i] = detail::periodic_delta(x.coords[i], y.coords[i]);
  return out;
}

/// Heat kernel p(s, x, y) for generator Delta/2 on the unit-volume space.
inline double heat_kernel(const Manifold& m, double s, const Point& x, const Point& y) {
  if (!(s > 0.0)) throw DomainError("heat_kernel: s must be positive");
  if (m.kind() == ManifoldKind::sphere) {
    return detail::LegendreSeries{s}.value(std::clamp(dot(detail::unit(x), detail::unit(y)), -1.0, 1.0));
  }
  double prod = 1.0;
  for (int i = 0; i < m.dim(); ++i) prod *= detail::circle_heat(s, y.coords[i] - x.coords[i]);
  return prod;
}

/// grad_theta log p(s, theta, z).
inline TangentVector grad_log_heat_kernel(const Manifold& m, double s, const Point& theta, const Point& z) {
  if (!(s > 0.0)) throw DomainError("grad_log_heat_kernel: s must be positive");
  TangentVector out{theta, {}};
  if (m.kind() == ManifoldKind::sphere) {
    Vec3 u = detail::unit(theta), v = detail::unit(z);
    double x = std::clamp(dot(u, v), -1.0, 1.0);
    detail::LegendreSeries series{s};
    double factor = series.derivative(x) / series.value(x) / Manifold::sphere_radius();
    out.components = factor * (v - x * u);
    return out;
  }
  for (int i = 0; i < m.dim(); ++i) {
    out.components[i] = detail::circle_heat_log_derivative(s, detail::periodic_delta(z.coords[i], theta.coords[i]));
  }
  return out;
}

inline Point uniform_point(const Manifold& m, RandomStream& rng) {
  Point p;
  if (m.kind() == ManifoldKind::sphere) {
    do {
      p.coords = {rng.gaussian(), rng.gaussian(), rng.gaussian()};
    } while (norm(p.coords) < 1e-12);
    return normalize(m, p);
  }
  for (int i = 0; i < m.dim(); ++i) p.coords[i] = rng.uniform();
  return p;
}

/// Draw from p(s, x, .). Circle/torus: wrapped Gaussian with variance s per
/// coordinate. Sphere: polar angle by inverse CDF of its exact marginal,
/// azimuth uniform.
inline Point sample_heat(const Manifold& m, double s, const Point& x, RandomStream& rng) {
  if (!(s > 0.0)) throw DomainError("sample_heat: s must be positive");
  if (m.kind() != ManifoldKind::sphere) {
    Point out = x;
    const double sd = std::sqrt(s);
    for (int i = 0; i < m.dim(); ++i) out.coords[i] = detail::wrap01(x.coords[i] + sd * rng.gaussian());
    return out;
  }
  const double r = Manifold::sphere_radius();
  const double u = rng.uniform();
  const double phi = 2.0 * kPi * rng.uniform();
  detail::LegendreSeries series{s};
  // polar_cdf is decreasing in c = cos(angle) on [-1, 1]; solve polar_cdf(c) = u
  // by Newton steps kept inside a bisection bracket.
  double lo = -1.0, hi = 1.0;
  // Small-time guess: Rayleigh angle with variance s / R^2 per coordinate.
  double guess_angle = std::sqrt(-2.0 * (s / (r * r)) * std::log1p(-u));
  double c = guess_angle < kPi ? std::cos(guess_angle) : 0.0;
  for (int it = 0; it < 200; ++it) {
    double f = series.polar_cdf(c) - u;
    if (f > 0.0) lo = c; else hi = c;
    if (std::abs(f) < 1e-15 || hi - lo < 1e-15) break;
    double slope = -0.5 * series.value(c);
    double next = slope < 0.0 ? c - f / slope : 0.5 * (lo + hi);
    c = (next > lo && next < hi) ? next : 0.5 * (lo + hi);
  }
  const double angle = std::acos(std::clamp(c, -1.0, 1.0));
  auto frame = detail::tangent_frame(detail::unit(x));
  Vec3 dir = std::cos(phi) * frame[0] + std::sin(phi) * frame[1];
  return exp(m, x, (r * angle) * dir);
}

/// sigma(theta) applied to a standard Gaussian vector of length noise_dim():
/// identity on circle/torus, orthogonal projection onto T_theta on the sphere.
inline TangentVector noise_step(const Manifold& m, const Point& theta, const Vec3& gauss) {
  TangentVector out{theta, {}};
  if (m.kind() == ManifoldKind::sphere) {
    Vec3 u = detail::unit(theta);
    out.components = gauss - dot(gauss, u) * u;
    return out;
  }
  for (int i = 0; i < m.dim(); ++i) out.components[i] = gauss[i];
  return out;
}

/// Comma-separated chart coordinates, normalized onto the manifold.
inline Point parse_point(const Manifold& m, std::string_view text) {
  Point p;
  int count = 0;
  std::string buf(text);
  std::stringstream ss(buf);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (count >= 3) throw ArgumentError("too many coordinates in '" + buf + "'");
    try {
      std::size_t used = 0;
      p.coords[count] = std::stod(item, &used);
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw ArgumentError("bad coordinate '" + item + "'");
    }
    ++count;
  }
  if (count != m.chart_size()) {
    throw ArgumentError("expected " + std::to_string(m.chart_size()) + " coordinates in '" + buf + "'");
  }
  return normalize(m, p);
}

inline std::string format_point(const Manifold& m, const Point& p) {
  std::ostringstream os;
  os.precision(17);
  for (int i = 0; i < m.chart_size(); ++i) {
    if (i) os << ',';
    os << p.coords[i];
  }
  return os.str();
}

}  // namespace pmean
