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

// Grid discretizations of scalar fields on M and the analyses run on them:
// basins and uniqueness gaps, the critical elevation c(U) through bottleneck
// (minimax) paths, and Gibbs masses.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "pmean/errors.hpp"
#include "pmean/manifold.hpp"

namespace pmean {

/// Nodes and adjacency. Circle: n nodes j/n. Torus: n^d lattice with wrap.
/// Sphere: geodesic icosahedral mesh, subdivided until it has at least
/// `resolution` vertices.
struct Grid {
  Manifold manifold;
  int resolution;
  std::vector<Point> nodes;
  std::vector<std::vector<std::uint32_t>> neighbors;
  /// Typical node spacing (mean edge length on the sphere).
  double spacing;

  std::size_t size() const noexcept { return nodes.size(); }
};

namespace detail {

inline Grid lattice_grid(const Manifold& m, int n) {
  const int d = m.dim();
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(n);
  Grid g{m, n, {}, {}, 1.0 / n};
  g.nodes.resize(total);
  g.neighbors.resize(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat, stride = 1;
    for (int i = 0; i < d; ++i) {
      std::size_t idx = rem % n;
      rem /= n;
      g.nodes[flat].coords[i] = static_cast<double>(idx) / n;
      std::size_t up = (idx + 1) % n, down = (idx + n - 1) % n;
      g.neighbors[flat].push_back(static_cast<std::uint32_t>(flat + (up - idx) * stride));
      if (down != up) g.neighbors[flat].push_back(static_cast<std::uint32_t>(flat + (down - idx) * stride));
      stride *= n;
    }
  }
  return g;
}

inline Grid icosphere_grid(const Manifold& m, int resolution) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                             {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  using Face = std::array<std::uint32_t, 3>;
  std::vector<Face> faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
                             {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
                             {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (auto& v : verts) v = (1.0 / norm(v)) * v;
  while (verts.size() < static_cast<std::size_t>(resolution)) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoint;
    auto mid = [&](std::uint32_t a, std::uint32_t b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      Vec3 v = verts[a] + verts[b];
      verts.push_back((1.0 / norm(v)) * v);
      auto idx = static_cast<std::uint32_t>(verts.size() - 1);
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<Face> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      std::uint32_t a = mid(f[0], f[1]), b = mid(f[1], f[2]), c = mid(f[2], f[0]);
      next.push_back({f[0], a, c});
      next.push_back({f[1], b, a});
      next.push_back({f[2], c, b});
      next.push_back({a, b, c});
    }
    faces = std::move(next);
  }
  const double r = Manifold::sphere_radius();
  Grid g{m, resolution, {}, {}, 0.0};
  g.nodes.reserve(verts.size());
  for (const auto& v : verts) g.nodes.push_back(Point{r * v});
  g.neighbors.resize(verts.size());
  double edge_sum = 0.0;
  std::size_t edges = 0;
  for (const auto& f : faces) {
    for (int e = 0; e < 3; ++e) {
      std::uint32_t a = f[e], b = f[(e + 1) % 3];
      if (a < b) {
        // Each undirected edge appears in two faces; count it from one side.
        auto& na = g.neighbors[a];
        if (std::find(na.begin(), na.end(), b) == na.end()) {
          na.push_back(b);
          g.neighbors[b].push_back(a);
          edge_sum += distance(m, g.nodes[a], g.nodes[b]);
          ++edges;
        }
      }
    }
  }
  for (auto& nb : g.neighbors) std::sort(nb.begin(), nb.end());
  g.spacing = edge_sum / static_cast<double>(edges);
  return g;
}

}  // namespace detail

inline std::shared_ptr<const Grid> make_grid(const Manifold& m, int resolution) {
  if (resolution < 4) throw ArgumentError("grid resolution too small");
  if (m.kind() == ManifoldKind::sphere) return std::make_shared<const Grid>(detail::icosphere_grid(m, resolution));
  return std::make_shared<const Grid>(detail::lattice_grid(m, resolution));
}

struct ScalarField {
  std::shared_ptr<const Grid> grid;
  std::vector<double> values;

  const Manifold& manifold() const { return grid->manifold; }
  std::size_t size() const noexcept { return values.size(); }
};

template <class F>
ScalarField evaluate_field(F&& f, std::shared_ptr<const Grid> grid) {
  ScalarField field{std::move(grid), {}};
  field.values.resize(field.grid->size());
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    field.values[i] = f(field.grid->nodes[i]);
    if (!std::isfinite(field.values[i])) throw NumericalError("evaluate_field: non-finite value");
  }
  return field;
}

template <class F>
ScalarField evaluate_field(F&& f, const Manifold& m, int resolution) {
  return evaluate_field(std::forward<F>(f), make_grid(m, resolution));
}

/// A connected plateau of grid local minima.
struct Basin {
  std::size_t node;  // representative (lowest index in the plateau)
  double value;
  std::vector<std::size_t> members;
};

struct MinimizerSet {
  std::vector<std::size_t> q;                      // nodes within gap_tol of the global minimum
  std::vector<std::vector<std::size_t>> clusters;  // q split into adjacency-connected pieces
  std::vector<Basin> basins;                       // all local-minimum plateaus, sorted by value
  double global_min;
  double gap;  // second-best basin value minus best; +inf with one basin
};

/// Local-minimum plateaus of a field, sorted by (value, node).
inline std::vector<Basin> local_minima(const ScalarField& field) {
  const auto& nb = field.grid->neighbors;
  const auto& v = field.values;
  const std::size_t n = v.size();
  std::vector<char> is_min(n, 0), seen(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    is_min[i] = std::all_of(nb[i].begin(), nb[i].end(), [&](std::uint32_t j) { return v[i] <= v[j]; });
  }
  std::vector<Basin> basins;
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_min[i] || seen[i]) continue;
    Basin b{i, v[i], {}};
    std::vector<std::size_t> stack{i};
    seen[i] = 1;
    bool strict = true;
    while (!stack.empty()) {
      std::size_t u = stack.back();
      stack.pop_back();
      b.members.push_back(u);
      for (std::uint32_t w : nb[u]) {
        if (v[w] != v[u]) continue;
        if (!is_min[w]) strict = false;  // plateau leaks to lower ground
        if (!seen[w] && is_min[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
      }
    }
    if (!strict) continue;
    std::sort(b.members.begin(), b.members.end());
    b.node = b.members.front();
    basins.push_back(std::move(b));
  }
  std::sort(basins.begin(), basins.end(),
            [](const Basin& a, const Basin& b) { return a.value != b.value ? a.value < b.value : a.node < b.node; });
  return basins;
}

inline MinimizerSet minimizers(const ScalarField& field, double gap_tol) {
  MinimizerSet out;
  const auto& v = field.values;
  out.global_min = *std::min_element(v.begin(), v.end());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] <= out.global_min + gap_tol) out.q.push_back(i);
  }
  std::vector<char> in_q(v.size(), 0), seen(v.size(), 0);
  for (auto i : out.q) in_q[i] = 1;
  for (auto i : out.q) {
    if (seen[i]) continue;
    std::vector<std::size_t> cluster, stack{i};
    seen[i] = 1;
    while (!stack.empty()) {
      std::size_t u = stack.back();
      stack.pop_back();
      cluster.push_back(u);
      for (std::uint32_t w : field.grid->neighbors[u]) {
        if (in_q[w] && !seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
      }
    }
    std::sort(cluster.begin(), cluster.end());
    out.clusters.push_back(std::move(cluster));
  }
  out.basins = local_minima(field);
  out.gap = out.basins.size() < 2 ? std::numeric_limits<double>::infinity()
                                  : out.basins[1].value - out.basins[0].value;
  return out;
}

struct ElevationReport {
  double c_U;
  std::pair<std::size_t, std::size_t> argpair;
  std::vector<std::size_t> barrier_path;
  double barrier;  // max value along barrier_path
  double global_min;
};

namespace detail {

struct DisjointSets {
  std::vector<std::size_t> parent, rank_;
  explicit DisjointSets(std::size_t n) : parent(n), rank_(n, 0) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
};

}  // namespace detail

/// c(U) = 2 max over node pairs of [minimax(i, j) - U_i - U_j + min U], with
/// minimax the lowest achievable path maximum. Kruskal on edges weighted by
/// max(U_u, U_v): when components A and B first join at level b, every
/// cross pair has minimax b, so the pair term is b - min_A - min_B + min U.
inline ElevationReport elevation_constant(const ScalarField& field) {
  const auto& v = field.values;
  const auto& nb = field.grid->neighbors;
  const std::size_t n = v.size();
  struct Edge {
    double w;
    std::uint32_t a, b;
  };
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint32_t j : nb[i]) {
      if (i < j) edges.push_back({std::max(v[i], v[j]), static_cast<std::uint32_t>(i), j});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    if (x.w != y.w) return x.w < y.w;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });

  const std::size_t gmin_node = static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
  const double gmin = v[gmin_node];
  detail::DisjointSets sets(n);
  std::vector<std::size_t> comp_argmin(n);
  std::iota(comp_argmin.begin(), comp_argmin.end(), 0);
  std::vector<std::vector<std::uint32_t>> tree(n);

  double best = 0.0;
  std::pair<std::size_t, std::size_t> argpair{gmin_node, gmin_node};
  std::size_t merges = 0;
  for (const auto& e : edges) {
    std::size_t ra = sets.find(e.a), rb = sets.find(e.b);
    if (ra == rb) continue;
    std::size_t ma = comp_argmin[ra], mb = comp_argmin[rb];
    double term = e.w - (v[ma] + v[mb]) + gmin;
    if (term > best) {
      best = term;
      argpair = {std::min(ma, mb), std::max(ma, mb)};
    }
    tree[e.a].push_back(e.b);
    tree[e.b].push_back(e.a);
    if (sets.rank_[ra] < sets.rank_[rb]) std::swap(ra, rb);
    sets.parent[rb] = ra;
    if (sets.rank_[ra] == sets.rank_[rb]) ++sets.rank_[ra];
    comp_argmin[ra] = (v[ma] < v[mb] || (v[ma] == v[mb] && ma < mb)) ? ma : mb;
    ++merges;
  }
  if (merges + 1 != n) throw ArgumentError("elevation_constant: grid graph is not connected");

  // Barrier path: the unique tree path between the argpair nodes.
  std::vector<std::size_t> prev(n, n);
  std::vector<std::size_t> queue{argpair.first};
  prev[argpair.first] = argpair.first;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    std::size_t u = queue[head];
    if (u == argpair.second) break;
    for (std::uint32_t w : tree[u]) {
      if (prev[w] == n) {
        prev[w] = u;
        queue.push_back(w);
      }
    }
  }
  std::vector<std::size_t> path;
  for (std::size_t u = argpair.second;; u = prev[u]) {
    path.push_back(u);
    if (u == argpair.first) break;
  }
  std::reverse(path.begin(), path.end());
  double barrier = -std::numeric_limits<double>::infinity();
  for (auto u : path) barrier = std::max(barrier, v[u]);
  return {2.0 * best, argpair, std::move(path), barrier, gmin};
}

/// Default schedule constant from a grid estimate of c(U). The grid value can
/// undershoot the continuum one, and convergence needs k > c(U) strictly.
inline double recommended_k(double c_U_grid) { return 1.1 * c_U_grid + 0.1; }

/// mu_beta(N) with density proportional to exp(-2 beta U), equal node weights.
inline double gibbs_mass(const ScalarField& field, double beta, std::span<const std::size_t> neighborhood) {
  if (!(beta >= 0.0)) throw ArgumentError("gibbs_mass: beta must be nonnegative");
  const auto& v = field.values;
  const double vmin = *std::min_element(v.begin(), v.end());
  double total = 0.0;
  for (double x : v) total += std::exp(-2.0 * beta * (x - vmin));
  double part = 0.0;
  for (auto i : neighborhood) part += std::exp(-2.0 * beta * (v.at(i) - vmin));
  return part / total;
}

inline std::vector<std::size_t> nodes_within(const Grid& grid, const Point& center, double radius) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (distance(grid.manifold, grid.nodes[i], center) <= radius) out.push_back(i);
  }
  return out;
}

}  // namespace pmean
