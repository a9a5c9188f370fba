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

// Empirical p-means: global grid sweep of H_{p,mu(x)} followed by local
// refinement of the competing basins, the process n -> e_{p,n} along an
// i.i.d. stream, and a Monte Carlo probe of almost-sure uniqueness.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pmean/cost.hpp"
#include "pmean/landscape.hpp"
#include "pmean/manifold.hpp"
#include "pmean/measure.hpp"
#include "pmean/parallel.hpp"
#include "pmean/rng.hpp"

namespace pmean {

struct LocalMinimum {
  Point point;
  double value;
};

/// Local refinement of f near `start` within about one grid spacing:
/// golden-section on the circle, compass search in tangent coordinates on
/// torus and sphere.
template <class F>
LocalMinimum refine_local(const Manifold& m, F&& f, const Point& start, double spacing, double tol) {
  if (m.kind() == ManifoldKind::circle || (m.kind() == ManifoldKind::torus && m.dim() == 1)) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    auto at = [&](double off) { return exp(m, start, Vec3{off, 0.0, 0.0}); };
    double a = -spacing, b = spacing;
    double c = b - invphi * (b - a), d = a + invphi * (b - a);
    double fc = f(at(c)), fd = f(at(d));
    while (b - a > tol) {
      if (fc <= fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - invphi * (b - a);
        fc = f(at(c));
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + invphi * (b - a);
        fd = f(at(d));
      }
    }
    LocalMinimum best{start, f(start)};
    for (double off : {a, b, 0.5 * (a + b)}) {
      Point x = at(off);
      double v = f(x);
      if (v < best.value) best = {x, v};
    }
    return best;
  }

  // Directions in a tangent frame: coordinate axes and diagonals.
  const int dim = m.dim();
  std::vector<Vec3> dirs;
  for (int i = 0; i < dim; ++i) {
    Vec3 e{};
    e[i] = 1.0;
    dirs.push_back(e);
    dirs.push_back(-1.0 * e);
  }
  for (int mask = 0; mask < (1 << dim); ++mask) {
    Vec3 e{};
    for (int i = 0; i < dim; ++i) e[i] = (mask >> i & 1) ? 1.0 : -1.0;
    dirs.push_back((1.0 / std::sqrt(static_cast<double>(dim))) * e);
  }
  auto to_tangent = [&](const Point& base, const Vec3& u) {
    if (m.kind() != ManifoldKind::sphere) return u;
    auto frame = detail::tangent_frame(detail::unit(base));
    return u[0] * frame[0] + u[1] * frame[1];
  };
  LocalMinimum best{start, f(start)};
  double step = spacing;
  while (step > tol) {
    bool improved = false;
    for (const auto& dir : dirs) {
      Point x = exp(m, best.point, to_tangent(best.point, step * dir));
      double v = f(x);
      if (v < best.value) {
        best = {x, v};
        improved = true;
        break;
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

struct MeanEstimate {
  Point point;
  double H_value;
  /// Refined value gap to the best competing basin; +inf with a single basin.
  double gap;
  /// gap at or below the resolution threshold: the minimizer is not
  /// certified unique at this grid.
  bool ambiguous;
  std::size_t basin_node;
  /// Where local refinement from the warm start ended, if one was given.
  std::optional<Point> warm_local;
};

/// Resolution-dependent tie threshold K * spacing^2.
inline double tie_threshold(const Grid& grid, double p) {
  return gradient_bound(grid.manifold, p).K * grid.spacing * grid.spacing;
}

namespace detail {

inline MeanEstimate p_mean_from_field(const Manifold& m, const DiscreteMeasure& nu, double p, const ScalarField& field,
                                      double refine_tol, const std::optional<Point>& warm_start) {
  const Grid& grid = *field.grid;
  auto objective = [&](const Point& y) { return H(m, nu, p, y); };
  auto basins = local_minima(field);
  if (basins.empty()) throw NumericalError("empirical_p_mean: field has no local minimum");
  const double margin = gradient_bound(m, p).K * grid.spacing;

  struct Candidate {
    LocalMinimum min;
    std::size_t node;
  };
  std::vector<Candidate> cands;
  for (std::size_t b = 0; b < basins.size(); ++b) {
    if (b >= 2 && basins[b].value > basins[0].value + margin) break;
    cands.push_back({refine_local(m, objective, grid.nodes[basins[b].node], grid.spacing, refine_tol), basins[b].node});
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    return a.min.value != b.min.value ? a.min.value < b.min.value : a.node < b.node;
  });
  // Neighbouring grid minima can refine to the same continuum minimum.
  std::vector<Candidate> distinct;
  for (const auto& c : cands) {
    bool dup = std::any_of(distinct.begin(), distinct.end(), [&](const Candidate& d) {
      return distance(m, c.min.point, d.min.point) < 2.0 * grid.spacing;
    });
    if (!dup) distinct.push_back(c);
  }

  MeanEstimate out{};
  if (warm_start) {
    LocalMinimum w = refine_local(m, objective, normalize(m, *warm_start), grid.spacing, refine_tol);
    out.warm_local = w.point;
    // The warm start only matters if it found a basin the grid missed.
    bool known = std::any_of(distinct.begin(), distinct.end(), [&](const Candidate& d) {
      return distance(m, w.point, d.min.point) < 2.0 * grid.spacing;
    });
    if (!known && w.value < distinct.front().min.value - tie_threshold(grid, p)) {
      std::size_t nearest = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (const auto& b : basins) {
        double dd = distance(m, grid.nodes[b.node], w.point);
        if (dd < best_d) {
          best_d = dd;
          nearest = b.node;
        }
      }
      distinct.insert(distinct.begin(), Candidate{w, nearest});
    }
  }
  out.point = distinct.front().min.point;
  out.H_value = distinct.front().min.value;
  out.basin_node = distinct.front().node;
  out.gap = distinct.size() < 2 ? std::numeric_limits<double>::infinity()
                                : distinct[1].min.value - distinct[0].min.value;
  out.ambiguous = out.gap <= tie_threshold(grid, p);
  return out;
}

}  // namespace detail

/// Global minimizer of y -> (1/N) sum_k rho^p(y, x_k) on `grid`, refined to
/// refine_tol.
inline MeanEstimate empirical_p_mean(const std::vector<Point>& points, double p, std::shared_ptr<const Grid> grid,
                                     double refine_tol = 1e-8, std::optional<Point> warm_start = std::nullopt) {
  if (points.empty()) throw ArgumentError("empirical_p_mean: no points");
  const Manifold& m = grid->manifold;
  DiscreteMeasure nu = uniform_empirical(points);
  PowerCost cost(p);
  ScalarField field = evaluate_field([&](const Point& y) { return H(m, nu, p, y); }, grid);
  return detail::p_mean_from_field(m, nu, p, field, refine_tol, warm_start);
}

inline MeanEstimate empirical_p_mean(const Manifold& m, const std::vector<Point>& points, double p, int resolution,
                                     double refine_tol = 1e-8) {
  return empirical_p_mean(points, p, make_grid(m, resolution), refine_tol);
}

struct MeanProcessRecord {
  std::size_t n;
  Point e_pn;
  double H_value;
  double gap;
  bool ambiguous;
  std::size_t basin_id;  // grid node representing the winning basin
  /// Local descent from e_{p,n-1} ended in a different basin than e_{p,n}.
  bool jumped;
  /// How e_pn was obtained; this module only produces "grid+refine".
  std::string method = "grid+refine";
};

/// e_{p,n} for n = 1..n_max along draws from `next_point`. Each step sweeps
/// the whole grid (updated incrementally) so basin jumps are caught, and
/// also refines locally from e_{p,n-1}.
inline std::vector<MeanProcessRecord> mean_process(const std::function<Point()>& next_point, double p,
                                                   std::size_t n_max, std::shared_ptr<const Grid> grid,
                                                   double refine_tol = 1e-8) {
  const Manifold& m = grid->manifold;
  PowerCost cost(p);
  std::vector<Point> points;
  std::vector<double> sums(grid->size(), 0.0);
  std::vector<MeanProcessRecord> out;
  std::optional<Point> previous;
  for (std::size_t n = 1; n <= n_max; ++n) {
    Point x = normalize(m, next_point());
    points.push_back(x);
    for (std::size_t i = 0; i < grid->size(); ++i) sums[i] += cost(distance(m, grid->nodes[i], x));
    ScalarField field{grid, sums};
    for (double& v : field.values) v /= static_cast<double>(n);
    DiscreteMeasure nu = uniform_empirical(points);
    MeanEstimate est = detail::p_mean_from_field(m, nu, p, field, refine_tol, previous);
    bool jumped = est.warm_local && distance(m, *est.warm_local, est.point) > 2.0 * grid->spacing;
    out.push_back({n, est.point, est.H_value, est.gap, est.ambiguous, est.basin_node, jumped});
    previous = est.point;
  }
  return out;
}

struct ProbeReport {
  std::string warning;  // non-empty when the uniqueness hypothesis fails
  std::vector<double> gaps;
  /// Histogram of log10(gap): bucket i counts gaps in [10^(lo+i), 10^(lo+i+1));
  /// `below` counts gaps < 10^lo (including exact zeros), `single` counts
  /// configurations with one basin.
  int log10_lo = -12;
  std::vector<std::size_t> counts;
  std::size_t below = 0;
  std::size_t single = 0;
  double tie_threshold = 0.0;
  std::size_t near_ties = 0;   // flagged at the base resolution
  std::size_t resolved = 0;    // flagged ties that disappear at 4x resolution
  std::size_t exact_ties = 0;  // flagged ties that persist at 4x resolution
};

/// Uniqueness holds almost surely when p > 1, or when d > 1 and N > 2.
inline bool uniqueness_hypothesis_holds(const Manifold& m, std::size_t N, double p) {
  return p > 1.0 || (m.dim() > 1 && N > 2);
}

/// Draw `trials` configurations of N i.i.d. points (uniform on M, or from
/// `law` when given) and record the uniqueness gap of each empirical p-mean.
/// Ties flagged at `resolution` are recomputed at 4x resolution.
inline ProbeReport uniqueness_probe(const Manifold& m, std::size_t N, double p,
                                    const std::optional<SmoothedMeasure>& law, std::size_t trials, int resolution,
                                    std::uint64_t seed, int jobs = default_jobs(), double refine_tol = 1e-8) {
  ProbeReport rep;
  if (!uniqueness_hypothesis_holds(m, N, p)) {
    rep.warning = "uniqueness needs p > 1 or (dim > 1 and N > 2); ties may have positive probability here";
  }
  auto grid = make_grid(m, resolution);
  rep.tie_threshold = tie_threshold(*grid, p);
  std::vector<std::vector<Point>> configs(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    RandomStream rng(seed, t);
    for (std::size_t k = 0; k < N; ++k) {
      configs[t].push_back(law ? sample_smoothed(m, *law, rng) : uniform_point(m, rng));
    }
  }
  std::vector<MeanEstimate> est(trials);
  parallel_for(trials, jobs, [&](std::size_t t) { est[t] = empirical_p_mean(configs[t], p, grid, refine_tol); });

  std::vector<std::size_t> flagged;
  for (std::size_t t = 0; t < trials; ++t) {
    rep.gaps.push_back(est[t].gap);
    if (est[t].ambiguous) flagged.push_back(t);
  }
  rep.near_ties = flagged.size();
  if (!flagged.empty()) {
    auto fine = make_grid(m, 4 * resolution);
    const double fine_tau = tie_threshold(*fine, p);
    for (auto t : flagged) {
      MeanEstimate e = empirical_p_mean(configs[t], p, fine, refine_tol);
      if (e.gap > fine_tau) ++rep.resolved; else ++rep.exact_ties;
    }
  }
  rep.counts.assign(static_cast<std::size_t>(-rep.log10_lo) + 2, 0);
  for (double g : rep.gaps) {
    if (std::isinf(g)) {
      ++rep.single;
    } else if (g < std::pow(10.0, rep.log10_lo)) {
      ++rep.below;
    } else {
      auto b = static_cast<std::size_t>(std::floor(std::log10(g)) - rep.log10_lo);
      ++rep.counts[std::min(b, rep.counts.size() - 1)];
    }
  }
  return rep;
}

}  // namespace pmean
