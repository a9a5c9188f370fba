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

// Partial simulated annealing on M:
//
//   d Theta_t = sigma(Theta_t) dB_t - beta_t grad kappa(., Y_t) dt,
//
// where Y_t is redrawn at the jumps of a Poisson process of intensity
// 1/gamma_t = 1 + t. In plain mode kappa = rho^p and Y ~ nu; in smoothed mode
// kappa = kappa_{s(t)} and Y ~ nu_{s(t)}. Schedules:
//   beta_t = ln(1 + t) / k,  gamma_t = 1 / (1 + t),  s_t = 1 / ln(1 + t).
//
// Discretization: Euler-Maruyama with exponential-map retraction, step
// min(h_max, c_step / beta_t), and every step split exactly at the jump
// times so Y is piecewise constant. beta and s are evaluated at t + t_offset
// (default e - 1, so beta_0 = 1/k and s_0 = 1); the Poisson clock runs on t.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <utility>
#include <string>
#include <vector>

#include "pmean/cost.hpp"
#include "pmean/errors.hpp"
#include "pmean/manifold.hpp"
#include "pmean/measure.hpp"
#include "pmean/parallel.hpp"
#include "pmean/rng.hpp"

namespace pmean {

enum class AnnealMode { plain, smoothed };

/// How the smoothed drift grad kappa_s is evaluated.
enum class DriftEstimator {
  series,  // exact eigen-expansion (HeatSmoothedCost)
  score,   // one-sample score-function estimate; unbiased, noisy
};

struct Schedules {
  double k = 1.0;
  AnnealMode mode = AnnealMode::smoothed;
  double t_offset = std::numbers::e - 1.0;
  /// Floor on s_t: heat-kernel series accuracy limit. 1/ln(1+t) only gets
  /// there at astronomically large t.
  double s_min = 5e-3;
  // Test hooks: hold beta or s constant.
  std::optional<double> frozen_beta;
  std::optional<double> frozen_s;

  double beta(double t) const { return frozen_beta ? *frozen_beta : std::log1p(t + t_offset) / k; }
  double gamma(double t) const { return 1.0 / (1.0 + t); }
  double s(double t) const { return frozen_s ? *frozen_s : std::max(s_min, 1.0 / std::log1p(t + t_offset)); }

  /// beta(t) and s(t) from a single logarithm.
  std::pair<double, double> beta_s(double t) const {
    const double l = (frozen_beta && frozen_s) ? 1.0 : std::log1p(t + t_offset);
    return {frozen_beta ? *frozen_beta : l / k, frozen_s ? *frozen_s : std::max(s_min, 1.0 / l)};
  }
};

/// Jump time after t for intensity 1 + t given an Exp(1) variate:
/// Lambda(t) = t + t^2/2, so t' = -1 + sqrt((1 + t)^2 + 2E).
inline double next_jump_time(double t, double exp_variate) {
  return -1.0 + std::sqrt((1.0 + t) * (1.0 + t) + 2.0 * exp_variate);
}

inline double next_jump_time(double t, RandomStream& rng) { return next_jump_time(t, rng.exponential()); }

/// Integrated intensity Lambda(t) = E[N_t].
inline double jump_intensity_integral(double t) { return t + 0.5 * t * t; }

struct AnnealState {
  double t = 0.0;
  Point theta;
  Point y;
  std::uint64_t jumps = 0;
};

/// One Euler-Maruyama step
///   Theta <- exp_Theta( sigma(Theta) sqrt(h) g - h beta drift(Theta, Y, s) ).
/// The caller keeps h within the current inter-jump interval.
template <class Drift>
AnnealState sde_step(const Manifold& m, const AnnealState& state, double h, const Schedules& sched, Drift&& drift,
                     RandomStream& rng, double noise_scale = 1.0) {
  if (!(h > 0.0)) throw ArgumentError("sde_step: h must be positive");
  const double beta = sched.beta(state.t);
  const double s = sched.s(state.t);
  Vec3 gauss{};
  for (int i = 0; i < m.noise_dim(); ++i) gauss[i] = rng.gaussian();
  TangentVector noise = noise_step(m, state.theta, gauss);
  TangentVector g = drift(state.theta, state.y, s);
  Vec3 v = (noise_scale * std::sqrt(h)) * noise.components - (h * beta) * g.components;
  AnnealState next = state;
  next.theta = exp(m, state.theta, v);
  next.t = state.t + h;
  return next;
}

struct TrajectorySample {
  double t;
  Point theta;
  Point y;
  double beta;
  double s;
  std::uint64_t jumps;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  std::uint64_t steps = 0;
  /// max over steps of |grad kappa| / K; at most 1 for the smoothed kernels.
  double max_drift_ratio = 0.0;
  /// Steps at t >= 1 whose drift displacement exceeded 10% of the
  /// injectivity radius.
  std::uint64_t cap_violations = 0;
};

struct AnnealConfig {
  Manifold manifold = Manifold::circle();
  std::vector<Point> atoms;
  std::vector<double> weights;  // empty: uniform
  double p = 2.0;
  Schedules schedules;
  double t_end = 1.0;
  double h_max = 0.01;
  std::uint64_t seed = 0;
  std::vector<double> output_times;
  std::optional<Point> theta0;
  DriftEstimator estimator = DriftEstimator::series;
  /// Scales the Brownian term; 0 gives the deterministic flow (test hook).
  double noise_scale = 1.0;
  /// Drift displacement per step is kept below this fraction of the
  /// injectivity radius: c_step = fraction * inj / K.
  double step_fraction = 0.1;

  DiscreteMeasure measure() const {
    if (atoms.empty()) throw ConfigError("measure", "no atoms");
    if (weights.empty()) return uniform_empirical(atoms);
    return DiscreteMeasure(atoms, weights);
  }
};

/// Throws ConfigError naming the first bad field.
inline void validate(const AnnealConfig& c) {
  if (c.atoms.empty()) throw ConfigError("measure", "no atoms");
  if (!c.weights.empty() && c.weights.size() != c.atoms.size()) throw ConfigError("measure.weights", "size mismatch");
  try {
    (void)c.measure();
  } catch (const ArgumentError& e) {
    throw ConfigError("measure", e.what());
  }
  if (!(c.p >= 1.0) || !std::isfinite(c.p)) throw ConfigError("p", "must be >= 1");
  if (!(c.schedules.k > 0.0) || !std::isfinite(c.schedules.k)) throw ConfigError("k", "must be > 0");
  if (!(c.schedules.s_min > 0.0)) throw ConfigError("s_min", "must be > 0");
  if (!(c.t_end >= 0.0) || !std::isfinite(c.t_end)) throw ConfigError("t_end", "must be >= 0");
  if (!(c.h_max > 0.0)) throw ConfigError("h_max", "must be > 0");
  for (double t : c.output_times) {
    if (!(t >= 0.0 && t <= c.t_end)) throw ConfigError("output_times", "must lie in [0, t_end]");
  }
  if (c.schedules.frozen_s && !(*c.schedules.frozen_s >= c.schedules.s_min)) {
    throw ConfigError("frozen_s", "must be >= s_min");
  }
  if (c.estimator == DriftEstimator::score && c.schedules.mode != AnnealMode::smoothed) {
    throw ConfigError("estimator", "score estimator needs smoothed mode");
  }
  if (!(c.step_fraction > 0.0)) throw ConfigError("step_fraction", "must be > 0");
}

/// Simulates one configuration; the kernel tables are built once and shared
/// read-only by every run.
class Annealer {
 public:
  explicit Annealer(AnnealConfig config) : config_(std::move(config)), measure_(validated_measure(config_)) {
    bound_ = gradient_bound(config_.manifold, config_.p);
    if (config_.schedules.mode == AnnealMode::smoothed) {
      series_ = std::make_shared<const HeatSmoothedCost>(config_.manifold, config_.p, config_.schedules.s_min);
    }
    c_step_ = config_.step_fraction * config_.manifold.injectivity_radius() / bound_.K;
  }

  const AnnealConfig& config() const noexcept { return config_; }
  const DiscreteMeasure& measure() const noexcept { return measure_; }
  const GradientBound& bound() const noexcept { return bound_; }

  /// grad_theta kappa(theta, y) at smoothing time s (ignored in plain mode).
  TangentVector drift(const Point& theta, const Point& y, double s, RandomStream& rng) const {
    const Manifold& m = config_.manifold;
    if (config_.schedules.mode == AnnealMode::plain) return grad_power_cost(m, config_.p, theta, y);
    if (config_.estimator == DriftEstimator::score) {
      return grad_kappa_s_score(m, SmoothedCost(PowerCost(config_.p), s, 16), theta, y, rng);
    }
    return series_->gradient(s, theta, y);
  }

  /// Full gradient: grad H in plain mode, grad U_{0,2s} in smoothed mode.
  TangentVector homogenized_drift(const Point& theta, double s) const {
    const Manifold& m = config_.manifold;
    TangentVector out = zero_tangent(theta);
    auto atoms = measure_.atoms();
    auto weights = measure_.weights();
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      TangentVector g = config_.schedules.mode == AnnealMode::plain ? grad_power_cost(m, config_.p, theta, atoms[i])
                                                                      : series_->gradient(2.0 * s, theta, atoms[i]);
      out.components = out.components + weights[i] * g.components;
    }
    return out;
  }

  struct NoObserver {
    void operator()(double, double, const Point&) const {}
  };

  /// The switched process. `observe(t, h, theta)` sees the state held over
  /// each step [t, t + h).
  template <class Observer = NoObserver>
  Trajectory run(std::uint64_t seed, Observer&& observe = {}) const {
    return simulate(seed, /*homogenized=*/false, observe);
  }

  /// The reference diffusion driven by the full gradient; no Poisson clock.
  template <class Observer = NoObserver>
  Trajectory run_homogenized(std::uint64_t seed, Observer&& observe = {}) const {
    return simulate(seed, /*homogenized=*/true, observe);
  }

 private:
  static DiscreteMeasure validated_measure(const AnnealConfig& c) {
    validate(c);
    return c.measure();
  }

  Point draw_target(double s, RandomStream& rng) const {
    if (config_.schedules.mode == AnnealMode::plain) return sample(measure_, rng);
    return sample_smoothed(config_.manifold, measure_, s, rng);
  }

  template <class Observer>
  Trajectory simulate(std::uint64_t seed, bool homogenized, Observer& observe) const {
    const Manifold& m = config_.manifold;
    const Schedules& sched = config_.schedules;
    RandomStream rng(seed);
    Trajectory traj;

    AnnealState st;
    st.theta = config_.theta0 ? normalize(m, *config_.theta0) : uniform_point(m, rng);
    const Point no_target{{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(),
                           std::numeric_limits<double>::quiet_NaN()}};
    st.y = homogenized ? no_target : draw_target(sched.s(0.0), rng);
    double next_jump = homogenized ? std::numeric_limits<double>::infinity() : next_jump_time(0.0, rng);

    std::vector<double> outputs;
    for (double t : config_.output_times) {
      if (t > 0.0) outputs.push_back(t);
    }
    std::sort(outputs.begin(), outputs.end());
    outputs.erase(std::unique(outputs.begin(), outputs.end()), outputs.end());
    std::size_t out_idx = 0;
    auto record = [&] { traj.samples.push_back({st.t, st.theta, st.y, sched.beta(st.t), sched.s(st.t), st.jumps}); };
    record();

    const double inj_cap = 0.1 * m.injectivity_radius();
    const int r = m.noise_dim();
    const double t_end = config_.t_end;
    const bool circle_fast = !homogenized && series_ && config_.estimator == DriftEstimator::series &&
                             m.kind() == ManifoldKind::circle;
    std::vector<double> weights;
    double weights_s = std::numeric_limits<double>::quiet_NaN();
    // Euler-Maruyama with left-endpoint theta, beta and s over each base step
    // [t0, t0 + h). The target Y is piecewise constant, so its contribution
    // to the drift integral is exact: sum over the targets active in the step
    // of (time active) * grad kappa(theta_0, y).
    while (st.t < t_end) {
      const auto [beta, s] = sched.beta_s(st.t);
      const double h_cap = beta > 0.0 ? std::min(config_.h_max, c_step_ / beta) : config_.h_max;
      double base_end = std::min(st.t + h_cap, t_end);
      if (out_idx < outputs.size()) base_end = std::min(base_end, outputs[out_idx]);
      if (circle_fast && s != weights_s) {
        series_->circle_derivative_weights(s, weights);
        weights_s = s;
      }
      const double t0 = st.t;
      const double h = base_end - t0;
      Vec3 drift_integral{};
      if (homogenized) {
        drift_integral = h * homogenized_drift(st.theta, s).components;
      } else {
        while (st.t < base_end) {
          const double t_next = std::min(base_end, next_jump);
          const double tau = t_next - st.t;
          if (tau > 0.0) {
            if (circle_fast) {
              drift_integral[0] += tau * HeatSmoothedCost::circle_derivative(
                                             weights, detail::periodic_delta(st.y.coords[0], st.theta.coords[0]));
            } else {
              drift_integral = drift_integral + tau * drift(st.theta, st.y, s, rng).components;
            }
          }
          st.t = t_next;
          if (st.t == next_jump) {
            ++st.jumps;
            st.y = draw_target(s, rng);
            next_jump = next_jump_time(st.t, rng);
          }
        }
      }
      st.t = base_end;
      if (h > 0.0) {
        const double gnorm = norm(drift_integral) / h;
        traj.max_drift_ratio = std::max(traj.max_drift_ratio, gnorm / bound_.K);
        if (t0 >= 1.0 && h * beta * gnorm > inj_cap) ++traj.cap_violations;
        Vec3 gauss{};
        for (int i = 0; i < r; ++i) gauss[i] = rng.gaussian();
        Vec3 v = (config_.noise_scale * std::sqrt(h)) * noise_step(m, st.theta, gauss).components -
                 beta * drift_integral;
        observe(t0, h, st.theta);
        st.theta = exp(m, st.theta, v);
        ++traj.steps;
      }
      while (out_idx < outputs.size() && outputs[out_idx] <= st.t) {
        record();
        ++out_idx;
      }
    }
    return traj;
  }

  AnnealConfig config_;
  DiscreteMeasure measure_;
  GradientBound bound_;
  std::shared_ptr<const HeatSmoothedCost> series_;
  double c_step_ = 0.0;
};

inline Trajectory run(const AnnealConfig& config) { return Annealer(config).run(config.seed); }

inline Trajectory run_homogenized(const AnnealConfig& config) { return Annealer(config).run_homogenized(config.seed); }

/// Geodesic ball; radius >= diameter covers M.
struct Neighborhood {
  Point center;
  double radius;

  bool contains(const Manifold& m, const Point& x) const { return distance(m, center, x) <= radius; }
};

struct WilsonInterval {
  double lo, hi;
};

/// 95% Wilson score interval for `hits` successes in `n` trials.
inline WilsonInterval wilson_interval(std::size_t hits, std::size_t n) {
  constexpr double z = 1.959963984540054;
  const double nn = static_cast<double>(n);
  const double phat = static_cast<double>(hits) / nn;
  const double denom = 1.0 + z * z / nn;
  const double center = (phat + z * z / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(phat * (1.0 - phat) / nn + z * z / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

struct EnsembleStats {
  std::vector<double> checkpoints;
  std::vector<std::size_t> hits;
  std::vector<double> fractions;
  std::vector<double> wilson_lo;
  std::vector<double> wilson_hi;
  std::size_t n_runs = 0;
  std::uint64_t seed = 0;
};

struct EnsembleResult {
  EnsembleStats stats;
  std::vector<Trajectory> runs;
};

/// n_runs independent runs, run i seeded with derive_seed(config.seed, i).
/// Records the fraction of runs inside `hood` at each checkpoint.
inline EnsembleResult ensemble(const AnnealConfig& config, std::size_t n_runs, const Neighborhood& hood,
                               std::vector<double> checkpoints, int jobs = default_jobs(), bool homogenized = false) {
  if (n_runs < 30) throw ConfigError("n_runs", "ensemble needs at least 30 runs");
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
  AnnealConfig cfg = config;
  cfg.output_times = checkpoints;
  const Annealer annealer(cfg);

  EnsembleResult result;
  result.runs.resize(n_runs);
  parallel_for(n_runs, jobs, [&](std::size_t i) {
    std::uint64_t seed = derive_seed(config.seed, i);
    result.runs[i] = homogenized ? annealer.run_homogenized(seed) : annealer.run(seed);
  });

  EnsembleStats& stats = result.stats;
  stats.checkpoints = checkpoints;
  stats.n_runs = n_runs;
  stats.seed = config.seed;
  for (double t : checkpoints) {
    std::size_t hits = 0;
    for (const auto& traj : result.runs) {
      auto it = std::find_if(traj.samples.begin(), traj.samples.end(), [&](const auto& s) { return s.t == t; });
      if (it == traj.samples.end()) throw NumericalError("ensemble: checkpoint missing from trajectory");
      if (hood.contains(cfg.manifold, it->theta)) ++hits;
    }
    auto ci = wilson_interval(hits, n_runs);
    stats.hits.push_back(hits);
    stats.fractions.push_back(static_cast<double>(hits) / static_cast<double>(n_runs));
    stats.wilson_lo.push_back(ci.lo);
    stats.wilson_hi.push_back(ci.hi);
  }
  return result;
}

}  // namespace pmean
