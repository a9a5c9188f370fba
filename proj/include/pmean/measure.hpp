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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "pmean/errors.hpp"
#include "pmean/manifold.hpp"
#include "pmean/rng.hpp"

namespace pmean {

/// Finitely supported probability measure sum_i w_i delta_{x_i}.
class DiscreteMeasure {
 public:
  DiscreteMeasure(std::vector<Point> atoms, std::vector<double> weights)
      : atoms_(std::move(atoms)), weights_(std::move(weights)) {
    if (atoms_.empty()) throw ArgumentError("measure needs at least one atom");
    if (atoms_.size() != weights_.size()) throw ArgumentError("atom and weight counts differ");
    double total = 0.0;
    for (double w : weights_) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw ArgumentError("weights must be finite and nonnegative");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ArgumentError("weights must sum to 1");
    for (double& w : weights_) w /= total;
    cumulative_.resize(weights_.size());
    std::partial_sum(weights_.begin(), weights_.end(), cumulative_.begin());
    cumulative_.back() = 1.0;
  }

  std::span<const Point> atoms() const noexcept { return atoms_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::size_t size() const noexcept { return atoms_.size(); }

  /// Atom index for a uniform draw u in [0,1) (inverse CDF over weights).
  std::size_t index_for(double u) const {
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), atoms_.size() - 1);
  }

 private:
  std::vector<Point> atoms_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
};

/// Heat-smoothed measure nu_s with density y -> sum_i w_i p(s, y, x_i).
struct SmoothedMeasure {
  DiscreteMeasure base;
  double s;

  SmoothedMeasure(DiscreteMeasure measure, double time) : base(std::move(measure)), s(time) {
    if (!(s > 0.0)) throw DomainError("smoothed measure needs s > 0");
  }
};

/// Empirical measure (1/N) sum_k delta_{x_k}.
inline DiscreteMeasure uniform_empirical(std::vector<Point> points) {
  if (points.empty()) throw ArgumentError("uniform_empirical: empty point list");
  std::vector<double> weights(points.size(), 1.0 / static_cast<double>(points.size()));
  return DiscreteMeasure(std::move(points), std::move(weights));
}

inline Point sample(const DiscreteMeasure& nu, RandomStream& rng) { return nu.atoms()[nu.index_for(rng.uniform())]; }

inline Point sample_smoothed(const Manifold& m, const DiscreteMeasure& nu, double s, RandomStream& rng) {
  const Point& atom = sample(nu, rng);
  return sample_heat(m, s, atom, rng);
}

inline Point sample_smoothed(const Manifold& m, const SmoothedMeasure& nu_s, RandomStream& rng) {
  return sample_smoothed(m, nu_s.base, nu_s.s, rng);
}

inline double density_smoothed(const Manifold& m, const SmoothedMeasure& nu_s, const Point& y) {
  double sum = 0.0;
  auto atoms = nu_s.base.atoms();
  auto weights = nu_s.base.weights();
  for (std::size_t i = 0; i < atoms.size(); ++i) sum += weights[i] * heat_kernel(m, nu_s.s, y, atoms[i]);
  return sum;
}

/// CSV with one atom per row: chart coordinates, then an optional weight.
/// Either every row has a weight or none does (uniform). Weights are
/// renormalized to sum to 1. Blank lines and lines starting with '#' are skipped.
inline DiscreteMeasure parse_measure_csv(const Manifold& m, std::istream& in) {
  std::vector<Point> atoms;
  std::vector<double> weights;
  std::string line;
  int weighted_rows = 0;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::vector<double> fields;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        fields.push_back(std::stod(item));
      } catch (const std::logic_error&) {
        throw ArgumentError("measure csv line " + std::to_string(line_no) + ": bad number '" + item + "'");
      }
    }
    const auto c = static_cast<std::size_t>(m.chart_size());
    if (fields.size() != c && fields.size() != c + 1) {
      throw ArgumentError("measure csv line " + std::to_string(line_no) + ": expected " + std::to_string(c) +
                          " or " + std::to_string(c + 1) + " columns");
    }
    Point p;
    std::copy_n(fields.begin(), c, p.coords.begin());
    atoms.push_back(normalize(m, p));
    if (fields.size() == c + 1) {
      ++weighted_rows;
      weights.push_back(fields.back());
    }
  }
  if (atoms.empty()) throw ArgumentError("measure csv has no atoms");
  if (weighted_rows == 0) return uniform_empirical(std::move(atoms));
  if (static_cast<std::size_t>(weighted_rows) != atoms.size()) {
    throw ArgumentError("measure csv mixes weighted and unweighted rows");
  }
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw ArgumentError("measure csv weights must have positive sum");
  for (double& w : weights) w /= total;
  return DiscreteMeasure(std::move(atoms), std::move(weights));
}

}  // namespace pmean
