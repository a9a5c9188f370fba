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

// Run configuration: TOML file plus command-line overrides.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmean/anneal.hpp"
#include "pmean/manifold.hpp"
#include "pmean/measure.hpp"

namespace pmean::cli {

struct RunConfig {
  std::string source;  // config path, for messages only
  Manifold manifold = Manifold::circle();

  // [measure]: inline atoms or a CSV file (chart coords, optional weight).
  std::vector<Point> atoms;
  std::vector<double> weights;
  std::string measure_csv;
  double p = 2.0;

  // [schedule]
  std::optional<double> k;  // empty: "auto", from the landscape
  AnnealMode mode = AnnealMode::smoothed;
  DriftEstimator estimator = DriftEstimator::series;
  double t_offset = std::numbers::e - 1.0;
  double s_min = 5e-3;
  std::optional<double> frozen_beta;
  std::optional<double> frozen_s;

  // [run]
  double t_end = 1e4;
  double h_max = 0.01;
  std::uint64_t seed = 1;
  std::size_t n_runs = 100;
  std::vector<double> output_times = {1e2, 1e3, 1e4};
  std::optional<Point> theta0;
  bool homogenized = false;
  std::size_t trajectories = 100;  // how many runs_NNN.csv files to write

  // [neighborhood]
  std::optional<Point> hood_center;  // empty: "auto", the oracle argmin
  double hood_radius = 0.05;

  // [landscape]
  int resolution = 4096;

  // [lemma2]
  double s1 = 0.05;
  double s2 = 0.05;
  std::size_t lemma_points = 50;
  int lemma_nodes = 2048;

  // [empirical]
  std::size_t n_max = 200;
  std::size_t streams = 20;
  std::size_t probe_n = 3;
  std::size_t probe_trials = 200;
  int probe_resolution = 4096;
  std::optional<double> law_s;  // empty: uniform law
  double refine_tol = 1e-8;

  std::string out_dir = "out";
  int jobs = 1;

  DiscreteMeasure measure() const;
  AnnealConfig anneal_config(double k_value) const;
};

/// Parse `text` as TOML. `overrides` are "dotted.key=value" strings applied
/// on top; a value that is not valid TOML is taken as a string.
RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {},
                       const std::string& source = "<string>");

/// Throws ConfigError("", "file not found") if `path` does not exist.
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Resolved configuration for echoing into output files.
nlohmann::ordered_json to_json(const RunConfig& c);

}  // namespace pmean::cli
