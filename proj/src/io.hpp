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

// Output writers. Everything here is a pure function of its inputs so
// reruns with the same seed give byte-identical files.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmean/anneal.hpp"
#include "pmean/empirics.hpp"
#include "pmean/landscape.hpp"

namespace pmean::cli {

/// Failure to read or write an output file.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest round-trip decimal form; "inf", "-inf", "nan" for non-finite.
std::string format_number(double x);

nlohmann::ordered_json point_json(const Manifold& m, const Point& x);

/// JSON number, or the string "inf" for an infinite value.
nlohmann::ordered_json number_json(double x);

void write_file(const std::filesystem::path& path, const std::string& content);

/// Columns: node, x_0.., value.
std::string field_csv(const ScalarField& field);

/// Columns: t, theta_0.., y_0.., beta, s, jumps.
std::string trajectory_csv(const Manifold& m, const Trajectory& traj);

nlohmann::ordered_json elevation_json(const ScalarField& field, const ElevationReport& rep);

nlohmann::ordered_json ensemble_json(const EnsembleStats& stats);

/// Columns: stream, n, e_pn_0.., H_value, gap, ambiguous, basin_id, jumped, method.
std::string mean_process_csv(const Manifold& m, const std::vector<std::vector<MeanProcessRecord>>& streams);

nlohmann::ordered_json probe_json(const ProbeReport& rep);

/// Hit fraction against log10 t with Wilson bands.
std::string hitrate_svg(const EnsembleStats& stats);

}  // namespace pmean::cli
