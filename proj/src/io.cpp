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

#include "io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace pmean::cli {

using nlohmann::ordered_json;

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

ordered_json point_json(const Manifold& m, const Point& x) {
  ordered_json a = ordered_json::array();
  for (int i = 0; i < m.chart_size(); ++i) a.push_back(x.coords[i]);
  return a;
}

ordered_json number_json(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

namespace {

std::string coord_header(const Manifold& m, const std::string& prefix) {
  std::string h;
  for (int i = 0; i < m.chart_size(); ++i) h += "," + prefix + "_" + std::to_string(i);
  return h;
}

void put_coords(std::ostream& os, const Manifold& m, const Point& x) {
  for (int i = 0; i < m.chart_size(); ++i) os << ',' << format_number(x.coords[i]);
}

}  // namespace

std::string field_csv(const ScalarField& field) {
  const Grid& g = *field.grid;
  std::ostringstream os;
  os << "node" << coord_header(g.manifold, "x") << ",value\n";
  for (std::size_t i = 0; i < g.size(); ++i) {
    os << i;
    put_coords(os, g.manifold, g.nodes[i]);
    os << ',' << format_number(field.values[i]) << '\n';
  }
  return os.str();
}

std::string trajectory_csv(const Manifold& m, const Trajectory& traj) {
  std::ostringstream os;
  os << 't' << coord_header(m, "theta") << coord_header(m, "y") << ",beta,s,jumps\n";
  for (const auto& s : traj.samples) {
    os << format_number(s.t);
    put_coords(os, m, s.theta);
    put_coords(os, m, s.y);
    os << ',' << format_number(s.beta) << ',' << format_number(s.s) << ',' << s.jumps << '\n';
  }
  return os.str();
}

ordered_json elevation_json(const ScalarField& field, const ElevationReport& rep) {
  const Grid& g = *field.grid;
  ordered_json j;
  j["c_U"] = rep.c_U;
  j["recommended_k"] = recommended_k(rep.c_U);
  j["global_min"] = rep.global_min;
  j["barrier"] = rep.barrier;
  j["argpair"] = {point_json(g.manifold, g.nodes[rep.argpair.first]),
                  point_json(g.manifold, g.nodes[rep.argpair.second])};
  ordered_json path = ordered_json::array();
  for (auto node : rep.barrier_path) path.push_back(point_json(g.manifold, g.nodes[node]));
  j["barrier_path"] = path;
  j["resolution"] = g.resolution;
  j["nodes"] = g.size();
  return j;
}

ordered_json ensemble_json(const EnsembleStats& stats) {
  ordered_json j;
  j["checkpoints"] = stats.checkpoints;
  j["hits"] = stats.hits;
  j["fractions"] = stats.fractions;
  j["wilson_lo"] = stats.wilson_lo;
  j["wilson_hi"] = stats.wilson_hi;
  j["n_runs"] = stats.n_runs;
  j["seed"] = stats.seed;
  return j;
}

std::string mean_process_csv(const Manifold& m, const std::vector<std::vector<MeanProcessRecord>>& streams) {
  std::ostringstream os;
  os << "stream,n" << coord_header(m, "e_pn") << ",H_value,gap,ambiguous,basin_id,jumped,method\n";
  for (std::size_t k = 0; k < streams.size(); ++k) {
    for (const auto& r : streams[k]) {
      os << k << ',' << r.n;
      put_coords(os, m, r.e_pn);
      os << ',' << format_number(r.H_value) << ',' << format_number(r.gap) << ',' << (r.ambiguous ? 1 : 0) << ','
         << r.basin_id << ',' << (r.jumped ? 1 : 0) << ',' << r.method << '\n';
    }
  }
  return os.str();
}

ordered_json probe_json(const ProbeReport& rep) {
  ordered_json j;
  j["warning"] = rep.warning.empty() ? ordered_json(nullptr) : ordered_json(rep.warning);
  j["trials"] = rep.gaps.size();
  j["tie_threshold"] = rep.tie_threshold;
  j["near_ties"] = rep.near_ties;
  j["resolved_at_4x"] = rep.resolved;
  j["exact_ties"] = rep.exact_ties;
  ordered_json buckets = ordered_json::array();
  buckets.push_back({{"log10_gap", "below " + std::to_string(rep.log10_lo)}, {"count", rep.below}});
  for (std::size_t i = 0; i < rep.counts.size(); ++i) {
    int lo = rep.log10_lo + static_cast<int>(i);
    bool last = i + 1 == rep.counts.size();
    buckets.push_back({{"log10_gap", last ? ">= " + std::to_string(lo) : std::to_string(lo)}, {"count", rep.counts[i]}});
  }
  buckets.push_back({{"log10_gap", "single basin"}, {"count", rep.single}});
  j["histogram"] = buckets;
  return j;
}

std::string hitrate_svg(const EnsembleStats& stats) {
  const double width = 640, height = 400, left = 60, right = 20, top = 20, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;
  std::vector<double> lx;
  for (double t : stats.checkpoints) lx.push_back(std::log10(std::max(t, 1e-12)));
  double xmin = lx.empty() ? 0.0 : *std::min_element(lx.begin(), lx.end());
  double xmax = lx.empty() ? 1.0 : *std::max_element(lx.begin(), lx.end());
  if (xmax - xmin < 1e-9) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  auto X = [&](double v) { return left + pw * (v - xmin) / (xmax - xmin); };
  auto Y = [&](double f) { return top + ph * (1.0 - f); };
  auto num = [](double v) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << v;
    return os.str();
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
     << "\" stroke=\"black\"/>\n";
  for (double f : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    os << "<text x=\"" << left - 8 << "\" y=\"" << num(Y(f) + 4) << "\" font-size=\"11\" text-anchor=\"end\">"
       << num(f) << "</text>\n";
  }
  for (std::size_t i = 0; i < lx.size(); ++i) {
    os << "<text x=\"" << num(X(lx[i])) << "\" y=\"" << top + ph + 16
       << "\" font-size=\"11\" text-anchor=\"middle\">1e" << num(lx[i]) << "</text>\n";
    os << "<line x1=\"" << num(X(lx[i])) << "\" y1=\"" << num(Y(stats.wilson_lo[i])) << "\" x2=\"" << num(X(lx[i]))
       << "\" y2=\"" << num(Y(stats.wilson_hi[i])) << "\" stroke=\"gray\" stroke-width=\"2\"/>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 10
     << "\" font-size=\"12\" text-anchor=\"middle\">t (log scale)</text>\n";
  os << "<text x=\"14\" y=\"" << top + ph / 2 << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
     << top + ph / 2 << ")\">hit fraction</text>\n";
  os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < lx.size(); ++i) {
    os << (i ? " " : "") << num(X(lx[i])) << ',' << num(Y(stats.fractions[i]));
  }
  os << "\"/>\n";
  for (std::size_t i = 0; i < lx.size(); ++i) {
    os << "<circle cx=\"" << num(X(lx[i])) << "\" cy=\"" << num(Y(stats.fractions[i]))
       << "\" r=\"3\" fill=\"steelblue\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace pmean::cli
