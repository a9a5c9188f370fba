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

#include "config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

namespace pmean::cli {
namespace {

void merge(toml::table& into, const toml::table& from) {
  for (const auto& [key, node] : from) {
    if (const auto* sub = node.as_table()) {
      if (auto* existing = into[key].as_table()) {
        merge(*existing, *sub);
        continue;
      }
    }
    into.insert_or_assign(key, node);
  }
}

toml::table parse_override(const std::string& item) {
  auto eq = item.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set", "expected key=value, got '" + item + "'");
  std::string key = item.substr(0, eq), value = item.substr(eq + 1);
  try {
    return toml::parse(key + " = " + value);
  } catch (const toml::parse_error&) {
  }
  try {
    nlohmann::json quoted = value;
    return toml::parse(key + " = " + quoted.dump());
  } catch (const toml::parse_error& e) {
    throw ConfigError(key, std::string(e.description()));
  }
}

class Reader {
 public:
  explicit Reader(const toml::table& root) : root_(root) {}

  const toml::node* find(const std::string& path) const {
    return root_.at_path(path).node();
  }

  double number(const std::string& path, double fallback) const {
    const auto* n = find(path);
    if (!n) return fallback;
    if (auto v = n->value<double>()) return *v;
    throw ConfigError(path, "expected a number");
  }

  double positive(const std::string& path, double fallback) const {
    double v = number(path, fallback);
    if (!(v > 0.0)) throw ConfigError(path, "must be positive");
    return v;
  }

  std::size_t count(const std::string& path, std::size_t fallback) const {
    const auto* n = find(path);
    if (!n) return fallback;
    auto v = n->value<std::int64_t>();
    if (!v) throw ConfigError(path, "expected an integer");
    if (*v < 0) throw ConfigError(path, "must be nonnegative");
    return static_cast<std::size_t>(*v);
  }

  std::string text(const std::string& path, const std::string& fallback) const {
    const auto* n = find(path);
    if (!n) return fallback;
    if (auto v = n->value<std::string>()) return *v;
    throw ConfigError(path, "expected a string");
  }

  bool flag(const std::string& path, bool fallback) const {
    const auto* n = find(path);
    if (!n) return fallback;
    if (auto v = n->value<bool>()) return *v;
    throw ConfigError(path, "expected true or false");
  }

  /// A number, or the string "auto" (returned as nullopt).
  std::optional<double> number_or_auto(const std::string& path, std::optional<double> fallback) const {
    const auto* n = find(path);
    if (!n) return fallback;
    if (auto v = n->value<std::string>()) {
      if (*v == "auto") return std::nullopt;
      throw ConfigError(path, "expected a number or \"auto\"");
    }
    if (auto v = n->value<double>()) return *v;
    throw ConfigError(path, "expected a number or \"auto\"");
  }

  std::vector<double> numbers(const std::string& path, std::vector<double> fallback) const {
    const auto* n = find(path);
    if (!n) return fallback;
    const auto* arr = n->as_array();
    if (!arr) throw ConfigError(path, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : *arr) {
      auto v = e.value<double>();
      if (!v) throw ConfigError(path, "expected an array of numbers");
      out.push_back(*v);
    }
    return out;
  }

  /// A point given as a number (1-dim chart) or an array of chart coords.
  Point point(const Manifold& m, const toml::node& n, const std::string& path) const {
    std::vector<double> coords;
    if (auto v = n.value<double>()) {
      coords.push_back(*v);
    } else if (const auto* arr = n.as_array()) {
      for (const auto& e : *arr) {
        auto c = e.value<double>();
        if (!c) throw ConfigError(path, "point coordinates must be numbers");
        coords.push_back(*c);
      }
    } else {
      throw ConfigError(path, "expected a point (number or array)");
    }
    if (static_cast<int>(coords.size()) != m.chart_size()) {
      throw ConfigError(path, "expected " + std::to_string(m.chart_size()) + " coordinates for " + m.name());
    }
    Point p;
    for (std::size_t i = 0; i < coords.size(); ++i) p.coords[i] = coords[i];
    try {
      return normalize(m, p);
    } catch (const ArgumentError& e) {
      throw ConfigError(path, e.what());
    }
  }

  std::optional<Point> point_or_auto(const Manifold& m, const std::string& path) const {
    const auto* n = find(path);
    if (!n) return std::nullopt;
    if (auto v = n->value<std::string>()) {
      if (*v == "auto") return std::nullopt;
      throw ConfigError(path, "expected a point or \"auto\"");
    }
    return point(m, *n, path);
  }

 private:
  const toml::table& root_;
};

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "manifold", "p", "seed", "out", "jobs",
      "measure.atoms", "measure.weights", "measure.csv",
      "schedule.k", "schedule.mode", "schedule.estimator", "schedule.t_offset", "schedule.s_min",
      "schedule.frozen_beta", "schedule.frozen_s",
      "run.t_end", "run.h_max", "run.n_runs", "run.output_times", "run.theta0", "run.homogenized",
      "run.trajectories",
      "neighborhood.center", "neighborhood.radius",
      "landscape.resolution",
      "lemma2.s1", "lemma2.s2", "lemma2.points", "lemma2.nodes",
      "empirical.n_max", "empirical.streams", "empirical.probe_n", "empirical.trials", "empirical.resolution",
      "empirical.law_s", "empirical.refine_tol"};
  return keys;
}

// Typos would otherwise fall back to defaults silently.
void reject_unknown(const toml::table& t, const std::string& prefix) {
  for (const auto& [k, v] : t) {
    std::string path = prefix.empty() ? std::string(k.str()) : prefix + "." + std::string(k.str());
    if (known_keys().count(path)) continue;
    if (const auto* sub = v.as_table(); sub && prefix.empty()) {
      reject_unknown(*sub, path);
      continue;
    }
    throw ConfigError(path, "unknown key");
  }
}

}  // namespace

DiscreteMeasure RunConfig::measure() const {
  if (!measure_csv.empty()) {
    std::ifstream in(measure_csv);
    if (!in) throw ConfigError("measure.csv", "cannot open '" + measure_csv + "'");
    try {
      return parse_measure_csv(manifold, in);
    } catch (const ArgumentError& e) {
      throw ConfigError("measure.csv", e.what());
    }
  }
  if (atoms.empty()) throw ConfigError("measure", "this command needs measure.atoms or measure.csv");
  try {
    return weights.empty() ? uniform_empirical(atoms) : DiscreteMeasure(atoms, weights);
  } catch (const ArgumentError& e) {
    throw ConfigError("measure.atoms", e.what());
  }
}

AnnealConfig RunConfig::anneal_config(double k_value) const {
  AnnealConfig a;
  a.manifold = manifold;
  DiscreteMeasure nu = measure();
  a.atoms.assign(nu.atoms().begin(), nu.atoms().end());
  a.weights.assign(nu.weights().begin(), nu.weights().end());
  a.p = p;
  a.schedules.k = k_value;
  a.schedules.mode = mode;
  a.schedules.t_offset = t_offset;
  a.schedules.s_min = s_min;
  a.schedules.frozen_beta = frozen_beta;
  a.schedules.frozen_s = frozen_s;
  a.t_end = t_end;
  a.h_max = h_max;
  a.seed = seed;
  a.output_times = output_times;
  a.theta0 = theta0;
  a.estimator = estimator;
  return a;
}

RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << e.description() << " at line " << e.source().begin.line;
    throw ConfigError("syntax", msg.str());
  }
  for (const auto& item : overrides) merge(root, parse_override(item));
  reject_unknown(root, "");

  Reader r(root);
  RunConfig c;
  c.source = source;
  try {
    c.manifold = Manifold::parse(r.text("manifold", "circle"));
  } catch (const ArgumentError& e) {
    throw ConfigError("manifold", e.what());
  }
  const Manifold& m = c.manifold;

  if (const auto* atoms = r.find("measure.atoms")) {
    const auto* arr = atoms->as_array();
    if (!arr) throw ConfigError("measure.atoms", "expected an array of points");
    for (std::size_t i = 0; i < arr->size(); ++i) {
      c.atoms.push_back(r.point(m, *arr->get(i), "measure.atoms"));
    }
  }
  c.weights = r.numbers("measure.weights", {});
  c.measure_csv = r.text("measure.csv", "");
  if (!c.atoms.empty() && !c.measure_csv.empty()) {
    throw ConfigError("measure", "give only one of measure.atoms or measure.csv");
  }
  if (!c.weights.empty() && c.weights.size() != c.atoms.size()) {
    throw ConfigError("measure.weights", "needs one weight per atom");
  }
  c.p = r.number("p", c.p);
  if (!(c.p >= 1.0)) throw ConfigError("p", "must be >= 1");

  c.k = r.number_or_auto("schedule.k", std::nullopt);
  if (c.k && !(*c.k > 0.0)) throw ConfigError("schedule.k", "must be positive");
  std::string mode = r.text("schedule.mode", "smoothed");
  if (mode == "smoothed") c.mode = AnnealMode::smoothed;
  else if (mode == "plain") c.mode = AnnealMode::plain;
  else throw ConfigError("schedule.mode", "expected \"smoothed\" or \"plain\"");
  std::string est = r.text("schedule.estimator", "series");
  if (est == "series") c.estimator = DriftEstimator::series;
  else if (est == "score") c.estimator = DriftEstimator::score;
  else throw ConfigError("schedule.estimator", "expected \"series\" or \"score\"");
  c.t_offset = r.number("schedule.t_offset", c.t_offset);
  if (!(c.t_offset >= 0.0)) throw ConfigError("schedule.t_offset", "must be nonnegative");
  c.s_min = r.positive("schedule.s_min", c.s_min);
  if (r.find("schedule.frozen_beta")) c.frozen_beta = r.positive("schedule.frozen_beta", 1.0);
  if (r.find("schedule.frozen_s")) c.frozen_s = r.positive("schedule.frozen_s", 1.0);

  c.t_end = r.positive("run.t_end", c.t_end);
  c.h_max = r.positive("run.h_max", c.h_max);
  c.seed = r.count("seed", c.seed);
  c.n_runs = r.count("run.n_runs", c.n_runs);
  if (c.n_runs == 0) throw ConfigError("run.n_runs", "must be positive");
  c.output_times = r.numbers("run.output_times", c.output_times);
  for (double t : c.output_times) {
    if (!(t > 0.0) || t > c.t_end) throw ConfigError("run.output_times", "times must lie in (0, t_end]");
  }
  if (const auto* n = r.find("run.theta0")) c.theta0 = r.point(m, *n, "run.theta0");
  c.homogenized = r.flag("run.homogenized", false);
  c.trajectories = r.count("run.trajectories", c.n_runs);

  c.hood_center = r.point_or_auto(m, "neighborhood.center");
  c.hood_radius = r.positive("neighborhood.radius", c.hood_radius);

  c.resolution = static_cast<int>(r.count("landscape.resolution", static_cast<std::size_t>(c.resolution)));
  if (c.resolution < 4) throw ConfigError("landscape.resolution", "must be at least 4");

  c.s1 = r.number("lemma2.s1", c.s1);
  if (!(c.s1 >= 0.0)) throw ConfigError("lemma2.s1", "must be nonnegative");
  c.s2 = r.positive("lemma2.s2", c.s2);
  c.lemma_points = r.count("lemma2.points", c.lemma_points);
  c.lemma_nodes = static_cast<int>(r.count("lemma2.nodes", static_cast<std::size_t>(c.lemma_nodes)));
  if (c.lemma_nodes < 8) throw ConfigError("lemma2.nodes", "must be at least 8");

  c.n_max = r.count("empirical.n_max", c.n_max);
  c.streams = r.count("empirical.streams", c.streams);
  c.probe_n = r.count("empirical.probe_n", c.probe_n);
  if (c.probe_n == 0) throw ConfigError("empirical.probe_n", "must be positive");
  c.probe_trials = r.count("empirical.trials", c.probe_trials);
  c.probe_resolution =
      static_cast<int>(r.count("empirical.resolution", static_cast<std::size_t>(c.probe_resolution)));
  if (c.probe_resolution < 4) throw ConfigError("empirical.resolution", "must be at least 4");
  if (r.find("empirical.law_s")) c.law_s = r.positive("empirical.law_s", 1.0);
  c.refine_tol = r.positive("empirical.refine_tol", c.refine_tol);

  c.out_dir = r.text("out", c.out_dir);
  c.jobs = static_cast<int>(r.count("jobs", static_cast<std::size_t>(default_jobs())));
  if (c.jobs < 1) throw ConfigError("jobs", "must be positive");
  return c;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) throw ConfigError("", "file not found");
  std::ifstream in(path);
  if (!in) throw ConfigError("", "file not readable");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), overrides, path);
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  using nlohmann::ordered_json;
  auto point_json = [&](const Point& x) {
    ordered_json a = ordered_json::array();
    for (int i = 0; i < c.manifold.chart_size(); ++i) a.push_back(x.coords[i]);
    return a;
  };
  ordered_json j;
  j["manifold"] = c.manifold.name();
  ordered_json measure;
  if (c.measure_csv.empty()) {
    measure["atoms"] = ordered_json::array();
    for (const auto& a : c.atoms) measure["atoms"].push_back(point_json(a));
    if (!c.weights.empty()) measure["weights"] = c.weights;
  } else {
    measure["csv"] = c.measure_csv;
  }
  j["measure"] = measure;
  j["p"] = c.p;
  j["seed"] = c.seed;
  j["schedule"] = {{"k", c.k ? ordered_json(*c.k) : ordered_json("auto")},
                   {"mode", c.mode == AnnealMode::smoothed ? "smoothed" : "plain"},
                   {"estimator", c.estimator == DriftEstimator::series ? "series" : "score"},
                   {"t_offset", c.t_offset},
                   {"s_min", c.s_min}};
  if (c.frozen_beta) j["schedule"]["frozen_beta"] = *c.frozen_beta;
  if (c.frozen_s) j["schedule"]["frozen_s"] = *c.frozen_s;
  j["run"] = {{"t_end", c.t_end},
              {"h_max", c.h_max},
              {"n_runs", c.n_runs},
              {"output_times", c.output_times},
              {"homogenized", c.homogenized}};
  if (c.theta0) j["run"]["theta0"] = point_json(*c.theta0);
  j["neighborhood"] = {{"center", c.hood_center ? point_json(*c.hood_center) : ordered_json("auto")},
                       {"radius", c.hood_radius}};
  j["landscape"] = {{"resolution", c.resolution}};
  j["lemma2"] = {{"s1", c.s1}, {"s2", c.s2}, {"points", c.lemma_points}, {"nodes", c.lemma_nodes}};
  j["empirical"] = {{"n_max", c.n_max},
                    {"streams", c.streams},
                    {"probe_n", c.probe_n},
                    {"trials", c.probe_trials},
                    {"resolution", c.probe_resolution},
                    {"law_s", c.law_s ? ordered_json(*c.law_s) : ordered_json("uniform")},
                    {"refine_tol", c.refine_tol}};
  return j;
}

}  // namespace pmean::cli
