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

#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "config.hpp"
#include "io.hpp"
#include "pmean/anneal.hpp"
#include "pmean/cost.hpp"
#include "pmean/empirics.hpp"
#include "pmean/landscape.hpp"

#ifndef PMEAN_VERSION
#define PMEAN_VERSION "1.0.0"
#endif

namespace pmean::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct Options {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out_dir;
  bool dry_run = false;
};

RunConfig resolve(const Options& o) {
  std::vector<std::string> overrides = o.overrides;
  if (o.seed) overrides.push_back("seed=" + std::to_string(*o.seed));
  if (o.jobs) overrides.push_back("jobs=" + std::to_string(*o.jobs));
  if (o.out_dir) overrides.push_back("out=" + ordered_json(*o.out_dir).dump());
  return load_config(o.config_path, overrides);
}

ordered_json stamp(ordered_json payload, const RunConfig& c) {
  payload["config"] = to_json(c);
  payload["version"] = PMEAN_VERSION;
  return payload;
}

void write_json(const RunConfig& c, const std::string& name, const ordered_json& j) {
  write_file(fs::path(c.out_dir) / name, j.dump(2) + "\n");
}

ScalarField cost_field(const RunConfig& c, const DiscreteMeasure& nu) {
  return evaluate_field([&](const Point& y) { return H(c.manifold, nu, c.p, y); }, c.manifold, c.resolution);
}

struct Resolved {
  double k;
  std::optional<ElevationReport> elevation;
  Neighborhood hood;
};

Resolved resolve_auto(const RunConfig& c) {
  DiscreteMeasure nu = c.measure();
  std::optional<ScalarField> field;
  auto get_field = [&]() -> const ScalarField& {
    if (!field) field = cost_field(c, nu);
    return *field;
  };
  Resolved r{};
  if (c.k) {
    r.k = *c.k;
  } else {
    r.elevation = elevation_constant(get_field());
    r.k = recommended_k(r.elevation->c_U);
  }
  if (c.hood_center) {
    r.hood = {*c.hood_center, c.hood_radius};
  } else {
    MeanEstimate est = detail::p_mean_from_field(c.manifold, nu, c.p, get_field(), c.refine_tol, std::nullopt);
    r.hood = {est.point, c.hood_radius};
  }
  return r;
}

ordered_json resolved_json(const RunConfig& c, const Resolved& r) {
  ordered_json j;
  j["k"] = r.k;
  if (r.elevation) j["c_U"] = r.elevation->c_U;
  j["neighborhood"] = {{"center", point_json(c.manifold, r.hood.center)}, {"radius", r.hood.radius}};
  return j;
}

int cmd_anneal(const Options& o, std::ostream& out, std::ostream&) {
  RunConfig c = resolve(o);
  Resolved r = resolve_auto(c);
  if (o.dry_run) {
    out << stamp({{"resolved", resolved_json(c, r)}}, c).dump(2) << "\n";
    return kExitOk;
  }
  AnnealConfig acfg = c.anneal_config(r.k);
  EnsembleResult res = ensemble(acfg, c.n_runs, r.hood, c.output_times, c.jobs, c.homogenized);
  const std::size_t keep = std::min(c.trajectories, res.runs.size());
  for (std::size_t i = 0; i < keep; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "runs_%03zu.csv", i);
    write_file(fs::path(c.out_dir) / name, trajectory_csv(c.manifold, res.runs[i]));
  }
  ordered_json j = ensemble_json(res.stats);
  j["resolved"] = resolved_json(c, r);
  write_json(c, "ensemble.json", stamp(j, c));
  write_file(fs::path(c.out_dir) / "hitrate.svg", hitrate_svg(res.stats));
  for (std::size_t i = 0; i < res.stats.checkpoints.size(); ++i) {
    out << "t=" << format_number(res.stats.checkpoints[i]) << " hit fraction " << format_number(res.stats.fractions[i])
        << " [" << format_number(res.stats.wilson_lo[i]) << ", " << format_number(res.stats.wilson_hi[i]) << "]\n";
  }
  return kExitOk;
}

int cmd_oracle(const Options& o, std::ostream& out, std::ostream&) {
  RunConfig c = resolve(o);
  DiscreteMeasure nu = c.measure();
  ScalarField field = cost_field(c, nu);
  const double tau = tie_threshold(*field.grid, c.p);
  MinimizerSet ms = minimizers(field, tau);
  MeanEstimate est = detail::p_mean_from_field(c.manifold, nu, c.p, field, c.refine_tol, std::nullopt);
  write_file(fs::path(c.out_dir) / "landscape.csv", field_csv(field));
  ordered_json j;
  j["argmin"] = point_json(c.manifold, est.point);
  j["H_value"] = est.H_value;
  j["gap"] = number_json(est.gap);
  j["ambiguous"] = est.ambiguous;
  j["tie_threshold"] = tau;
  j["grid_min"] = ms.global_min;
  j["grid_gap"] = number_json(ms.gap);
  j["basins"] = ms.basins.size();
  j["near_min_nodes"] = ms.q.size();
  j["near_min_clusters"] = ms.clusters.size();
  write_json(c, "oracle.json", stamp(j, c));
  out << "argmin " << format_point(c.manifold, est.point) << " H " << format_number(est.H_value) << " gap "
      << format_number(est.gap) << (est.ambiguous ? " (ambiguous)" : "") << "\n";
  return kExitOk;
}

int cmd_landscape(const Options& o, std::ostream& out, std::ostream&) {
  RunConfig c = resolve(o);
  ScalarField field = cost_field(c, c.measure());
  ElevationReport rep = elevation_constant(field);
  write_json(c, "elevation.json", stamp(elevation_json(field, rep), c));
  out << "c_U " << format_number(rep.c_U) << " recommended k " << format_number(recommended_k(rep.c_U)) << "\n";
  return kExitOk;
}

int cmd_lemma2(const Options& o, std::ostream& out, std::ostream&) {
  RunConfig c = resolve(o);
  DiscreteMeasure nu = c.measure();
  RandomStream rng(c.seed);
  ordered_json rows = ordered_json::array();
  double worst = 0.0;
  for (std::size_t i = 0; i < c.lemma_points; ++i) {
    Point theta = uniform_point(c.manifold, rng);
    double split = U_smoothed(c.manifold, nu, c.p, c.s1, c.s2, theta, c.lemma_nodes);
    double joined = U_smoothed(c.manifold, nu, c.p, 0.0, c.s1 + c.s2, theta, c.lemma_nodes);
    worst = std::max(worst, std::abs(split - joined));
    rows.push_back({{"theta", point_json(c.manifold, theta)}, {"U_split", split}, {"U_joined", joined}});
  }
  ordered_json j;
  j["max_discrepancy"] = worst;
  j["points"] = rows;
  write_json(c, "lemma2.json", stamp(j, c));
  out << "max discrepancy " << format_number(worst) << "\n";
  return kExitOk;
}

int cmd_empirical(const Options& o, std::ostream& out, std::ostream& err) {
  RunConfig c = resolve(o);
  std::optional<SmoothedMeasure> law;
  if (c.law_s) law.emplace(c.measure(), *c.law_s);
  auto grid = make_grid(c.manifold, c.probe_resolution);

  std::vector<std::vector<MeanProcessRecord>> streams(c.streams);
  parallel_for(c.streams, c.jobs, [&](std::size_t k) {
    // Stream k draws from its own counter-derived generator; the probe uses
    // the range above the stream ids.
    RandomStream rng(c.seed, k);
    auto next = [&]() { return law ? sample_smoothed(c.manifold, *law, rng) : uniform_point(c.manifold, rng); };
    streams[k] = mean_process(next, c.p, c.n_max, grid, c.refine_tol);
  });
  write_file(fs::path(c.out_dir) / "mean_process.csv", mean_process_csv(c.manifold, streams));

  ProbeReport rep = uniqueness_probe(c.manifold, c.probe_n, c.p, law, c.probe_trials, c.probe_resolution,
                                     derive_seed(c.seed, 1u << 20), c.jobs, c.refine_tol);
  if (!rep.warning.empty()) err << "warning: " << rep.warning << "\n";
  write_json(c, "probe.json", stamp(probe_json(rep), c));

  std::size_t jumps = 0;
  for (const auto& s : streams) {
    for (const auto& r : s) jumps += r.jumped ? 1 : 0;
  }
  out << "basin jumps " << jumps << " over " << c.streams << " streams; probe near ties " << rep.near_ties
      << ", exact ties " << rep.exact_ties << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"p-means on compact symmetric spaces: annealing, oracles and probes", "pmean"};
  app.require_subcommand(1);
  Options o;
  std::function<int(const Options&, std::ostream&, std::ostream&)> action;

  auto add = [&](const std::string& name, const std::string& help, auto fn) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", o.config_path, "TOML configuration file")->required();
    sub->add_option("--set", o.overrides, "override a config key, e.g. --set run.t_end=100");
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", o.out_dir, "output directory");
    sub->callback([&action, fn] { action = fn; });
    return sub;
  };
  add("anneal", "run the annealing ensemble", cmd_anneal)
      ->add_flag("--dry-run", o.dry_run, "print the resolved configuration and exit");
  add("oracle", "grid sweep, minimizers and uniqueness gap", cmd_oracle);
  add("landscape", "critical elevation c(U) and recommended k", cmd_landscape);
  add("lemma2", "check the heat-smoothing exchange identity", cmd_lemma2);
  add("empirical", "empirical p-mean process and uniqueness probe", cmd_empirical);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kExitUsage;
  }

  try {
    return action(o, out, err);
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    err << "io: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericalError& e) {
    err << "numerical: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ArgumentError& e) {
    err << "config: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "config: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace pmean::cli
