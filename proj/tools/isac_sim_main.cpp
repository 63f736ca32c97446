// SPDX-License-Identifier: Apache-2.0
//
// Batch experiment runner.  Exit codes: 0 success, 2 when at least one sweep
// point has no feasible cell, 1 on any error.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cfisac/experiment.hpp"
#include "cfisac/scenario.hpp"

#ifndef CFISAC_GIT_REV
#define CFISAC_GIT_REV "unknown"
#endif

namespace {

using namespace cfisac;

std::vector<OptimizationMode> parse_modes(const std::string& text) {
  if (text == "all")
    return {OptimizationMode::e2e_isac, OptimizationMode::tx_only_isac,
            OptimizationMode::e2e_no_sensing};
  std::vector<OptimizationMode> out;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) out.push_back(mode_from_string(item));
  if (out.empty()) throw std::invalid_argument("no modes given");
  return out;
}

std::vector<DetectorKind> parse_detectors(const std::string& text) {
  if (text == "both") return {DetectorKind::clutter_unaware, DetectorKind::clutter_aware};
  std::vector<DetectorKind> out;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) out.push_back(detector_from_string(item));
  if (out.empty()) throw std::invalid_argument("no detectors given");
  return out;
}

Scenario load_base(const std::string& config_path, const std::string& preset) {
  if (!config_path.empty()) return scenario_from_file(config_path);
  if (preset == "paper-default") return paper_default_scenario();
  if (preset == "desk-scale") return desk_scale_scenario();
  throw std::invalid_argument("unknown preset: " + preset);
}

struct RunArgs {
  std::string config;
  std::string preset = "paper-default";
  std::string sweep_text;
  std::string modes_text = "e2e_isac";
  std::string detectors_text = "clutter_unaware";
  int drops = 1;
  std::int64_t seed = -1;  // -1 keeps the scenario's own master seed
  std::string out_dir = "out";
  int trials = 0;  // 0 keeps the scenario's detection_trials
  bool skip_detection = false;
  bool false_alarm = false;
  int threads = 0;
  int blocklength = 0;
  bool no_moments_cache = false;
  std::string moments_cache;  // empty -> <out>/moments_cache
};

int do_run(const RunArgs& args) {
  Scenario base = load_base(args.config, args.preset);
  if (args.seed >= 0) base.master_seed = static_cast<std::uint64_t>(args.seed);
  if (args.trials > 0) base.mc.detection_trials = args.trials;
  resolve_scenario(base);
  const auto violations = validate_scenario(base);
  if (!violations.empty()) {
    for (const auto& v : violations) std::cerr << "config error: " << v << '\n';
    return 1;
  }

  SweepSpec sweep;
  if (!args.sweep_text.empty()) sweep = parse_sweep(args.sweep_text);
  sweep.modes = parse_modes(args.modes_text);
  sweep.detectors = parse_detectors(args.detectors_text);
  sweep.n_drops = args.drops;

  ExperimentOptions opts;
  opts.run_detection = !args.skip_detection;
  opts.measure_false_alarms = args.false_alarm;
  opts.threads = args.threads;
  opts.solve.blocklength_override = args.blocklength;
  if (!args.no_moments_cache) {
    opts.moments_cache_dir =
        args.moments_cache.empty() ? args.out_dir + "/moments_cache" : args.moments_cache;
  }

  const ExperimentResult res = run_experiment(base, sweep, opts);
  write_all_csvs(args.out_dir, base, res, CFISAC_GIT_REV);

  const std::size_t per_value =
      static_cast<std::size_t>(sweep.n_drops) * sweep.modes.size() * sweep.detectors.size();
  const std::size_t n_values = sweep.parameter.empty() ? 1 : sweep.values.size();
  for (std::size_t vi = 0; vi < n_values; ++vi) {
    std::size_t feasible = 0;
    double e_best = 0.0;
    bool have_best = false;
    for (std::size_t i = 0; i < per_value; ++i) {
      const RunRow& row = res.rows[vi * per_value + i];
      if (!row.solve.feasible) continue;
      ++feasible;
      if (!have_best || row.solve.energy.total_j() < e_best) {
        e_best = row.solve.energy.total_j();
        have_best = true;
      }
    }
    std::printf("point %zu/%zu", vi + 1, n_values);
    if (!sweep.parameter.empty())
      std::printf(" %s=%g", sweep.parameter.c_str(), sweep.values[vi]);
    std::printf(": %zu/%zu feasible", feasible, per_value);
    if (have_best) std::printf(", min E_total %.9g J", e_best);
    std::printf("\n");
  }
  std::printf("wrote %s/{run_results,energy_breakdown,power_components,availability}.csv\n",
              args.out_dir.c_str());
  if (res.has_infeasible_sweep_point) {
    std::fprintf(stderr, "warning: at least one sweep point is entirely infeasible\n");
    return 2;
  }
  return 0;
}

int do_print_config(const std::string& config_path, const std::string& preset) {
  Scenario s = load_base(config_path, preset);
  resolve_scenario(s);
  std::cout << scenario_to_json(s).dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cell-free massive MIMO ISAC: joint blocklength & power allocation experiments"};
  app.require_subcommand(1);

  RunArgs args;
  auto* run = app.add_subcommand("run", "solve a sweep grid and emit CSV files");
  auto* config_opt =
      run->add_option("--config", args.config, "scenario JSON (overrides --preset)")
          ->check(CLI::ExistingFile);
  run->add_option("--preset", args.preset, "built-in scenario: paper-default | desk-scale")
      ->excludes(config_opt);
  run->add_option("--sweep", args.sweep_text,
                  "parameter sweep, <path>=<v1,v2,...> or <path>=<lo:step:hi>; a _db/_dbm/_dbsm "
                  "suffix on <path> takes values in decibels");
  run->add_option("--modes", args.modes_text,
                  "comma list of e2e_isac,tx_only_isac,e2e_no_sensing, or 'all'");
  run->add_option("--detectors", args.detectors_text,
                  "comma list of clutter_unaware,clutter_aware, or 'both'");
  run->add_option("--drops", args.drops, "independent UE placements per sweep value")
      ->check(CLI::PositiveNumber);
  run->add_option("--seed", args.seed, "master seed override");
  run->add_option("--out", args.out_dir, "output directory for CSV files");
  run->add_option("--trials", args.trials, "detection Monte Carlo trials override");
  run->add_flag("--skip-detection", args.skip_detection,
                "skip threshold calibration and P_d columns");
  run->add_flag("--false-alarm", args.false_alarm,
                "also measure the false-alarm rate on fresh H0 trials");
  run->add_option("--threads", args.threads, "worker threads (default: hardware concurrency)");
  run->add_option("--blocklength", args.blocklength,
                  "pin the blocklength instead of optimizing it");
  run->add_flag("--no-moments-cache", args.no_moments_cache,
                "disable the on-disk moment statistics cache");
  run->add_option("--moments-cache", args.moments_cache,
                  "moment statistics cache directory (default <out>/moments_cache)");

  std::string pc_config, pc_preset = "paper-default";
  auto* pc = app.add_subcommand("print-config", "dump the resolved scenario as JSON");
  auto* pc_config_opt =
      pc->add_option("--config", pc_config, "scenario JSON")->check(CLI::ExistingFile);
  pc->add_option("--preset", pc_preset, "built-in scenario: paper-default | desk-scale")
      ->excludes(pc_config_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) return do_run(args);
    if (pc->parsed()) return do_print_config(pc_config, pc_preset);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
