// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cfisac/detection.hpp"
#include "cfisac/optimizer.hpp"
#include "cfisac/scenario.hpp"

namespace cfisac {

// One experiment = a grid of (sweep value) x (drop) x (mode) x (detector)
// cells.  Every cell is solved from a cold start so results do not depend on
// evaluation order; moment statistics are the only shared state and are
// content-addressed.
struct SweepSpec {
  // Dotted Scenario path, e.g. "sensing.sinr_threshold".  Empty = single
  // point.  A trailing _db / _dbm / _dbsm marks values given in decibels
  // (resp. dBm, dBsm); conversion to linear happens at this boundary and
  // nowhere deeper.
  std::string parameter;
  std::vector<double> values;  // raw values exactly as given on the CLI
  std::vector<OptimizationMode> modes{OptimizationMode::e2e_isac};
  std::vector<DetectorKind> detectors{DetectorKind::clutter_unaware};
  int n_drops = 1;
};

// Parses "name=v1,v2,..." or "name=lo:step:hi" (both ends inclusive).
// Throws std::invalid_argument on malformed input.
SweepSpec parse_sweep(const std::string& text);

// Applies one swept assignment, resolving the _db/_dbm/_dbsm suffix
// convention.  Returns false for unknown parameter paths.
bool apply_swept_parameter(Scenario& s, const std::string& parameter, double raw_value);

struct ExperimentOptions {
  SolveOptions solve;
  bool run_detection = true;         // P_d + threshold for feasible sensing rows
  bool measure_false_alarms = false; // extra fresh-H0 column (one more MC pass)
  int threads = 0;                   // 0 = hardware concurrency
  std::optional<std::string> moments_cache_dir;
};

struct RunRow {
  std::size_t cell = 0;  // position in the deterministic grid order
  double sweep_value = std::numeric_limits<double>::quiet_NaN();
  int drop = 0;
  OptimizationMode mode = OptimizationMode::e2e_isac;
  DetectorKind detector = DetectorKind::clutter_unaware;
  SolveResult solve;
  bool detection_run = false;
  DetectionReport detection;
  double wall_time_ms = 0.0;
};

struct ExperimentResult {
  SweepSpec sweep;
  // Grid order: sweep value outermost, then drop, mode, detector.
  std::vector<RunRow> rows;
  // Some sweep value produced no feasible cell at all -> CLI exit code 2.
  bool has_infeasible_sweep_point = false;
};

ExperimentResult run_experiment(const Scenario& base, const SweepSpec& sweep,
                                const ExperimentOptions& opts);

// Leading comment line of every CSV: preset, seed, sweep, git revision,
// generation timestamp.  The timestamp makes this the one line allowed to
// differ between identically-seeded reruns.
std::string metadata_line(const Scenario& base, const SweepSpec& sweep,
                          const std::string& git_rev);

// Fixed column orders, documented in the README.  write_all_csvs emits
// run_results.csv, energy_breakdown.csv, power_components.csv and
// availability.csv under out_dir.  Apart from the metadata line and the
// measured wall_time_ms column, reruns with the same seed are byte-identical.
void write_run_results_csv(const std::string& path, const Scenario& base,
                           const ExperimentResult& res, const std::string& metadata);
void write_energy_breakdown_csv(const std::string& path, const ExperimentResult& res,
                                const std::string& metadata);
void write_power_components_csv(const std::string& path, const Scenario& base,
                                const ExperimentResult& res, const std::string& metadata);
void write_availability_csv(const std::string& path, const ExperimentResult& res,
                            const std::string& metadata);
void write_all_csvs(const std::string& out_dir, const Scenario& base, const ExperimentResult& res,
                    const std::string& git_rev);

}  // namespace cfisac
