// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cfisac/energy.hpp"
#include "cfisac/metrics.hpp"
#include "cfisac/moments.hpp"
#include "cfisac/scenario.hpp"

namespace cfisac {

// e2e_isac      : total network energy, joint blocklength + power, sensing on
// tx_only_isac  : transmit-amplifier energy only (same constraint set)
// e2e_no_sensing: total energy without the sensing stream, its constraint, or
//                 its processing load; receive-AP static draw stays in the
//                 fixed term.
enum class OptimizationMode { e2e_isac, tx_only_isac, e2e_no_sensing };

std::string to_string(OptimizationMode mode);
OptimizationMode mode_from_string(const std::string& name);

struct SolveOptions {
  int max_iterations = 30;              // outer convexification rounds
  double objective_tolerance_j = 1e-3;  // stop when the objective moves less
  double slack_zero_tolerance = 1e-6;   // sensing slack freeze level (scaled)
  double slack_penalty = 10.0;          // weight of the sensing slack
  bool integer_blocklength = true;
  int blocklength_override = 0;  // > 0 pins L and skips its optimization
};

struct SolveResult {
  bool feasible = false;
  std::string status;  // converged | iteration-limit | infeasible:<detail>
  OptimizationMode mode = OptimizationMode::e2e_isac;
  DetectorKind detector = DetectorKind::clutter_unaware;

  // Allocation.  rho_w always has n_ue+1 entries (index 0 = sensing beam);
  // the sensing entry is zero when the mode strips that stream.
  VectorXd rho_w;
  BlocklengthPlan plan;
  double objective_j = 0.0;  // continuous objective at the last round
  VectorXd chi;              // per-UE SINR surrogates at the solution
  double chi0 = 0.0;         // sensing slack (scaled); ~0 when feasible
  double lbar = 0.0;         // inverse data length; lbar*(L-L_p) = 1

  std::vector<double> objective_trace_j;  // one entry per outer round
  std::vector<double> chi0_trace;
  int iterations = 0;

  // Verified performance at the returned integer allocation.
  EnergyReport energy;
  PowerReport power;
  std::vector<UrllcReport> urllc;
  double sensing_sinr = 0.0;
  double sensing_rate_hz = 0.0;
  int blocklength_cap = 0;
};

// Joint blocklength and power allocation by successive convexification, each
// round solved with a log-barrier interior-point method.  The returned
// allocation is re-verified against the exact constraints.
SolveResult solve_allocation(const Scenario& s, const MomentStats& stats, OptimizationMode mode,
                             DetectorKind detector, const SolveOptions& opts = {});

struct AvailabilityReport {
  int drops = 0;
  int feasible_drops = 0;
  int blocklength_cap = 0;
  double availability = 0.0;
};

// Fraction of random UE placements for which a feasible allocation exists.
// Drop d reuses the seeded placement stream, so sweeps over requirement
// parameters see identical placements per drop index.
AvailabilityReport network_availability(const Scenario& s, OptimizationMode mode,
                                        DetectorKind detector, int drops,
                                        const SolveOptions& opts = {},
                                        const std::optional<std::string>& cache_dir = std::nullopt);

}  // namespace cfisac
