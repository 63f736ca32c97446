// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "cfisac/linalg.hpp"
#include "cfisac/metrics.hpp"
#include "cfisac/scenario.hpp"

namespace cfisac {

enum class DetectorKind { clutter_unaware, clutter_aware };

std::string to_string(DetectorKind k);
DetectorKind detector_from_string(const std::string& name);

// Real-operation counts (one complex multiplication = 8 real operations,
// memory access included).  Values are exact integers stored as doubles.
struct OpsBreakdown {
  double ch_est = 0.0;             // per block: pilot de-spread + estimation filter
  double rzf = 0.0;                // per block: gram, inverse, per-UE solve + normalize
  double comm_per_symbol = 0.0;    // per data symbol: calibration, precoding, power scaling
  double zf_sensing = 0.0;         // per block: subspace projection + normalize
  double sensing_per_symbol = 0.0; // per data symbol: beam synthesis + detector accumulation
  double detector_fixed = 0.0;     // per block: inversions and the final quadratic form
};

OpsBreakdown count_comm_ops(int m, int pilot_len, int n_ue, int n_tx);
OpsBreakdown count_sensing_ops(int m, int n_tx, int n_rx, DetectorKind kind);
OpsBreakdown count_ops(const Scenario& s, DetectorKind kind);

// Workload of the selected operating mode: with include_sensing=false the
// sensing beam and detector processing are dropped entirely.
OpsBreakdown ops_for(const Scenario& s, DetectorKind kind, bool include_sensing);

struct GopsReport {
  double comm_gops = 0.0;
  double sensing_gops = 0.0;
  double total() const { return comm_gops + sensing_gops; }
};

// Giga-ops per second at blocklength L: per-block costs amortize over L/B.
GopsReport gops(const OpsBreakdown& ops, double bandwidth_hz, const BlocklengthPlan& plan);

struct CloudPower {
  int n_gpp = 0;
  double power_w = 0.0;
};

// Load-proportional cloud model; GPP count is the ceiling of load/capacity.
CloudPower cloud_power(double c_cloud_gops, const PowerModelParams& pm);

struct PowerReport {
  double p_transmit_w = 0.0;   // amplifier draw, averaged over the block
  double p_tx_static_w = 0.0;  // transmit APs
  double p_rx_static_w = 0.0;  // receive APs
  double p_cloud_w = 0.0;
  int n_gpp = 0;
  double comm_gops = 0.0;
  double sensing_gops = 0.0;
  double total_w() const { return p_transmit_w + p_tx_static_w + p_rx_static_w + p_cloud_w; }
};

// Block-average network power draw; E_total == total_w() * L / B exactly.
PowerReport total_power(const VectorXd& rho_w, const BlocklengthPlan& plan, const Scenario& s,
                        DetectorKind kind);
PowerReport total_power(const VectorXd& rho_w, const BlocklengthPlan& plan, const Scenario& s,
                        const OpsBreakdown& ops);

struct ObjectiveTerms {
  double p_fixed_sum_w = 0.0;  // all load-independent draws, cooling included
  double f1_w = 0.0;           // per-block processing cost (converts to J via /B)
  double f2_w = 0.0;           // per-data-symbol processing cost
};

// Decomposition used by the optimizer objective:
//   E(L, rho) = (L*p_fixed_sum + f1 + (L-L_p)*f2 + delta_tr*(L-L_p)*sum(rho)) / B.
// The GPP count in p_fixed_sum is supplied by the caller (frozen during
// optimization, recomputed at the end).
ObjectiveTerms objective_terms(const Scenario& s, const OpsBreakdown& ops, int n_gpp);

struct EnergyReport {
  double e_transmit_j = 0.0;
  double e_tx_static_j = 0.0;
  double e_rx_static_j = 0.0;
  double e_comm_proc_j = 0.0;
  double e_sens_proc_j = 0.0;
  double e_other_j = 0.0;  // load-independent supply + idle GPP draw
  int n_gpp = 0;
  double c_cloud_gops = 0.0;
  double total_j() const {
    return e_transmit_j + e_tx_static_j + e_rx_static_j + e_comm_proc_j + e_sens_proc_j +
           e_other_j;
  }
};

EnergyReport total_energy(const VectorXd& rho_w, const BlocklengthPlan& plan, const Scenario& s,
                          DetectorKind kind);
EnergyReport total_energy(const VectorXd& rho_w, const BlocklengthPlan& plan, const Scenario& s,
                          const OpsBreakdown& ops);

// Power-component CSV row for one evaluated allocation.
std::string energy_csv_header();
std::string energy_csv_row(const std::string& scenario_id, DetectorKind kind,
                           const BlocklengthPlan& plan, const VectorXd& rho_w,
                           const PowerReport& power, double e_total_j);

}  // namespace cfisac
