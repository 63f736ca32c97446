// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "cfisac/linalg.hpp"
#include "cfisac/scenario.hpp"

namespace cfisac {

// Gaussian tail probability and its inverse.  q_inv is accurate to better
// than 1e-12 relative in the round trip Q(q_inv(p)) = p.
double q_func(double x);
double q_inv(double p);

struct BlocklengthPlan {
  int length = 199;        // L, symbols per block
  int pilot_length = 10;   // L_p
  int data_length() const { return length - pilot_length; }
};

// Channel-hardening SINR lower bound.  `rho_w` holds the transmit powers in
// watts (entry 0 = sensing stream, entry j = UE j-1), `self_index` the UE's
// own entry.  `coherent_gain` is the mean beamforming gain; `cross_gains`
// holds the interference gains for every stream, with the self entry being
// the coherent-gain fluctuation.
double sinr_dl_lb(const VectorXd& rho_w, Eigen::Index self_index, double coherent_gain,
                  const VectorXd& cross_gains, double noise_w);

// Decoding-error upper bound at finite blocklength.
double dep_upper_bound(double sinr, int packet_bits, const BlocklengthPlan& plan);

// Worst-case transmission delay of one block, seconds.
double delay_upper_bound(const BlocklengthPlan& plan, double bandwidth_hz, double dep_threshold);

// Largest admissible blocklength: delay budgets of all UEs and the sensing
// refresh-rate floor, floored to an integer symbol count.
int max_blocklength(const std::vector<UrllcRequirement>& urllc, const SensingRequirement& sensing,
                    double bandwidth_hz);

// Average sensing SINR.  `sqrt_rho` is the vector of sqrt-powers (entry 0 =
// sensing stream); `a_diag`/`b_diag` are the diagonals of the target and
// clutter quadratic forms.
double avg_sensing_sinr(const VectorXd& sqrt_rho, const VectorXd& a_diag, const VectorXd& b_diag,
                        int m, int n_rx, double noise_w);

// Sensing refreshing rate, blocks per second.
double refreshing_rate(const BlocklengthPlan& plan, double bandwidth_hz);

struct UrllcReport {
  double sinr = 0.0;
  double dep_ub = 1.0;
  double delay_ub_s = 0.0;
  double rate_lb_bps = 0.0;    // B * ln(1+SINR)/ln 2 (asymptotic part)
  double dispersion = 0.0;     // channel dispersion 1 - (1+SINR)^-2; diagnostic
};

UrllcReport urllc_report(double sinr, const UrllcRequirement& req, const BlocklengthPlan& plan,
                         double bandwidth_hz);

}  // namespace cfisac
