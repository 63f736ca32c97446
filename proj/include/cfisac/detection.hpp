// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <vector>

#include "cfisac/channel.hpp"
#include "cfisac/energy.hpp"
#include "cfisac/precoding.hpp"
#include "cfisac/rng.hpp"
#include "cfisac/scenario.hpp"

namespace cfisac {

// Everything a detection trial needs that does not change between trials.
// r_inv holds, per receive AP and per transmit AP, the inverse of the
// (tx kron rx) clutter covariance of vec(H_{r,k}), ridge-regularized with
// 1e-10 * trace / dim before inversion.
struct DetectorContext {
  int m = 0, n_tx = 0, n_rx = 0;
  double noise_w = 0.0;
  double rcs_variance_m2 = 1.0;
  SensingGeometry geo;
  ClutterStats clutter;
  std::vector<std::vector<MatrixXcd>> r_inv;  // [rx][tx], each m^2 x m^2
};

DetectorContext make_detector_context(const Scenario& s);

struct SensingBlockConfig {
  int data_length = 1;
  bool target_present = false;
  bool qpsk_symbols = false;  // unit-variance Gaussian symbols otherwise
};

// Raw downlink block: x stacks the per-AP transmit signals (column = symbol),
// y[r] is the corresponding receive-AP observation.
struct SensingBlock {
  MatrixXcd x;                // (m*n_tx) x data_length
  std::vector<MatrixXcd> y;   // n_rx entries, m x data_length
};

// Draw order within the trial stream is fixed: symbols, clutter, target
// coefficient (only when present), then per-symbol receiver noise.
SensingBlock simulate_sensing_block(const DetectorContext& ctx, const PrecoderSet& pre,
                                    const VectorXd& rho_w, const SensingBlockConfig& cfg,
                                    std::mt19937_64& rng);

// Sufficient statistics of both tests, accumulated over the block's symbols.
// Per receive AP r, with Phi[m] = x[m]^T kron I_M and G[m] the rank-one
// steering map of the target return:
//   a = sum_m G^H y     c_gram = sum_m c^* c^T        (C = M c_gram + noise I)
//   b = sum_m x^* kron y
//   s_gram = sum_m x^* x^T                            (D = s_gram kron I_M + noise R^{-1})
//   e = sum_m c^* (x^T kron a_rx^H)                   (E = sum_m G^H Phi)
struct DetectorInputs {
  std::vector<VectorXcd> a;       // [rx], n_tx
  std::vector<MatrixXcd> c_gram;  // [rx], n_tx x n_tx
  std::vector<VectorXcd> b;       // [rx], n_tx*m^2
  std::vector<MatrixXcd> e;       // [rx], n_tx x (n_tx*m^2)
  MatrixXcd s_gram;               // (m*n_tx) x (m*n_tx), shared across rx
};

DetectorInputs detector_inputs(const DetectorContext& ctx, const SensingBlock& block);

// Clutter-unaware: sum_r a^H C^{-1} a.  Clutter-aware eliminates the clutter
// nuisance through the Schur complement of the joint Gram matrix:
//   sum_r  u^H (C - E D^{-1} E^H)^{-1} u,   u = a - E D^{-1} b.
// With E = 0 the two coincide.
double test_statistic(const DetectorContext& ctx, const DetectorInputs& in, DetectorKind kind);

// One simulated trial end to end.
double trial_statistic(const DetectorContext& ctx, const PrecoderSet& pre, const VectorXd& rho_w,
                       const SensingBlockConfig& cfg, DetectorKind kind, std::mt19937_64& rng);

// Empirical (1 - p_fa) quantile of the H0 statistic: sorted trial statistics
// indexed at floor((1 - p_fa) * trials), clamped to the valid range.
double calibrate_threshold(const DetectorContext& ctx, const PrecoderSet& pre,
                           const VectorXd& rho_w, int data_length, DetectorKind kind, int trials,
                           double p_fa, std::uint64_t master_seed);

// Fraction of trials with statistic strictly above the threshold.  `purpose`
// selects the trial stream: detection for H1 runs, validation for fresh-H0
// false-alarm measurements.
double exceedance_rate(const DetectorContext& ctx, const PrecoderSet& pre, const VectorXd& rho_w,
                       int data_length, bool target_present, DetectorKind kind, int trials,
                       double threshold, std::uint64_t master_seed, StreamPurpose purpose);

struct DetectionReport {
  DetectorKind kind = DetectorKind::clutter_unaware;
  double threshold = 0.0;
  double detection_prob = 0.0;
  double detection_se = 0.0;      // binomial standard error
  double false_alarm_rate = -1.0; // measured on fresh H0 draws; -1 if skipped
  int trials = 0;
};

// Full study for one power allocation: precoders from one seeded channel
// realization, threshold calibration, detection probability, and (optionally)
// a fresh-stream false-alarm measurement.
DetectionReport evaluate_detection(const Scenario& s, const VectorXd& rho_w, int data_length,
                                   DetectorKind kind, bool measure_false_alarms = false);

}  // namespace cfisac
