// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <vector>

#include "cfisac/linalg.hpp"
#include "cfisac/scenario.hpp"

namespace cfisac {

// Half-wavelength ULA response; entry m is exp(j*pi*m*sin(az)*cos(el)).
VectorXcd array_response(int M, double azimuth_rad, double elevation_rad);

// Distance-dependent dB pathloss (no shadowing).  The LOS branch switches at
// the breakpoint distance derived from the effective antenna heights.
double umi_pathloss_db(const ChannelModelConfig& cfg, double distance_m, double carrier_hz,
                       bool los, double h_tx_m, double h_rx_m);

// Linear channel gain including a shadow-fading draw in dB.
double umi_gain(const ChannelModelConfig& cfg, double distance_m, double carrier_hz, bool los,
                double shadow_db, double h_tx_m, double h_rx_m);

double los_probability(const ChannelModelConfig& cfg, double distance_m);

// Rician factor, linear.
double rician_k(const ChannelModelConfig& cfg, double distance_m);

// Gaussian local scattering around the nominal azimuth.  Built as a convex
// combination of rank-one response outer products (Gauss-Hermite nodes), so
// the result is Hermitian PSD by construction and its diagonal equals `gain`.
MatrixXcd local_scattering_covariance(int M, double azimuth_rad, double elevation_rad,
                                      double spread_rad, double gain);

// Two-way reflection gain of the bistatic radar range equation.
double bistatic_gain(double wavelength_m, double rcs_m2, double d_tx_m, double d_rx_m);

MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b);

// ---- per-scenario statistics -------------------------------------------------

struct CommChannelStat {
  VectorXcd mean;           // M; zero for NLOS pairs
  MatrixXcd cov;            // M x M scattered-component covariance
  MatrixXcd cov_sqrt;       // Hermitian square root of cov
  MatrixXcd lmmse_filter;   // maps the de-spread pilot observation to the estimate
  MatrixXcd est_error_cov;  // covariance of (h - h_hat)
  bool los = false;
  double gain = 0.0;        // linear pathloss+shadowing of this pair
  double k_factor = 0.0;    // linear; 0 for NLOS
};

struct CommStats {
  int m = 0, n_tx = 0, n_ue = 0;
  double pilot_obs_noise_var = 0.0;  // noise variance after pilot de-spreading
  std::vector<CommChannelStat> pairs;  // index = ue * n_tx + ap
  const CommChannelStat& at(int ue, int ap) const { return pairs[ue * n_tx + ap]; }
};

struct ClutterPairStat {
  MatrixXcd rx_cov;   // arrival side, normalized: trace = M
  MatrixXcd tx_cov;   // departure side, carries clutter gain
  MatrixXcd rx_sqrt;
  MatrixXcd tx_sqrt;
};

struct ClutterStats {
  int m = 0, n_tx = 0, n_rx = 0;
  std::vector<ClutterPairStat> pairs;  // index = rx * n_tx + tx
  const ClutterPairStat& at(int rx, int tx) const { return pairs[rx * n_tx + tx]; }
};

struct SensingGeometry {
  std::vector<VectorXcd> a_tx;  // per transmit AP, response toward the target
  std::vector<VectorXcd> a_rx;  // per receive AP, response toward the target
  VectorXd beta_oneway;         // per transmit AP, one-way gain used in h0
  MatrixXd beta_bistatic;       // n_rx x n_tx two-way reflection gains
  VectorXcd h0;                 // stacked M*n_tx sensing steering channel
};

CommStats build_comm_stats(const Scenario& s);
ClutterStats build_clutter_stats(const Scenario& s);
SensingGeometry build_sensing_geometry(const Scenario& s);

// Covariance of vec(H) for one clutter pair: kron(tx_cov, rx_cov) with
// column-major vec convention.
MatrixXcd clutter_cov_block(const ClutterPairStat& p);

// ---- sampling ----------------------------------------------------------------

struct ChannelRealization {
  std::vector<VectorXcd> h;      // per UE, stacked M*n_tx true channel
  std::vector<VectorXcd> h_hat;  // per UE, stacked LMMSE estimates
};

// One small-scale realization with its pilot-noise draw.  The two streams are
// independent so estimation-noise studies can re-use channel draws.
ChannelRealization sample_comm_realization(const Scenario& s, const CommStats& stats,
                                           std::uint64_t realization_index);

// True channels only (no estimates); draws taken from the supplied stream.
std::vector<VectorXcd> sample_true_channels(const CommStats& stats, std::mt19937_64& rng);

// LMMSE estimates given true channels and a pilot-noise stream.
std::vector<VectorXcd> lmmse_estimate(const CommStats& stats, const std::vector<VectorXcd>& h,
                                      std::mt19937_64& rng);

// Per (rx, tx) AP pair: M x M scattered channel R_rx^{1/2} W (R_tx^{1/2})^T.
std::vector<MatrixXcd> sample_clutter(const ClutterStats& stats, std::mt19937_64& rng);

}  // namespace cfisac
