// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace cfisac {

using Vec3 = Eigen::Vector3d;

struct RadioConfig {
  double carrier_frequency_hz = 1.9e9;
  double bandwidth_hz = 2.0e5;
  double noise_power_w = 3.9810717055349725e-15;  // -114 dBm
  int pilot_length = 10;                          // L_p symbols per block
  int num_tx_aps = 16;
  int num_rx_aps = 2;
  int antennas_per_ap = 4;
  int num_ues = 8;
  double max_tx_power_w = 0.1;    // per-AP budget
  double pilot_power_w = 0.05;    // per-UE uplink pilot power
  double rzf_regularization_w = 3.9810717055349725e-15;  // delta; defaults to noise power
  double rcs_variance_m2 = 1.0;   // Swerling-I mean radar cross-section
  double clutter_scaling = 0.3;   // power scaling of AP-to-AP scattered paths
};

struct UrllcRequirement {
  int packet_bits = 256;          // payload per blocklength-L codeword
  double dep_threshold = 1e-5;    // decoding error probability target
  double delay_threshold_s = 1e-3;
};

struct SensingRequirement {
  double sinr_threshold = 1.0;          // linear
  double refresh_rate_threshold = 10.0; // blocks per second
  double false_alarm_prob = 0.03;
};

struct Geometry {
  double area_side_m = 500.0;
  double tx_ap_height_m = 10.0;
  double rx_ap_height_m = 10.0;
  double ue_height_m = 1.5;
  double target_height_m = 1.5;
  std::vector<Vec3> tx_ap_positions;
  std::vector<Vec3> rx_ap_positions;
  std::vector<Vec3> ue_positions;
  Vec3 target_position{250.0, 250.0, 1.5};
  bool random_tx_placement = false;
};

struct PowerModelParams {
  double delta_tr = 4.0;                // transmit-amplifier slope (1/efficiency)
  double p_ap0_tx_per_antenna_w = 6.8;  // static AP draw scales with antenna count
  double p_ap0_rx_per_antenna_w = 6.8;
  double p_fixed_w = 120.0;             // load-independent cloud supply
  double p_cloud0_proc_w = 81.0;        // idle draw per active GPP
  double delta_cloud_proc_w = 288.0;    // slope from idle to fully-loaded GPP
  double sigma_cool = 0.9;              // cooling efficiency divisor
  double c_max_gops = 700.94;           // capacity of one GPP
  // Resolved per-AP static draw (per-antenna value times antennas_per_ap).
  double p_ap0_tx_w = 27.2;
  double p_ap0_rx_w = 27.2;
};

// Urban-microcell distance-dependent model.  Every constant here is a config
// knob: swap the values (or the table they came from) without touching code.
struct ChannelModelConfig {
  // line-of-sight branch, d below breakpoint: PL[dB] = a*log10(d) + b + c*log10(fc[GHz])
  double los_a = 22.0, los_b = 28.0, los_c = 20.0;
  // line-of-sight branch beyond the breakpoint distance
  double los2_a = 40.0, los2_b = 7.8, los2_height = -18.0, los2_c = 2.0;
  double breakpoint_height_offset_m = 1.0;  // effective antenna height = h - offset
  // non-line-of-sight branch
  double nlos_a = 36.7, nlos_b = 22.7, nlos_c = 26.0;
  double shadow_sigma_los_db = 3.0;
  double shadow_sigma_nlos_db = 4.0;
  // P(LOS) = min(d0/d,1)*(1-exp(-d/d1)) + exp(-d/d1)
  double los_prob_d0_m = 18.0;
  double los_prob_d1_m = 36.0;
  // Rician factor K[dB] = k_intercept_db + k_slope_db_per_m * d
  double rician_k_intercept_db = 13.0;
  double rician_k_slope_db_per_m = -0.03;
  double angle_spread_deg = 15.0;  // Gaussian azimuth spread of local scattering
};

struct MonteCarloConfig {
  int n_mc = 300;            // realizations for moment estimation
  int detection_trials = 2000;  // per threshold calibration and per P_d estimate
};

struct Scenario {
  std::string preset_name = "paper-default";
  RadioConfig radio;
  std::vector<UrllcRequirement> urllc;  // one per UE
  SensingRequirement sensing;
  Geometry geometry;
  PowerModelParams power_model;
  ChannelModelConfig channel_model;
  MonteCarloConfig mc;
  std::uint64_t master_seed = 1;
  std::uint64_t drop_index = 0;  // set by redraw_ue_positions; keys large-scale draws
};

// Presets.  desk_scale keeps every requirement and power constant of
// paper_default but shrinks the array dimensions for fast test runs.
// Presets (and the JSON parsers below) return an unresolved scenario: set
// master_seed and any overrides first, then call resolve_scenario so every
// seeded draw is keyed by the final seed.
Scenario paper_default_scenario();
Scenario desk_scale_scenario();

// Fills derived state: AP grid, receive-AP line, seeded UE draw, per-AP static
// power.  Explicit positions in the config are kept as-is.
void resolve_scenario(Scenario& s);

// Re-draws UE positions for Monte Carlo drop studies; drop 0 reproduces the
// seeded placement that resolve_scenario draws (explicit placements are
// overwritten, which is why drop studies leave drop 0 untouched).
void redraw_ue_positions(Scenario& s, std::uint64_t drop_index);

// Returns human-readable contract violations; empty means valid.
std::vector<std::string> validate_scenario(const Scenario& s);

// Geometry helpers.  Angles are (azimuth, elevation) of the ray from `from`
// toward `to`: azimuth = atan2(dx, dy), i.e. compass convention measured from
// the +y axis (this orients every uniform linear array along x; see
// bearing_between for why that matters), elevation measured from the
// horizontal, positive upward.
struct Bearing {
  double azimuth_rad = 0.0;
  double elevation_rad = 0.0;
};
Bearing bearing_between(const Vec3& from, const Vec3& to);
double distance_3d(const Vec3& a, const Vec3& b);

// JSON wire format.  Keys mirror the struct fields; *_dbm / *_db / *_dbsm
// variants are accepted on parse and converted at this boundary.
Scenario scenario_from_json(const nlohmann::json& j);
Scenario scenario_from_file(const std::string& path);
nlohmann::json scenario_to_json(const Scenario& s);

// Applies one "section.field" assignment (used by CLI sweeps), then
// re-resolves derived state.  Returns false for unknown paths.
bool apply_parameter(Scenario& s, const std::string& path, double value);

// Content hash over the fields that moment statistics depend on (radio,
// geometry, channel model, master seed, n_mc).  Requirement and power-model
// fields are deliberately excluded so sweeps over them can share cached
// statistics.
std::uint64_t moment_stats_key(const Scenario& s);

}  // namespace cfisac
