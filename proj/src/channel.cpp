// SPDX-License-Identifier: Apache-2.0
#include "cfisac/channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cfisac/rng.hpp"

namespace cfisac {

namespace {

constexpr double kSpeedOfLight = 299792458.0;

// Gauss-Hermite nodes/weights via Golub-Welsch on the Jacobi matrix.
struct Quadrature {
  VectorXd nodes;
  VectorXd weights;  // normalized to sum to 1
};

Quadrature gauss_hermite(int n) {
  MatrixXd jac = MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double b = std::sqrt(i / 2.0);
    jac(i, i - 1) = b;
    jac(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(jac);
  Quadrature q;
  q.nodes = eig.eigenvalues();
  q.weights = eig.eigenvectors().row(0).cwiseAbs2();
  q.weights /= q.weights.sum();
  return q;
}

}  // namespace

VectorXcd array_response(int M, double azimuth_rad, double elevation_rad) {
  VectorXcd a(M);
  const double phase_step =
      std::numbers::pi * std::sin(azimuth_rad) * std::cos(elevation_rad);
  for (int m = 0; m < M; ++m) a[m] = std::polar(1.0, phase_step * m);
  return a;
}

double umi_pathloss_db(const ChannelModelConfig& cfg, double distance_m, double carrier_hz,
                       bool los, double h_tx_m, double h_rx_m) {
  if (distance_m <= 0) throw std::invalid_argument("umi_pathloss_db: distance must be positive");
  const double fc_ghz = carrier_hz / 1e9;
  if (!los) return cfg.nlos_a * std::log10(distance_m) + cfg.nlos_b + cfg.nlos_c * std::log10(fc_ghz);
  const double ht = h_tx_m - cfg.breakpoint_height_offset_m;
  const double hr = h_rx_m - cfg.breakpoint_height_offset_m;
  const double d_bp = (ht > 0 && hr > 0) ? 4.0 * ht * hr * carrier_hz / kSpeedOfLight
                                         : std::numeric_limits<double>::infinity();
  if (distance_m <= d_bp)
    return cfg.los_a * std::log10(distance_m) + cfg.los_b + cfg.los_c * std::log10(fc_ghz);
  return cfg.los2_a * std::log10(distance_m) + cfg.los2_b + cfg.los2_height * std::log10(ht) +
         cfg.los2_height * std::log10(hr) + cfg.los2_c * std::log10(fc_ghz);
}

double umi_gain(const ChannelModelConfig& cfg, double distance_m, double carrier_hz, bool los,
                double shadow_db, double h_tx_m, double h_rx_m) {
  const double pl = umi_pathloss_db(cfg, distance_m, carrier_hz, los, h_tx_m, h_rx_m);
  return std::pow(10.0, -(pl + shadow_db) / 10.0);
}

double los_probability(const ChannelModelConfig& cfg, double distance_m) {
  if (distance_m <= 0) return 1.0;
  const double e = std::exp(-distance_m / cfg.los_prob_d1_m);
  return std::min(cfg.los_prob_d0_m / distance_m, 1.0) * (1.0 - e) + e;
}

double rician_k(const ChannelModelConfig& cfg, double distance_m) {
  const double k_db = cfg.rician_k_intercept_db + cfg.rician_k_slope_db_per_m * distance_m;
  return std::pow(10.0, k_db / 10.0);
}

MatrixXcd local_scattering_covariance(int M, double azimuth_rad, double elevation_rad,
                                      double spread_rad, double gain) {
  static const Quadrature q = gauss_hermite(48);
  MatrixXcd r = MatrixXcd::Zero(M, M);
  for (int i = 0; i < q.nodes.size(); ++i) {
    const double phi = azimuth_rad + std::sqrt(2.0) * spread_rad * q.nodes[i];
    const VectorXcd a = array_response(M, phi, elevation_rad);
    r.selfadjointView<Eigen::Lower>().rankUpdate(a, q.weights[i]);
  }
  r = r.selfadjointView<Eigen::Lower>();
  return gain * r;
}

double bistatic_gain(double wavelength_m, double rcs_m2, double d_tx_m, double d_rx_m) {
  if (d_tx_m <= 0 || d_rx_m <= 0)
    throw std::invalid_argument("bistatic_gain: distances must be positive");
  const double four_pi = 4.0 * std::numbers::pi;
  return wavelength_m * wavelength_m * rcs_m2 /
         (four_pi * four_pi * four_pi * d_tx_m * d_tx_m * d_rx_m * d_rx_m);
}

MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b) {
  MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

CommStats build_comm_stats(const Scenario& s) {
  const int M = s.radio.antennas_per_ap;
  const int n_tx = s.radio.num_tx_aps;
  const int n_ue = s.radio.num_ues;
  const double spread = s.channel_model.angle_spread_deg * std::numbers::pi / 180.0;

  CommStats stats;
  stats.m = M;
  stats.n_tx = n_tx;
  stats.n_ue = n_ue;
  stats.pilot_obs_noise_var =
      s.radio.noise_power_w / (s.radio.pilot_length * s.radio.pilot_power_w);

  // Large-scale draws are part of the scenario: one shadow/LOS draw per pair.
  // Streams are keyed by the drop index (even indices; odd ones are reserved
  // for AP-to-AP links) so drops are statistically independent.
  auto shadow_rng = make_stream(s.master_seed, StreamPurpose::shadowing, 2 * s.drop_index);
  auto los_rng = make_stream(s.master_seed, StreamPurpose::los_state, 2 * s.drop_index);
  std::normal_distribution<double> unit_normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit_uniform(0.0, 1.0);

  stats.pairs.resize(static_cast<std::size_t>(n_ue) * n_tx);
  for (int i = 0; i < n_ue; ++i) {
    for (int k = 0; k < n_tx; ++k) {
      const Vec3& ap = s.geometry.tx_ap_positions[k];
      const Vec3& ue = s.geometry.ue_positions[i];
      const double d = distance_3d(ap, ue);
      const Bearing brg = bearing_between(ap, ue);

      const double shadow_unit = unit_normal(shadow_rng);
      const bool los = unit_uniform(los_rng) < los_probability(s.channel_model, d);
      const double sigma_sf =
          los ? s.channel_model.shadow_sigma_los_db : s.channel_model.shadow_sigma_nlos_db;
      const double gain = umi_gain(s.channel_model, d, s.radio.carrier_frequency_hz, los,
                                   shadow_unit * sigma_sf, s.geometry.tx_ap_height_m,
                                   s.geometry.ue_height_m);

      CommChannelStat st;
      st.los = los;
      st.gain = gain;
      if (los) {
        const double k_lin = rician_k(s.channel_model, d);
        st.k_factor = k_lin;
        st.mean = std::sqrt(gain * k_lin / (k_lin + 1.0)) *
                  array_response(M, brg.azimuth_rad, brg.elevation_rad);
        st.cov = local_scattering_covariance(M, brg.azimuth_rad, brg.elevation_rad, spread,
                                             gain / (k_lin + 1.0));
      } else {
        st.mean = VectorXcd::Zero(M);
        st.cov = local_scattering_covariance(M, brg.azimuth_rad, brg.elevation_rad, spread, gain);
      }
      st.cov_sqrt = hermitian_sqrt(st.cov);

      // Phase-unaware effective prior: the LOS phase is uniform, so the
      // observable covariance is cov + mean*mean^H.
      const MatrixXcd r_eff = st.cov + st.mean * st.mean.adjoint();
      const MatrixXcd denom =
          r_eff + stats.pilot_obs_noise_var * MatrixXcd::Identity(M, M);
      st.lmmse_filter = denom.ldlt().solve(r_eff).adjoint();  // = R' (R'+cI)^{-1~}, Hermitian args
      st.est_error_cov = r_eff - st.lmmse_filter * r_eff;
      stats.pairs[static_cast<std::size_t>(i) * n_tx + k] = std::move(st);
    }
  }
  return stats;
}

ClutterStats build_clutter_stats(const Scenario& s) {
  const int M = s.radio.antennas_per_ap;
  const int n_tx = s.radio.num_tx_aps;
  const int n_rx = s.radio.num_rx_aps;
  const double spread = s.channel_model.angle_spread_deg * std::numbers::pi / 180.0;

  ClutterStats stats;
  stats.m = M;
  stats.n_tx = n_tx;
  stats.n_rx = n_rx;
  stats.pairs.resize(static_cast<std::size_t>(n_rx) * n_tx);

  // AP positions are static, so clutter shadowing is keyed independently of
  // UE drops (stream index 1).
  auto shadow_rng = make_stream(s.master_seed, StreamPurpose::shadowing, 1);
  std::normal_distribution<double> unit_normal(0.0, 1.0);

  for (int r = 0; r < n_rx; ++r) {
    for (int k = 0; k < n_tx; ++k) {
      const Vec3& rx = s.geometry.rx_ap_positions[r];
      const Vec3& tx = s.geometry.tx_ap_positions[k];
      const double d = distance_3d(rx, tx);
      const double shadow_db = unit_normal(shadow_rng) * s.channel_model.shadow_sigma_nlos_db;
      // Scattered inter-AP paths only; the direct LOS component is assumed
      // known at the receivers and cancelled, so it is never generated.
      const double gain = s.radio.clutter_scaling *
                          umi_gain(s.channel_model, d, s.radio.carrier_frequency_hz, false,
                                   shadow_db, s.geometry.tx_ap_height_m, s.geometry.rx_ap_height_m);

      ClutterPairStat p;
      const Bearing from_tx = bearing_between(tx, rx);
      const Bearing from_rx = bearing_between(rx, tx);
      p.tx_cov = local_scattering_covariance(M, from_tx.azimuth_rad, from_tx.elevation_rad,
                                             spread, gain);
      p.rx_cov = local_scattering_covariance(M, from_rx.azimuth_rad, from_rx.elevation_rad,
                                             spread, 1.0);
      p.tx_sqrt = hermitian_sqrt(p.tx_cov);
      p.rx_sqrt = hermitian_sqrt(p.rx_cov);
      stats.pairs[static_cast<std::size_t>(r) * n_tx + k] = std::move(p);
    }
  }
  return stats;
}

SensingGeometry build_sensing_geometry(const Scenario& s) {
  const int M = s.radio.antennas_per_ap;
  const int n_tx = s.radio.num_tx_aps;
  const int n_rx = s.radio.num_rx_aps;
  const double lambda = kSpeedOfLight / s.radio.carrier_frequency_hz;

  SensingGeometry g;
  g.a_tx.resize(n_tx);
  g.a_rx.resize(n_rx);
  g.beta_oneway.resize(n_tx);
  g.beta_bistatic.resize(n_rx, n_tx);
  g.h0.resize(static_cast<Eigen::Index>(M) * n_tx);

  VectorXd d_tx(n_tx), d_rx(n_rx);
  for (int k = 0; k < n_tx; ++k) {
    const Vec3& ap = s.geometry.tx_ap_positions[k];
    d_tx[k] = distance_3d(ap, s.geometry.target_position);
    const Bearing b = bearing_between(ap, s.geometry.target_position);
    g.a_tx[k] = array_response(M, b.azimuth_rad, b.elevation_rad);
    // One-way steering gain: deterministic LOS pathloss (no shadowing); only
    // the relative weighting across APs matters for the sensing direction.
    g.beta_oneway[k] = umi_gain(s.channel_model, d_tx[k], s.radio.carrier_frequency_hz, true,
                                0.0, s.geometry.tx_ap_height_m, s.geometry.target_height_m);
    g.h0.segment(static_cast<Eigen::Index>(k) * M, M) =
        std::sqrt(g.beta_oneway[k]) * g.a_tx[k];
  }
  for (int r = 0; r < n_rx; ++r) {
    const Vec3& ap = s.geometry.rx_ap_positions[r];
    d_rx[r] = distance_3d(ap, s.geometry.target_position);
    const Bearing b = bearing_between(ap, s.geometry.target_position);
    g.a_rx[r] = array_response(M, b.azimuth_rad, b.elevation_rad);
    for (int k = 0; k < n_tx; ++k)
      g.beta_bistatic(r, k) = bistatic_gain(lambda, s.radio.rcs_variance_m2, d_tx[k], d_rx[r]);
  }
  return g;
}

MatrixXcd clutter_cov_block(const ClutterPairStat& p) { return kron(p.tx_cov, p.rx_cov); }

std::vector<VectorXcd> sample_true_channels(const CommStats& stats, std::mt19937_64& rng) {
  const int M = stats.m;
  std::vector<VectorXcd> h(stats.n_ue);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  for (int i = 0; i < stats.n_ue; ++i) {
    VectorXcd hi(static_cast<Eigen::Index>(M) * stats.n_tx);
    for (int k = 0; k < stats.n_tx; ++k) {
      const auto& st = stats.at(i, k);
      const std::complex<double> rot = std::polar(1.0, phase(rng));
      VectorXcd w(M);
      for (int m = 0; m < M; ++m) w[m] = complex_gaussian(rng);
      hi.segment(static_cast<Eigen::Index>(k) * M, M) = rot * st.mean + st.cov_sqrt * w;
    }
    h[i] = std::move(hi);
  }
  return h;
}

std::vector<VectorXcd> lmmse_estimate(const CommStats& stats, const std::vector<VectorXcd>& h,
                                      std::mt19937_64& rng) {
  const int M = stats.m;
  std::vector<VectorXcd> h_hat(stats.n_ue);
  for (int i = 0; i < stats.n_ue; ++i) {
    VectorXcd est(static_cast<Eigen::Index>(M) * stats.n_tx);
    for (int k = 0; k < stats.n_tx; ++k) {
      const auto& st = stats.at(i, k);
      VectorXcd obs = h[i].segment(static_cast<Eigen::Index>(k) * M, M);
      for (int m = 0; m < M; ++m) obs[m] += complex_gaussian(rng, stats.pilot_obs_noise_var);
      est.segment(static_cast<Eigen::Index>(k) * M, M) = st.lmmse_filter * obs;
    }
    h_hat[i] = std::move(est);
  }
  return h_hat;
}

ChannelRealization sample_comm_realization(const Scenario& s, const CommStats& stats,
                                           std::uint64_t realization_index) {
  ChannelRealization out;
  auto ch_rng = make_stream(s.master_seed, StreamPurpose::comm_channel, realization_index);
  out.h = sample_true_channels(stats, ch_rng);
  auto pn_rng = make_stream(s.master_seed, StreamPurpose::pilot_noise, realization_index);
  out.h_hat = lmmse_estimate(stats, out.h, pn_rng);
  return out;
}

std::vector<MatrixXcd> sample_clutter(const ClutterStats& stats, std::mt19937_64& rng) {
  const int M = stats.m;
  std::vector<MatrixXcd> out(stats.pairs.size());
  for (std::size_t idx = 0; idx < stats.pairs.size(); ++idx) {
    MatrixXcd w(M, M);
    for (int col = 0; col < M; ++col)
      for (int row = 0; row < M; ++row) w(row, col) = complex_gaussian(rng);
    const auto& p = stats.pairs[idx];
    out[idx] = p.rx_sqrt * w * p.tx_sqrt.transpose();
  }
  return out;
}

}  // namespace cfisac
