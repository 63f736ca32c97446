// SPDX-License-Identifier: Apache-2.0
#include "cfisac/energy.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cfisac {

std::string to_string(DetectorKind k) {
  return k == DetectorKind::clutter_unaware ? "clutter_unaware" : "clutter_aware";
}

DetectorKind detector_from_string(const std::string& name) {
  if (name == "clutter_unaware") return DetectorKind::clutter_unaware;
  if (name == "clutter_aware") return DetectorKind::clutter_aware;
  throw std::invalid_argument("unknown detector kind: " + name);
}

OpsBreakdown count_comm_ops(int m, int pilot_len, int n_ue, int n_tx) {
  OpsBreakdown ops;
  const double M = m, Lp = pilot_len, U = n_ue, K = n_tx;
  // Estimation: pilot de-spread (M x L_p matrix-vector) plus the M x M
  // estimation filter, per UE-AP pair.  With orthogonal pilots the de-spread
  // touches each pair once; when pilots are shorter than the UE count the
  // de-spread is shared per pilot symbol instead.
  if (pilot_len >= n_ue)
    ops.ch_est = (8.0 * M * Lp + 8.0 * M * M) * U * K;
  else
    ops.ch_est = 8.0 * M * Lp * Lp * K + 8.0 * M * M * U * K;
  // Regularized ZF: U Hermitian rank-1 updates and per-UE solves at
  // 8n^2 + norm 8n + scaling 4n each (n = M*K), plus one n x n inversion.
  const double n = M * K;
  ops.rzf = (12.0 * n * n + 16.0 * n) * U + 8.0 * (n * n * n - n) / 3.0;
  // Per data symbol: reciprocity calibration and precoder multiply (8 each)
  // plus real-valued power scaling (4).
  ops.comm_per_symbol = 20.0 * M * U * K;
  return ops;
}

OpsBreakdown count_sensing_ops(int m, int n_tx, int n_rx, DetectorKind kind) {
  OpsBreakdown ops;
  const double M = m, K = n_tx, R = n_rx;
  const double n = M * K;
  // Subspace projection of the steering vector plus normalization.
  ops.zf_sensing = 8.0 * n * n + 12.0 * n;
  // Per data symbol: sensing stream synthesis (precoder multiply + power
  // scaling), always present.
  ops.sensing_per_symbol = 12.0 * n;
  if (n_rx == 0) return ops;  // no receivers: no observation processing

  if (kind == DetectorKind::clutter_unaware) {
    ops.sensing_per_symbol +=
        20.0 * M * K * R + 8.0 * M * M * R * K + 4.0 * R * (K * K + K) * M;
    ops.detector_fixed = 8.0 * (K * K * K - K) * R / 3.0 + 8.0 * (K * R * K * R + K * R);
  } else {
    // Reflection-path matrix, correlation statistics, and cross terms.
    ops.sensing_per_symbol += 20.0 * M * K * R   // per-symbol reflection model
                              + 8.0 * M * M * R * K   // steering-matched statistic
                              + 8.0 * M * M * R * K   // clutter-matched statistic
                              + 4.0 * M * R * (K * K + K)  // target-branch correlation
                              + 4.0 * (n * n + n)          // clutter-branch correlation
                              + 8.0 * M * M * R * K * K;   // cross-correlation
    const double dim_joint = (1.0 + M * M) * K * R;
    const double dim_clutter = M * M * K * R;
    ops.detector_fixed = 8.0 / 3.0 * (dim_joint * dim_joint * dim_joint - dim_joint) +
                         8.0 / 3.0 * (dim_clutter * dim_clutter * dim_clutter - dim_clutter) +
                         8.0 * (dim_joint * dim_joint + dim_joint);
  }
  return ops;
}

OpsBreakdown count_ops(const Scenario& s, DetectorKind kind) {
  OpsBreakdown comm =
      count_comm_ops(s.radio.antennas_per_ap, s.radio.pilot_length, s.radio.num_ues,
                     s.radio.num_tx_aps);
  OpsBreakdown sens =
      count_sensing_ops(s.radio.antennas_per_ap, s.radio.num_tx_aps, s.radio.num_rx_aps, kind);
  comm.zf_sensing = sens.zf_sensing;
  comm.sensing_per_symbol = sens.sensing_per_symbol;
  comm.detector_fixed = sens.detector_fixed;
  return comm;
}

OpsBreakdown ops_for(const Scenario& s, DetectorKind kind, bool include_sensing) {
  if (include_sensing) return count_ops(s, kind);
  return count_comm_ops(s.radio.antennas_per_ap, s.radio.pilot_length, s.radio.num_ues,
                        s.radio.num_tx_aps);
}

GopsReport gops(const OpsBreakdown& ops, double bandwidth_hz, const BlocklengthPlan& plan) {
  if (plan.length <= 0) throw std::invalid_argument("gops: blocklength must be positive");
  const double ld = plan.data_length();
  if (ld < 0) throw std::invalid_argument("gops: pilot length exceeds blocklength");
  const double scale = bandwidth_hz / (plan.length * 1e9);
  GopsReport g;
  g.comm_gops = scale * (ops.ch_est + ops.rzf + ops.comm_per_symbol * ld);
  g.sensing_gops = scale * (ops.zf_sensing + ops.sensing_per_symbol * ld + ops.detector_fixed);
  return g;
}

CloudPower cloud_power(double c_cloud_gops, const PowerModelParams& pm) {
  if (c_cloud_gops < 0) throw std::invalid_argument("cloud_power: negative load");
  CloudPower cp;
  cp.n_gpp = static_cast<int>(std::ceil(c_cloud_gops / pm.c_max_gops));
  cp.power_w = pm.p_fixed_w + (cp.n_gpp * pm.p_cloud0_proc_w +
                               pm.delta_cloud_proc_w * c_cloud_gops / pm.c_max_gops) /
                                  pm.sigma_cool;
  return cp;
}

PowerReport total_power(const VectorXd& rho_w, const BlocklengthPlan& plan, const Scenario& s,
                        DetectorKind kind) {
  return total_power(rho_w, plan, s, count_ops(s, kind));
}

PowerReport total_power(const VectorXd& rho_w, const BlocklengthPlan& plan, const Scenario& s,
                        const OpsBreakdown& ops) {
  for (Eigen::Index j = 0; j < rho_w.size(); ++j)
    if (rho_w[j] < 0) throw std::invalid_argument("total_power: negative power entry");
  const GopsReport g = gops(ops, s.radio.bandwidth_hz, plan);
  const CloudPower cp = cloud_power(g.total(), s.power_model);
  PowerReport rep;
  // Amplifiers draw only during the data segment of the block.
  rep.p_transmit_w =
      s.power_model.delta_tr * rho_w.sum() * plan.data_length() / static_cast<double>(plan.length);
  rep.p_tx_static_w = s.radio.num_tx_aps * s.power_model.p_ap0_tx_w;
  rep.p_rx_static_w = s.radio.num_rx_aps * s.power_model.p_ap0_rx_w;
  rep.p_cloud_w = cp.power_w;
  rep.n_gpp = cp.n_gpp;
  rep.comm_gops = g.comm_gops;
  rep.sensing_gops = g.sensing_gops;
  return rep;
}

ObjectiveTerms objective_terms(const Scenario& s, const OpsBreakdown& ops, int n_gpp) {
  ObjectiveTerms t;
  const auto& pm = s.power_model;
  t.p_fixed_sum_w = s.radio.num_tx_aps * pm.p_ap0_tx_w + s.radio.num_rx_aps * pm.p_ap0_rx_w +
                    pm.p_fixed_w + n_gpp * pm.p_cloud0_proc_w / pm.sigma_cool;
  const double pref =
      pm.delta_cloud_proc_w / (pm.sigma_cool * pm.c_max_gops) * s.radio.bandwidth_hz / 1e9;
  t.f1_w = pref * (ops.ch_est + ops.rzf + ops.zf_sensing + ops.detector_fixed);
  t.f2_w = pref * (ops.comm_per_symbol + ops.sensing_per_symbol);
  return t;
}

EnergyReport total_energy(const VectorXd& rho_w, const BlocklengthPlan& plan, const Scenario& s,
                          DetectorKind kind) {
  return total_energy(rho_w, plan, s, count_ops(s, kind));
}

EnergyReport total_energy(const VectorXd& rho_w, const BlocklengthPlan& plan, const Scenario& s,
                          const OpsBreakdown& ops) {
  const PowerReport p = total_power(rho_w, plan, s, ops);
  const double block_s = plan.length / s.radio.bandwidth_hz;
  const auto& pm = s.power_model;
  EnergyReport e;
  e.e_transmit_j = p.p_transmit_w * block_s;  // = delta_tr * sum(rho) * L_d / B
  e.e_tx_static_j = p.p_tx_static_w * block_s;
  e.e_rx_static_j = p.p_rx_static_w * block_s;
  const double proc_scale = pm.delta_cloud_proc_w / (pm.sigma_cool * pm.c_max_gops) * block_s;
  e.e_comm_proc_j = proc_scale * p.comm_gops;
  e.e_sens_proc_j = proc_scale * p.sensing_gops;
  e.e_other_j = (pm.p_fixed_w + p.n_gpp * pm.p_cloud0_proc_w / pm.sigma_cool) * block_s;
  e.n_gpp = p.n_gpp;
  e.c_cloud_gops = p.comm_gops + p.sensing_gops;
  return e;
}

std::string energy_csv_header() {
  return "scenario_id,detector,L,rho_norm2,P_tx_part,P_ap_static,P_cloud,E_total,N_GPP";
}

std::string energy_csv_row(const std::string& scenario_id, DetectorKind kind,
                           const BlocklengthPlan& plan, const VectorXd& rho_w,
                           const PowerReport& power, double e_total_j) {
  std::ostringstream os;
  os.precision(17);
  os << scenario_id << ',' << to_string(kind) << ',' << plan.length << ',' << rho_w.sum() << ','
     << power.p_transmit_w << ',' << power.p_tx_static_w + power.p_rx_static_w << ','
     << power.p_cloud_w << ',' << e_total_j << ',' << power.n_gpp;
  return os.str();
}

}  // namespace cfisac
