// SPDX-License-Identifier: Apache-2.0
#include "cfisac/metrics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cfisac {

double q_func(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double q_inv(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("q_inv: p must be in (0,1)");
  if (p < 1e-300) throw std::invalid_argument("q_inv: p too small to resolve");
  // Bisection to locate the root, then Newton polish with the exact density.
  double lo = -40.0, hi = 40.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (q_func(mid) > p)
      lo = mid;
    else
      hi = mid;
  }
  double x = 0.5 * (lo + hi);
  const double inv_sqrt_2pi = 0.3989422804014326779;
  for (int it = 0; it < 4; ++it) {
    const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x * x);
    if (pdf <= 0.0) break;
    x += (q_func(x) - p) / pdf;
  }
  return x;
}

double sinr_dl_lb(const VectorXd& rho_w, Eigen::Index self_index, double coherent_gain,
                  const VectorXd& cross_gains, double noise_w) {
  if (rho_w.size() != cross_gains.size())
    throw std::invalid_argument("sinr_dl_lb: rho and gain row sizes differ");
  if (self_index < 0 || self_index >= rho_w.size())
    throw std::invalid_argument("sinr_dl_lb: self index out of range");
  if (noise_w <= 0) throw std::invalid_argument("sinr_dl_lb: noise power must be positive");
  double denom = noise_w;
  for (Eigen::Index j = 0; j < rho_w.size(); ++j)
    denom += rho_w[j] * cross_gains[j] * cross_gains[j];
  return rho_w[self_index] * coherent_gain * coherent_gain / denom;
}

double dep_upper_bound(double sinr, int packet_bits, const BlocklengthPlan& plan) {
  if (plan.data_length() < 1)
    throw std::invalid_argument("dep_upper_bound: blocklength must exceed pilot length");
  if (sinr < 0) throw std::invalid_argument("dep_upper_bound: negative SINR");
  const double ld = plan.data_length();
  const double arg =
      std::sqrt(ld) * (std::log1p(sinr) - packet_bits * std::numbers::ln2 / ld);
  return q_func(arg);
}

double delay_upper_bound(const BlocklengthPlan& plan, double bandwidth_hz, double dep_threshold) {
  return plan.length / (bandwidth_hz * (1.0 - dep_threshold));
}

int max_blocklength(const std::vector<UrllcRequirement>& urllc, const SensingRequirement& sensing,
                    double bandwidth_hz) {
  double cap = bandwidth_hz / sensing.refresh_rate_threshold;
  for (const auto& u : urllc)
    cap = std::min(cap, u.delay_threshold_s * bandwidth_hz * (1.0 - u.dep_threshold));
  if (cap < 1.0) throw std::invalid_argument("max_blocklength: requirements admit no blocklength");
  return static_cast<int>(std::floor(cap));
}

double avg_sensing_sinr(const VectorXd& sqrt_rho, const VectorXd& a_diag, const VectorXd& b_diag,
                        int m, int n_rx, double noise_w) {
  if (sqrt_rho.size() != a_diag.size() || sqrt_rho.size() != b_diag.size())
    throw std::invalid_argument("avg_sensing_sinr: size mismatch");
  double num = 0.0, clutter = 0.0;
  for (Eigen::Index j = 0; j < sqrt_rho.size(); ++j) {
    const double p = sqrt_rho[j] * sqrt_rho[j];
    num += p * a_diag[j];
    clutter += p * b_diag[j];
  }
  return m * num / (m * n_rx * noise_w + clutter);
}

double refreshing_rate(const BlocklengthPlan& plan, double bandwidth_hz) {
  return bandwidth_hz / plan.length;
}

UrllcReport urllc_report(double sinr, const UrllcRequirement& req, const BlocklengthPlan& plan,
                         double bandwidth_hz) {
  UrllcReport rep;
  rep.sinr = sinr;
  rep.dep_ub = dep_upper_bound(sinr, req.packet_bits, plan);
  rep.delay_ub_s = delay_upper_bound(plan, bandwidth_hz, req.dep_threshold);
  rep.rate_lb_bps = bandwidth_hz * std::log1p(sinr) / std::numbers::ln2;
  const double one_plus = 1.0 + sinr;
  rep.dispersion = 1.0 - 1.0 / (one_plus * one_plus);
  return rep;
}

}  // namespace cfisac
