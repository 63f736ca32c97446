// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cfisac/energy.hpp"
#include "cfisac/metrics.hpp"
#include "cfisac/moments.hpp"
#include "cfisac/optimizer.hpp"

using namespace cfisac;

namespace {

// Single tx AP, one UE, no receive APs, and hand-set moments: coherent gain g,
// no cross terms, no channel-hardening loss.  The reliability constraint then
// has a closed form per blocklength, rho(L) = gamma_min(L) * noise / g^2, so
// the solver's solution can be checked against arithmetic.
Scenario one_ue_scenario() {
  Scenario s = paper_default_scenario();
  s.master_seed = 1;
  s.radio.num_tx_aps = 1;
  s.radio.num_rx_aps = 0;
  s.radio.num_ues = 1;
  s.geometry.tx_ap_positions.clear();
  s.geometry.rx_ap_positions.clear();
  s.geometry.ue_positions.clear();
  resolve_scenario(s);
  return s;
}

MomentStats one_ue_moments(const Scenario& s, double g) {
  MomentStats st;
  st.m = s.radio.antennas_per_ap;
  st.n_tx = 1;
  st.n_rx = 0;
  st.n_ue = 1;
  st.n_mc = 1;
  st.noise_w = s.radio.noise_power_w;
  st.b = VectorXd::Constant(1, g);
  st.a = MatrixXd::Zero(1, 2);
  st.f = MatrixXd::Ones(1, 2);
  st.a_diag = VectorXd::Zero(2);
  st.b_diag = VectorXd::Zero(2);
  st.b_se = VectorXd::Zero(1);
  st.a_sq_se = MatrixXd::Zero(1, 2);
  st.a_diag_se = VectorXd::Zero(2);
  st.b_diag_se = VectorXd::Zero(2);
  return st;
}

// Smallest SINR meeting the decoding-error threshold at this plan.
double minimal_sinr(const BlocklengthPlan& plan, double bits, double eps_th) {
  double lo = 1e-9, hi = 1e15;
  for (int i = 0; i < 200; ++i) {
    const double mid = std::sqrt(lo * hi);
    if (dep_upper_bound(mid, bits, plan) > eps_th)
      lo = mid;
    else
      hi = mid;
  }
  return std::sqrt(lo * hi);
}

const Scenario& desk42() {
  static const Scenario s = [] {
    Scenario d = desk_scale_scenario();
    d.master_seed = 42;
    resolve_scenario(d);
    return d;
  }();
  return s;
}

const MomentStats& desk42_moments() {
  static const MomentStats m = estimate_moments(desk42());
  return m;
}

double worst_ap_power(const Scenario& s, const MomentStats& m, const VectorXd& rho) {
  double worst = 0.0;
  for (int k = 0; k < s.radio.num_tx_aps; ++k) {
    double p = 0.0;
    for (int j = 0; j < m.f.cols(); ++j) p += m.f(k, j) * m.f(k, j) * rho[j];
    worst = std::max(worst, p);
  }
  return worst;
}

// Every requirement the solver claims to satisfy, re-derived from the moment
// table and the exact metric formulas.
void check_allocation(const Scenario& s, const MomentStats& m, const SolveResult& r) {
  REQUIRE(r.feasible);
  REQUIRE(r.rho_w.size() == s.radio.num_ues + 1);
  CHECK(r.rho_w.minCoeff() >= 0.0);
  CHECK(r.plan.length > s.radio.pilot_length);
  CHECK(r.plan.length <= r.blocklength_cap);
  CHECK(worst_ap_power(s, m, r.rho_w) <= s.radio.max_tx_power_w * (1.0 + 1e-9));
  REQUIRE(r.urllc.size() == static_cast<size_t>(s.radio.num_ues));
  for (int i = 0; i < s.radio.num_ues; ++i) {
    CHECK(r.urllc[i].dep_ub <= s.urllc[i].dep_threshold * (1.0 + 1e-6));
    CHECK(delay_upper_bound(r.plan, s.radio.bandwidth_hz, s.urllc[i].dep_threshold) <=
          s.urllc[i].delay_threshold_s * (1.0 + 1e-9));
  }
  if (r.mode != OptimizationMode::e2e_no_sensing)
    CHECK(r.sensing_sinr >= s.sensing.sinr_threshold * (1.0 - 1e-4));
}

}  // namespace

TEST_SUITE("optimizer") {

TEST_CASE("single-ue solve sits on the reliability boundary at minimal power") {
  const Scenario s = one_ue_scenario();
  const double g = 3e-6;
  const MomentStats st = one_ue_moments(s, g);
  const SolveResult r =
      solve_allocation(s, st, OptimizationMode::e2e_no_sensing, DetectorKind::clutter_unaware);

  REQUIRE(r.feasible);
  CHECK(r.status == "converged");
  CHECK(r.rho_w[0] == 0.0);  // no sensing stream in this mode
  CHECK(std::abs(r.lbar * (r.plan.length - s.radio.pilot_length) - 1.0) <= 1e-12);

  // surrogate objective never increases across outer rounds
  for (size_t i = 1; i < r.objective_trace_j.size(); ++i)
    CHECK(r.objective_trace_j[i] <= r.objective_trace_j[i - 1] + 1e-9);

  // the decoding-error constraint is active and the power is the closed-form
  // minimum for the blocklength the solver picked
  const double eps_th = s.urllc[0].dep_threshold;
  CHECK(std::abs(r.urllc[0].dep_ub - eps_th) <= 1e-8 * eps_th);
  const double gamma = minimal_sinr(r.plan, s.urllc[0].packet_bits, eps_th);
  const double rho_min = gamma * st.noise_w / (g * g);
  CHECK(std::abs(r.rho_w[1] - rho_min) <= 1e-8 * rho_min);

  // brute force over every integer blocklength brackets the returned energy:
  // no better than the global integer minimum, no worse than the cap point
  const OpsBreakdown ops = ops_for(s, DetectorKind::clutter_unaware, false);
  double best_e = 1e300, cap_e = 1e300;
  for (int l = s.radio.pilot_length + 1; l <= r.blocklength_cap; ++l) {
    const BlocklengthPlan plan{l, s.radio.pilot_length};
    const double rho = minimal_sinr(plan, s.urllc[0].packet_bits, eps_th) * st.noise_w / (g * g);
    if (rho > s.radio.max_tx_power_w) continue;
    VectorXd rv(2);
    rv << 0.0, rho;
    const double e = total_energy(rv, plan, s, ops).total_j();
    best_e = std::min(best_e, e);
    if (l == r.blocklength_cap) cap_e = e;
  }
  CHECK(r.energy.total_j() >= best_e - 1e-12);
  CHECK(r.energy.total_j() <= cap_e + 1e-9);
}

TEST_CASE("desk-scale modes order by energy and satisfy the requirements") {
  const Scenario& d = desk42();
  const MomentStats& m = desk42_moments();

  const SolveResult e2e =
      solve_allocation(d, m, OptimizationMode::e2e_isac, DetectorKind::clutter_unaware);
  const SolveResult ns =
      solve_allocation(d, m, OptimizationMode::e2e_no_sensing, DetectorKind::clutter_unaware);
  const SolveResult tx =
      solve_allocation(d, m, OptimizationMode::tx_only_isac, DetectorKind::clutter_unaware);

  check_allocation(d, m, e2e);
  check_allocation(d, m, ns);
  check_allocation(d, m, tx);
  CHECK(e2e.status == "converged");
  CHECK(ns.status == "converged");
  CHECK(tx.status == "converged");

  // dropping the sensing stream can only help; optimizing transmit energy
  // alone can only hurt the total
  CHECK(ns.energy.total_j() <= e2e.energy.total_j() + 1e-9);
  CHECK(e2e.energy.total_j() <= tx.energy.total_j() + 1e-9);
  CHECK(ns.rho_w[0] == 0.0);
  CHECK(e2e.rho_w[0] > 0.0);

  // sensing slack collapsed and stayed down
  CHECK(e2e.chi0 == 0.0);
  bool slack_gone = false;
  for (double c : e2e.chi0_trace) {
    if (c < 1e-6) slack_gone = true;
    if (slack_gone) CHECK(c < 1e-6);
  }
  CHECK(slack_gone);
}

TEST_CASE("identical inputs reproduce the solve bit for bit") {
  const Scenario& d = desk42();
  const MomentStats& m = desk42_moments();
  const SolveResult a =
      solve_allocation(d, m, OptimizationMode::e2e_isac, DetectorKind::clutter_unaware);
  const SolveResult b =
      solve_allocation(d, m, OptimizationMode::e2e_isac, DetectorKind::clutter_unaware);

  CHECK(a.iterations == b.iterations);
  CHECK(a.plan.length == b.plan.length);
  REQUIRE(a.rho_w.size() == b.rho_w.size());
  for (int j = 0; j < a.rho_w.size(); ++j) CHECK(a.rho_w[j] == b.rho_w[j]);
  REQUIRE(a.objective_trace_j.size() == b.objective_trace_j.size());
  for (size_t i = 0; i < a.objective_trace_j.size(); ++i)
    CHECK(a.objective_trace_j[i] == b.objective_trace_j[i]);
  CHECK(a.energy.total_j() == b.energy.total_j());
}

TEST_CASE("unreachable sensing threshold reports infeasible:sensing") {
  Scenario d = desk42();
  d.sensing.sinr_threshold = 1e12;
  const SolveResult r =
      solve_allocation(d, desk42_moments(), OptimizationMode::e2e_isac,
                       DetectorKind::clutter_unaware);
  CHECK_FALSE(r.feasible);
  CHECK(r.status == "infeasible:sensing");
  CHECK(r.chi0 > 0.0);
  REQUIRE(r.rho_w.size() == d.radio.num_ues + 1);
  CHECK(r.rho_w.cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.urllc.empty());
}

TEST_CASE("blocklength override pins the plan or rejects out-of-range values") {
  const Scenario& d = desk42();
  const MomentStats& m = desk42_moments();

  SolveOptions opts;
  opts.blocklength_override = 150;
  const SolveResult pinned =
      solve_allocation(d, m, OptimizationMode::e2e_isac, DetectorKind::clutter_unaware, opts);
  check_allocation(d, m, pinned);
  CHECK(pinned.plan.length == 150);

  // pinning the blocklength cannot beat optimizing it
  const SolveResult free_l =
      solve_allocation(d, m, OptimizationMode::e2e_isac, DetectorKind::clutter_unaware);
  CHECK(pinned.energy.total_j() >= free_l.energy.total_j() - 1e-9);

  opts.blocklength_override = 5;  // below the pilot length
  CHECK(solve_allocation(d, m, OptimizationMode::e2e_isac, DetectorKind::clutter_unaware, opts)
            .status == "infeasible:blocklength-override");
  opts.blocklength_override = 1000;  // above the cap
  CHECK(solve_allocation(d, m, OptimizationMode::e2e_isac, DetectorKind::clutter_unaware, opts)
            .status == "infeasible:blocklength-override");
}

TEST_CASE("tight refresh-rate caps solve from a rescued start") {
  // The cold start lands outside the first inner approximation here; the
  // solver must recover rather than mislabel the problem infeasible.
  Scenario d = desk42();
  d.sensing.refresh_rate_threshold = 2000.0;
  const MomentStats& m = desk42_moments();

  const SolveResult capped =
      solve_allocation(d, m, OptimizationMode::e2e_isac, DetectorKind::clutter_unaware);
  CHECK(capped.blocklength_cap == 100);
  check_allocation(d, m, capped);
  CHECK(capped.sensing_rate_hz >= 2000.0 * (1.0 - 1e-9));

  SolveOptions opts;
  opts.blocklength_override = 79;
  const SolveResult pinned =
      solve_allocation(d, m, OptimizationMode::e2e_isac, DetectorKind::clutter_unaware, opts);
  check_allocation(d, m, pinned);
  CHECK(pinned.plan.length == 79);
}

TEST_CASE("availability counts feasible drops over reseeded placements") {
  const Scenario& d = desk42();
  const AvailabilityReport av =
      network_availability(d, OptimizationMode::e2e_isac, DetectorKind::clutter_unaware, 4);
  CHECK(av.drops == 4);
  CHECK(av.blocklength_cap == max_blocklength(d.urllc, d.sensing, d.radio.bandwidth_hz));
  CHECK(av.feasible_drops == 4);
  CHECK(av.availability == 1.0);

  Scenario tight = d;
  tight.sensing.refresh_rate_threshold = 2000.0;
  const AvailabilityReport av2 =
      network_availability(tight, OptimizationMode::e2e_isac, DetectorKind::clutter_unaware, 2);
  CHECK(av2.blocklength_cap == 100);
  CHECK(av2.availability == 1.0);
}

TEST_CASE("input validation") {
  const Scenario s = one_ue_scenario();
  const MomentStats st = one_ue_moments(s, 3e-6);
  // sensing modes need a receive AP
  CHECK_THROWS_AS(
      solve_allocation(s, st, OptimizationMode::e2e_isac, DetectorKind::clutter_unaware),
      std::invalid_argument);
  CHECK_THROWS_AS(
      solve_allocation(s, st, OptimizationMode::tx_only_isac, DetectorKind::clutter_unaware),
      std::invalid_argument);
  // moment table must match the scenario dimensions
  CHECK_THROWS_AS(solve_allocation(desk42(), st, OptimizationMode::e2e_no_sensing,
                                   DetectorKind::clutter_unaware),
                  std::invalid_argument);
}

TEST_CASE("mode names round-trip") {
  for (OptimizationMode mode : {OptimizationMode::e2e_isac, OptimizationMode::tx_only_isac,
                                OptimizationMode::e2e_no_sensing})
    CHECK(mode_from_string(to_string(mode)) == mode);
  CHECK_THROWS(mode_from_string("joint"));
}

}  // TEST_SUITE
