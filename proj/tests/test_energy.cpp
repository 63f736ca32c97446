// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cfisac/energy.hpp"
#include "cfisac/scenario.hpp"

using namespace cfisac;

namespace {
double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }
}  // namespace

TEST_SUITE("energy") {

TEST_CASE("detector kind names round trip") {
  CHECK(detector_from_string(to_string(DetectorKind::clutter_unaware)) ==
        DetectorKind::clutter_unaware);
  CHECK(detector_from_string(to_string(DetectorKind::clutter_aware)) ==
        DetectorKind::clutter_aware);
  CHECK_THROWS_AS((void)detector_from_string("maprt"), std::invalid_argument);
}

TEST_CASE("cloud power model") {
  const PowerModelParams pm;
  SUBCASE("one fully loaded processor") {
    const CloudPower cp = cloud_power(pm.c_max_gops, pm);
    CHECK(cp.n_gpp == 1);
    CHECK(rel_err(cp.power_w, 530.0) < 1e-9);
  }
  SUBCASE("idle cloud still draws the fixed supply") {
    const CloudPower cp = cloud_power(0.0, pm);
    CHECK(cp.n_gpp == 0);
    CHECK(cp.power_w == pm.p_fixed_w);
  }
  SUBCASE("processor count is a ceiling") {
    CHECK(cloud_power(pm.c_max_gops * 1.001, pm).n_gpp == 2);
    CHECK(cloud_power(pm.c_max_gops * 0.2, pm).n_gpp == 1);
  }
  SUBCASE("negative load rejected") {
    CHECK_THROWS_AS((void)cloud_power(-1.0, pm), std::invalid_argument);
  }
}

TEST_CASE("communication op counts, both pilot regimes") {
  SUBCASE("orthogonal pilots (pilot length >= ue count)") {
    const OpsBreakdown ops = count_comm_ops(2, 3, 2, 2);
    const double n = 4.0;
    CHECK(ops.ch_est == (8.0 * 2 * 3 + 8.0 * 4) * 2 * 2);
    CHECK(ops.rzf == (12.0 * n * n + 16.0 * n) * 2 + 8.0 * (n * n * n - n) / 3.0);
    CHECK(ops.comm_per_symbol == 20.0 * 2 * 2 * 2);
    CHECK(ops.zf_sensing == 0.0);
    CHECK(ops.detector_fixed == 0.0);
  }
  SUBCASE("shared pilots (pilot length < ue count)") {
    const OpsBreakdown ops = count_comm_ops(2, 1, 3, 2);
    CHECK(ops.ch_est == 8.0 * 2 * 1 * 1 * 2 + 8.0 * 4 * 3 * 2);
  }
}

TEST_CASE("sensing op counts") {
  const int m = 2, k = 2, r = 1;
  const double n = static_cast<double>(m) * k;
  SUBCASE("steering-only statistic") {
    const OpsBreakdown ops = count_sensing_ops(m, k, r, DetectorKind::clutter_unaware);
    CHECK(ops.zf_sensing == 8.0 * n * n + 12.0 * n);
    CHECK(ops.sensing_per_symbol ==
          12.0 * n + 20.0 * m * k * r + 8.0 * m * m * r * k + 4.0 * r * (k * k + k) * m);
    CHECK(ops.detector_fixed ==
          8.0 * (k * k * k - k) * r / 3.0 + 8.0 * (k * r * k * r + k * r));
  }
  SUBCASE("clutter-eliminating statistic") {
    const OpsBreakdown ops = count_sensing_ops(m, k, r, DetectorKind::clutter_aware);
    const double dj = (1.0 + m * m) * k * r;
    const double dc = static_cast<double>(m) * m * k * r;
    CHECK(ops.sensing_per_symbol ==
          12.0 * n + 20.0 * m * k * r + 8.0 * m * m * r * k + 8.0 * m * m * r * k +
              4.0 * m * r * (k * k + k) + 4.0 * (n * n + n) + 8.0 * m * m * r * k * k);
    CHECK(ops.detector_fixed == 8.0 / 3.0 * (dj * dj * dj - dj) +
                                    8.0 / 3.0 * (dc * dc * dc - dc) + 8.0 * (dj * dj + dj));
    // The richer statistic can only cost more.
    const OpsBreakdown cheap = count_sensing_ops(m, k, r, DetectorKind::clutter_unaware);
    CHECK(ops.sensing_per_symbol > cheap.sensing_per_symbol);
    CHECK(ops.detector_fixed > cheap.detector_fixed);
  }
  SUBCASE("no receive aps: beam synthesis only") {
    const OpsBreakdown ops = count_sensing_ops(m, k, 0, DetectorKind::clutter_aware);
    CHECK(ops.sensing_per_symbol == 12.0 * n);
    CHECK(ops.detector_fixed == 0.0);
  }
}

TEST_CASE("gops amortize per-block costs over the block duration") {
  OpsBreakdown ops;
  ops.ch_est = 100.0;
  ops.rzf = 50.0;
  ops.comm_per_symbol = 7.0;
  ops.zf_sensing = 30.0;
  ops.sensing_per_symbol = 3.0;
  ops.detector_fixed = 11.0;
  BlocklengthPlan plan;
  plan.length = 40;
  plan.pilot_length = 10;
  const double b = 2e5;
  const GopsReport g = gops(ops, b, plan);
  const double scale = b / (40.0 * 1e9);
  CHECK(rel_err(g.comm_gops, scale * (100.0 + 50.0 + 7.0 * 30.0)) < 1e-15);
  CHECK(rel_err(g.sensing_gops, scale * (30.0 + 3.0 * 30.0 + 11.0)) < 1e-15);
  plan.pilot_length = 41;
  CHECK_THROWS_AS((void)gops(ops, b, plan), std::invalid_argument);
}

TEST_CASE("dropping the sensing workload zeroes its fields only") {
  Scenario s = desk_scale_scenario();
  s.master_seed = 2;
  resolve_scenario(s);
  const OpsBreakdown with = ops_for(s, DetectorKind::clutter_aware, true);
  const OpsBreakdown without = ops_for(s, DetectorKind::clutter_aware, false);
  CHECK(without.ch_est == with.ch_est);
  CHECK(without.rzf == with.rzf);
  CHECK(without.comm_per_symbol == with.comm_per_symbol);
  CHECK(without.zf_sensing == 0.0);
  CHECK(without.sensing_per_symbol == 0.0);
  CHECK(without.detector_fixed == 0.0);
  CHECK(with.zf_sensing > 0.0);
}

TEST_CASE("power and energy reports agree to the block duration") {
  Scenario s = desk_scale_scenario();
  s.master_seed = 2;
  resolve_scenario(s);
  BlocklengthPlan plan;
  plan.length = 79;
  plan.pilot_length = s.radio.pilot_length;
  const VectorXd rho = VectorXd::Constant(s.radio.num_ues + 1, 0.01);

  const PowerReport p = total_power(rho, plan, s, DetectorKind::clutter_aware);
  const EnergyReport e = total_energy(rho, plan, s, DetectorKind::clutter_aware);
  const double block_s = plan.length / s.radio.bandwidth_hz;

  CHECK(rel_err(e.total_j(), p.total_w() * block_s) < 1e-12);
  CHECK(rel_err(e.e_comm_proc_j + e.e_sens_proc_j + e.e_other_j, p.p_cloud_w * block_s) < 1e-12);
  CHECK(rel_err(p.p_transmit_w,
                s.power_model.delta_tr * rho.sum() * plan.data_length() / plan.length) < 1e-12);
  CHECK(e.n_gpp == p.n_gpp);
  CHECK(rel_err(e.c_cloud_gops, p.comm_gops + p.sensing_gops) < 1e-15);

  // Zero transmit power removes the amplifier terms and nothing else.
  const VectorXd zero = VectorXd::Zero(s.radio.num_ues + 1);
  const PowerReport p0 = total_power(zero, plan, s, DetectorKind::clutter_aware);
  CHECK(p0.p_transmit_w == 0.0);
  CHECK(p0.p_cloud_w == p.p_cloud_w);
  const VectorXd neg = VectorXd::Constant(s.radio.num_ues + 1, -1.0);
  CHECK_THROWS_AS((void)total_power(neg, plan, s, DetectorKind::clutter_aware),
                  std::invalid_argument);
}

TEST_CASE("objective decomposition reproduces the energy total") {
  Scenario s = desk_scale_scenario();
  s.master_seed = 2;
  resolve_scenario(s);
  BlocklengthPlan plan;
  plan.length = 123;
  plan.pilot_length = s.radio.pilot_length;
  const VectorXd rho = VectorXd::Constant(s.radio.num_ues + 1, 0.015);

  const OpsBreakdown ops = count_ops(s, DetectorKind::clutter_unaware);
  const EnergyReport e = total_energy(rho, plan, s, ops);
  const ObjectiveTerms t = objective_terms(s, ops, e.n_gpp);
  const double ld = plan.data_length();
  const double want = (plan.length * t.p_fixed_sum_w + t.f1_w + ld * t.f2_w +
                       s.power_model.delta_tr * ld * rho.sum()) /
                      s.radio.bandwidth_hz;
  CHECK(rel_err(e.total_j(), want) < 1e-9);
}

TEST_CASE("csv row carries the headline fields") {
  Scenario s = desk_scale_scenario();
  s.master_seed = 2;
  resolve_scenario(s);
  BlocklengthPlan plan;
  plan.length = 79;
  plan.pilot_length = s.radio.pilot_length;
  const VectorXd rho = VectorXd::Constant(s.radio.num_ues + 1, 0.01);
  const PowerReport p = total_power(rho, plan, s, DetectorKind::clutter_unaware);
  const std::string row = energy_csv_row("id0", DetectorKind::clutter_unaware, plan, rho, p, 1.5);
  CHECK(row.find("id0,clutter_unaware,79,") == 0);
  const std::string header = energy_csv_header();
  CHECK(std::count(row.begin(), row.end(), ',') ==
        std::count(header.begin(), header.end(), ','));
}

}  // TEST_SUITE
