// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cfisac/scenario.hpp"

using namespace cfisac;

namespace {
bool contains_position(const std::vector<Vec3>& v, double x, double y) {
  for (const auto& p : v)
    if (p.x() == x && p.y() == y) return true;
  return false;
}
}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("transmit grid is anchored on the area center") {
  // One grid node must coincide with the default candidate sensing location;
  // the nearest illuminator distance is what bounds the reachable sensing
  // SINR, so this anchoring is load-bearing, not cosmetic.
  Scenario s = paper_default_scenario();
  resolve_scenario(s);
  REQUIRE(static_cast<int>(s.geometry.tx_ap_positions.size()) == 16);
  CHECK(contains_position(s.geometry.tx_ap_positions, 250.0, 250.0));

  Scenario d = desk_scale_scenario();
  resolve_scenario(d);
  REQUIRE(static_cast<int>(d.geometry.tx_ap_positions.size()) == 4);
  CHECK(contains_position(d.geometry.tx_ap_positions, 30.0, 30.0));
}

TEST_CASE("receive APs sit on the horizontal center line") {
  Scenario s = paper_default_scenario();
  resolve_scenario(s);
  REQUIRE(s.geometry.rx_ap_positions.size() == 2);
  CHECK(s.geometry.rx_ap_positions[0].x() == 200.0);
  CHECK(s.geometry.rx_ap_positions[0].y() == 250.0);
  CHECK(s.geometry.rx_ap_positions[1].x() == 300.0);
  CHECK(s.geometry.rx_ap_positions[1].y() == 250.0);
}

TEST_CASE("drop 0 reproduces the seeded initial placement") {
  Scenario s = paper_default_scenario();
  s.master_seed = 42;
  resolve_scenario(s);
  const auto initial = s.geometry.ue_positions;

  redraw_ue_positions(s, 1);
  bool moved = false;
  for (std::size_t i = 0; i < initial.size(); ++i)
    moved = moved || (initial[i] - s.geometry.ue_positions[i]).norm() > 1.0;
  CHECK(moved);

  redraw_ue_positions(s, 0);
  for (std::size_t i = 0; i < initial.size(); ++i)
    CHECK((initial[i] - s.geometry.ue_positions[i]).norm() == 0.0);
}

TEST_CASE("master seed keys the UE placement") {
  Scenario a = paper_default_scenario();
  a.master_seed = 1;
  resolve_scenario(a);
  Scenario b = paper_default_scenario();
  b.master_seed = 2;
  resolve_scenario(b);
  double d = 0.0;
  for (std::size_t i = 0; i < a.geometry.ue_positions.size(); ++i)
    d = std::max(d, (a.geometry.ue_positions[i] - b.geometry.ue_positions[i]).norm());
  CHECK(d > 1.0);
}

TEST_CASE("json round trip is lossless") {
  Scenario s = desk_scale_scenario();
  s.master_seed = 77;
  resolve_scenario(s);
  const auto j = scenario_to_json(s);
  Scenario back = scenario_from_json(j);
  resolve_scenario(back);
  CHECK(scenario_to_json(back).dump() == j.dump());
  CHECK(back.geometry.ue_positions.size() == s.geometry.ue_positions.size());
  for (std::size_t i = 0; i < s.geometry.ue_positions.size(); ++i)
    CHECK((back.geometry.ue_positions[i] - s.geometry.ue_positions[i]).norm() == 0.0);
}

TEST_CASE("apply_parameter") {
  Scenario s = desk_scale_scenario();
  resolve_scenario(s);
  SUBCASE("known path updates and re-resolves") {
    CHECK(apply_parameter(s, "sensing.sinr_threshold", 2.5));
    CHECK(s.sensing.sinr_threshold == 2.5);
  }
  SUBCASE("resizing the UE count regenerates placements and requirements") {
    CHECK(apply_parameter(s, "radio.num_ues", 3));
    CHECK(static_cast<int>(s.geometry.ue_positions.size()) == 3);
    CHECK(static_cast<int>(s.urllc.size()) == 3);
  }
  SUBCASE("unknown paths are rejected") {
    CHECK_FALSE(apply_parameter(s, "radio.no_such_knob", 1.0));
    CHECK_FALSE(apply_parameter(s, "nodots", 1.0));
  }
}

TEST_CASE("validate_scenario flags contract violations") {
  Scenario s = desk_scale_scenario();
  resolve_scenario(s);
  CHECK(validate_scenario(s).empty());
  s.radio.max_tx_power_w = -1.0;
  CHECK_FALSE(validate_scenario(s).empty());
}

TEST_CASE("moment_stats_key ignores requirement and power knobs") {
  Scenario s = desk_scale_scenario();
  resolve_scenario(s);
  const auto key = moment_stats_key(s);

  Scenario t = s;
  t.sensing.sinr_threshold *= 4.0;
  t.urllc[0].dep_threshold = 1e-7;
  t.power_model.p_fixed_w += 10.0;
  CHECK(moment_stats_key(t) == key);

  Scenario g = s;
  g.master_seed += 1;
  CHECK(moment_stats_key(g) != key);
  Scenario h = s;
  h.radio.clutter_scaling *= 2.0;
  CHECK(moment_stats_key(h) != key);
}

TEST_CASE("bearings use the compass azimuth convention") {
  const Vec3 o(0.0, 0.0, 0.0);
  CHECK(bearing_between(o, Vec3(0.0, 1.0, 0.0)).azimuth_rad == doctest::Approx(0.0));
  CHECK(bearing_between(o, Vec3(1.0, 0.0, 0.0)).azimuth_rad == doctest::Approx(M_PI / 2));
  CHECK(bearing_between(o, Vec3(0.0, -1.0, 0.0)).azimuth_rad == doctest::Approx(M_PI));
  CHECK(bearing_between(o, Vec3(0.0, 1.0, 1.0)).elevation_rad == doctest::Approx(M_PI / 4));
  CHECK(bearing_between(Vec3(0, 0, 1), Vec3(0, 1, 0)).elevation_rad ==
        doctest::Approx(-M_PI / 4));
  CHECK(distance_3d(o, Vec3(3.0, 4.0, 0.0)) == doctest::Approx(5.0));
}

}  // TEST_SUITE
