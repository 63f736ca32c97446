// SPDX-License-Identifier: Apache-2.0
#include "cfisac/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cfisac/linalg.hpp"
#include "cfisac/rng.hpp"
#include "cfisac/units.hpp"

namespace cfisac {

namespace {

// Largest-divisor grid: 16 -> 4x4, 4 -> 2x2, 2 -> 1x2, 5 -> 1x5.
std::pair<int, int> grid_shape(int n) {
  int rows = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n))));
  while (rows > 1 && n % rows != 0) --rows;
  return {rows, n / rows};
}

// The grid is anchored so one node lands on the area center — the default
// candidate sensing location. Keeping an illuminator within one grid step of
// the target is what makes the default sensing SINR threshold reachable: with
// a cell-centered grid the nearest AP sits ~89 m away at default scale and the
// bistatic return stays an order of magnitude below the clutter floor for any
// choice of precoder.
std::vector<Vec3> grid_positions(int n, double side, double height) {
  auto [rows, cols] = grid_shape(n);
  std::vector<Vec3> out;
  out.reserve(n);
  const double dx = side / cols;
  const double dy = side / rows;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      out.emplace_back(0.5 * side + dx * (c - cols / 2),
                       0.5 * side + dy * (r - rows / 2), height);
  return out;
}

// Receive APs sit on the horizontal line through the center, mirrored around
// it at increasing offsets: 0.4/0.6, then 0.3/0.7, ... of the side length.
std::vector<Vec3> rx_line_positions(int n, double side, double height) {
  std::vector<Vec3> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double magnitude = 0.1 * side * (i / 2 + 1);
    const double sign = (i % 2 == 0) ? -1.0 : 1.0;
    out.emplace_back(0.5 * side + sign * magnitude, 0.5 * side, height);
  }
  return out;
}

std::vector<Vec3> uniform_positions(int n, double side, double height, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, side);
  std::vector<Vec3> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double x = u(rng);
    const double y = u(rng);
    out.emplace_back(x, y, height);
  }
  return out;
}

}  // namespace

Scenario paper_default_scenario() {
  return Scenario{};
}

Scenario desk_scale_scenario() {
  Scenario s;
  s.preset_name = "desk-scale";
  s.radio.antennas_per_ap = 2;
  s.radio.num_tx_aps = 4;
  s.radio.num_rx_aps = 1;
  s.radio.num_ues = 4;  // keeps rank headroom for the zero-forced sensing beam
  // Small service area: short, LOS-dominated links keep enough channel
  // hardening for the finite-blocklength reliability bound at 8 antennas.
  s.geometry.area_side_m = 60.0;
  s.geometry.target_position = Vec3(30.0, 30.0, s.geometry.target_height_m);
  // The receive AP needs more separation than the default 0.1·side: at 60 m
  // that would leave it 6 m from the center transmit AP, where the inter-AP
  // clutter gain swamps the target return.
  s.geometry.rx_ap_positions = {Vec3(15.0, 30.0, s.geometry.rx_ap_height_m)};
  // At 60 m the one-way clutter gain outgrows the bistatic target return;
  // scaled down so the sensing SINR target stays reachable.
  s.radio.clutter_scaling = 0.005;
  s.mc.n_mc = 300;
  return s;
}

void resolve_scenario(Scenario& s) {
  auto& g = s.geometry;
  if (static_cast<int>(g.tx_ap_positions.size()) != s.radio.num_tx_aps) {
    if (g.random_tx_placement) {
      auto rng = make_stream(s.master_seed, StreamPurpose::ap_positions);
      g.tx_ap_positions =
          uniform_positions(s.radio.num_tx_aps, g.area_side_m, g.tx_ap_height_m, rng);
    } else {
      g.tx_ap_positions = grid_positions(s.radio.num_tx_aps, g.area_side_m, g.tx_ap_height_m);
    }
  }
  if (static_cast<int>(g.rx_ap_positions.size()) != s.radio.num_rx_aps) {
    g.rx_ap_positions = rx_line_positions(s.radio.num_rx_aps, g.area_side_m, g.rx_ap_height_m);
  }
  if (static_cast<int>(g.ue_positions.size()) != s.radio.num_ues) {
    redraw_ue_positions(s, 0);
  }
  if (static_cast<int>(s.urllc.size()) != s.radio.num_ues) {
    UrllcRequirement proto = s.urllc.empty() ? UrllcRequirement{} : s.urllc.front();
    s.urllc.assign(s.radio.num_ues, proto);
  }
  s.power_model.p_ap0_tx_w = s.power_model.p_ap0_tx_per_antenna_w * s.radio.antennas_per_ap;
  s.power_model.p_ap0_rx_w = s.power_model.p_ap0_rx_per_antenna_w * s.radio.antennas_per_ap;
}

void redraw_ue_positions(Scenario& s, std::uint64_t drop_index) {
  auto rng = make_stream(s.master_seed, StreamPurpose::ue_positions, drop_index);
  s.geometry.ue_positions =
      uniform_positions(s.radio.num_ues, s.geometry.area_side_m, s.geometry.ue_height_m, rng);
  s.drop_index = drop_index;
}

std::vector<std::string> validate_scenario(const Scenario& s) {
  std::vector<std::string> v;
  auto require = [&](bool ok, const std::string& msg) {
    if (!ok) v.push_back(msg);
  };
  const auto& r = s.radio;
  require(r.carrier_frequency_hz > 0, "radio.carrier_frequency_hz must be positive");
  require(r.bandwidth_hz > 0, "radio.bandwidth_hz must be positive");
  require(r.noise_power_w > 0, "radio.noise_power_w must be positive");
  require(r.pilot_length >= 1, "radio.pilot_length must be at least 1");
  require(r.num_tx_aps >= 1, "radio.num_tx_aps must be at least 1");
  require(r.num_rx_aps >= 0, "radio.num_rx_aps must be non-negative");
  require(r.antennas_per_ap >= 1, "radio.antennas_per_ap must be at least 1");
  require(r.num_ues >= 0, "radio.num_ues must be non-negative");
  require(r.num_ues <= r.pilot_length,
          "radio.num_ues exceeds radio.pilot_length: orthogonal pilots unavailable");
  require(r.max_tx_power_w > 0, "radio.max_tx_power_w must be positive");
  require(r.pilot_power_w > 0, "radio.pilot_power_w must be positive");
  require(r.rzf_regularization_w > 0, "radio.rzf_regularization_w must be positive");
  require(r.rcs_variance_m2 > 0, "radio.rcs_variance_m2 must be positive");
  require(r.clutter_scaling >= 0, "radio.clutter_scaling must be non-negative");

  require(static_cast<int>(s.urllc.size()) == r.num_ues,
          "urllc requirement list size must equal radio.num_ues");
  for (std::size_t i = 0; i < s.urllc.size(); ++i) {
    const auto& u = s.urllc[i];
    const std::string tag = "urllc[" + std::to_string(i) + "].";
    require(u.packet_bits >= 1, tag + "packet_bits must be at least 1");
    require(u.dep_threshold > 0 && u.dep_threshold < 1, tag + "dep_threshold must be in (0,1)");
    require(u.delay_threshold_s > 0, tag + "delay_threshold_s must be positive");
  }
  require(s.sensing.sinr_threshold > 0, "sensing.sinr_threshold must be positive");
  require(s.sensing.refresh_rate_threshold > 0, "sensing.refresh_rate_threshold must be positive");
  require(s.sensing.false_alarm_prob > 0 && s.sensing.false_alarm_prob <= 1,
          "sensing.false_alarm_prob must be in (0,1]");

  const auto& g = s.geometry;
  require(g.area_side_m > 0, "geometry.area_side_m must be positive");
  require(static_cast<int>(g.tx_ap_positions.size()) == r.num_tx_aps,
          "geometry.tx_ap_positions size must equal radio.num_tx_aps");
  require(static_cast<int>(g.rx_ap_positions.size()) == r.num_rx_aps,
          "geometry.rx_ap_positions size must equal radio.num_rx_aps");
  require(static_cast<int>(g.ue_positions.size()) == r.num_ues,
          "geometry.ue_positions size must equal radio.num_ues");
  const double min_sep = 1.0;  // pathloss model validity floor
  for (const auto& p : g.tx_ap_positions)
    require(distance_3d(p, g.target_position) >= min_sep,
            "target must be at least 1 m from every transmit AP");
  for (const auto& p : g.rx_ap_positions) {
    require(distance_3d(p, g.target_position) >= min_sep,
            "target must be at least 1 m from every receive AP");
    for (const auto& q : g.tx_ap_positions)
      require(distance_3d(p, q) >= min_sep,
              "receive APs must be at least 1 m from every transmit AP");
  }

  const auto& pm = s.power_model;
  require(pm.delta_tr > 0, "power_model.delta_tr must be positive");
  require(pm.sigma_cool > 0 && pm.sigma_cool <= 1, "power_model.sigma_cool must be in (0,1]");
  require(pm.c_max_gops > 0, "power_model.c_max_gops must be positive");
  require(pm.p_fixed_w >= 0 && pm.p_cloud0_proc_w >= 0 && pm.delta_cloud_proc_w >= 0 &&
              pm.p_ap0_tx_per_antenna_w >= 0 && pm.p_ap0_rx_per_antenna_w >= 0,
          "power_model draws must be non-negative");

  require(s.channel_model.angle_spread_deg > 0, "channel_model.angle_spread_deg must be positive");
  require(s.mc.n_mc >= 2, "mc.n_mc must be at least 2");
  require(s.mc.detection_trials >= 0, "mc.detection_trials must be non-negative");
  return v;
}

// Azimuth follows the compass convention (measured from +y), which orients
// every ULA along the x axis. The receive APs sit on the horizontal center
// line, so this keeps the downward-looking beam of a center AP out of the
// endfire-coherent subspace of its inter-AP clutter channels; a y-oriented
// array would couple them maximally and cap the sensing SINR below 0 dB.
Bearing bearing_between(const Vec3& from, const Vec3& to) {
  const Vec3 d = to - from;
  Bearing b;
  b.azimuth_rad = std::atan2(d.x(), d.y());
  b.elevation_rad = std::atan2(d.z(), std::hypot(d.x(), d.y()));
  return b;
}

double distance_3d(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

namespace {

using nlohmann::json;

// Reads `base` (linear) or `base_dbm`/`base_db`/`base_dbsm` (decibel forms).
double get_with_db(const json& j, const std::string& base, double fallback,
                   const char* suffix = "_db") {
  std::string plain = base;
  if (j.contains(plain)) return j.at(plain).get<double>();
  if (j.contains(plain + suffix)) {
    const double db = j.at(plain + suffix).get<double>();
    return db_to_linear(db);
  }
  return fallback;
}

double get_watt_with_dbm(const json& j, const std::string& base, double fallback) {
  if (j.contains(base)) return j.at(base).get<double>();
  if (j.contains(base + "_dbm")) return dbm_to_watt(j.at(base + "_dbm").get<double>());
  return fallback;
}

Vec3 parse_vec3(const json& j, double default_height) {
  if (!j.is_array() || (j.size() != 2 && j.size() != 3))
    throw std::invalid_argument("positions must be [x,y] or [x,y,z] arrays");
  Vec3 v(j[0].get<double>(), j[1].get<double>(), default_height);
  if (j.size() == 3) v.z() = j[2].get<double>();
  return v;
}

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario s;
  if (j.contains("preset")) {
    const std::string p = j.at("preset").get<std::string>();
    if (p == "paper-default")
      s = paper_default_scenario();
    else if (p == "desk-scale")
      s = desk_scale_scenario();
    else
      throw std::invalid_argument("unknown preset: " + p);
  }
  if (j.contains("master_seed")) s.master_seed = j.at("master_seed").get<std::uint64_t>();
  if (j.contains("drop_index")) s.drop_index = j.at("drop_index").get<std::uint64_t>();

  if (j.contains("radio")) {
    const auto& r = j.at("radio");
    auto& rc = s.radio;
    rc.carrier_frequency_hz = r.value("carrier_frequency_hz", rc.carrier_frequency_hz);
    rc.bandwidth_hz = r.value("bandwidth_hz", rc.bandwidth_hz);
    rc.noise_power_w = get_watt_with_dbm(r, "noise_power_w", rc.noise_power_w);
    rc.pilot_length = r.value("pilot_length", rc.pilot_length);
    rc.num_tx_aps = r.value("num_tx_aps", rc.num_tx_aps);
    rc.num_rx_aps = r.value("num_rx_aps", rc.num_rx_aps);
    rc.antennas_per_ap = r.value("antennas_per_ap", rc.antennas_per_ap);
    rc.num_ues = r.value("num_ues", rc.num_ues);
    rc.max_tx_power_w = get_watt_with_dbm(r, "max_tx_power_w", rc.max_tx_power_w);
    rc.pilot_power_w = get_watt_with_dbm(r, "pilot_power_w", rc.pilot_power_w);
    rc.rzf_regularization_w = get_watt_with_dbm(r, "rzf_regularization_w", rc.noise_power_w);
    if (r.contains("rcs_variance_m2"))
      rc.rcs_variance_m2 = r.at("rcs_variance_m2").get<double>();
    else if (r.contains("rcs_variance_dbsm"))
      rc.rcs_variance_m2 = db_to_linear(r.at("rcs_variance_dbsm").get<double>());
    rc.clutter_scaling = r.value("clutter_scaling", rc.clutter_scaling);
  }

  if (j.contains("urllc")) {
    const auto& u = j.at("urllc");
    auto parse_req = [](const json& ju, UrllcRequirement proto) {
      proto.packet_bits = ju.value("packet_bits", proto.packet_bits);
      proto.dep_threshold = ju.value("dep_threshold", proto.dep_threshold);
      proto.delay_threshold_s = ju.value("delay_threshold_s", proto.delay_threshold_s);
      return proto;
    };
    if (u.is_array()) {
      s.urllc.clear();
      for (const auto& ju : u) s.urllc.push_back(parse_req(ju, UrllcRequirement{}));
    } else {
      s.urllc.assign(1, parse_req(u, UrllcRequirement{}));
    }
  }

  if (j.contains("sensing")) {
    const auto& se = j.at("sensing");
    s.sensing.sinr_threshold = get_with_db(se, "sinr_threshold", s.sensing.sinr_threshold);
    s.sensing.refresh_rate_threshold =
        se.value("refresh_rate_threshold", s.sensing.refresh_rate_threshold);
    s.sensing.false_alarm_prob = se.value("false_alarm_prob", s.sensing.false_alarm_prob);
  }

  if (j.contains("geometry")) {
    const auto& g = j.at("geometry");
    auto& gs = s.geometry;
    gs.area_side_m = g.value("area_side_m", gs.area_side_m);
    gs.tx_ap_height_m = g.value("tx_ap_height_m", gs.tx_ap_height_m);
    gs.rx_ap_height_m = g.value("rx_ap_height_m", gs.rx_ap_height_m);
    gs.ue_height_m = g.value("ue_height_m", gs.ue_height_m);
    gs.target_height_m = g.value("target_height_m", gs.target_height_m);
    gs.random_tx_placement = g.value("random_tx_placement", gs.random_tx_placement);
    if (g.contains("target_position"))
      gs.target_position = parse_vec3(g.at("target_position"), gs.target_height_m);
    else
      gs.target_position = Vec3(0.5 * gs.area_side_m, 0.5 * gs.area_side_m, gs.target_height_m);
    auto parse_list = [&](const char* key, double h) {
      std::vector<Vec3> out;
      for (const auto& p : g.at(key)) out.push_back(parse_vec3(p, h));
      return out;
    };
    if (g.contains("tx_ap_positions")) gs.tx_ap_positions = parse_list("tx_ap_positions", gs.tx_ap_height_m);
    if (g.contains("rx_ap_positions")) gs.rx_ap_positions = parse_list("rx_ap_positions", gs.rx_ap_height_m);
    if (g.contains("ue_positions")) gs.ue_positions = parse_list("ue_positions", gs.ue_height_m);
  }

  if (j.contains("power_model")) {
    const auto& p = j.at("power_model");
    auto& pm = s.power_model;
    pm.delta_tr = p.value("delta_tr", pm.delta_tr);
    pm.p_ap0_tx_per_antenna_w = p.value("p_ap0_tx_per_antenna_w", pm.p_ap0_tx_per_antenna_w);
    pm.p_ap0_rx_per_antenna_w = p.value("p_ap0_rx_per_antenna_w", pm.p_ap0_rx_per_antenna_w);
    pm.p_fixed_w = p.value("p_fixed_w", pm.p_fixed_w);
    pm.p_cloud0_proc_w = p.value("p_cloud0_proc_w", pm.p_cloud0_proc_w);
    pm.delta_cloud_proc_w = p.value("delta_cloud_proc_w", pm.delta_cloud_proc_w);
    pm.sigma_cool = p.value("sigma_cool", pm.sigma_cool);
    pm.c_max_gops = p.value("c_max_gops", pm.c_max_gops);
  }

  if (j.contains("channel_model")) {
    const auto& c = j.at("channel_model");
    auto& cm = s.channel_model;
    cm.los_a = c.value("los_a", cm.los_a);
    cm.los_b = c.value("los_b", cm.los_b);
    cm.los_c = c.value("los_c", cm.los_c);
    cm.los2_a = c.value("los2_a", cm.los2_a);
    cm.los2_b = c.value("los2_b", cm.los2_b);
    cm.los2_height = c.value("los2_height", cm.los2_height);
    cm.los2_c = c.value("los2_c", cm.los2_c);
    cm.breakpoint_height_offset_m =
        c.value("breakpoint_height_offset_m", cm.breakpoint_height_offset_m);
    cm.nlos_a = c.value("nlos_a", cm.nlos_a);
    cm.nlos_b = c.value("nlos_b", cm.nlos_b);
    cm.nlos_c = c.value("nlos_c", cm.nlos_c);
    cm.shadow_sigma_los_db = c.value("shadow_sigma_los_db", cm.shadow_sigma_los_db);
    cm.shadow_sigma_nlos_db = c.value("shadow_sigma_nlos_db", cm.shadow_sigma_nlos_db);
    cm.los_prob_d0_m = c.value("los_prob_d0_m", cm.los_prob_d0_m);
    cm.los_prob_d1_m = c.value("los_prob_d1_m", cm.los_prob_d1_m);
    cm.rician_k_intercept_db = c.value("rician_k_intercept_db", cm.rician_k_intercept_db);
    cm.rician_k_slope_db_per_m = c.value("rician_k_slope_db_per_m", cm.rician_k_slope_db_per_m);
    cm.angle_spread_deg = c.value("angle_spread_deg", cm.angle_spread_deg);
  }

  if (j.contains("mc")) {
    const auto& m = j.at("mc");
    s.mc.n_mc = m.value("n_mc", s.mc.n_mc);
    s.mc.detection_trials = m.value("detection_trials", s.mc.detection_trials);
  }

  return s;
}

Scenario scenario_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json j;
  in >> j;
  return scenario_from_json(j);
}

nlohmann::json scenario_to_json(const Scenario& s) {
  using nlohmann::json;
  json j;
  j["preset"] = s.preset_name;
  j["master_seed"] = s.master_seed;
  j["drop_index"] = s.drop_index;
  const auto& r = s.radio;
  j["radio"] = {{"carrier_frequency_hz", r.carrier_frequency_hz},
                {"bandwidth_hz", r.bandwidth_hz},
                {"noise_power_w", r.noise_power_w},
                {"pilot_length", r.pilot_length},
                {"num_tx_aps", r.num_tx_aps},
                {"num_rx_aps", r.num_rx_aps},
                {"antennas_per_ap", r.antennas_per_ap},
                {"num_ues", r.num_ues},
                {"max_tx_power_w", r.max_tx_power_w},
                {"pilot_power_w", r.pilot_power_w},
                {"rzf_regularization_w", r.rzf_regularization_w},
                {"rcs_variance_m2", r.rcs_variance_m2},
                {"clutter_scaling", r.clutter_scaling}};
  j["urllc"] = nlohmann::json::array();
  for (const auto& u : s.urllc)
    j["urllc"].push_back({{"packet_bits", u.packet_bits},
                          {"dep_threshold", u.dep_threshold},
                          {"delay_threshold_s", u.delay_threshold_s}});
  j["sensing"] = {{"sinr_threshold", s.sensing.sinr_threshold},
                  {"refresh_rate_threshold", s.sensing.refresh_rate_threshold},
                  {"false_alarm_prob", s.sensing.false_alarm_prob}};
  const auto& g = s.geometry;
  json geo = {{"area_side_m", g.area_side_m},
              {"tx_ap_height_m", g.tx_ap_height_m},
              {"rx_ap_height_m", g.rx_ap_height_m},
              {"ue_height_m", g.ue_height_m},
              {"target_height_m", g.target_height_m},
              {"random_tx_placement", g.random_tx_placement},
              {"target_position", vec3_to_json(g.target_position)}};
  auto list_to_json = [](const std::vector<Vec3>& v) {
    json a = json::array();
    for (const auto& p : v) a.push_back(vec3_to_json(p));
    return a;
  };
  geo["tx_ap_positions"] = list_to_json(g.tx_ap_positions);
  geo["rx_ap_positions"] = list_to_json(g.rx_ap_positions);
  geo["ue_positions"] = list_to_json(g.ue_positions);
  j["geometry"] = geo;
  const auto& pm = s.power_model;
  j["power_model"] = {{"delta_tr", pm.delta_tr},
                      {"p_ap0_tx_per_antenna_w", pm.p_ap0_tx_per_antenna_w},
                      {"p_ap0_rx_per_antenna_w", pm.p_ap0_rx_per_antenna_w},
                      {"p_fixed_w", pm.p_fixed_w},
                      {"p_cloud0_proc_w", pm.p_cloud0_proc_w},
                      {"delta_cloud_proc_w", pm.delta_cloud_proc_w},
                      {"sigma_cool", pm.sigma_cool},
                      {"c_max_gops", pm.c_max_gops}};
  const auto& cm = s.channel_model;
  j["channel_model"] = {{"los_a", cm.los_a},
                        {"los_b", cm.los_b},
                        {"los_c", cm.los_c},
                        {"los2_a", cm.los2_a},
                        {"los2_b", cm.los2_b},
                        {"los2_height", cm.los2_height},
                        {"los2_c", cm.los2_c},
                        {"breakpoint_height_offset_m", cm.breakpoint_height_offset_m},
                        {"nlos_a", cm.nlos_a},
                        {"nlos_b", cm.nlos_b},
                        {"nlos_c", cm.nlos_c},
                        {"shadow_sigma_los_db", cm.shadow_sigma_los_db},
                        {"shadow_sigma_nlos_db", cm.shadow_sigma_nlos_db},
                        {"los_prob_d0_m", cm.los_prob_d0_m},
                        {"los_prob_d1_m", cm.los_prob_d1_m},
                        {"rician_k_intercept_db", cm.rician_k_intercept_db},
                        {"rician_k_slope_db_per_m", cm.rician_k_slope_db_per_m},
                        {"angle_spread_deg", cm.angle_spread_deg}};
  j["mc"] = {{"n_mc", s.mc.n_mc}, {"detection_trials", s.mc.detection_trials}};
  return j;
}

bool apply_parameter(Scenario& s, const std::string& path, double value) {
  const auto dot = path.find('.');
  if (dot == std::string::npos) return false;
  const std::string section = path.substr(0, dot);
  const std::string field = path.substr(dot + 1);
  bool ok = true;
  if (section == "radio") {
    if (field == "bandwidth_hz") s.radio.bandwidth_hz = value;
    else if (field == "carrier_frequency_hz") s.radio.carrier_frequency_hz = value;
    else if (field == "noise_power_w") s.radio.noise_power_w = value;
    else if (field == "pilot_length") s.radio.pilot_length = static_cast<int>(value);
    else if (field == "num_tx_aps") { s.radio.num_tx_aps = static_cast<int>(value); s.geometry.tx_ap_positions.clear(); }
    else if (field == "num_rx_aps") { s.radio.num_rx_aps = static_cast<int>(value); s.geometry.rx_ap_positions.clear(); }
    else if (field == "antennas_per_ap") s.radio.antennas_per_ap = static_cast<int>(value);
    else if (field == "num_ues") { s.radio.num_ues = static_cast<int>(value); s.geometry.ue_positions.clear(); }
    else if (field == "max_tx_power_w") s.radio.max_tx_power_w = value;
    else if (field == "pilot_power_w") s.radio.pilot_power_w = value;
    else if (field == "rzf_regularization_w") s.radio.rzf_regularization_w = value;
    else if (field == "rcs_variance_m2") s.radio.rcs_variance_m2 = value;
    else if (field == "clutter_scaling") s.radio.clutter_scaling = value;
    else ok = false;
  } else if (section == "urllc") {
    for (auto& u : s.urllc) {
      if (field == "packet_bits") u.packet_bits = static_cast<int>(value);
      else if (field == "dep_threshold") u.dep_threshold = value;
      else if (field == "delay_threshold_s") u.delay_threshold_s = value;
      else { ok = false; break; }
    }
    if (s.urllc.empty()) ok = field == "packet_bits" || field == "dep_threshold" || field == "delay_threshold_s";
  } else if (section == "sensing") {
    if (field == "sinr_threshold") s.sensing.sinr_threshold = value;
    else if (field == "refresh_rate_threshold") s.sensing.refresh_rate_threshold = value;
    else if (field == "false_alarm_prob") s.sensing.false_alarm_prob = value;
    else ok = false;
  } else if (section == "mc") {
    if (field == "n_mc") s.mc.n_mc = static_cast<int>(value);
    else if (field == "detection_trials") s.mc.detection_trials = static_cast<int>(value);
    else ok = false;
  } else if (section == "power_model") {
    if (field == "delta_tr") s.power_model.delta_tr = value;
    else if (field == "p_fixed_w") s.power_model.p_fixed_w = value;
    else if (field == "c_max_gops") s.power_model.c_max_gops = value;
    else ok = false;
  } else {
    ok = false;
  }
  if (ok) resolve_scenario(s);
  return ok;
}

std::uint64_t moment_stats_key(const Scenario& s) {
  nlohmann::json j = scenario_to_json(s);
  j.erase("urllc");
  j.erase("sensing");
  j.erase("power_model");
  j.erase("preset");
  j["mc"].erase("detection_trials");
  return fnv1a(j.dump());
}

}  // namespace cfisac
