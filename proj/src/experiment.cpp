// SPDX-License-Identifier: Apache-2.0
#include "cfisac/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace cfisac {
namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(text);
  while (std::getline(is, item, sep)) out.push_back(item);
  return out;
}

double parse_number(const std::string& text) {
  std::size_t pos = 0;
  const double v = std::stod(text, &pos);
  if (pos != text.size()) throw std::invalid_argument("trailing characters in number: " + text);
  return v;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Shared moment statistics: one computation per content key no matter how
// many grid cells (or threads) ask for it.
class MomentsCache {
 public:
  explicit MomentsCache(std::optional<std::string> dir) : dir_(std::move(dir)) {}

  MomentStats get(const Scenario& s) {
    const std::uint64_t key = moment_stats_key(s);
    std::promise<MomentStats> promise;
    std::shared_future<MomentStats> fut;
    bool owner = false;
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = entries_.find(key);
      if (it == entries_.end()) {
        fut = promise.get_future().share();
        entries_.emplace(key, fut);
        owner = true;
      } else {
        fut = it->second;
      }
    }
    if (owner) {
      try {
        promise.set_value(load_or_estimate_moments(s, dir_));
      } catch (...) {
        promise.set_exception(std::current_exception());
      }
    }
    return fut.get();
  }

 private:
  std::optional<std::string> dir_;
  std::mutex mu_;
  std::map<std::uint64_t, std::shared_future<MomentStats>> entries_;
};

const char* kNan = "nan";

void put(std::ostream& os, double v) {
  if (std::isnan(v)) {
    os << kNan;
  } else {
    os << v;
  }
}

std::string format_sweep_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string row_id(const Scenario& base, const ExperimentResult& res, const RunRow& row) {
  std::ostringstream os;
  if (res.sweep.parameter.empty()) {
    os << base.preset_name;
  } else {
    os << res.sweep.parameter << '=' << format_sweep_value(row.sweep_value);
  }
  os << "/drop" << row.drop << '/' << to_string(row.mode) << '/' << to_string(row.detector);
  return os.str();
}

}  // namespace

SweepSpec parse_sweep(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0)
    throw std::invalid_argument("sweep must be <parameter>=<values>: " + text);
  SweepSpec sw;
  sw.parameter = text.substr(0, eq);
  const std::string spec = text.substr(eq + 1);
  if (spec.empty()) throw std::invalid_argument("empty sweep value list: " + text);
  if (spec.find(':') != std::string::npos) {
    const auto parts = split(spec, ':');
    if (parts.size() != 3) throw std::invalid_argument("range must be lo:step:hi: " + spec);
    const double lo = parse_number(parts[0]);
    const double step = parse_number(parts[1]);
    const double hi = parse_number(parts[2]);
    if (step <= 0.0 && hi > lo) throw std::invalid_argument("range step must be positive: " + spec);
    if (step == 0.0) throw std::invalid_argument("range step must be nonzero: " + spec);
    const double tol = 1e-9 * std::max(1.0, std::abs(step));
    if (step > 0.0) {
      for (double v = lo; v <= hi + tol; v += step) sw.values.push_back(v);
    } else {
      for (double v = lo; v >= hi - tol; v += step) sw.values.push_back(v);
    }
  } else {
    for (const auto& item : split(spec, ',')) sw.values.push_back(parse_number(item));
  }
  if (sw.values.empty()) throw std::invalid_argument("sweep produced no values: " + text);
  return sw;
}

bool apply_swept_parameter(Scenario& s, const std::string& parameter, double raw_value) {
  std::string path = parameter;
  double v = raw_value;
  if (ends_with(path, "_dbm")) {
    path.resize(path.size() - 4);
    v = 1e-3 * std::pow(10.0, raw_value / 10.0);
  } else if (ends_with(path, "_dbsm")) {
    path.resize(path.size() - 5);
    v = std::pow(10.0, raw_value / 10.0);
  } else if (ends_with(path, "_db")) {
    path.resize(path.size() - 3);
    v = std::pow(10.0, raw_value / 10.0);
  }
  return apply_parameter(s, path, v);
}

ExperimentResult run_experiment(const Scenario& base, const SweepSpec& sweep,
                                const ExperimentOptions& opts) {
  ExperimentResult res;
  res.sweep = sweep;

  Scenario root = base;
  resolve_scenario(root);

  const bool swept = !sweep.parameter.empty();
  if (swept && sweep.values.empty())
    throw std::invalid_argument("sweep parameter given without values");
  if (swept) {
    Scenario probe = root;
    if (!apply_swept_parameter(probe, sweep.parameter, sweep.values.front()))
      throw std::invalid_argument("unknown sweep parameter: " + sweep.parameter);
  }
  if (sweep.modes.empty() || sweep.detectors.empty() || sweep.n_drops < 1)
    throw std::invalid_argument("sweep needs at least one mode, detector, and drop");

  const std::size_t n_values = swept ? sweep.values.size() : 1;
  const std::size_t n_modes = sweep.modes.size();
  const std::size_t n_dets = sweep.detectors.size();
  const std::size_t grid = n_values * static_cast<std::size_t>(sweep.n_drops) * n_modes * n_dets;
  res.rows.resize(grid);

  MomentsCache cache(opts.moments_cache_dir);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex err_mu;
  std::exception_ptr first_error;

  auto worker = [&]() {
    for (;;) {
      const std::size_t cell = next.fetch_add(1);
      if (cell >= grid || failed.load()) return;
      try {
        std::size_t rest = cell;
        const std::size_t ki = rest % n_dets;
        rest /= n_dets;
        const std::size_t mi = rest % n_modes;
        rest /= n_modes;
        const int drop = static_cast<int>(rest % sweep.n_drops);
        const std::size_t vi = rest / sweep.n_drops;

        RunRow& row = res.rows[cell];
        row.cell = cell;
        row.drop = drop;
        row.mode = sweep.modes[mi];
        row.detector = sweep.detectors[ki];
        if (swept) row.sweep_value = sweep.values[vi];

        const auto t0 = std::chrono::steady_clock::now();
        Scenario s = root;
        if (swept) apply_swept_parameter(s, sweep.parameter, sweep.values[vi]);
        // Drop 0 keeps the placement the base scenario resolved to (possibly
        // explicit); higher drops are independent seeded redraws.
        if (drop > 0) redraw_ue_positions(s, static_cast<std::uint64_t>(drop));
        const MomentStats stats = cache.get(s);
        row.solve = solve_allocation(s, stats, row.mode, row.detector, opts.solve);
        if (opts.run_detection && row.solve.feasible &&
            row.mode != OptimizationMode::e2e_no_sensing) {
          row.detection = evaluate_detection(s, row.solve.rho_w, row.solve.plan.data_length(),
                                             row.detector, opts.measure_false_alarms);
          row.detection_run = true;
        }
        const auto t1 = std::chrono::steady_clock::now();
        row.wall_time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };

  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  std::size_t n_threads = opts.threads > 0 ? static_cast<std::size_t>(opts.threads) : hw;
  n_threads = std::max<std::size_t>(1, std::min(n_threads, grid));
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  const std::size_t per_value = static_cast<std::size_t>(sweep.n_drops) * n_modes * n_dets;
  for (std::size_t vi = 0; vi < n_values; ++vi) {
    bool any = false;
    for (std::size_t i = 0; i < per_value && !any; ++i)
      any = res.rows[vi * per_value + i].solve.feasible;
    if (!any) res.has_infeasible_sweep_point = true;
  }
  return res;
}

std::string metadata_line(const Scenario& base, const SweepSpec& sweep,
                          const std::string& git_rev) {
  std::ostringstream os;
  os << "# isac-sim preset=" << base.preset_name << " seed=" << base.master_seed << " sweep=";
  os << (sweep.parameter.empty() ? std::string("none") : sweep.parameter);
  os << " drops=" << sweep.n_drops << " modes=";
  for (std::size_t i = 0; i < sweep.modes.size(); ++i)
    os << (i ? "+" : "") << to_string(sweep.modes[i]);
  os << " detectors=";
  for (std::size_t i = 0; i < sweep.detectors.size(); ++i)
    os << (i ? "+" : "") << to_string(sweep.detectors[i]);
  os << " git=" << git_rev;
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  os << " generated=" << stamp;
  return os.str();
}

void write_run_results_csv(const std::string& path, const Scenario& base,
                           const ExperimentResult& res, const std::string& metadata) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os.precision(17);
  os << metadata << '\n';
  const int n_ue = base.radio.num_ues;
  os << "sweep_param,sweep_value,drop,mode,detector,feasible,status,iterations,blocklength,"
        "blocklength_cap,lbar,e_total_j,e_transmit_j,p_total_w,p_transmit_w,p_cloud_w,n_gpp,"
        "comm_gops,sensing_gops,sensing_sinr,sensing_rate_hz,chi0,det_threshold,p_d,p_d_se,"
        "far_measured";
  os << ",rho_s_w";
  for (int i = 1; i <= n_ue; ++i) os << ",rho_ue" << i << "_w";
  for (int i = 1; i <= n_ue; ++i) os << ",eps_ub_ue" << i;
  os << ",wall_time_ms\n";

  for (const auto& row : res.rows) {
    const SolveResult& r = row.solve;
    os << res.sweep.parameter << ',';
    if (!res.sweep.parameter.empty()) os << row.sweep_value;
    os << ',' << row.drop << ',' << to_string(row.mode) << ',' << to_string(row.detector) << ','
       << (r.feasible ? 1 : 0) << ',' << r.status << ',' << r.iterations << ',' << r.plan.length
       << ',' << r.blocklength_cap << ',' << r.lbar << ',' << r.energy.total_j() << ','
       << r.energy.e_transmit_j << ',' << r.power.total_w() << ',' << r.power.p_transmit_w << ','
       << r.power.p_cloud_w << ',' << r.power.n_gpp << ',' << r.power.comm_gops << ','
       << r.power.sensing_gops << ',' << r.sensing_sinr << ',' << r.sensing_rate_hz << ','
       << r.chi0 << ',';
    if (row.detection_run) {
      os << row.detection.threshold << ',' << row.detection.detection_prob << ','
         << row.detection.detection_se << ',';
      put(os, row.detection.false_alarm_rate < 0.0
                  ? std::numeric_limits<double>::quiet_NaN()
                  : row.detection.false_alarm_rate);
    } else {
      os << kNan << ',' << kNan << ',' << kNan << ',' << kNan;
    }
    for (int j = 0; j <= n_ue; ++j) {
      os << ',';
      put(os, j < r.rho_w.size() ? r.rho_w[j] : std::numeric_limits<double>::quiet_NaN());
    }
    for (int i = 0; i < n_ue; ++i) {
      os << ',';
      put(os, i < static_cast<int>(r.urllc.size()) ? r.urllc[i].dep_ub
                                                   : std::numeric_limits<double>::quiet_NaN());
    }
    os << ',' << row.wall_time_ms << '\n';
  }
}

void write_energy_breakdown_csv(const std::string& path, const ExperimentResult& res,
                                const std::string& metadata) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os.precision(17);
  os << metadata << '\n';
  os << "sweep_param,sweep_value,drop,mode,detector,e_tx_aps_j,e_rx_aps_j,e_comm_proc_j,"
        "e_sens_proc_j,e_other_j,e_total_j\n";
  for (const auto& row : res.rows) {
    if (!row.solve.feasible) continue;
    const EnergyReport& e = row.solve.energy;
    os << res.sweep.parameter << ',';
    if (!res.sweep.parameter.empty()) os << row.sweep_value;
    os << ',' << row.drop << ',' << to_string(row.mode) << ',' << to_string(row.detector) << ','
       << e.e_transmit_j + e.e_tx_static_j << ',' << e.e_rx_static_j << ',' << e.e_comm_proc_j
       << ',' << e.e_sens_proc_j << ',' << e.e_other_j << ',' << e.total_j() << '\n';
  }
}

void write_power_components_csv(const std::string& path, const Scenario& base,
                                const ExperimentResult& res, const std::string& metadata) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os.precision(17);
  os << metadata << '\n';
  os << energy_csv_header() << '\n';
  for (const auto& row : res.rows) {
    if (!row.solve.feasible) continue;
    os << energy_csv_row(row_id(base, res, row), row.detector, row.solve.plan, row.solve.rho_w,
                         row.solve.power, row.solve.energy.total_j())
       << '\n';
  }
}

void write_availability_csv(const std::string& path, const ExperimentResult& res,
                            const std::string& metadata) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os.precision(17);
  os << metadata << '\n';
  os << "sweep_param,sweep_value,mode,detector,drops,feasible_drops,availability,"
        "blocklength_cap\n";
  const std::size_t n_values = res.sweep.parameter.empty() ? 1 : res.sweep.values.size();
  const std::size_t n_modes = res.sweep.modes.size();
  const std::size_t n_dets = res.sweep.detectors.size();
  const std::size_t drops = static_cast<std::size_t>(res.sweep.n_drops);
  for (std::size_t vi = 0; vi < n_values; ++vi) {
    for (std::size_t mi = 0; mi < n_modes; ++mi) {
      for (std::size_t ki = 0; ki < n_dets; ++ki) {
        int feasible = 0;
        int cap = 0;
        for (std::size_t di = 0; di < drops; ++di) {
          const std::size_t cell = ((vi * drops + di) * n_modes + mi) * n_dets + ki;
          const RunRow& row = res.rows[cell];
          feasible += row.solve.feasible ? 1 : 0;
          cap = row.solve.blocklength_cap;
        }
        os << res.sweep.parameter << ',';
        if (!res.sweep.parameter.empty()) os << res.sweep.values[vi];
        os << ',' << to_string(res.sweep.modes[mi]) << ',' << to_string(res.sweep.detectors[ki])
           << ',' << drops << ',' << feasible << ','
           << static_cast<double>(feasible) / static_cast<double>(drops) << ',' << cap << '\n';
      }
    }
  }
}

void write_all_csvs(const std::string& out_dir, const Scenario& base, const ExperimentResult& res,
                    const std::string& git_rev) {
  std::filesystem::create_directories(out_dir);
  const std::string meta = metadata_line(base, res.sweep, git_rev);
  const std::filesystem::path dir(out_dir);
  write_run_results_csv((dir / "run_results.csv").string(), base, res, meta);
  write_energy_breakdown_csv((dir / "energy_breakdown.csv").string(), res, meta);
  write_power_components_csv((dir / "power_components.csv").string(), base, res, meta);
  write_availability_csv((dir / "availability.csv").string(), res, meta);
}

}  // namespace cfisac
