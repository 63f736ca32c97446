// SPDX-License-Identifier: Apache-2.0
#include "cfisac/moments.hpp"

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "cfisac/precoding.hpp"

namespace cfisac {
namespace {

using cd = std::complex<double>;

double mean_of(std::span<const double> xs) {
  return pairwise_sum(xs) / static_cast<double>(xs.size());
}

// Standard error of the sample mean.
double se_of(std::span<const double> xs, double mean) {
  const auto n = static_cast<double>(xs.size());
  if (xs.size() < 2) return 0.0;
  std::vector<double> dev2(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = xs[i] - mean;
    dev2[i] = d * d;
  }
  return std::sqrt(pairwise_sum(dev2) / (n - 1.0) / n);
}

}  // namespace

MomentStats estimate_moments(const Scenario& s) {
  const int m = s.radio.antennas_per_ap;
  const int n_tx = s.radio.num_tx_aps;
  const int n_rx = s.radio.num_rx_aps;
  const int n_ue = s.radio.num_ues;
  const int n_str = n_ue + 1;
  const int n_mc = s.mc.n_mc;
  if (n_mc < 2) throw std::invalid_argument("estimate_moments: n_mc must be >= 2");

  const CommStats comm = build_comm_stats(s);
  const SensingGeometry geo = build_sensing_geometry(s);
  ClutterStats clutter;
  if (n_rx > 0) clutter = build_clutter_stats(s);

  // Per (rx, tx) constants of the sensing quadratic forms.
  std::vector<double> trace_rx(static_cast<std::size_t>(n_rx) * n_tx, 0.0);
  std::vector<MatrixXcd> tx_cov_t(static_cast<std::size_t>(n_rx) * n_tx);
  for (int r = 0; r < n_rx; ++r) {
    for (int k = 0; k < n_tx; ++k) {
      const auto& p = clutter.at(r, k);
      trace_rx[static_cast<std::size_t>(r) * n_tx + k] = p.rx_cov.trace().real();
      tx_cov_t[static_cast<std::size_t>(r) * n_tx + k] = p.tx_cov.transpose();
    }
  }

  // Per-trial series, reduced pairwise afterwards.
  std::vector<std::vector<cd>> inner_self(n_ue, std::vector<cd>(n_mc));
  std::vector<std::vector<double>> inner_sq(static_cast<std::size_t>(n_ue) * n_str,
                                            std::vector<double>(n_mc));
  std::vector<std::vector<double>> load_sq(static_cast<std::size_t>(n_tx) * n_str,
                                           std::vector<double>(n_mc));
  std::vector<std::vector<double>> refl(n_str, std::vector<double>(n_mc, 0.0));
  std::vector<std::vector<double>> clut(n_str, std::vector<double>(n_mc, 0.0));

  for (int t = 0; t < n_mc; ++t) {
    const ChannelRealization real = sample_comm_realization(s, comm, static_cast<std::uint64_t>(t));
    const PrecoderSet pre =
        build_precoders(real.h_hat, geo.h0, s.radio.rzf_regularization_w, m, n_tx);

    for (int i = 0; i < n_ue; ++i) {
      const VectorXcd& h = real.h[i];
      for (int j = 0; j < n_str; ++j) {
        const cd v = h.dot(pre.w.col(j));  // h^H w_j
        inner_sq[static_cast<std::size_t>(i) * n_str + j][t] = std::norm(v);
        if (j == i + 1) inner_self[i][t] = v;
      }
    }
    for (int k = 0; k < n_tx; ++k) {
      const auto wk = pre.per_ap(k);
      for (int j = 0; j < n_str; ++j)
        load_sq[static_cast<std::size_t>(k) * n_str + j][t] = wk.col(j).squaredNorm();
    }
    for (int rx = 0; rx < n_rx; ++rx) {
      for (int k = 0; k < n_tx; ++k) {
        const auto wk = pre.per_ap(k);
        const std::size_t rk = static_cast<std::size_t>(rx) * n_tx + k;
        for (int j = 0; j < n_str; ++j) {
          const cd g = geo.a_tx[k].transpose() * wk.col(j);
          refl[j][t] += geo.beta_bistatic(rx, k) * std::norm(g);
          clut[j][t] +=
              trace_rx[rk] * (wk.col(j).adjoint() * tx_cov_t[rk] * wk.col(j)).value().real();
        }
      }
    }
  }

  MomentStats out;
  out.m = m;
  out.n_tx = n_tx;
  out.n_rx = n_rx;
  out.n_ue = n_ue;
  out.n_mc = n_mc;
  out.noise_w = s.radio.noise_power_w;
  out.b = VectorXd::Zero(n_ue);
  out.b_se = VectorXd::Zero(n_ue);
  out.a = MatrixXd::Zero(n_ue, n_str);
  out.a_sq_se = MatrixXd::Zero(n_ue, n_str);
  out.f = MatrixXd::Zero(n_tx, n_str);
  out.a_diag = VectorXd::Zero(n_str);
  out.a_diag_se = VectorXd::Zero(n_str);
  out.b_diag = VectorXd::Zero(n_str);
  out.b_diag_se = VectorXd::Zero(n_str);

  const double inv_n = 1.0 / static_cast<double>(n_mc);
  for (int i = 0; i < n_ue; ++i) {
    const cd mean = pairwise_sum(std::span<const cd>(inner_self[i])) * inv_n;
    out.b[i] = std::abs(mean);
    std::vector<double> dev2(n_mc);
    for (int t = 0; t < n_mc; ++t) dev2[t] = std::norm(inner_self[i][t] - mean);
    out.b_se[i] =
        std::sqrt(pairwise_sum(std::span<const double>(dev2)) / (n_mc - 1.0) * inv_n);

    for (int j = 0; j < n_str; ++j) {
      const auto& series = inner_sq[static_cast<std::size_t>(i) * n_str + j];
      const double sq_mean = mean_of(series);
      out.a_sq_se(i, j) = se_of(series, sq_mean);
      if (j == i + 1) {
        // Fluctuation of the coherent link; clipped at zero when the Monte
        // Carlo estimate of E|.|^2 dips below |E .|^2.
        out.a(i, j) = std::sqrt(std::max(0.0, sq_mean - out.b[i] * out.b[i]));
      } else {
        out.a(i, j) = std::sqrt(sq_mean);
      }
    }
  }
  for (int k = 0; k < n_tx; ++k)
    for (int j = 0; j < n_str; ++j)
      out.f(k, j) = std::sqrt(mean_of(load_sq[static_cast<std::size_t>(k) * n_str + j]));
  for (int j = 0; j < n_str; ++j) {
    out.a_diag[j] = mean_of(refl[j]);
    out.a_diag_se[j] = se_of(refl[j], out.a_diag[j]);
    out.b_diag[j] = mean_of(clut[j]);
    out.b_diag_se[j] = se_of(clut[j], out.b_diag[j]);
  }
  return out;
}

namespace {

nlohmann::json vec_json(const VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

nlohmann::json mat_json(const MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

VectorXd vec_from(const nlohmann::json& j) {
  VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

MatrixXd mat_from(const nlohmann::json& j) {
  const auto rows = j.size();
  const auto cols = rows == 0 ? 0 : j[0].size();
  MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = j[i][c].get<double>();
  return m;
}

}  // namespace

nlohmann::json moment_stats_to_json(const MomentStats& st) {
  return nlohmann::json{{"m", st.m},
                        {"n_tx", st.n_tx},
                        {"n_rx", st.n_rx},
                        {"n_ue", st.n_ue},
                        {"n_mc", st.n_mc},
                        {"noise_w", st.noise_w},
                        {"b", vec_json(st.b)},
                        {"b_se", vec_json(st.b_se)},
                        {"a", mat_json(st.a)},
                        {"a_sq_se", mat_json(st.a_sq_se)},
                        {"f", mat_json(st.f)},
                        {"a_diag", vec_json(st.a_diag)},
                        {"a_diag_se", vec_json(st.a_diag_se)},
                        {"b_diag", vec_json(st.b_diag)},
                        {"b_diag_se", vec_json(st.b_diag_se)}};
}

MomentStats moment_stats_from_json(const nlohmann::json& j) {
  MomentStats st;
  st.m = j.at("m").get<int>();
  st.n_tx = j.at("n_tx").get<int>();
  st.n_rx = j.at("n_rx").get<int>();
  st.n_ue = j.at("n_ue").get<int>();
  st.n_mc = j.at("n_mc").get<int>();
  st.noise_w = j.at("noise_w").get<double>();
  st.b = vec_from(j.at("b"));
  st.b_se = vec_from(j.at("b_se"));
  st.a = mat_from(j.at("a"));
  st.a_sq_se = mat_from(j.at("a_sq_se"));
  st.f = mat_from(j.at("f"));
  st.a_diag = vec_from(j.at("a_diag"));
  st.a_diag_se = vec_from(j.at("a_diag_se"));
  st.b_diag = vec_from(j.at("b_diag"));
  st.b_diag_se = vec_from(j.at("b_diag_se"));
  return st;
}

MomentStats load_or_estimate_moments(const Scenario& s,
                                     const std::optional<std::string>& cache_dir) {
  namespace fs = std::filesystem;
  fs::path path;
  if (cache_dir) {
    std::ostringstream name;
    name << "moments-" << std::hex << moment_stats_key(s) << ".json";
    path = fs::path(*cache_dir) / name.str();
    if (fs::exists(path)) {
      std::ifstream in(path);
      nlohmann::json j;
      in >> j;
      return moment_stats_from_json(j);
    }
  }
  MomentStats st = estimate_moments(s);
  if (cache_dir) {
    std::error_code ec;
    fs::create_directories(fs::path(*cache_dir), ec);
    std::ofstream out(path);
    if (out) out << moment_stats_to_json(st).dump(1) << '\n';
  }
  return st;
}

}  // namespace cfisac
