// SPDX-License-Identifier: Apache-2.0
#include "cfisac/detection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cfisac {

namespace {

using cd = std::complex<double>;

void check_rho(const VectorXd& rho_w, int n_streams) {
  if (rho_w.size() != n_streams)
    throw std::invalid_argument("detection: rho must have one entry per stream");
  if ((rho_w.array() < 0.0).any())
    throw std::invalid_argument("detection: negative stream power");
}

}  // namespace

DetectorContext make_detector_context(const Scenario& s) {
  DetectorContext ctx;
  ctx.m = s.radio.antennas_per_ap;
  ctx.n_tx = s.radio.num_tx_aps;
  ctx.n_rx = s.radio.num_rx_aps;
  ctx.noise_w = s.radio.noise_power_w;
  ctx.rcs_variance_m2 = s.radio.rcs_variance_m2;
  ctx.geo = build_sensing_geometry(s);
  if (ctx.n_rx == 0) return ctx;

  ctx.clutter = build_clutter_stats(s);
  const int d = ctx.m * ctx.m;
  ctx.r_inv.resize(ctx.n_rx);
  for (int r = 0; r < ctx.n_rx; ++r) {
    // Ridge level is tied to the average eigenvalue of this receive AP's full
    // clutter prior, so the regularization is invariant to unit rescaling.
    double trace = 0.0;
    for (int k = 0; k < ctx.n_tx; ++k) {
      const auto& p = ctx.clutter.at(r, k);
      trace += (p.tx_cov.trace() * p.rx_cov.trace()).real();
    }
    const double ridge = 1e-10 * trace / (static_cast<double>(ctx.n_tx) * d);
    ctx.r_inv[r].resize(ctx.n_tx);
    for (int k = 0; k < ctx.n_tx; ++k) {
      const auto& p = ctx.clutter.at(r, k);
      MatrixXcd block = kron(p.tx_cov, p.rx_cov);
      block.diagonal().array() += ridge;
      ctx.r_inv[r][k] = block.ldlt().solve(MatrixXcd::Identity(d, d));
    }
  }
  return ctx;
}

SensingBlock simulate_sensing_block(const DetectorContext& ctx, const PrecoderSet& pre,
                                    const VectorXd& rho_w, const SensingBlockConfig& cfg,
                                    std::mt19937_64& rng) {
  const int m = ctx.m, n_tx = ctx.n_tx, n_rx = ctx.n_rx;
  const int n_str = pre.n_streams();
  const int len = cfg.data_length;
  check_rho(rho_w, n_str);
  if (len < 1) throw std::invalid_argument("detection: data_length must be >= 1");

  MatrixXcd symbols(n_str, len);
  if (cfg.qpsk_symbols) {
    std::uniform_int_distribution<int> quad(0, 3);
    const double h = 1.0 / std::sqrt(2.0);
    for (int t = 0; t < len; ++t)
      for (int j = 0; j < n_str; ++j) {
        const int q = quad(rng);
        symbols(j, t) = cd((q & 1) ? h : -h, (q & 2) ? h : -h);
      }
  } else {
    for (int t = 0; t < len; ++t)
      for (int j = 0; j < n_str; ++j) symbols(j, t) = complex_gaussian(rng, 1.0);
  }

  SensingBlock block;
  block.x = pre.w * (rho_w.cwiseSqrt().asDiagonal() * symbols);
  if (n_rx == 0) return block;

  const std::vector<MatrixXcd> h_cl = sample_clutter(ctx.clutter, rng);
  const cd alpha =
      cfg.target_present ? complex_gaussian(rng, ctx.rcs_variance_m2) : cd(0.0, 0.0);

  block.y.assign(n_rx, MatrixXcd::Zero(m, len));
  for (int r = 0; r < n_rx; ++r) {
    for (int k = 0; k < n_tx; ++k) {
      const auto xk = block.x.block(static_cast<Eigen::Index>(k) * m, 0, m, len);
      block.y[r] += h_cl[static_cast<std::size_t>(r) * n_tx + k] * xk;
      if (cfg.target_present) {
        const Eigen::RowVectorXcd gains =
            alpha * std::sqrt(ctx.geo.beta_bistatic(r, k)) * (ctx.geo.a_tx[k].transpose() * xk);
        block.y[r] += ctx.geo.a_rx[r] * gains;
      }
    }
  }
  for (int r = 0; r < n_rx; ++r)
    for (int t = 0; t < len; ++t)
      for (int i = 0; i < m; ++i) block.y[r](i, t) += complex_gaussian(rng, ctx.noise_w);
  return block;
}

DetectorInputs detector_inputs(const DetectorContext& ctx, const SensingBlock& block) {
  const int m = ctx.m, n_tx = ctx.n_tx, n_rx = ctx.n_rx;
  const int len = static_cast<int>(block.x.cols());
  DetectorInputs in;
  in.s_gram = (block.x * block.x.adjoint()).conjugate();
  if (n_rx == 0) return in;

  // inner(k, t) = a_tx_k^T x_k[t]; shared by every receive AP.
  MatrixXcd inner(n_tx, len);
  for (int k = 0; k < n_tx; ++k)
    inner.row(k) =
        ctx.geo.a_tx[k].transpose() * block.x.block(static_cast<Eigen::Index>(k) * m, 0, m, len);

  in.a.resize(n_rx);
  in.c_gram.resize(n_rx);
  in.b.resize(n_rx);
  in.e.resize(n_rx);
  for (int r = 0; r < n_rx; ++r) {
    MatrixXcd c(n_tx, len);
    for (int k = 0; k < n_tx; ++k)
      c.row(k) = std::sqrt(ctx.geo.beta_bistatic(r, k)) * inner.row(k);

    const VectorXcd proj = (ctx.geo.a_rx[r].adjoint() * block.y[r]).transpose();  // a_rx^H y[t]
    in.a[r] = c.conjugate() * proj;
    in.c_gram[r] = c.conjugate() * c.transpose();

    const MatrixXcd bm = block.x.conjugate() * block.y[r].transpose();  // (m n_tx) x m
    VectorXcd b(static_cast<Eigen::Index>(n_tx) * m * m);
    for (int p = 0; p < n_tx * m; ++p)
      for (int i = 0; i < m; ++i) b[static_cast<Eigen::Index>(p) * m + i] = bm(p, i);
    in.b[r] = std::move(b);

    const MatrixXcd cx = c.conjugate() * block.x.transpose();  // n_tx x (m n_tx)
    MatrixXcd e(n_tx, static_cast<Eigen::Index>(n_tx) * m * m);
    for (int q = 0; q < n_tx; ++q)
      for (int p = 0; p < n_tx * m; ++p)
        for (int i = 0; i < m; ++i)
          e(q, static_cast<Eigen::Index>(p) * m + i) = cx(q, p) * std::conj(ctx.geo.a_rx[r][i]);
    in.e[r] = std::move(e);
  }
  return in;
}

double test_statistic(const DetectorContext& ctx, const DetectorInputs& in, DetectorKind kind) {
  const int m = ctx.m, n_tx = ctx.n_tx, n_rx = ctx.n_rx;
  if (n_rx == 0) return 0.0;

  double stat = 0.0;
  for (int r = 0; r < n_rx; ++r) {
    MatrixXcd c_full = static_cast<double>(m) * in.c_gram[r];
    c_full.diagonal().array() += ctx.noise_w;

    if (kind == DetectorKind::clutter_unaware) {
      stat += in.a[r].dot(c_full.ldlt().solve(in.a[r])).real();
      continue;
    }

    MatrixXcd d = kron(in.s_gram, MatrixXcd::Identity(m, m));
    for (int k = 0; k < n_tx; ++k)
      d.block(static_cast<Eigen::Index>(k) * m * m, static_cast<Eigen::Index>(k) * m * m, m * m,
              m * m) += ctx.noise_w * ctx.r_inv[r][k];
    const auto d_ldlt = d.ldlt();

    const VectorXcd db = d_ldlt.solve(in.b[r]);
    const MatrixXcd de = d_ldlt.solve(in.e[r].adjoint());  // dim x n_tx
    const VectorXcd u = in.a[r] - in.e[r] * db;
    const MatrixXcd schur = c_full - in.e[r] * de;
    stat += u.dot(schur.ldlt().solve(u)).real();
  }
  return stat;
}

double trial_statistic(const DetectorContext& ctx, const PrecoderSet& pre, const VectorXd& rho_w,
                       const SensingBlockConfig& cfg, DetectorKind kind, std::mt19937_64& rng) {
  const SensingBlock block = simulate_sensing_block(ctx, pre, rho_w, cfg, rng);
  return test_statistic(ctx, detector_inputs(ctx, block), kind);
}

double calibrate_threshold(const DetectorContext& ctx, const PrecoderSet& pre,
                           const VectorXd& rho_w, int data_length, DetectorKind kind, int trials,
                           double p_fa, std::uint64_t master_seed) {
  if (trials < 1) throw std::invalid_argument("detection: trials must be >= 1");
  if (p_fa < 0.0 || p_fa > 1.0) throw std::invalid_argument("detection: p_fa outside [0, 1]");
  SensingBlockConfig cfg{data_length, /*target_present=*/false, /*qpsk_symbols=*/false};
  std::vector<double> stats(trials);
  for (int t = 0; t < trials; ++t) {
    auto rng = make_stream(master_seed, StreamPurpose::calibration, static_cast<std::uint64_t>(t));
    stats[t] = trial_statistic(ctx, pre, rho_w, cfg, kind, rng);
  }
  std::sort(stats.begin(), stats.end());
  auto idx = static_cast<std::ptrdiff_t>(std::floor((1.0 - p_fa) * trials));
  idx = std::clamp<std::ptrdiff_t>(idx, 0, trials - 1);
  return stats[static_cast<std::size_t>(idx)];
}

double exceedance_rate(const DetectorContext& ctx, const PrecoderSet& pre, const VectorXd& rho_w,
                       int data_length, bool target_present, DetectorKind kind, int trials,
                       double threshold, std::uint64_t master_seed, StreamPurpose purpose) {
  if (trials < 1) throw std::invalid_argument("detection: trials must be >= 1");
  SensingBlockConfig cfg{data_length, target_present, /*qpsk_symbols=*/false};
  int hits = 0;
  for (int t = 0; t < trials; ++t) {
    auto rng = make_stream(master_seed, purpose, static_cast<std::uint64_t>(t));
    if (trial_statistic(ctx, pre, rho_w, cfg, kind, rng) > threshold) ++hits;
  }
  return static_cast<double>(hits) / trials;
}

DetectionReport evaluate_detection(const Scenario& s, const VectorXd& rho_w, int data_length,
                                   DetectorKind kind, bool measure_false_alarms) {
  if (s.radio.num_rx_aps < 1)
    throw std::invalid_argument("detection: scenario has no receive APs");
  const DetectorContext ctx = make_detector_context(s);
  const CommStats comm = build_comm_stats(s);
  const ChannelRealization real = sample_comm_realization(s, comm, 0);
  const PrecoderSet pre = build_precoders(real.h_hat, ctx.geo.h0, s.radio.rzf_regularization_w,
                                          ctx.m, ctx.n_tx);

  DetectionReport rep;
  rep.kind = kind;
  rep.trials = s.mc.detection_trials;
  rep.threshold = calibrate_threshold(ctx, pre, rho_w, data_length, kind, rep.trials,
                                      s.sensing.false_alarm_prob, s.master_seed);
  rep.detection_prob =
      exceedance_rate(ctx, pre, rho_w, data_length, /*target_present=*/true, kind, rep.trials,
                      rep.threshold, s.master_seed, StreamPurpose::detection);
  rep.detection_se =
      std::sqrt(rep.detection_prob * (1.0 - rep.detection_prob) / rep.trials);
  if (measure_false_alarms)
    rep.false_alarm_rate =
        exceedance_rate(ctx, pre, rho_w, data_length, /*target_present=*/false, kind, rep.trials,
                        rep.threshold, s.master_seed, StreamPurpose::validation);
  return rep;
}

}  // namespace cfisac
