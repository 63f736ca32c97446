// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "cfisac/detection.hpp"
#include "cfisac/rng.hpp"
#include "cfisac/scenario.hpp"

using namespace cfisac;
using cd = std::complex<double>;

namespace {

Scenario small_scenario() {
  Scenario s = desk_scale_scenario();
  s.master_seed = 17;
  s.radio.antennas_per_ap = 2;
  s.radio.num_tx_aps = 2;
  s.radio.num_rx_aps = 1;
  s.radio.num_ues = 2;
  s.radio.clutter_scaling = 0.3;  // keep the nuisance covariances well conditioned
  s.mc.detection_trials = 200;
  s.geometry.tx_ap_positions.clear();
  s.geometry.rx_ap_positions.clear();
  s.geometry.ue_positions.clear();
  resolve_scenario(s);
  return s;
}

PrecoderSet precoders_for(const Scenario& s, const DetectorContext& ctx) {
  const CommStats comm = build_comm_stats(s);
  const ChannelRealization real = sample_comm_realization(s, comm, 0);
  return build_precoders(real.h_hat, ctx.geo.h0, s.radio.rzf_regularization_w, ctx.m, ctx.n_tx);
}

// Literal transcription of the documented statistics, with dense inverses and
// explicit index loops instead of the accumulated Gram forms.
double dense_statistic(const DetectorContext& ctx, const SensingBlock& blk, DetectorKind kind) {
  const int m = ctx.m, n_tx = ctx.n_tx, n_rx = ctx.n_rx;
  const int len = static_cast<int>(blk.x.cols());
  const int sdim = m * n_tx;

  MatrixXcd s_gram = MatrixXcd::Zero(sdim, sdim);
  for (int t = 0; t < len; ++t)
    for (int p = 0; p < sdim; ++p)
      for (int q = 0; q < sdim; ++q) s_gram(p, q) += std::conj(blk.x(p, t)) * blk.x(q, t);

  double stat = 0.0;
  for (int r = 0; r < n_rx; ++r) {
    MatrixXcd c(n_tx, len);
    for (int k = 0; k < n_tx; ++k)
      for (int t = 0; t < len; ++t) {
        cd inner = 0.0;
        for (int i = 0; i < m; ++i) inner += ctx.geo.a_tx[k][i] * blk.x(k * m + i, t);
        c(k, t) = std::sqrt(ctx.geo.beta_bistatic(r, k)) * inner;
      }

    VectorXcd a = VectorXcd::Zero(n_tx);
    for (int t = 0; t < len; ++t) {
      cd proj = 0.0;
      for (int i = 0; i < m; ++i) proj += std::conj(ctx.geo.a_rx[r][i]) * blk.y[r](i, t);
      for (int k = 0; k < n_tx; ++k) a[k] += std::conj(c(k, t)) * proj;
    }

    MatrixXcd c_full = ctx.noise_w * MatrixXcd::Identity(n_tx, n_tx);
    for (int k = 0; k < n_tx; ++k)
      for (int l = 0; l < n_tx; ++l)
        for (int t = 0; t < len; ++t)
          c_full(k, l) += static_cast<double>(m) * std::conj(c(k, t)) * c(l, t);

    if (kind == DetectorKind::clutter_unaware) {
      stat += (a.adjoint() * c_full.inverse() * a)(0).real();
      continue;
    }

    const int dim = n_tx * m * m;
    VectorXcd b = VectorXcd::Zero(dim);
    for (int t = 0; t < len; ++t)
      for (int p = 0; p < sdim; ++p)
        for (int i = 0; i < m; ++i) b[p * m + i] += std::conj(blk.x(p, t)) * blk.y[r](i, t);

    MatrixXcd e = MatrixXcd::Zero(n_tx, dim);
    for (int t = 0; t < len; ++t)
      for (int q = 0; q < n_tx; ++q)
        for (int p = 0; p < sdim; ++p)
          for (int i = 0; i < m; ++i)
            e(q, p * m + i) +=
                std::conj(c(q, t)) * blk.x(p, t) * std::conj(ctx.geo.a_rx[r][i]);

    MatrixXcd d = MatrixXcd::Zero(dim, dim);
    for (int p = 0; p < sdim; ++p)
      for (int q = 0; q < sdim; ++q)
        for (int i = 0; i < m; ++i) d(p * m + i, q * m + i) = s_gram(p, q);
    for (int k = 0; k < n_tx; ++k)
      d.block(k * m * m, k * m * m, m * m, m * m) += ctx.noise_w * ctx.r_inv[r][k];

    const MatrixXcd d_inv = d.inverse();
    const VectorXcd u = a - e * d_inv * b;
    const MatrixXcd schur = c_full - e * d_inv * e.adjoint();
    stat += (u.adjoint() * schur.inverse() * u)(0).real();
  }
  return stat;
}

}  // namespace

TEST_SUITE("detection") {

TEST_CASE("clutter prior inverses undo the ridged covariance") {
  const Scenario s = small_scenario();
  const DetectorContext ctx = make_detector_context(s);
  const int d = ctx.m * ctx.m;
  for (int r = 0; r < ctx.n_rx; ++r) {
    double trace = 0.0;
    for (int k = 0; k < ctx.n_tx; ++k) {
      const auto& p = ctx.clutter.at(r, k);
      trace += (p.tx_cov.trace() * p.rx_cov.trace()).real();
    }
    const double ridge = 1e-10 * trace / (static_cast<double>(ctx.n_tx) * d);
    for (int k = 0; k < ctx.n_tx; ++k) {
      MatrixXcd block = clutter_cov_block(ctx.clutter.at(r, k));
      block.diagonal().array() += ridge;
      CHECK((ctx.r_inv[r][k] * block - MatrixXcd::Identity(d, d)).norm() < 1e-6);
    }
  }
}

TEST_CASE("both statistics match a dense-inverse transcription") {
  const Scenario s = small_scenario();
  const DetectorContext ctx = make_detector_context(s);
  const PrecoderSet pre = precoders_for(s, ctx);
  const VectorXd rho = VectorXd::Constant(s.radio.num_ues + 1, 0.02);

  int cases = 0;
  for (std::uint64_t trial = 0; trial < 8; ++trial) {
    SensingBlockConfig cfg;
    cfg.data_length = 3;
    cfg.target_present = (trial % 2 == 0);
    cfg.qpsk_symbols = (trial % 4 < 2);
    auto rng = make_stream(s.master_seed, StreamPurpose::validation, trial);
    const SensingBlock blk = simulate_sensing_block(ctx, pre, rho, cfg, rng);
    const DetectorInputs in = detector_inputs(ctx, blk);
    for (DetectorKind kind : {DetectorKind::clutter_unaware, DetectorKind::clutter_aware}) {
      const double got = test_statistic(ctx, in, kind);
      const double want = dense_statistic(ctx, blk, kind);
      CHECK(std::abs(got - want) <= 1e-9 * std::abs(want));
      ++cases;
    }
  }
  CHECK(cases == 16);
}

TEST_CASE("trial statistics are reproducible from the stream key") {
  const Scenario s = small_scenario();
  const DetectorContext ctx = make_detector_context(s);
  const PrecoderSet pre = precoders_for(s, ctx);
  const VectorXd rho = VectorXd::Constant(s.radio.num_ues + 1, 0.02);
  SensingBlockConfig cfg;
  cfg.data_length = 4;
  cfg.target_present = true;
  auto r1 = make_stream(7, StreamPurpose::detection, 3);
  auto r2 = make_stream(7, StreamPurpose::detection, 3);
  const double s1 = trial_statistic(ctx, pre, rho, cfg, DetectorKind::clutter_aware, r1);
  const double s2 = trial_statistic(ctx, pre, rho, cfg, DetectorKind::clutter_aware, r2);
  CHECK(s1 == s2);
  CHECK(s1 > 0.0);
}

TEST_CASE("threshold is the empirical H0 quantile") {
  const Scenario s = small_scenario();
  const DetectorContext ctx = make_detector_context(s);
  const PrecoderSet pre = precoders_for(s, ctx);
  const VectorXd rho = VectorXd::Constant(s.radio.num_ues + 1, 0.02);

  const int trials = 300;
  const double p_fa = 0.05;
  const double thr = calibrate_threshold(ctx, pre, rho, 3, DetectorKind::clutter_unaware, trials,
                                         p_fa, s.master_seed);
  // Replaying the calibration stream must put exactly the trials above the
  // selected order statistic over the threshold.
  const double rate = exceedance_rate(ctx, pre, rho, 3, false, DetectorKind::clutter_unaware,
                                      trials, thr, s.master_seed, StreamPurpose::calibration);
  const int idx = static_cast<int>(std::floor((1.0 - p_fa) * trials));
  CHECK(rate == static_cast<double>(trials - 1 - idx) / trials);
}

TEST_CASE("end-to-end detection study is deterministic and self-consistent") {
  const Scenario s = small_scenario();
  const VectorXd rho = VectorXd::Constant(s.radio.num_ues + 1, 0.02);
  const DetectionReport a = evaluate_detection(s, rho, 3, DetectorKind::clutter_aware, true);
  const DetectionReport b = evaluate_detection(s, rho, 3, DetectorKind::clutter_aware, true);
  CHECK(a.threshold == b.threshold);
  CHECK(a.detection_prob == b.detection_prob);
  CHECK(a.false_alarm_rate == b.false_alarm_rate);
  CHECK(a.trials == s.mc.detection_trials);
  CHECK(a.threshold > 0.0);
  CHECK(a.detection_prob >= 0.0);
  CHECK(a.detection_prob <= 1.0);
  CHECK(a.false_alarm_rate >= 0.0);
  CHECK(a.detection_se ==
        doctest::Approx(std::sqrt(a.detection_prob * (1.0 - a.detection_prob) / a.trials)));
  // Skipping the false-alarm measurement leaves the sentinel in place.
  const DetectionReport c = evaluate_detection(s, rho, 3, DetectorKind::clutter_aware, false);
  CHECK(c.false_alarm_rate == -1.0);
}

}  // TEST_SUITE
