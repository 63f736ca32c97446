// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>
#include <optional>
#include <string>

#include "cfisac/channel.hpp"
#include "cfisac/linalg.hpp"
#include "cfisac/scenario.hpp"

namespace cfisac {

// Deterministic-equivalent statistics of the precoded network, estimated over
// n_mc seeded channel realizations.  Stream index j = 0 is the sensing beam,
// j >= 1 serves UE j-1.
struct MomentStats {
  int m = 0, n_tx = 0, n_rx = 0, n_ue = 0, n_mc = 0;
  double noise_w = 0.0;

  VectorXd b;       // n_ue: coherent beamforming gains |E h_i^H w_i|
  MatrixXd a;       // n_ue x (n_ue+1): interference gains; self column holds
                    // the coherent-gain fluctuation sqrt(E|.|^2 - b^2)
  MatrixXd f;       // n_tx x (n_ue+1): per-AP precoder loads sqrt(E ||w_{j,k}||^2)
  VectorXd a_diag;  // n_ue+1: target-reflection quadratic form diagonal
  VectorXd b_diag;  // n_ue+1: clutter quadratic form diagonal

  // Standard errors of the underlying Monte Carlo means.
  VectorXd b_se;       // on the complex mean magnitude
  MatrixXd a_sq_se;    // on E |h_i^H w_j|^2
  VectorXd a_diag_se;
  VectorXd b_diag_se;
};

MomentStats estimate_moments(const Scenario& s);

// JSON round trip used by the on-disk cache.
nlohmann::json moment_stats_to_json(const MomentStats& stats);
MomentStats moment_stats_from_json(const nlohmann::json& j);

// Cache entry path is derived from moment_stats_key(s).  Returns the cached
// stats when present, otherwise computes and (best-effort) persists them.
MomentStats load_or_estimate_moments(const Scenario& s, const std::optional<std::string>& cache_dir);

}  // namespace cfisac
