// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "cfisac/linalg.hpp"

namespace cfisac {

// Unit-norm precoders for one channel realization, stacked over APs.
// Column 0 steers the sensing beam; column j >= 1 serves UE j-1.
struct PrecoderSet {
  int m = 0;
  int n_tx = 0;
  MatrixXcd w;  // (m*n_tx) x (n_ue+1)

  int n_streams() const { return static_cast<int>(w.cols()); }
  // Rows of stream j belonging to AP k.
  Eigen::Block<const MatrixXcd> per_ap(int k) const {
    return w.block(static_cast<Eigen::Index>(k) * m, 0, m, w.cols());
  }
};

// Regularized zero-forcing from channel estimates; each column has unit norm.
// Columns come out in UE order (no sensing column).
MatrixXcd rzf_precoders(const std::vector<VectorXcd>& h_hat, double delta);

// Projects the sensing steering channel onto the orthogonal complement of the
// estimated UE subspace.  The subspace basis is rank-revealing: singular
// vectors with sigma <= tol * sigma_max are dropped.  Throws if the steering
// direction lies entirely inside the UE subspace.
VectorXcd zf_sensing_precoder(const std::vector<VectorXcd>& h_hat, const VectorXcd& h0,
                              double tol = 1e-12);

PrecoderSet build_precoders(const std::vector<VectorXcd>& h_hat, const VectorXcd& h0,
                            double delta, int m, int n_tx);

}  // namespace cfisac
