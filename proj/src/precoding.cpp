// SPDX-License-Identifier: Apache-2.0
#include "cfisac/precoding.hpp"

#include <stdexcept>

namespace cfisac {

MatrixXcd rzf_precoders(const std::vector<VectorXcd>& h_hat, double delta) {
  if (h_hat.empty()) return {};
  const Eigen::Index dim = h_hat.front().size();
  MatrixXcd gram = delta * MatrixXcd::Identity(dim, dim);
  for (const auto& h : h_hat) gram.selfadjointView<Eigen::Lower>().rankUpdate(h, 1.0);
  gram = gram.selfadjointView<Eigen::Lower>();
  Eigen::LDLT<MatrixXcd> factor(gram);

  MatrixXcd w(dim, static_cast<Eigen::Index>(h_hat.size()));
  for (std::size_t i = 0; i < h_hat.size(); ++i) {
    VectorXcd col = factor.solve(h_hat[i]);
    const double n = col.norm();
    if (n < 1e-300) throw std::runtime_error("rzf_precoders: zero channel estimate");
    w.col(static_cast<Eigen::Index>(i)) = col / n;
  }
  return w;
}

VectorXcd zf_sensing_precoder(const std::vector<VectorXcd>& h_hat, const VectorXcd& h0,
                              double tol) {
  VectorXcd projected = h0;
  if (!h_hat.empty()) {
    MatrixXcd basis(h0.size(), static_cast<Eigen::Index>(h_hat.size()));
    for (std::size_t i = 0; i < h_hat.size(); ++i) basis.col(static_cast<Eigen::Index>(i)) = h_hat[i];
    Eigen::BDCSVD<MatrixXcd> svd(basis, Eigen::ComputeThinU);
    const auto& sigma = svd.singularValues();
    Eigen::Index rank = 0;
    const double cutoff = tol * (sigma.size() > 0 ? sigma[0] : 0.0);
    while (rank < sigma.size() && sigma[rank] > cutoff) ++rank;
    if (rank > 0) {
      const MatrixXcd u = svd.matrixU().leftCols(rank);
      projected -= u * (u.adjoint() * h0);
    }
  }
  const double n = projected.norm();
  if (n <= 1e-12 * h0.norm())
    throw std::runtime_error(
        "zf_sensing_precoder: sensing direction lies inside the estimated UE subspace");
  return projected / n;
}

PrecoderSet build_precoders(const std::vector<VectorXcd>& h_hat, const VectorXcd& h0,
                            double delta, int m, int n_tx) {
  PrecoderSet set;
  set.m = m;
  set.n_tx = n_tx;
  set.w.resize(static_cast<Eigen::Index>(m) * n_tx, static_cast<Eigen::Index>(h_hat.size()) + 1);
  set.w.col(0) = zf_sensing_precoder(h_hat, h0);
  if (!h_hat.empty()) set.w.rightCols(static_cast<Eigen::Index>(h_hat.size())) = rzf_precoders(h_hat, delta);
  return set;
}

}  // namespace cfisac
