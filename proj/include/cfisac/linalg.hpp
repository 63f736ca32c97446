// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace cfisac {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

// Hermitian PSD square root via eigendecomposition.  Eigenvalues below
// -tol*||A|| are a contract violation; values in [-tol*||A||, 0) are clipped
// to zero so that numerically semidefinite inputs round-trip cleanly.
MatrixXcd hermitian_sqrt(const MatrixXcd& a, double tol = 1e-12);

// Deterministic pairwise summation.  Used for every Monte Carlo reduction so
// that results do not depend on accumulation order or chunking.
double pairwise_sum(std::span<const double> values);
std::complex<double> pairwise_sum(std::span<const std::complex<double>> values);

// FNV-1a, used for content-addressed caching of moment statistics.
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace cfisac
