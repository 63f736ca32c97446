// SPDX-License-Identifier: Apache-2.0
#include "cfisac/linalg.hpp"

#include <stdexcept>

namespace cfisac {

MatrixXcd hermitian_sqrt(const MatrixXcd& a, double tol) {
  if (a.rows() != a.cols()) throw std::invalid_argument("hermitian_sqrt: matrix not square");
  if (a.rows() == 0) return a;
  Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(a);
  if (eig.info() != Eigen::Success) throw std::runtime_error("hermitian_sqrt: eigensolver failed");
  VectorXd lam = eig.eigenvalues();
  const double norm = lam.cwiseAbs().maxCoeff();
  const double floor = -tol * std::max(norm, 1e-300);
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam[i] < floor) throw std::invalid_argument("hermitian_sqrt: matrix is indefinite");
    if (lam[i] < 0.0) lam[i] = 0.0;
  }
  return eig.eigenvectors() * lam.cwiseSqrt().asDiagonal() * eig.eigenvectors().adjoint();
}

namespace {

template <typename T>
T pairwise_impl(std::span<const T> v) {
  if (v.empty()) return T{};
  if (v.size() <= 8) {
    T s{};
    for (const T& x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_impl(v.first(half)) + pairwise_impl(v.subspan(half));
}

}  // namespace

double pairwise_sum(std::span<const double> values) { return pairwise_impl(values); }

std::complex<double> pairwise_sum(std::span<const std::complex<double>> values) {
  return pairwise_impl(values);
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace cfisac
