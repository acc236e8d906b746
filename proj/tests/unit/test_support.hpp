#pragma once

// Random instance generators and reference computations that do not go
// through the library's own kernels.

#include "privperturb/linalg.hpp"
#include "privperturb/system.hpp"

#include <Eigen/SVD>

#include <random>

namespace testsupport {

using privperturb::Index;
using privperturb::Matrix;
using privperturb::Vector;

inline Matrix gaussian(std::mt19937_64& rng, Index rows, Index cols, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

inline Index uniform_int(std::mt19937_64& rng, Index lo, Index hi) {
  return std::uniform_int_distribution<Index>(lo, hi)(rng);
}

/// Random A with spectral radius rho_target.
inline Matrix stable_matrix(std::mt19937_64& rng, Index n, double rho_target = 0.9) {
  Matrix a = gaussian(rng, n, n);
  const double rho = a.eigenvalues().cwiseAbs().maxCoeff();
  return rho > 0.0 ? Matrix(a * (rho_target / rho)) : a;
}

inline privperturb::LinearSystem random_system(std::mt19937_64& rng, Index n, Index p, Index q,
                                               double rho_target = 0.9) {
  return {stable_matrix(rng, n, rho_target), gaussian(rng, n, p), gaussian(rng, q, n), gaussian(rng, q, p)};
}

/// Singular values through a divide-and-conquer SVD (the library uses Jacobi).
inline Vector reference_singular_values(const Matrix& m) {
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues();
}

/// Singular values above rank_tol * max(sigma_1, scale).
inline std::size_t reference_rank(const Matrix& m, double rank_tol = 1e-8, double scale = 0.0) {
  const Vector s = reference_singular_values(m);
  const double top = std::max(s.size() ? s(0) : 0.0, scale);
  if (s.size() == 0 || top == 0.0) return 0;
  std::size_t r = 0;
  for (Index i = 0; i < s.size(); ++i) r += s(i) > rank_tol * top ? 1 : 0;
  return r;
}

inline std::size_t reference_complex_rank(const Eigen::MatrixXcd& m, double rank_tol = 1e-8) {
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(m);
  const Vector s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  std::size_t r = 0;
  for (Index i = 0; i < s.size(); ++i) r += s(i) > rank_tol * s(0) ? 1 : 0;
  return r;
}

inline Eigen::MatrixXcd complex_pencil(const privperturb::LinearSystem& sys, std::complex<double> z) {
  const Index n = sys.n();
  Eigen::MatrixXcd d(n + sys.q(), n + sys.p());
  d << z * Eigen::MatrixXcd::Identity(n, n) - sys.A().cast<std::complex<double>>(),
      -sys.B().cast<std::complex<double>>(), sys.G().cast<std::complex<double>>(),
      sys.H().cast<std::complex<double>>();
  return d;
}

/// Single-input single-output integrator chain in random coordinates; its
/// transfer function has no finite zeros.
inline privperturb::LinearSystem zero_free_square_system(std::mt19937_64& rng, Index n) {
  Matrix a = Matrix::Zero(n, n);
  for (Index i = 0; i + 1 < n; ++i) a(i, i + 1) = 1.0;
  a.row(n - 1) = gaussian(rng, 1, n, 0.3);
  Matrix b = Matrix::Zero(n, 1);
  b(n - 1, 0) = 1.0;
  Matrix g = Matrix::Zero(1, n);
  g(0, 0) = 1.0;
  Matrix t = gaussian(rng, n, n) + 3.0 * Matrix::Identity(n, n);
  const Matrix t_inv = t.inverse();
  return {t * a * t_inv, t * b, g * t_inv, Matrix::Zero(1, 1)};
}

inline std::size_t count_nonzero(const Matrix& m) {
  std::size_t c = 0;
  for (Index i = 0; i < m.size(); ++i) c += m.data()[i] != 0.0 ? 1 : 0;
  return c;
}

}  // namespace testsupport
