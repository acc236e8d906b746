#include "privperturb/linalg.hpp"

#include "privperturb/errors.hpp"

#include <algorithm>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <string>

namespace privperturb {

void Tolerance::validate() const {
  if (!(rank_tol > 0.0 && rank_tol < 1.0)) {
    throw ArgumentError("rank_tol must lie in (0, 1), got " + std::to_string(rank_tol));
  }
  if (!(zero_tol > 0.0 && zero_tol < 1.0)) {
    throw ArgumentError("zero_tol must lie in (0, 1), got " + std::to_string(zero_tol));
  }
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw NumericalError(std::string(what) + ": matrix has non-finite entries");
  }
}

SvdResult svd(const Matrix& m) {
  require_finite(m, "svd");
  if (m.rows() == 0 || m.cols() == 0) {
    return {Matrix::Identity(m.rows(), m.rows()), Vector(0), Matrix::Identity(m.cols(), m.cols())};
  }
  Eigen::JacobiSVD<Matrix> decomposition(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  SvdResult out{decomposition.matrixU(), decomposition.singularValues(), decomposition.matrixV()};
  // Two-sided Jacobi has no iteration cap in Eigen; a failed sweep shows up
  // as non-finite factors.
  if (!out.U.allFinite() || !out.V.allFinite() || !out.singular_values.allFinite()) {
    throw NumericalError("svd: Jacobi sweeps did not converge for a " + std::to_string(m.rows()) +
                         "x" + std::to_string(m.cols()) + " matrix");
  }
  return out;
}

namespace {

std::size_t count_above_cutoff(const Vector& sigma, double rank_tol, double scale = 0.0) {
  const double top = std::max(sigma.size() ? sigma(0) : 0.0, scale);
  if (sigma.size() == 0 || top <= 0.0) return 0;
  const double cutoff = rank_tol * top;
  std::size_t r = 0;
  for (Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > cutoff) ++r;
  }
  return r;
}

}  // namespace

std::size_t numerical_rank(const Matrix& m, const Tolerance& tol, double scale) {
  require_finite(m, "numerical_rank");
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> decomposition(m);
  return count_above_cutoff(decomposition.singularValues(), tol.rank_tol, scale);
}

Matrix null_space(const Matrix& m, const Tolerance& tol, double scale) {
  const SvdResult f = svd(m);
  const auto r = static_cast<Index>(count_above_cutoff(f.singular_values, tol.rank_tol, scale));
  return f.V.rightCols(m.cols() - r);
}

Matrix pinv(const Matrix& m, const Tolerance& tol) {
  const SvdResult f = svd(m);
  const auto r = static_cast<Index>(count_above_cutoff(f.singular_values, tol.rank_tol));
  Matrix out = Matrix::Zero(m.cols(), m.rows());
  for (Index i = 0; i < r; ++i) {
    out.noalias() += (1.0 / f.singular_values(i)) * f.V.col(i) * f.U.col(i).transpose();
  }
  return out;
}

std::vector<std::complex<double>> finite_generalized_eigenvalues(const Matrix& c, const Matrix& e) {
  if (c.rows() != c.cols() || e.rows() != e.cols() || c.rows() != e.rows()) {
    throw ArgumentError("finite_generalized_eigenvalues: C and E must be square and the same size");
  }
  require_finite(c, "finite_generalized_eigenvalues");
  require_finite(e, "finite_generalized_eigenvalues");
  std::vector<std::complex<double>> out;
  if (c.rows() == 0) return out;

  // det(C + lambda E) = 0  <=>  det(-C - lambda E) = 0, i.e. the pencil (-C, E).
  Eigen::GeneralizedEigenSolver<Matrix> qz;
  qz.compute(-c, e, /*computeEigenvectors=*/false);
  if (qz.info() != Eigen::Success) {
    throw NumericalError("finite_generalized_eigenvalues: QZ iteration did not converge (size " +
                         std::to_string(c.rows()) + ")");
  }
  const auto& alphas = qz.alphas();
  const auto& betas = qz.betas();
  for (Index i = 0; i < alphas.size(); ++i) {
    const double beta = betas(i);
    const double scale = std::hypot(std::abs(alphas(i)), std::abs(beta));
    if (scale == 0.0 || std::abs(beta) < 1e-12 * scale) continue;
    out.push_back(alphas(i) / beta);
  }
  return out;
}

Matrix realify(const Matrix& re, const Matrix& im) {
  if (re.rows() != im.rows() || re.cols() != im.cols()) {
    throw ArgumentError("realify: real and imaginary parts differ in shape");
  }
  Matrix out(2 * re.rows(), 2 * re.cols());
  out << re, -im, im, re;
  return out;
}

std::size_t complex_rank(const Matrix& re, const Matrix& im, const Tolerance& tol) {
  return numerical_rank(realify(re, im), tol) / 2;
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> decomposition(m);
  return decomposition.singularValues()(0);
}

double nuclear_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> decomposition(m);
  return decomposition.singularValues().sum();
}

}  // namespace privperturb
