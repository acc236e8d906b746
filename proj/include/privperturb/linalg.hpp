#pragma once

// Dense real linear-algebra kernels shared by every other module.
//
// All rank and zero decisions go through an explicit Tolerance: singular
// values are compared against rank_tol * sigma_max, entries against zero_tol.

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <vector>

namespace privperturb {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct Tolerance {
  double rank_tol = 1e-8;  ///< relative singular-value cutoff
  double zero_tol = 1e-9;  ///< entry-level zero test

  /// Throws ArgumentError unless both values lie in (0, 1).
  void validate() const;
};

struct SvdResult {
  Matrix U;                ///< rows x rows, orthonormal
  Vector singular_values;  ///< min(rows, cols), descending
  Matrix V;                ///< cols x cols, orthonormal
};

/// Full singular value decomposition M = U diag(s) V^T.
/// Throws NumericalError on non-finite input or output.
SvdResult svd(const Matrix& m);

/// Number of singular values strictly above rank_tol * max(sigma_1, scale)
/// (0 for M = 0). A positive scale judges M against a reference magnitude,
/// so a matrix that is zero up to roundoff gets rank 0.
std::size_t numerical_rank(const Matrix& m, const Tolerance& tol = {}, double scale = 0.0);

/// Orthonormal basis of the right null space, one basis vector per column.
/// The column count is cols - numerical_rank(m, tol, scale).
Matrix null_space(const Matrix& m, const Tolerance& tol = {}, double scale = 0.0);

/// Moore-Penrose pseudo-inverse; singular values below the rank cutoff are
/// treated as zero.
Matrix pinv(const Matrix& m, const Tolerance& tol = {});

/// Finite roots of det(C + lambda E) = 0. Eigenvalues of the pencil with
/// |beta| < 1e-12 * |(alpha, beta)| are classified as infinite and dropped.
std::vector<std::complex<double>> finite_generalized_eigenvalues(const Matrix& c, const Matrix& e);

/// Real representation [[Re, -Im], [Im, Re]] of a complex matrix. Its rank is
/// twice the complex rank, which lets complex rank tests run in real arithmetic.
Matrix realify(const Matrix& re, const Matrix& im);

/// Complex rank of re + i*im computed through realify().
std::size_t complex_rank(const Matrix& re, const Matrix& im, const Tolerance& tol = {});

/// Throws NumericalError if any entry is NaN or infinite.
void require_finite(const Matrix& m, const char* what);

/// Spectral norm (largest singular value).
double spectral_norm(const Matrix& m);

/// Sum of singular values.
double nuclear_norm(const Matrix& m);

}  // namespace privperturb
