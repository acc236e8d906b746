#include "privperturb/controllability.hpp"

#include "privperturb/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

namespace privperturb {

namespace {

void require_pair(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols() || a.rows() < 1) throw ArgumentError("A must be square and non-empty");
  if (b.rows() != a.rows()) throw ArgumentError("B must have as many rows as A");
}

std::vector<std::complex<double>> distinct_eigenvalues(const Matrix& a) {
  Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalue iteration did not converge");
  std::vector<std::complex<double>> out;
  const double scale = 1.0 + a.norm();
  for (Index i = 0; i < es.eigenvalues().size(); ++i) {
    const auto lambda = es.eigenvalues()(i);
    // Conjugates carry the same information; keep the one with Im >= 0.
    if (lambda.imag() < 0.0) continue;
    const bool seen = std::any_of(out.begin(), out.end(),
                                  [&](const std::complex<double>& mu) { return std::abs(mu - lambda) <= 1e-10 * scale; });
    if (!seen) out.push_back(lambda);
  }
  return out;
}

}  // namespace

Matrix controllability_matrix(const Matrix& a, const Matrix& b) {
  require_pair(a, b);
  const Index n = a.rows();
  const Index m = b.cols();
  Matrix c(n, n * m);
  Matrix block = b;
  for (Index k = 0; k < n; ++k) {
    c.middleCols(k * m, m) = block;
    if (k + 1 < n) block = a * block;
  }
  return c;
}

ControllabilityVerdict is_controllable(const Matrix& a, const Matrix& b, const Tolerance& tol,
                                       ControllabilityMethod method) {
  require_pair(a, b);
  const Index n = a.rows();
  ControllabilityVerdict v;
  v.method = method;
  const Matrix c = controllability_matrix(a, b);
  v.gram_det = (c * c.transpose()).determinant();
  if (b.cols() == 0) return v;

  if (method == ControllabilityMethod::kalman_rank) {
    v.controllable = numerical_rank(c, tol) == static_cast<std::size_t>(n);
    return v;
  }
  v.controllable = true;
  for (const auto& lambda : distinct_eigenvalues(a)) {
    Matrix re(n, n + b.cols());
    re << a - lambda.real() * Matrix::Identity(n, n), b;
    Matrix im = Matrix::Zero(n, n + b.cols());
    im.leftCols(n).diagonal().setConstant(-lambda.imag());
    if (complex_rank(re, im, tol) < static_cast<std::size_t>(n)) {
      v.controllable = false;
      break;
    }
  }
  return v;
}

PsdCertificate shifted_psd_certificate(const Matrix& k_si, double eps, double tol) {
  if (!(eps > 0.0)) throw ArgumentError("eps must be positive");
  if (k_si.rows() != k_si.cols()) throw ArgumentError("K_SI must be square");
  require_finite(k_si, "K_SI");
  const Index p = k_si.rows();
  PsdCertificate cert;
  const Matrix sym = 0.5 * (k_si + k_si.transpose());
  const bool symmetric = (k_si - k_si.transpose()).cwiseAbs().maxCoeff() <= tol * (1.0 + k_si.norm());
  Eigen::SelfAdjointEigenSolver<Matrix> es((1.0 - eps) * Matrix::Identity(p, p) + sym, Eigen::EigenvaluesOnly);
  cert.min_eig = es.eigenvalues()(0);
  cert.certified = symmetric && cert.min_eig >= -tol;
  return cert;
}

bool left_eigenvector_controllability(const Matrix& a, const Matrix& b, const Matrix& k_ss, const Matrix& k_si,
                                      const Tolerance& tol) {
  require_pair(a, b);
  const Index n = a.rows();
  const Index p = b.cols();
  if (k_ss.rows() != p || k_ss.cols() != n) throw ArgumentError("K_SS must be p x n");
  if (k_si.rows() != p || k_si.cols() != p) throw ArgumentError("K_SI must be p x p");

  const Matrix a_hat = a + b * k_ss;
  const Matrix b_hat = b * (Matrix::Identity(p, p) + k_si);
  const double b_scale = spectral_norm(b_hat);
  if (b_scale == 0.0) return false;
  const Matrix bt = b_hat.transpose();
  Matrix bt_real = Matrix::Zero(2 * p, 2 * n);
  bt_real.topLeftCorner(p, n) = bt;
  bt_real.bottomRightCorner(p, n) = bt;

  for (const auto& lambda : distinct_eigenvalues(a_hat)) {
    Matrix im = Matrix::Zero(n, n);
    im.diagonal().setConstant(-lambda.imag());
    const Matrix shifted = realify(a_hat.transpose() - lambda.real() * Matrix::Identity(n, n), im);
    const SvdResult f = svd(shifted);
    const Index rank = static_cast<Index>(numerical_rank(shifted, tol));
    // A computed eigenvalue is only approximate, so the two weakest directions
    // are always kept.
    const Index dim = std::max<Index>(2, 2 * n - rank);
    const Matrix eigenspace = f.V.rightCols(dim);
    const Vector sigma = svd(bt_real * eigenspace).singular_values;
    const double cutoff = std::sqrt(tol.rank_tol) * b_scale;
    if (sigma.size() < dim || sigma(dim - 1) <= cutoff) return false;
  }
  return true;
}

}  // namespace privperturb
