#pragma once

// Controllability of (A, B) pairs and sufficient certificates for the
// perturbed pair (A + B K_SS, B (I + K_SI)).

#include "privperturb/linalg.hpp"

namespace privperturb {

enum class ControllabilityMethod { kalman_rank, pbh };

struct ControllabilityVerdict {
  bool controllable = false;
  double gram_det = 0.0;  ///< det(C C^T); informational only, under/overflows for larger n
  ControllabilityMethod method = ControllabilityMethod::kalman_rank;
};

/// [B, AB, ..., A^{n-1} B].
Matrix controllability_matrix(const Matrix& a, const Matrix& b);

/// kalman_rank: full row rank of the controllability matrix.
/// pbh: rank [A - lambda I, B] = n at every eigenvalue of A.
ControllabilityVerdict is_controllable(const Matrix& a, const Matrix& b, const Tolerance& tol = {},
                                       ControllabilityMethod method = ControllabilityMethod::kalman_rank);

struct PsdCertificate {
  bool certified = false;
  double min_eig = 0.0;  ///< smallest eigenvalue of (1 - eps) I + sym(K_SI)
};

/// K_SI symmetric within tol*(1 + |K_SI|) and (1 - eps) I + K_SI >= -tol.
/// A certificate implies I + K_SI is invertible. eps must be positive.
PsdCertificate shifted_psd_certificate(const Matrix& k_si, double eps, double tol = 1e-9);

/// True iff w^T B (I + K_SI) != 0 for every left eigenvector w of A + B K_SS.
/// Repeated and complex eigenvalues are handled by testing the whole left
/// eigenspace in real arithmetic.
bool left_eigenvector_controllability(const Matrix& a, const Matrix& b, const Matrix& k_ss, const Matrix& k_si,
                                      const Tolerance& tol = {});

}  // namespace privperturb
