#pragma once

// Brute-force reference computations used as ground truth in tests.

#include "privperturb/linalg.hpp"
#include "privperturb/system.hpp"

#include <cstdint>

namespace privperturb {

struct NvpResult {
  Vector v_star;                      ///< null vector of minimum support
  std::size_t sparsity = 0;
  std::uint64_t subsets_examined = 0;
};

/// Sparsest nonzero null vector of a wide matrix (r < c <= 16) by
/// enumerating column subsets in increasing size, lexicographic within a size.
/// A subset qualifies when its columns are rank deficient (rank_tol test).
NvpResult sparsest_null_vector(const Matrix& m, const Tolerance& tol = {});

/// diag with -1 on the support of v (|v_i| > zero_tol * |v|) and 0 elsewhere.
Matrix support_diagonal_perturbation(const Vector& v_star, const Tolerance& tol = {});

struct SparseRankDropCheck {
  bool holds = false;          ///< stacked matrix loses column rank and costs match
  std::size_t nvp_sparsity = 0;
  std::size_t perturbation_l0 = 0;
  std::size_t stacked_rank = 0;
};

/// Runs the sparsest-null-vector oracle on M (r x c), builds the support
/// diagonal K_O, and checks through the library pencil that
/// rank([M; I + K_O]) < c with |K_O|_0 equal to the null vector's support.
/// The pencil is that of n = r states, c - r inputs and c outputs with
/// D(z) = [M; I] and F K = [0; K_O].
SparseRankDropCheck sparse_rank_drop_check(const Matrix& m, const Tolerance& tol = {});

/// Grid point minimizing |pencil(sys, z)|_F^2 over z_lo, z_lo + step, ..., z_hi.
double grid_min_frobenius(const LinearSystem& sys, double z_lo, double z_hi, double step);

}  // namespace privperturb
