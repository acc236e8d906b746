#include "privperturb/oracles.hpp"

#include "privperturb/errors.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace privperturb {

namespace {

// Advances idx to the next k-subset of {0..c-1} in lexicographic order.
bool next_subset(std::vector<Index>& idx, Index c) {
  const auto k = static_cast<Index>(idx.size());
  for (Index i = k - 1; i >= 0; --i) {
    if (idx[static_cast<std::size_t>(i)] < c - k + i) {
      ++idx[static_cast<std::size_t>(i)];
      for (Index j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

NvpResult sparsest_null_vector(const Matrix& m, const Tolerance& tol) {
  const Index r = m.rows();
  const Index c = m.cols();
  if (c > 16) throw ArgumentError("sparsest_null_vector: at most 16 columns are supported, got " + std::to_string(c));
  if (r >= c) throw ArgumentError("sparsest_null_vector: matrix must have fewer rows than columns");
  require_finite(m, "sparsest_null_vector");
  const double scale = m.size() ? Eigen::JacobiSVD<Matrix>(m).singularValues()(0) : 0.0;

  NvpResult out;
  for (Index k = 1; k <= c; ++k) {
    std::vector<Index> idx(static_cast<std::size_t>(k));
    for (Index i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
    do {
      ++out.subsets_examined;
      Matrix sub(r, k);
      for (Index i = 0; i < k; ++i) sub.col(i) = m.col(idx[static_cast<std::size_t>(i)]);
      // Rank deficiency is judged against the whole matrix's scale, so a zero
      // column counts as a support-1 null vector.
      const SvdResult f = svd(sub);
      const double smallest = k > r ? 0.0 : f.singular_values(k - 1);
      if (smallest <= tol.rank_tol * scale) {
        const Vector w = f.V.col(k - 1);
        out.v_star = Vector::Zero(c);
        for (Index i = 0; i < k; ++i) out.v_star(idx[static_cast<std::size_t>(i)]) = w(i);
        out.sparsity = static_cast<std::size_t>(k);
        return out;
      }
    } while (next_subset(idx, c));
  }
  throw NumericalError("sparsest_null_vector: no null vector found");
}

Matrix support_diagonal_perturbation(const Vector& v_star, const Tolerance& tol) {
  const double norm = v_star.norm();
  if (norm == 0.0) throw ArgumentError("support_diagonal_perturbation: vector must be nonzero");
  Matrix k = Matrix::Zero(v_star.size(), v_star.size());
  for (Index i = 0; i < v_star.size(); ++i) {
    if (std::abs(v_star(i)) > tol.zero_tol * norm) k(i, i) = -1.0;
  }
  return k;
}

SparseRankDropCheck sparse_rank_drop_check(const Matrix& m, const Tolerance& tol) {
  const Index r = m.rows();
  const Index c = m.cols();
  const NvpResult nvp = sparsest_null_vector(m, tol);
  const Matrix k_o = support_diagonal_perturbation(nvp.v_star, tol);

  // Split M = [M1, M2] with M1 r x r. With A = z I - M1, B = -M2, G = [I; 0],
  // H = [0; I] and Pi = I_c, the pencil is [M; I_c] at any z.
  const double z = 0.0;
  const Matrix a = z * Matrix::Identity(r, r) - m.leftCols(r);
  const Matrix b = -m.rightCols(c - r);
  Matrix g = Matrix::Zero(c, r);
  g.topRows(r).setIdentity();
  Matrix h = Matrix::Zero(c, c - r);
  h.bottomRows(c - r).setIdentity();
  const LinearSystem sys(a, b, g, h);
  const ReleaseMap rel = ReleaseMap::identity(sys);
  Perturbation k = Perturbation::zeros(r, c - r, c);
  k.k_os = k_o.leftCols(r);
  k.k_oi = k_o.rightCols(c - r);
  const Matrix stacked = pencil(apply_perturbation(sys, rel, k), z);

  SparseRankDropCheck out;
  out.nvp_sparsity = nvp.sparsity;
  out.perturbation_l0 = static_cast<std::size_t>((k_o.array() != 0.0).count());
  out.stacked_rank = numerical_rank(stacked, tol);
  out.holds = out.stacked_rank < static_cast<std::size_t>(c) && out.perturbation_l0 == out.nvp_sparsity;
  return out;
}

double grid_min_frobenius(const LinearSystem& sys, double z_lo, double z_hi, double step) {
  if (!(z_lo < z_hi) || !(step > 0.0)) throw ArgumentError("grid_min_frobenius: need z_lo < z_hi and step > 0");
  const auto count = static_cast<long>(std::floor((z_hi - z_lo) / step + 1e-9));
  double best_z = z_lo;
  double best = std::numeric_limits<double>::infinity();
  for (long i = 0; i <= count; ++i) {
    const double z = z_lo + static_cast<double>(i) * step;
    const double v = pencil(sys, z).squaredNorm();
    if (v < best) {
      best = v;
      best_z = z;
    }
  }
  return best_z;
}

}  // namespace privperturb
