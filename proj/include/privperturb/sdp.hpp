#pragma once

// Dense primal-dual interior-point solver for block LMI problems
//
//   minimize    c^T y
//   subject to  S_j(y) = C_j + sum_i y_i A_ji  >= 0   (PSD, one per block)
//               E y = e
//
// Matrix-valued unknowns (for example W1, W2 in a nuclear-norm block) are
// modelled as one scalar variable per symmetric entry. Scalar inequalities are
// 1x1 blocks. The dual is
//
//   maximize    -sum_j <C_j, X_j> + e^T lambda
//   subject to  sum_j <A_ji, X_j> + (E^T lambda)_i = c_i,   X_j >= 0.

#include "privperturb/linalg.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace privperturb {

/// Entry of a symmetric coefficient matrix. Off-diagonal entries are stored
/// once with row < col and stand for both (row, col) and (col, row).
struct SymEntry {
  Index row = 0;
  Index col = 0;
  double value = 0.0;
};

struct BlockTerm {
  Index var = 0;
  std::vector<SymEntry> entries;
};

struct PsdBlock {
  Index size = 0;
  Matrix constant;               ///< symmetric C_j
  std::vector<BlockTerm> terms;  ///< one per variable appearing in the block
};

struct LinearEquality {
  std::vector<std::pair<Index, double>> coeffs;
  double rhs = 0.0;
};

class SdpProblem {
 public:
  Index add_variable(std::string name, double cost = 0.0);
  Index add_block(Index size);

  /// Adds value at (row, col) and (col, row) of A_{block, var}.
  void add_coefficient(Index block, Index var, Index row, Index col, double value);
  /// Adds value at (row, col) and (col, row) of C_block.
  void add_constant(Index block, Index row, Index col, double value);
  void add_equality(std::vector<std::pair<Index, double>> coeffs, double rhs);
  void set_cost(Index var, double cost);

  Index num_vars() const { return static_cast<Index>(names_.size()); }
  const std::vector<std::string>& variable_names() const { return names_; }
  const Vector& objective() const { return cost_; }
  const std::vector<PsdBlock>& blocks() const { return blocks_; }
  const std::vector<LinearEquality>& equalities() const { return equalities_; }

  /// S_j(y) for a given assignment of the variables.
  Matrix evaluate_block(Index block, const Vector& y) const;
  /// <A_ji, Z> for every variable i, accumulated into out.
  void adjoint_add(Index block, const Matrix& z, Vector& out) const;

  /// Throws ArgumentError on out-of-range indices, empty equalities, blocks of
  /// size 0 or non-finite data.
  void validate() const;

 private:
  std::vector<std::string> names_;
  Vector cost_;
  std::vector<PsdBlock> blocks_;
  std::vector<std::unordered_map<Index, Index>> term_index_;  ///< per block: var -> term slot
  std::vector<LinearEquality> equalities_;
};

enum class SdpStatus { optimal, infeasible, max_iters, numerical_failure };

const char* to_string(SdpStatus status);

struct SdpOptions {
  double tol = 1e-7;
  std::size_t max_iters = 100;
  std::uint64_t seed = 0;  ///< reserved; the solver is deterministic
  double step_fraction = 0.98;
};

struct KktReport {
  double primal_res = 0.0;       ///< equality residual and PSD violation of S(y), scaled
  double dual_res = 0.0;         ///< stationarity residual and PSD violation of X, scaled
  double gap = 0.0;              ///< |primal objective - dual objective|
  double rel_gap = 0.0;          ///< gap / (1 + |primal objective|)
  double complementarity = 0.0;  ///< sum_j <X_j, S_j(y)>
};

struct SdpSolution {
  SdpStatus status = SdpStatus::numerical_failure;
  Vector y;                     ///< primal values, one per variable
  std::vector<Matrix> x;        ///< dual block matrices
  Vector lambda;                ///< equality multipliers
  double objective_value = 0.0;
  double dual_objective = 0.0;
  KktReport kkt;
  std::size_t iterations = 0;
  std::vector<double> merit_history;
  std::optional<std::vector<Matrix>> infeasibility_ray;  ///< X with sum <A_i, X> = 0, -sum <C, X> > 0
  std::string message;
};

SdpSolution solve(const SdpProblem& prob, const SdpOptions& opts = {});

/// Residuals recomputed from (y, X, lambda) alone.
KktReport kkt_report(const SdpProblem& prob, const SdpSolution& sol);

std::string sdp_debug_dump(const SdpProblem& prob, const SdpSolution* sol = nullptr);
SdpProblem sdp_problem_from_dump(const std::string& json_text);
SdpSolution sdp_solution_from_dump(const std::string& json_text);

}  // namespace privperturb
