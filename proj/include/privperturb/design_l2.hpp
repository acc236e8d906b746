#pragma once

// Minimum-disutility perturbations with a rank target rho: the closed-form
// SVD construction at z = Tr(A)/n, its rho tuning loop, and an SDP variant
// that penalizes |[H, Pi] K|_2 and the nuclear norm of the perturbed pencil.
//
// Systems with an input partition are designed on their exogenous inputs
// only; control-input rows and columns of K stay zero.

#include "privperturb/design.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace privperturb {

/// Tr(A)/n, the minimizer of |pencil(sys, z)|_F^2 over real z.
double optimal_z(const Matrix& a);

/// Smallest rank target reachable by any K: n + q - rank(F) + 1.
std::size_t rho_feasibility_floor(const LinearSystem& sys, const ReleaseMap& rel, const Tolerance& tol = {});

/// K = -sum_{l <= n+q-rho+1} v_l u_l^T / sigma_l from the SVD
/// pinv(D(z)) F = U diag(sigma) V^T, which leaves rank(D(z) + F K) = rho - 1.
/// rho > n+q gives K = 0. Throws InfeasibleError below the feasibility floor
/// and AssumptionError when D(z) lacks full row rank.
Perturbation construct_rank_reducing_perturbation(const LinearSystem& sys, const ReleaseMap& rel, double z,
                                                  std::size_t rho, const Tolerance& tol = {});

/// |[H, Pi]|_2 * sum over nonzero sigma_l of 1/sigma_l, with sigma_l the
/// singular values of pinv(D(z)) F. Bounds |[H, Pi] K|_2 for every rho.
double disutility_upper_bound(const LinearSystem& sys, const ReleaseMap& rel, double z, const Tolerance& tol = {});

struct L2DesignOptions {
  Tolerance tol;
  bool check_assumption = true;  ///< verify full row rank of the pencil for every z first
  std::uint64_t seed = 0;
};

/// Closed-form design at z = Tr(A)/n followed by protection and
/// controllability evaluation.
DesignResult analytic_l2_design(const LinearSystem& sys, const ReleaseMap& rel, const TargetSpec& targets,
                                std::size_t rho, const L2DesignOptions& opts = {});

enum class RhoStop { all_protected, feasibility_floor, rho_one };
const char* to_string(RhoStop stop);

struct RhoStep {
  std::size_t rho = 0;
  std::size_t pencil_rank = 0;
  double l2_objective = 0.0;
  double upper_bound = 0.0;
  bool all_protected = false;
  std::size_t certified = 0;
  double seconds = 0.0;
};

struct RhoTuning {
  DesignResult result;  ///< the protecting design, or the one certifying the most targets
  std::size_t rho_final = 0;
  RhoStop stop = RhoStop::rho_one;
  bool achieved = false;
  std::vector<RhoStep> steps;
};

/// rho = n+q, n+q-1, ... until every target is certified, the feasibility
/// floor is reached or rho = 1.
RhoTuning tune_rho(const LinearSystem& sys, const ReleaseMap& rel, const TargetSpec& targets,
                   const L2DesignOptions& opts = {});

/// Columns: rho, pencil_rank, l2_objective, upper_bound, all_protected, seconds.
std::string rho_table_csv(const RhoTuning& tuning);

struct L2SdpConfig {
  double c = 1.0;
  double eps = 0.1;
  Tolerance tol;
  SdpOptions sdp;
  std::uint64_t seed = 0;
};

/// min t + c (Tr W1 + Tr W2) subject to [[t I_q, [H, Pi] K], [., t I_{n+p}]] >= 0,
/// the nuclear block and (1 - eps) I + K_SI >= 0, on the system as given.
PencilSdp build_sdp_l2(const LinearSystem& sys, const ReleaseMap& rel, const L2SdpConfig& cfg);

/// Solves build_sdp_l2 on the exogenous view and evaluates the result.
/// Throws NumericalError if the solver does not reach an optimal or
/// iteration-limited point.
DesignResult sdp_l2_design(const LinearSystem& sys, const ReleaseMap& rel, const TargetSpec& targets,
                           const L2SdpConfig& cfg);

}  // namespace privperturb
