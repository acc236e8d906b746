#pragma once

// Sparse perturbations through the convex surrogate
//
//   min  sum t + c (Tr W1 + Tr W2)
//   s.t. -t <= vec(K) <= t,  [[W1, D(z) + F K], [., W2]] >= 0,
//        (1 - eps) I + K_SI >= 0,  K_SI symmetric,
//
// followed by hard thresholding of the solver's near-zero entries.

#include "privperturb/design.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace privperturb {

struct L0DesignConfig {
  double c = 1.0;    ///< nuclear-norm weight
  double eps = 0.1;  ///< margin of the controllability surrogate
  std::optional<std::size_t> rho;  ///< reported against the achieved rank only
  /// Rank and support decisions on the solver output. Interior-point
  /// solutions are accurate to about the solver tolerance, so the defaults
  /// are looser than the library-wide ones.
  Tolerance tol{1e-6, 1e-6};
  SdpOptions sdp;
};

/// Builds the surrogate program on the full system (all inputs perturbable).
/// Throws AssumptionError if (A, B_control) is not controllable.
PencilSdp build_sdp_l0(const LinearSystem& sys, const ReleaseMap& rel, const L0DesignConfig& cfg);

/// Zeroes entries with |K_ij| <= threshold * max(|K|_F, |D(z)|_F).
Perturbation threshold_perturbation(const Perturbation& k, double threshold, double scale);

/// Solves, thresholds and evaluates. Throws NumericalError when the solver
/// fails outright.
DesignResult sparse_design(const LinearSystem& sys, const ReleaseMap& rel, const TargetSpec& targets,
                           const L0DesignConfig& cfg, std::uint64_t seed = 0);

struct SweepRow {
  double c = 0.0;
  std::size_t pencil_rank = 0;
  std::size_t l0_count = 0;
  double l1_value = 0.0;
  double nuclear_value = 0.0;
  bool controllable = false;
  bool all_protected = false;
  double solve_seconds = 0.0;
  std::string error;  ///< empty when the design succeeded
  std::optional<DesignResult> design;
};

/// One design per c (ascending, non-empty grid). Grid point i uses seed + i.
/// Failures are recorded in the row and the sweep continues. jobs > 1 runs
/// grid points on separate threads.
std::vector<SweepRow> sweep_c(const LinearSystem& sys, const ReleaseMap& rel, const TargetSpec& targets,
                              const std::vector<double>& c_grid, const L0DesignConfig& base, std::uint64_t seed,
                              std::size_t jobs = 1);

/// Columns: c, pencil_rank, l0_count, l1_value, nuclear_value, controllable,
/// all_protected, solve_seconds.
std::string sweep_table_csv(const std::vector<SweepRow>& rows);

}  // namespace privperturb
