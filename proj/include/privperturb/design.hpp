#pragma once

// Result type shared by the sparse and the l2 perturbation designs.

#include "privperturb/controllability.hpp"
#include "privperturb/linalg.hpp"
#include "privperturb/privacy.hpp"
#include "privperturb/sdp.hpp"
#include "privperturb/system.hpp"

#include <optional>
#include <string>

namespace privperturb {

struct ObjectiveBreakdown {
  double l1_value = 0.0;       ///< sum |K_ij|
  double nuclear_value = 0.0;  ///< nuclear norm of the perturbed pencil at z
  std::size_t l0_count = 0;    ///< entries with |K_ij| > zero_tol * |K|_F
  double l2_value = 0.0;       ///< |[H, Pi] K|_2
};

struct DesignResult {
  Perturbation k;  ///< in the coordinates of the full system
  double z = 0.0;
  ObjectiveBreakdown objective;
  std::size_t pencil_rank = 0;  ///< rank of the perturbed pencil at z (design coordinates), judged against the unperturbed pencil norm
  std::size_t rho = 0;          ///< rank target, 0 when none was requested
  ProtectionReport protection;  ///< flags and witness in full coordinates
  ControllabilityVerdict controllability;
  std::optional<PsdCertificate> certificate;
  std::optional<SdpStatus> sdp_status;
  std::optional<KktReport> sdp_kkt;
  double upper_bound = 0.0;  ///< disutility bound, l2 designs only
  double seconds = 0.0;
};

/// Evaluates a perturbation: pencil rank, protection, controllability of the
/// perturbed control pair and the cost breakdown. When `view` is given, `k`
/// lives on the exogenous inputs of the view and is embedded into the full
/// system; targets use full input indices and must be exogenous.
DesignResult evaluate_design(const LinearSystem& sys, const ReleaseMap& rel, const DesignView* view,
                             const Perturbation& k, double z, const TargetSpec& targets, const Tolerance& tol,
                             std::uint64_t seed);

/// Full-coordinate targets expressed in the input numbering of a view.
TargetSpec targets_in_view(const TargetSpec& targets, const DesignView& view);

}  // namespace privperturb

namespace privperturb {

/// Variable and block indices of a pencil SDP, for inspection and tests.
struct PencilSdpLayout {
  Index z = -1;
  std::vector<std::vector<Index>> k;  ///< (p+l) x (n+p) variable ids of K
  std::vector<Index> t;               ///< epigraph variables
  std::vector<Index> w1, w2;          ///< upper-triangular entries, row by row
  Index nuclear_block = -1;
  Index eps_block = -1;
  Index norm_block = -1;  ///< spectral block of the l2 variant
};

struct PencilSdp {
  SdpProblem problem;
  PencilSdpLayout layout;
};

/// Reads (K, z) back from an SDP solution; K_SI is symmetrized.
Perturbation perturbation_from_solution(const PencilSdpLayout& layout, const Vector& y, Index n, Index p);

}  // namespace privperturb
