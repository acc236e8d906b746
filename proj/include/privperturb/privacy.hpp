#pragma once

// Privacy verification through the kernel of the system pencil.
//
// A target entry is certified protected when the pencil D(z) of the released
// system has a null vector v = (v1, v2) that is nonzero on that entry; for
// input targets z must also be nonzero. Shifting x(0) by m*v1 and u(k) by
// m*z^k*v2 then leaves every released output unchanged, for any scalar m.
// The test is sufficient only: "not certified" does not mean "recoverable".

#include "privperturb/linalg.hpp"
#include "privperturb/system.hpp"

#include <complex>
#include <cstdint>
#include <vector>

namespace privperturb {

/// Entries of x(0) and u an adversary tries to infer (zero-based indices).
struct TargetSpec {
  std::vector<Index> state_targets;
  std::vector<Index> input_targets;

  static TargetSpec all(Index n, Index p);
  bool empty() const { return state_targets.empty() && input_targets.empty(); }
  void validate(Index n, Index p) const;
};

struct EntryFlag {
  Index index = 0;
  bool certified = false;
};

struct ProtectionReport {
  std::vector<EntryFlag> state_flags;
  std::vector<EntryFlag> input_flags;
  double witness_z = 0.0;
  std::optional<Vector> witness_vector;  ///< (n+p)-vector nonzero on every target
  bool all_protected = false;
  std::size_t kernel_dim = 0;
  std::size_t trials_used = 0;

  std::size_t certified_count() const;
};

struct FullRowRankCheck {
  bool holds = false;
  std::size_t probe_rank = 0;
  double probe_z = 0.0;
  std::vector<std::complex<double>> invariant_zeros;
};

/// Checks that D(z) has full row rank n+q for every complex z: generic rank at
/// a random probe, plus the absence of finite rank-drop points. Candidates come
/// from the generalized eigenvalues of D(z) W for three random compressions W;
/// a candidate counts only if all three share it and the uncompressed pencil
/// loses rank there.
/// Throws AssumptionError when q > p (full row rank is impossible).
FullRowRankCheck check_full_row_rank_everywhere(const LinearSystem& sys, const Tolerance& tol = {},
                                                std::uint64_t seed = 0);

/// Rank of D(z) for complex z, computed in real arithmetic.
std::size_t pencil_rank_complex(const LinearSystem& sys, std::complex<double> z, const Tolerance& tol = {});

/// Per-entry certification from the null space of pencil(perturbed, z), plus
/// a single witness nonzero on all targets. Columns of the null basis are
/// tried first, then up to `trials` random Gaussian combinations. A positive
/// rank_scale sets the magnitude against which singular values count as zero.
ProtectionReport protected_entries(const LinearSystem& perturbed, const TargetSpec& targets, double z,
                                   const Tolerance& tol = {}, std::size_t trials = 8,
                                   std::uint64_t seed = 0, double rank_scale = 0.0);

/// n + p - rank(pencil(perturbed, z)): a lower bound on how many entries of
/// (x(0), u) can be certified at this z. Requires |z| > zero_tol.
std::size_t min_protected_count(const LinearSystem& perturbed, double z, const Tolerance& tol = {});

struct WitnessDeviation {
  double max_deviation = 0.0;    ///< max_k ||y''(k) - y'(k)||_2
  double max_output_norm = 0.0;  ///< max_k ||y'(k)||_2 of the nominal run
  std::size_t horizon_used = 0;
  bool horizon_capped = false;
};

/// Simulates the nominal run (x0, u) and the shadow run (x0 + m v1,
/// u(k) + m z^k v2) and reports the largest output difference. The horizon is
/// shortened (horizon_capped = true) if |m| |z|^k ||v|| would exceed 1e150.
WitnessDeviation output_invariance_witness_test(const LinearSystem& perturbed, double z, const Vector& v,
                                                double m, std::size_t horizon, const Vector& x0,
                                                std::span<const Vector> inputs);

}  // namespace privperturb
