#pragma once

// Linear time-invariant system model, the released-output aggregation map,
// input/output perturbations and trajectory simulation.
//
//   x(k+1) = A x(k) + B u(k)
//   y(k)   = G x(k) + H u(k),      G = Pi G_raw,  H = Pi H_raw

#include "privperturb/linalg.hpp"

#include <optional>
#include <span>
#include <vector>

namespace privperturb {

/// Split of the input indices into exogenous signals and control inputs.
/// Indices are zero-based and together must cover 0..p-1 exactly once.
struct InputPartition {
  std::vector<Index> exogenous;
  std::vector<Index> control;
};

class LinearSystem {
 public:
  LinearSystem(Matrix a, Matrix b, Matrix g, Matrix h,
               std::optional<InputPartition> partition = std::nullopt);

  Index n() const { return a_.rows(); }
  Index p() const { return b_.cols(); }
  Index q() const { return g_.rows(); }

  const Matrix& A() const { return a_; }
  const Matrix& B() const { return b_; }
  const Matrix& G() const { return g_; }
  const Matrix& H() const { return h_; }
  const std::optional<InputPartition>& partition() const { return partition_; }

  /// Columns of B belonging to the control inputs (all of B without a partition).
  Matrix control_input_matrix() const;

 private:
  Matrix a_, b_, g_, h_;
  std::optional<InputPartition> partition_;
};

/// Aggregation of raw agent outputs y'(k) into released outputs y = Pi y'.
struct ReleaseMap {
  Matrix pi;     ///< q x l
  Matrix g_raw;  ///< l x n
  Matrix h_raw;  ///< l x p

  Index l() const { return pi.cols(); }

  /// Pi = I_q with G_raw = G, H_raw = H.
  static ReleaseMap identity(const LinearSystem& sys);

  /// Throws ArgumentError unless Pi G_raw = G and Pi H_raw = H within 1e-12
  /// (relative to the size of G and H).
  void validate(const LinearSystem& sys) const;
};

/// Block perturbation K = [K_SS K_SI; K_OS K_OI] of size (p+l) x (n+p).
struct Perturbation {
  Matrix k_ss;  ///< p x n
  Matrix k_si;  ///< p x p
  Matrix k_os;  ///< l x n
  Matrix k_oi;  ///< l x p

  static Perturbation zeros(Index n, Index p, Index l);
  static Perturbation from_assembled(const Matrix& k, Index n, Index p);

  Index n() const { return k_ss.cols(); }
  Index p() const { return k_ss.rows(); }
  Index l() const { return k_os.rows(); }

  Matrix assembled() const;
  void validate(Index n, Index p, Index l) const;
};

struct Trajectory {
  std::vector<Vector> states;   ///< x(0..horizon)
  std::vector<Vector> inputs;   ///< u(0..horizon)
  std::vector<Vector> outputs;  ///< y(0..horizon)

  std::size_t horizon() const { return states.empty() ? 0 : states.size() - 1; }
};

/// D(z) = [zI - A, -B; G, H], of size (n+q) x (n+p).
Matrix pencil(const LinearSystem& sys, double z);

/// F = [-B, 0; H, Pi], of size (n+q) x (p+l). pencil of the perturbed system
/// equals pencil(sys, z) + F * K.
Matrix f_matrix(const LinearSystem& sys, const ReleaseMap& rel);

/// Perturbed quadruple (A + B K_SS, B (I + K_SI), G + H K_SS + Pi K_OS,
/// H + H K_SI + Pi K_OI). The partition, if any, is carried over.
LinearSystem apply_perturbation(const LinearSystem& sys, const ReleaseMap& rel, const Perturbation& k);

/// Recursion x(k+1) = A x(k) + B u(k), y(k) = G x(k) + H u(k) for
/// k = 0..horizon. `inputs` must hold horizon+1 samples.
Trajectory simulate(const LinearSystem& sys, const Vector& x0, std::span<const Vector> inputs,
                    std::size_t horizon);

/// The sub-system seen by the exogenous inputs (A, B^e, G, H^e) and the
/// matching release map. Without a partition, returns the inputs unchanged.
struct DesignView {
  LinearSystem system;
  ReleaseMap release;
  std::vector<Index> input_map;  ///< design input index -> full input index
};
DesignView exogenous_view(const LinearSystem& sys, const ReleaseMap& rel);

/// Lifts a perturbation designed on an exogenous view back to the full input
/// space; rows and columns of control inputs are zero.
Perturbation embed_perturbation(const Perturbation& design_k, const DesignView& view, Index full_p);

}  // namespace privperturb
