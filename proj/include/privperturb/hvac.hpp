#pragma once

// Multi-zone building thermal model, closed-loop simulation with released
// outputs, and an output-noise (Gaussian mechanism) baseline.
//
// Zone i: x_i = temperature, u^e_i = occupant count, u^c_i = supply air
// temperature. With d_i = L/dt + m c_p / 2 + (1/2) sum_j R_ij:
//   A_ii = (L/dt - m c_p / 2 - (1/2) sum_j R_ij) / d_i,  A_ij = R_ij / d_i,
//   B^e_i = c_o / d_i,  B^c_i = m c_p / d_i.

#include "privperturb/linalg.hpp"
#include "privperturb/system.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace privperturb {

struct ZoneEdge {
  std::size_t i = 0;
  std::size_t j = 0;
  double r = 20.0;  ///< conductance between the two zones [W/K]
};

struct ZoneParams {
  double L = 2.5e5;    ///< thermal capacity per zone [J/K]
  double dt = 60.0;    ///< step [s]
  double c_o = 100.0;  ///< heat load per occupant [W]
  double c_p = 1005.0; ///< specific heat of air [J/(kg K)]
  double m_s = 0.2;    ///< supply mass flow per zone [kg/s]
  std::size_t N = 10;
  std::vector<ZoneEdge> edges;  ///< undirected, no self-loops

  /// Zones 1-2-...-N in a line, every edge with conductance r.
  static ZoneParams path(std::size_t n, double r = 20.0);
  void validate() const;
};

struct HvacMatrices {
  Matrix a;    ///< N x N
  Matrix b_e;  ///< N x N, occupancy
  Matrix b_c;  ///< N x N, supply temperature
};

HvacMatrices build_hvac(const ZoneParams& params);

struct HvacSetup {
  LinearSystem sys;  ///< B = [B^e, B^c] with the matching input partition
  ReleaseMap rel;    ///< identity release
  std::size_t attempts = 0;
};

/// Draws G (q x N) and H (q x 2N) with entries uniform on [-1, 1]. With
/// require_full_row_rank, redraws (up to 20 times) until the exogenous view
/// passes check_full_row_rank_everywhere; throws AssumptionError otherwise.
HvacSetup make_hvac_system(const ZoneParams& params, std::size_t q, std::uint64_t seed, bool require_full_row_rank);

struct ClosedLoopOptions {
  double setpoint = 21.5;
  std::size_t horizon = 200;
  std::size_t occupancy_max = 10;
  double initial_temperature = 18.0;
  std::uint64_t seed = 0;
  double q_weight = 1.0;  ///< LQR state weight (times I)
  double r_weight = 0.1;  ///< LQR input weight (times I)
};

struct SimReport {
  std::vector<Vector> y_true;
  std::vector<Vector> y_released;  ///< perturbed (or noisy) release
  std::vector<Vector> states;
  std::vector<Vector> inputs;
  std::vector<double> disutility;
  std::vector<double> relative;    ///< +inf where |y_true| < zero_tol
  std::vector<double> perturbation_norm;  ///< |mu_u(k)| + |mu_y(k)|
  std::uint64_t seed = 0;
};

/// Discrete LQR gain F (u = F x) for (A, B) by Riccati iteration.
Matrix lqr_gain(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r);

/// Closed loop on the perturbed plant with LQR state feedback designed on
/// (A_hat, B_hat^c) around the steady state for the setpoint under mean
/// occupancy. y_true and the perturbed release are computed on the same
/// state and input realization.
SimReport closed_loop_sim(const LinearSystem& sys, const ReleaseMap& rel, const Perturbation& k,
                          const ClosedLoopOptions& opts);

/// sigma = sensitivity * sqrt(2 ln(1.25 / delta)) / eps.
double gaussian_mechanism_sigma(double eps, double delta, double sensitivity);

/// The unperturbed closed loop (K = 0) with i.i.d. Gaussian noise added to
/// every released output entry.
SimReport dp_baseline(const LinearSystem& sys, const ReleaseMap& rel, double eps, double delta, double sensitivity,
                      const ClosedLoopOptions& opts);

/// Per-step |y_pert(k) - y_true(k)|_2 and its ratio to |y_true(k)|_2.
std::pair<std::vector<double>, std::vector<double>> disutility(const std::vector<Vector>& y_pert,
                                                               const std::vector<Vector>& y_true,
                                                               double zero_tol = 1e-9);

/// Columns: k, disutility, relative, y_true_norm, y_pert_norm, T1..TN.
std::string sim_report_csv(const SimReport& report);

}  // namespace privperturb
