#include "privperturb/hvac.hpp"

#include "privperturb/controllability.hpp"
#include "privperturb/errors.hpp"
#include "privperturb/privacy.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <tuple>

namespace privperturb {

ZoneParams ZoneParams::path(std::size_t n, double r) {
  ZoneParams p;
  p.N = n;
  for (std::size_t i = 0; i + 1 < n; ++i) p.edges.push_back({i, i + 1, r});
  return p;
}

void ZoneParams::validate() const {
  if (N < 1) throw ArgumentError("zone count must be at least 1");
  for (double v : {L, dt, c_o, c_p, m_s}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ArgumentError("zone parameters must be positive and finite");
  }
  for (const auto& e : edges) {
    if (e.i >= N || e.j >= N) throw ArgumentError("zone edge refers to a zone out of range");
    if (e.i == e.j) throw ArgumentError("zone edges must not be self-loops");
    if (!(e.r > 0.0)) throw ArgumentError("zone conductances must be positive");
  }
  for (std::size_t a = 0; a < edges.size(); ++a) {
    for (std::size_t b = a + 1; b < edges.size(); ++b) {
      const bool same = (edges[a].i == edges[b].i && edges[a].j == edges[b].j) ||
                        (edges[a].i == edges[b].j && edges[a].j == edges[b].i);
      if (same) throw ArgumentError("zone edge listed twice");
    }
  }
}

HvacMatrices build_hvac(const ZoneParams& params) {
  params.validate();
  const auto n = static_cast<Index>(params.N);
  Matrix cond = Matrix::Zero(n, n);
  for (const auto& e : params.edges) {
    cond(static_cast<Index>(e.i), static_cast<Index>(e.j)) = e.r;
    cond(static_cast<Index>(e.j), static_cast<Index>(e.i)) = e.r;
  }
  HvacMatrices m{Matrix::Zero(n, n), Matrix::Zero(n, n), Matrix::Zero(n, n)};
  const double cap = params.L / params.dt;
  const double flow = params.m_s * params.c_p;
  for (Index i = 0; i < n; ++i) {
    const double r_sum = cond.row(i).sum();
    const double d = cap + flow / 2.0 + r_sum / 2.0;
    m.a(i, i) = (cap - flow / 2.0 - r_sum / 2.0) / d;
    for (Index j = 0; j < n; ++j) {
      if (j != i && cond(i, j) != 0.0) m.a(i, j) = cond(i, j) / d;
    }
    m.b_e(i, i) = params.c_o / d;
    m.b_c(i, i) = flow / d;
  }
  return m;
}

HvacSetup make_hvac_system(const ZoneParams& params, std::size_t q, std::uint64_t seed, bool require_full_row_rank) {
  if (q < 1) throw ArgumentError("output count q must be at least 1");
  const HvacMatrices m = build_hvac(params);
  const auto n = static_cast<Index>(params.N);
  Matrix b(n, 2 * n);
  b << m.b_e, m.b_c;
  InputPartition part;
  for (Index i = 0; i < n; ++i) {
    part.exogenous.push_back(i);
    part.control.push_back(n + i);
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  constexpr std::size_t kMaxAttempts = 20;
  for (std::size_t attempt = 1; attempt <= kMaxAttempts; ++attempt) {
    Matrix g(static_cast<Index>(q), n);
    Matrix h(static_cast<Index>(q), 2 * n);
    for (Index i = 0; i < g.size(); ++i) g.data()[i] = unif(rng);
    for (Index i = 0; i < h.size(); ++i) h.data()[i] = unif(rng);
    LinearSystem sys(m.a, b, g, h, part);
    ReleaseMap rel = ReleaseMap::identity(sys);
    if (!require_full_row_rank) return {std::move(sys), std::move(rel), attempt};
    const DesignView view = exogenous_view(sys, rel);
    if (view.system.q() > view.system.p()) {
      throw AssumptionError("full-row-rank assumption structurally violated: q = " + std::to_string(q) +
                            " exceeds the number of exogenous inputs " + std::to_string(params.N));
    }
    if (check_full_row_rank_everywhere(view.system, {}, seed + attempt).holds) {
      return {std::move(sys), std::move(rel), attempt};
    }
  }
  throw AssumptionError("no random (G, H) satisfying the full-row-rank assumption after 20 attempts");
}

Matrix lqr_gain(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r) {
  Matrix p = q;
  Matrix gain;
  for (int iter = 0; iter < 100000; ++iter) {
    const Matrix bt_p = b.transpose() * p;
    const Matrix s = r + bt_p * b;
    gain = -s.ldlt().solve(bt_p * a);
    Matrix next = q + a.transpose() * p * (a + b * gain);
    next = 0.5 * (next + next.transpose()).eval();
    const double change = (next - p).norm();
    p = std::move(next);
    if (!p.allFinite()) throw NumericalError("Riccati iteration diverged");
    if (change <= 1e-12 * (1.0 + p.norm())) return gain;
  }
  throw NumericalError("Riccati iteration did not converge in 100000 steps");
}

namespace {

struct LoopData {
  LinearSystem plant;
  Matrix gain;
  Vector x_ref, u_ref;
  std::vector<Index> exo, ctrl;
};

LoopData prepare_loop(const LinearSystem& sys, const ReleaseMap& rel, const Perturbation& k,
                      const ClosedLoopOptions& opts) {
  if (!sys.partition()) throw ArgumentError("closed-loop simulation needs an exogenous/control input partition");
  LinearSystem plant = apply_perturbation(sys, rel, k);
  const auto& part = *plant.partition();
  const Matrix b_c = plant.control_input_matrix();
  const Index n = plant.n();
  if (!is_controllable(plant.A(), b_c).controllable) {
    throw AssumptionError("perturbed pair (A_hat, B_hat^c) is not controllable");
  }
  Matrix b_e(n, static_cast<Index>(part.exogenous.size()));
  for (std::size_t i = 0; i < part.exogenous.size(); ++i) b_e.col(static_cast<Index>(i)) = plant.B().col(part.exogenous[i]);

  const Vector x_ref = Vector::Constant(n, opts.setpoint);
  const Vector u_e_mean = Vector::Constant(b_e.cols(), 0.5 * static_cast<double>(opts.occupancy_max));
  const Vector rhs = (Matrix::Identity(n, n) - plant.A()) * x_ref - b_e * u_e_mean;
  const auto rank = numerical_rank(b_c);
  if (rank < static_cast<std::size_t>(n)) {
    throw AssumptionError("steady-state equations are singular: B_hat^c has rank " + std::to_string(rank) +
                          " < n = " + std::to_string(n) + " (rank defect " + std::to_string(n - static_cast<Index>(rank)) + ")");
  }
  const Vector u_ref = b_c.completeOrthogonalDecomposition().solve(rhs);
  const Matrix gain = lqr_gain(plant.A(), b_c, opts.q_weight * Matrix::Identity(n, n),
                               opts.r_weight * Matrix::Identity(b_c.cols(), b_c.cols()));
  std::vector<Index> exo = part.exogenous;
  std::vector<Index> ctrl = part.control;
  return {std::move(plant), gain, x_ref, u_ref, std::move(exo), std::move(ctrl)};
}

// Runs the loop; `release` maps (x, u, k) to the released output.
template <class Release>
SimReport run_loop(const LinearSystem& sys, const LoopData& loop, const ClosedLoopOptions& opts, Release release) {
  SimReport rep;
  rep.seed = opts.seed;
  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<std::size_t> occupancy(0, opts.occupancy_max);
  const LinearSystem& plant = loop.plant;
  Vector x = Vector::Constant(plant.n(), opts.initial_temperature);
  for (std::size_t step = 0; step <= opts.horizon; ++step) {
    Vector u(plant.p());
    for (Index i : loop.exo) u(i) = static_cast<double>(occupancy(rng));
    const Vector u_c = loop.gain * (x - loop.x_ref) + loop.u_ref;
    for (std::size_t i = 0; i < loop.ctrl.size(); ++i) u(loop.ctrl[i]) = u_c(static_cast<Index>(i));
    rep.states.push_back(x);
    rep.inputs.push_back(u);
    rep.y_true.push_back(sys.G() * x + sys.H() * u);
    rep.y_released.push_back(release(x, u));
    x = plant.A() * x + plant.B() * u;
  }
  std::tie(rep.disutility, rep.relative) = disutility(rep.y_released, rep.y_true);
  return rep;
}

}  // namespace

SimReport closed_loop_sim(const LinearSystem& sys, const ReleaseMap& rel, const Perturbation& k,
                          const ClosedLoopOptions& opts) {
  const LoopData loop = prepare_loop(sys, rel, k, opts);
  const LinearSystem& plant = loop.plant;
  SimReport rep = run_loop(sys, loop, opts, [&](const Vector& x, const Vector& u) {
    return Vector(plant.G() * x + plant.H() * u);
  });
  for (std::size_t s = 0; s < rep.states.size(); ++s) {
    const Vector mu_u = k.k_ss * rep.states[s] + k.k_si * rep.inputs[s];
    const Vector mu_y = k.k_os * rep.states[s] + k.k_oi * rep.inputs[s];
    rep.perturbation_norm.push_back(mu_u.norm() + mu_y.norm());
  }
  return rep;
}

double gaussian_mechanism_sigma(double eps, double delta, double sensitivity) {
  if (!(eps > 0.0)) throw ArgumentError("privacy budget eps must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw ArgumentError("delta must lie in (0, 1)");
  if (!(sensitivity > 0.0)) throw ArgumentError("sensitivity must be positive");
  return sensitivity * std::sqrt(2.0 * std::log(1.25 / delta)) / eps;
}

SimReport dp_baseline(const LinearSystem& sys, const ReleaseMap& rel, double eps, double delta, double sensitivity,
                      const ClosedLoopOptions& opts) {
  const double sigma = gaussian_mechanism_sigma(eps, delta, sensitivity);
  const LoopData loop = prepare_loop(sys, rel, Perturbation::zeros(sys.n(), sys.p(), rel.l()), opts);
  // Separate stream so the occupancy realization matches closed_loop_sim.
  std::mt19937_64 noise_rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> noise(0.0, sigma);
  SimReport rep = run_loop(sys, loop, opts, [&](const Vector& x, const Vector& u) {
    Vector y = sys.G() * x + sys.H() * u;
    for (Index i = 0; i < y.size(); ++i) y(i) += noise(noise_rng);
    return y;
  });
  rep.perturbation_norm.assign(rep.states.size(), 0.0);
  return rep;
}

std::pair<std::vector<double>, std::vector<double>> disutility(const std::vector<Vector>& y_pert,
                                                               const std::vector<Vector>& y_true, double zero_tol) {
  if (y_pert.size() != y_true.size()) throw ArgumentError("disutility: trajectories differ in length");
  std::vector<double> series, relative;
  for (std::size_t k = 0; k < y_true.size(); ++k) {
    if (y_pert[k].size() != y_true[k].size()) throw ArgumentError("disutility: output dimensions differ");
    const double d = (y_pert[k] - y_true[k]).norm();
    const double base = y_true[k].norm();
    series.push_back(d);
    relative.push_back(base < zero_tol ? std::numeric_limits<double>::infinity() : d / base);
  }
  return {series, relative};
}

std::string sim_report_csv(const SimReport& report) {
  std::ostringstream os;
  os.precision(12);
  const std::size_t zones = report.states.empty() ? 0 : static_cast<std::size_t>(report.states.front().size());
  os << "k,disutility,relative,y_true_norm,y_pert_norm";
  for (std::size_t i = 1; i <= zones; ++i) os << ",T" << i;
  os << '\n';
  for (std::size_t k = 0; k < report.states.size(); ++k) {
    os << k << ',' << report.disutility[k] << ',';
    if (std::isinf(report.relative[k])) {
      os << "inf";
    } else {
      os << report.relative[k];
    }
    os << ',' << report.y_true[k].norm() << ',' << report.y_released[k].norm();
    for (Index i = 0; i < report.states[k].size(); ++i) os << ',' << report.states[k](i);
    os << '\n';
  }
  return os.str();
}

}  // namespace privperturb
