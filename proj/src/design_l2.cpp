#include "privperturb/design_l2.hpp"

#include "pencil_sdp.hpp"
#include "privperturb/errors.hpp"

#include <chrono>
#include <sstream>
#include <string>

namespace privperturb {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Matrix h_pi(const LinearSystem& sys, const ReleaseMap& rel) {
  Matrix out(sys.q(), sys.p() + rel.l());
  out << sys.H(), rel.pi;
  return out;
}

void require_assumption(const LinearSystem& sys, const Tolerance& tol, std::uint64_t seed) {
  const auto check = check_full_row_rank_everywhere(sys, tol, seed);
  if (check.holds) return;
  std::ostringstream msg;
  msg << "the pencil does not have full row rank for every z";
  if (check.probe_rank < static_cast<std::size_t>(sys.n() + sys.q())) {
    msg << " (generic rank " << check.probe_rank << " < " << sys.n() + sys.q() << ")";
  } else {
    msg << "; invariant zeros:";
    for (const auto& z : check.invariant_zeros) msg << " " << z.real() << (z.imag() >= 0 ? "+" : "") << z.imag() << "i";
  }
  throw AssumptionError(msg.str());
}

}  // namespace

double optimal_z(const Matrix& a) {
  if (a.rows() < 1 || a.rows() != a.cols()) throw ArgumentError("A must be square and non-empty");
  return a.trace() / static_cast<double>(a.rows());
}

std::size_t rho_feasibility_floor(const LinearSystem& sys, const ReleaseMap& rel, const Tolerance& tol) {
  const auto rows = static_cast<std::size_t>(sys.n() + sys.q());
  return rows - numerical_rank(f_matrix(sys, rel), tol) + 1;
}

Perturbation construct_rank_reducing_perturbation(const LinearSystem& sys, const ReleaseMap& rel, double z,
                                                  std::size_t rho, const Tolerance& tol) {
  if (rho < 1) throw ArgumentError("rank target rho must be at least 1");
  const Index n = sys.n();
  const auto rows = static_cast<std::size_t>(n + sys.q());
  if (rho > rows) return Perturbation::zeros(n, sys.p(), rel.l());

  const std::size_t floor = rho_feasibility_floor(sys, rel, tol);
  if (rho < floor) {
    throw InfeasibleError("rank target rho = " + std::to_string(rho) +
                          " is infeasible: the rank target is feasible if and only if rho >= n + q - rank(F) + 1 = " +
                          std::to_string(floor));
  }
  const Matrix d = pencil(sys, z);
  if (numerical_rank(d, tol) < rows) {
    throw AssumptionError("pencil at z = " + std::to_string(z) + " does not have full row rank");
  }
  const SvdResult f = svd(pinv(d, tol) * f_matrix(sys, rel));
  const std::size_t strip = rows - rho + 1;
  Matrix k = Matrix::Zero(sys.p() + rel.l(), n + sys.p());
  for (std::size_t i = 0; i < strip; ++i) {
    const auto li = static_cast<Index>(i);
    k.noalias() -= (1.0 / f.singular_values(li)) * f.V.col(li) * f.U.col(li).transpose();
  }
  return Perturbation::from_assembled(k, n, sys.p());
}

double disutility_upper_bound(const LinearSystem& sys, const ReleaseMap& rel, double z, const Tolerance& tol) {
  const Vector sigma = svd(pinv(pencil(sys, z), tol) * f_matrix(sys, rel)).singular_values;
  double sum = 0.0;
  if (sigma.size() > 0 && sigma(0) > 0.0) {
    for (Index i = 0; i < sigma.size(); ++i) {
      if (sigma(i) > tol.rank_tol * sigma(0)) sum += 1.0 / sigma(i);
    }
  }
  return spectral_norm(h_pi(sys, rel)) * sum;
}

DesignResult analytic_l2_design(const LinearSystem& sys, const ReleaseMap& rel, const TargetSpec& targets,
                                std::size_t rho, const L2DesignOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const DesignView view = exogenous_view(sys, rel);
  if (opts.check_assumption) require_assumption(view.system, opts.tol, opts.seed);
  const double z = optimal_z(view.system.A());
  const Perturbation k = construct_rank_reducing_perturbation(view.system, view.release, z, rho, opts.tol);
  DesignResult r = evaluate_design(sys, rel, &view, k, z, targets, opts.tol, opts.seed);
  r.rho = rho;
  r.upper_bound = disutility_upper_bound(view.system, view.release, z, opts.tol);
  r.seconds = seconds_since(t0);
  return r;
}

const char* to_string(RhoStop stop) {
  switch (stop) {
    case RhoStop::all_protected: return "all_protected";
    case RhoStop::feasibility_floor: return "feasibility_floor";
    case RhoStop::rho_one: return "rho_one";
  }
  return "unknown";
}

RhoTuning tune_rho(const LinearSystem& sys, const ReleaseMap& rel, const TargetSpec& targets,
                   const L2DesignOptions& opts) {
  const DesignView view = exogenous_view(sys, rel);
  if (opts.check_assumption) require_assumption(view.system, opts.tol, opts.seed);
  const std::size_t top = static_cast<std::size_t>(view.system.n() + view.system.q());
  const std::size_t floor = std::max<std::size_t>(1, rho_feasibility_floor(view.system, view.release, opts.tol));
  L2DesignOptions step_opts = opts;
  step_opts.check_assumption = false;

  RhoTuning out;
  bool have_best = false;
  for (std::size_t rho = top;; --rho) {
    DesignResult r = analytic_l2_design(sys, rel, targets, rho, step_opts);
    out.steps.push_back({rho, r.pencil_rank, r.objective.l2_value, r.upper_bound, r.protection.all_protected,
                         r.protection.certified_count(), r.seconds});
    const bool better = !have_best || r.protection.certified_count() > out.result.protection.certified_count();
    const bool done = r.protection.all_protected;
    if (better || done) {
      out.result = std::move(r);
      out.rho_final = rho;
      have_best = true;
    }
    if (done) {
      out.achieved = true;
      out.stop = RhoStop::all_protected;
      break;
    }
    if (rho <= floor) {
      out.stop = rho == 1 ? RhoStop::rho_one : RhoStop::feasibility_floor;
      break;
    }
  }
  return out;
}

std::string rho_table_csv(const RhoTuning& tuning) {
  std::ostringstream os;
  os.precision(12);
  os << "rho,pencil_rank,l2_objective,upper_bound,all_protected,seconds\n";
  for (const auto& s : tuning.steps) {
    os << s.rho << ',' << s.pencil_rank << ',' << s.l2_objective << ',' << s.upper_bound << ','
       << (s.all_protected ? "true" : "false") << ',' << s.seconds << '\n';
  }
  return os.str();
}

PencilSdp build_sdp_l2(const LinearSystem& sys, const ReleaseMap& rel, const L2SdpConfig& cfg) {
  PencilSdp out = detail::pencil_sdp_core(sys, rel, cfg.c, cfg.eps);
  auto& prob = out.problem;
  auto& lay = out.layout;
  const Index q = sys.q();
  const Index cols = sys.n() + sys.p();
  const Matrix hp = h_pi(sys, rel);

  const Index t = prob.add_variable("t", 1.0);
  lay.t.push_back(t);
  const Index blk = prob.add_block(q + cols);
  lay.norm_block = blk;
  for (Index i = 0; i < q + cols; ++i) prob.add_coefficient(blk, t, i, i, 1.0);
  for (Index s = 0; s < hp.cols(); ++s) {
    for (Index j = 0; j < cols; ++j) {
      const Index var = lay.k[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)];
      for (Index i = 0; i < q; ++i) {
        if (hp(i, s) != 0.0) prob.add_coefficient(blk, var, i, q + j, hp(i, s));
      }
    }
  }
  return out;
}

DesignResult sdp_l2_design(const LinearSystem& sys, const ReleaseMap& rel, const TargetSpec& targets,
                           const L2SdpConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const DesignView view = exogenous_view(sys, rel);
  const PencilSdp sdp = build_sdp_l2(view.system, view.release, cfg);
  const SdpSolution sol = solve(sdp.problem, cfg.sdp);
  if (sol.status != SdpStatus::optimal && sol.status != SdpStatus::max_iters) {
    throw NumericalError(std::string("l2 SDP solve failed: ") + to_string(sol.status) + " (" + sol.message + ")");
  }
  const Perturbation k = perturbation_from_solution(sdp.layout, sol.y, view.system.n(), view.system.p());
  DesignResult r = evaluate_design(sys, rel, &view, k, sol.y(sdp.layout.z), targets, cfg.tol, cfg.seed);
  r.certificate = shifted_psd_certificate(k.k_si, cfg.eps, 1e-6);
  r.sdp_status = sol.status;
  r.sdp_kkt = sol.kkt;
  r.seconds = seconds_since(t0);
  return r;
}

}  // namespace privperturb
