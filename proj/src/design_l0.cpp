#include "privperturb/design_l0.hpp"

#include "pencil_sdp.hpp"
#include "privperturb/errors.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>
#include <thread>

namespace privperturb {

PencilSdp build_sdp_l0(const LinearSystem& sys, const ReleaseMap& rel, const L0DesignConfig& cfg) {
  if (!is_controllable(sys.A(), sys.control_input_matrix()).controllable) {
    throw AssumptionError("the original pair (A, B_control) is not controllable; refusing to design");
  }
  PencilSdp out = detail::pencil_sdp_core(sys, rel, cfg.c, cfg.eps);
  auto& prob = out.problem;
  auto& lay = out.layout;
  for (std::size_t s = 0; s < lay.k.size(); ++s) {
    for (std::size_t j = 0; j < lay.k[s].size(); ++j) {
      const Index kv = lay.k[s][j];
      const Index t = prob.add_variable("t[" + std::to_string(s) + "," + std::to_string(j) + "]", 1.0);
      lay.t.push_back(t);
      const Index upper = prob.add_block(1);
      prob.add_coefficient(upper, t, 0, 0, 1.0);
      prob.add_coefficient(upper, kv, 0, 0, -1.0);
      const Index lower = prob.add_block(1);
      prob.add_coefficient(lower, t, 0, 0, 1.0);
      prob.add_coefficient(lower, kv, 0, 0, 1.0);
    }
  }
  return out;
}

Perturbation threshold_perturbation(const Perturbation& k, double threshold, double scale) {
  Matrix kk = k.assembled();
  const double cut = threshold * std::max(kk.norm(), scale);
  kk = (kk.array().abs() <= cut).select(0.0, kk);
  return Perturbation::from_assembled(kk, k.n(), k.p());
}

DesignResult sparse_design(const LinearSystem& sys, const ReleaseMap& rel, const TargetSpec& targets,
                           const L0DesignConfig& cfg, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  const PencilSdp sdp = build_sdp_l0(sys, rel, cfg);
  const SdpSolution sol = solve(sdp.problem, cfg.sdp);
  if (sol.status != SdpStatus::optimal && sol.status != SdpStatus::max_iters) {
    throw NumericalError(std::string("sparse-design SDP solve failed: ") + to_string(sol.status) + " (" +
                         sol.message + ")");
  }
  const double z = sol.y(sdp.layout.z);
  const Perturbation raw = perturbation_from_solution(sdp.layout, sol.y, sys.n(), sys.p());
  const Perturbation k = threshold_perturbation(raw, cfg.tol.zero_tol, pencil(sys, z).norm());

  DesignResult r = evaluate_design(sys, rel, nullptr, k, z, targets, cfg.tol, seed);
  r.rho = cfg.rho.value_or(0);
  r.certificate = shifted_psd_certificate(k.k_si, cfg.eps, 1e-6);
  r.sdp_status = sol.status;
  r.sdp_kkt = sol.kkt;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::vector<SweepRow> sweep_c(const LinearSystem& sys, const ReleaseMap& rel, const TargetSpec& targets,
                              const std::vector<double>& c_grid, const L0DesignConfig& base, std::uint64_t seed,
                              std::size_t jobs) {
  if (c_grid.empty()) throw ArgumentError("c grid must not be empty");
  if (!std::is_sorted(c_grid.begin(), c_grid.end())) throw ArgumentError("c grid must be ascending");
  std::vector<SweepRow> rows(c_grid.size());
  auto run = [&](std::size_t i) {
    SweepRow& row = rows[i];
    row.c = c_grid[i];
    L0DesignConfig cfg = base;
    cfg.c = c_grid[i];
    const auto t0 = std::chrono::steady_clock::now();
    try {
      DesignResult r = sparse_design(sys, rel, targets, cfg, seed + i);
      row.pencil_rank = r.pencil_rank;
      row.l0_count = r.objective.l0_count;
      row.l1_value = r.objective.l1_value;
      row.nuclear_value = r.objective.nuclear_value;
      row.controllable = r.controllability.controllable;
      row.all_protected = r.protection.all_protected;
      row.design = std::move(r);
    } catch (const Error& e) {
      row.error = e.what();
    }
    row.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, c_grid.size()));
  if (jobs == 1) {
    for (std::size_t i = 0; i < c_grid.size(); ++i) run(i);
    return rows;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < jobs; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < c_grid.size(); i += jobs) run(i);
    });
  }
  for (auto& t : pool) t.join();
  return rows;
}

std::string sweep_table_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os.precision(12);
  os << "c,pencil_rank,l0_count,l1_value,nuclear_value,controllable,all_protected,solve_seconds\n";
  for (const auto& r : rows) {
    os << r.c << ',' << r.pencil_rank << ',' << r.l0_count << ',' << r.l1_value << ',' << r.nuclear_value << ','
       << (r.controllable ? "true" : "false") << ',' << (r.all_protected ? "true" : "false") << ',' << r.solve_seconds
       << '\n';
  }
  return os.str();
}

}  // namespace privperturb
