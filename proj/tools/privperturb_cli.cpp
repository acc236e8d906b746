// privperturb: check, design, simulate and oracle subcommands.
//
// Exit codes: 0 success, 2 malformed input, 3 solver failure,
// 4 protection not achievable or infeasible rank target.

#include "privperturb/design_l0.hpp"
#include "privperturb/design_l2.hpp"
#include "privperturb/errors.hpp"
#include "privperturb/hvac.hpp"
#include "privperturb/oracles.hpp"
#include "privperturb/serialization.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace privperturb;

namespace {

constexpr int kOk = 0;
constexpr int kBadInput = 2;
constexpr int kSolverFailure = 3;
constexpr int kNotAchievable = 4;

struct ExitWith {
  int code;
  std::string message;
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("privperturb");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("PRIVPERTURB_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void emit(const Json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << dump(j);
  } else {
    write_file_atomic(out_path, dump(j));
  }
}

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

SystemFile load_system(const std::string& path) {
  try {
    return system_from_json(Json::parse(read_text_file(path)));
  } catch (const Json::exception& e) {
    throw ArgumentError("malformed system file '" + path + "': " + e.what());
  }
}

/// Every state plus the inputs a design may perturb.
TargetSpec default_targets(const LinearSystem& sys) {
  TargetSpec t;
  for (Index i = 0; i < sys.n(); ++i) t.state_targets.push_back(i);
  if (sys.partition()) {
    t.input_targets = sys.partition()->exogenous;
  } else {
    for (Index j = 0; j < sys.p(); ++j) t.input_targets.push_back(j);
  }
  return t;
}

TargetSpec resolve_targets(const std::string& text, const LinearSystem& sys) {
  return text.empty() ? default_targets(sys) : parse_targets(text, sys.n(), sys.p());
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || *end != '\0') throw ArgumentError("c grid entry '" + item + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw ArgumentError("c grid is empty");
  return out;
}

Json rank_check_json(const LinearSystem& sys, std::uint64_t seed) {
  try {
    return full_row_rank_to_json(check_full_row_rank_everywhere(sys, {}, seed));
  } catch (const AssumptionError& e) {
    return Json{{"holds", false}, {"error", e.what()}};
  }
}

// ---------------------------------------------------------------- check

struct CheckArgs {
  std::string system, targets, out;
  std::optional<double> z;
  std::uint64_t seed = 0;
};

int run_check(const CheckArgs& a) {
  const SystemFile f = load_system(a.system);
  const TargetSpec targets = resolve_targets(a.targets, f.sys);
  const double z = a.z.value_or(optimal_z(f.sys.A()));

  Json j;
  j["dimensions"] = {{"n", f.sys.n()}, {"p", f.sys.p()}, {"q", f.sys.q()}, {"l", f.rel.l()}};
  j["full_row_rank"] = rank_check_json(f.sys, a.seed);
  if (f.sys.partition()) j["design_view_full_row_rank"] = rank_check_json(exogenous_view(f.sys, f.rel).system, a.seed);
  j["baseline_protection"] = protection_to_json(protected_entries(f.sys, targets, z, {}, 8, a.seed));
  if (std::abs(z) > Tolerance{}.zero_tol) j["min_protected_count"] = min_protected_count(f.sys, z);
  j["controllable"] = is_controllable(f.sys.A(), f.sys.control_input_matrix()).controllable;
  emit(j, a.out);
  return kOk;
}

// ---------------------------------------------------------------- design

struct DesignArgs {
  std::string system, targets, mode = "l2", rho = "auto", c_grid = "0.5,0.8,1.0,2.0,3.0", out_dir = ".";
  double c = 1.0;
  double eps = 0.1;
  double sdp_tol = 1e-7;
  std::size_t max_iters = 100;
  std::size_t jobs = 1;
  std::uint64_t seed = 0;
};

void write_design(const DesignArgs& a, const DesignResult& r, Json extra) {
  Json j = design_to_json(r);
  for (auto& [key, value] : extra.items()) j[key] = value;
  write_file_atomic(join(a.out_dir, "design.json"), dump(j));
  write_file_atomic(join(a.out_dir, "K.json"), dump(perturbation_to_json(r.k)));
}

int finish_design(const DesignResult& r) {
  if (r.protection.all_protected) return kOk;
  spdlog::warn("requested protection not achieved: {} target entries certified", r.protection.certified_count());
  return kNotAchievable;
}

int run_design_l2(const DesignArgs& a, const SystemFile& f, const TargetSpec& targets) {
  L2DesignOptions opts;
  opts.seed = a.seed;
  if (a.rho == "auto") {
    const RhoTuning t = tune_rho(f.sys, f.rel, targets, opts);
    write_file_atomic(join(a.out_dir, "rho_table.csv"), rho_table_csv(t));
    write_design(a, t.result, {{"mode", "l2"}, {"rho_final", t.rho_final}, {"stop", to_string(t.stop)}, {"achieved", t.achieved}});
    spdlog::info("rho tuning stopped at rho = {} ({})", t.rho_final, to_string(t.stop));
    return finish_design(t.result);
  }
  char* end = nullptr;
  const long rho = std::strtol(a.rho.c_str(), &end, 10);
  if (a.rho.empty() || *end != '\0' || rho < 1) throw ArgumentError("--rho must be 'auto' or a positive integer");
  const DesignResult r = analytic_l2_design(f.sys, f.rel, targets, static_cast<std::size_t>(rho), opts);
  write_design(a, r, {{"mode", "l2"}});
  return finish_design(r);
}

int run_design_l2_sdp(const DesignArgs& a, const SystemFile& f, const TargetSpec& targets) {
  L2SdpConfig cfg;
  cfg.c = a.c;
  cfg.eps = a.eps;
  cfg.seed = a.seed;
  cfg.sdp.tol = a.sdp_tol;
  cfg.sdp.max_iters = a.max_iters;
  const DesignResult r = sdp_l2_design(f.sys, f.rel, targets, cfg);
  write_design(a, r, {{"mode", "l2-sdp"}, {"c", a.c}, {"eps", a.eps}});
  return finish_design(r);
}

int run_design_l0(const DesignArgs& a, const SystemFile& f, const TargetSpec& targets) {
  L0DesignConfig cfg;
  cfg.eps = a.eps;
  cfg.sdp.tol = a.sdp_tol;
  cfg.sdp.max_iters = a.max_iters;
  const auto rows = sweep_c(f.sys, f.rel, targets, parse_grid(a.c_grid), cfg, a.seed, a.jobs);
  write_file_atomic(join(a.out_dir, "sweep.csv"), sweep_table_csv(rows));

  const SweepRow* chosen = nullptr;
  for (const auto& row : rows) {
    if (!row.error.empty()) {
      spdlog::warn("c = {}: {}", row.c, row.error);
      continue;
    }
    if (row.all_protected) {
      chosen = &row;
      break;
    }
    if (!chosen || row.design->protection.certified_count() > chosen->design->protection.certified_count()) {
      chosen = &row;
    }
  }
  if (!chosen) throw NumericalError("every grid point of the sweep failed");
  write_design(a, *chosen->design, {{"mode", "l0"}, {"c", chosen->c}, {"eps", a.eps}});
  spdlog::info("selected c = {}", chosen->c);
  return finish_design(*chosen->design);
}

int run_design(const DesignArgs& a) {
  const SystemFile f = load_system(a.system);
  const TargetSpec targets = resolve_targets(a.targets, f.sys);
  std::filesystem::create_directories(a.out_dir);
  if (a.mode == "l2") return run_design_l2(a, f, targets);
  if (a.mode == "l2-sdp") return run_design_l2_sdp(a, f, targets);
  return run_design_l0(a, f, targets);
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string system, k_file, scenario, out_dir = ".";
  std::size_t horizon = 200;
  std::uint64_t seed = 0;
  std::optional<double> dp_eps;
  double dp_delta = 1e-4;
  double sensitivity = 1.0;
};

Json series_summary(const SimReport& r) {
  double max_rel_after_10 = 0.0;
  double tail_mean = 0.0;
  std::size_t tail = 0;
  for (std::size_t k = 0; k < r.relative.size(); ++k) {
    if (k >= 10) max_rel_after_10 = std::max(max_rel_after_10, r.relative[k]);
    if (2 * k >= r.disutility.size()) {
      tail_mean += r.disutility[k];
      ++tail;
    }
  }
  return {{"max_relative_after_10", round12(max_rel_after_10)},
          {"steady_state_mean_disutility", round12(tail ? tail_mean / static_cast<double>(tail) : 0.0)}};
}

int run_simulate(const SimulateArgs& a, const CLI::App& cmd) {
  const SystemFile f = load_system(a.system);
  Perturbation k = Perturbation::zeros(f.sys.n(), f.sys.p(), f.rel.l());
  if (!a.k_file.empty()) {
    try {
      k = perturbation_from_json(Json::parse(read_text_file(a.k_file)));
    } catch (const Json::exception& e) {
      throw ArgumentError("malformed perturbation file '" + a.k_file + "': " + e.what());
    }
    k.validate(f.sys.n(), f.sys.p(), f.rel.l());
  }
  ClosedLoopOptions opts;
  if (!a.scenario.empty()) {
    try {
      opts = closed_loop_from_json(Json::parse(read_text_file(a.scenario)));
    } catch (const Json::exception& e) {
      throw ArgumentError("malformed scenario file '" + a.scenario + "': " + e.what());
    }
  }
  if (cmd.count("--horizon") || a.scenario.empty()) opts.horizon = a.horizon;
  if (cmd.count("--seed") || a.scenario.empty()) opts.seed = a.seed;

  std::filesystem::create_directories(a.out_dir);
  const SimReport iop = closed_loop_sim(f.sys, f.rel, k, opts);
  write_file_atomic(join(a.out_dir, "iop.csv"), sim_report_csv(iop));
  Json summary{{"horizon", opts.horizon}, {"seed", opts.seed}, {"iop", series_summary(iop)}};
  if (a.dp_eps) {
    const SimReport dp = dp_baseline(f.sys, f.rel, *a.dp_eps, a.dp_delta, a.sensitivity, opts);
    write_file_atomic(join(a.out_dir, "dp.csv"), sim_report_csv(dp));
    summary["dp"] = series_summary(dp);
    summary["dp"]["sigma"] = round12(gaussian_mechanism_sigma(*a.dp_eps, a.dp_delta, a.sensitivity));
  }
  write_file_atomic(join(a.out_dir, "summary.json"), dump(summary));
  return kOk;
}

// ---------------------------------------------------------------- oracle

struct OracleArgs {
  std::string kind = "nvp", matrix, system, out;
  double lo = -5.0, hi = 5.0, step = 1e-3;
};

int run_oracle(const OracleArgs& a) {
  Json j;
  if (a.kind == "nvp") {
    if (a.matrix.empty()) throw ArgumentError("oracle nvp needs --matrix");
    Matrix m;
    try {
      const Json doc = Json::parse(read_text_file(a.matrix));
      m = matrix_from_json(doc.contains("M") ? doc.at("M") : doc, "M");
    } catch (const Json::exception& e) {
      throw ArgumentError(std::string("malformed matrix file: ") + e.what());
    }
    const NvpResult nvp = sparsest_null_vector(m);
    const SparseRankDropCheck check = sparse_rank_drop_check(m);
    Json v = Json::array();
    for (Index i = 0; i < nvp.v_star.size(); ++i) v.push_back(round12(nvp.v_star(i)));
    j = {{"sparsity", nvp.sparsity},
         {"subsets_examined", nvp.subsets_examined},
         {"v_star", v},
         {"rank_drop_holds", check.holds},
         {"perturbation_l0", check.perturbation_l0},
         {"stacked_rank", check.stacked_rank}};
  } else {
    if (a.system.empty()) throw ArgumentError("oracle zgrid needs --system");
    const SystemFile f = load_system(a.system);
    j = {{"grid_minimizer", round12(grid_min_frobenius(f.sys, a.lo, a.hi, a.step))},
         {"optimal_z", round12(optimal_z(f.sys.A()))},
         {"step", a.step}};
  }
  emit(j, a.out);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Design, verify and simulate privacy-preserving input/output perturbations"};
  app.set_config("--config", "", "TOML or INI file with option values (command-line flags take precedence)");
  app.require_subcommand(1);

  CheckArgs check_args;
  auto* check = app.add_subcommand("check", "Full-row-rank verdict, invariant zeros and baseline protection");
  check->add_option("--system", check_args.system, "System JSON")->required()->check(CLI::ExistingFile);
  check->add_option("--targets", check_args.targets, "Targets such as \"x0:1,7;u:6\" (1-based) or \"all\"");
  check->add_option("--z", check_args.z, "Evaluation point (default Tr(A)/n)");
  check->add_option("--seed", check_args.seed, "Seed for randomized checks");
  check->add_option("--out", check_args.out, "Write the report here instead of stdout");

  DesignArgs design_args;
  auto* design = app.add_subcommand("design", "Compute a perturbation and write K.json and design.json");
  design->add_option("--system", design_args.system, "System JSON")->required()->check(CLI::ExistingFile);
  design->add_option("--mode", design_args.mode, "l0, l2 or l2-sdp")->check(CLI::IsMember({"l0", "l2", "l2-sdp"}));
  design->add_option("--targets", design_args.targets, "Targets such as \"x0:1,7;u:6\" (1-based) or \"all\"");
  design->add_option("--rho", design_args.rho, "Rank target for l2, or 'auto'");
  design->add_option("--c", design_args.c, "Nuclear-norm weight for l2-sdp")->check(CLI::PositiveNumber);
  design->add_option("--c-grid", design_args.c_grid, "Comma-separated ascending weights for l0");
  design->add_option("--eps", design_args.eps, "Margin of the controllability surrogate")->check(CLI::PositiveNumber);
  design->add_option("--sdp-tol", design_args.sdp_tol, "Interior-point tolerance")->check(CLI::PositiveNumber);
  design->add_option("--max-iters", design_args.max_iters, "Interior-point iteration limit");
  design->add_option("--jobs", design_args.jobs, "Parallel grid points for l0")->check(CLI::PositiveNumber);
  design->add_option("--seed", design_args.seed, "Seed for randomized checks");
  design->add_option("--out-dir", design_args.out_dir, "Output directory");

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Closed-loop HVAC simulation with released outputs");
  simulate->add_option("--system", sim_args.system, "System JSON with an input partition")->required()->check(CLI::ExistingFile);
  simulate->add_option("--k-file", sim_args.k_file, "Perturbation JSON (default K = 0)")->check(CLI::ExistingFile);
  simulate->add_option("--scenario", sim_args.scenario, "Scenario JSON")->check(CLI::ExistingFile);
  simulate->add_option("--horizon", sim_args.horizon, "Number of steps");
  simulate->add_option("--seed", sim_args.seed, "Occupancy and noise seed");
  simulate->add_option("--dp-eps", sim_args.dp_eps, "Also run the Gaussian-mechanism baseline at this budget")->check(CLI::PositiveNumber);
  simulate->add_option("--dp-delta", sim_args.dp_delta, "delta of the Gaussian mechanism")->check(CLI::Range(1e-300, 1.0));
  simulate->add_option("--sensitivity", sim_args.sensitivity, "Sensitivity bound of the released outputs")->check(CLI::PositiveNumber);
  simulate->add_option("--out-dir", sim_args.out_dir, "Output directory");

  OracleArgs oracle_args;
  auto* oracle = app.add_subcommand("oracle", "Brute-force reference computations");
  oracle->add_option("--kind", oracle_args.kind, "nvp or zgrid")->check(CLI::IsMember({"nvp", "zgrid"}));
  oracle->add_option("--matrix", oracle_args.matrix, "Matrix JSON for nvp")->check(CLI::ExistingFile);
  oracle->add_option("--system", oracle_args.system, "System JSON for zgrid")->check(CLI::ExistingFile);
  oracle->add_option("--lo", oracle_args.lo, "Grid start");
  oracle->add_option("--hi", oracle_args.hi, "Grid end");
  oracle->add_option("--step", oracle_args.step, "Grid step")->check(CLI::PositiveNumber);
  oracle->add_option("--out", oracle_args.out, "Write the report here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kBadInput;
  }
  setup_logging();

  try {
    if (*check) return run_check(check_args);
    if (*design) return run_design(design_args);
    if (*simulate) return run_simulate(sim_args, *simulate);
    return run_oracle(oracle_args);
  } catch (const ArgumentError& e) {
    spdlog::error("{}", e.what());
    return kBadInput;
  } catch (const InfeasibleError& e) {
    spdlog::error("{}", e.what());
    return kNotAchievable;
  } catch (const AssumptionError& e) {
    spdlog::error("{}", e.what());
    return kNotAchievable;
  } catch (const NumericalError& e) {
    spdlog::error("{}", e.what());
    return kSolverFailure;
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return kBadInput;
  }
}
