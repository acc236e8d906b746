#include "privperturb/privacy.hpp"

#include "privperturb/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace privperturb {

TargetSpec TargetSpec::all(Index n, Index p) {
  TargetSpec t;
  for (Index i = 0; i < n; ++i) t.state_targets.push_back(i);
  for (Index j = 0; j < p; ++j) t.input_targets.push_back(j);
  return t;
}

void TargetSpec::validate(Index n, Index p) const {
  for (Index i : state_targets) {
    if (i < 0 || i >= n) throw ArgumentError("state target index " + std::to_string(i) + " out of range");
  }
  for (Index j : input_targets) {
    if (j < 0 || j >= p) throw ArgumentError("input target index " + std::to_string(j) + " out of range");
  }
}

std::size_t ProtectionReport::certified_count() const {
  auto count = [](const std::vector<EntryFlag>& flags) {
    return static_cast<std::size_t>(std::count_if(flags.begin(), flags.end(), [](const EntryFlag& f) { return f.certified; }));
  };
  return count(state_flags) + count(input_flags);
}

std::size_t pencil_rank_complex(const LinearSystem& sys, std::complex<double> z, const Tolerance& tol) {
  const Index n = sys.n();
  Matrix im = Matrix::Zero(n + sys.q(), n + sys.p());
  im.topLeftCorner(n, n).diagonal().setConstant(z.imag());
  return complex_rank(pencil(sys, z.real()), im, tol);
}

FullRowRankCheck check_full_row_rank_everywhere(const LinearSystem& sys, const Tolerance& tol, std::uint64_t seed) {
  const Index n = sys.n();
  const Index rows = n + sys.q();
  const Index cols = n + sys.p();
  if (sys.q() > sys.p()) {
    throw AssumptionError("full-row-rank assumption structurally violated: q = " + std::to_string(sys.q()) +
                          " exceeds p = " + std::to_string(sys.p()) + ", so the pencil has more rows than columns");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  FullRowRankCheck out;
  out.probe_z = gauss(rng);
  out.probe_rank = numerical_rank(pencil(sys, out.probe_z), tol);
  if (out.probe_rank < static_cast<std::size_t>(rows)) {
    out.holds = false;
    return out;
  }

  const Matrix d0 = pencil(sys, 0.0);
  Matrix e0 = Matrix::Zero(rows, cols);
  e0.topLeftCorner(n, n).setIdentity();

  // A zero of D(z) is an eigenvalue of every compression D(z) W. Perturbed
  // infinite eigenvalues and compression artefacts vary with W, so only
  // candidates shared by all compressions and confirmed by a rank test count.
  constexpr int kCompressions = 3;
  std::vector<std::vector<std::complex<double>>> spectra;
  for (int draw = 0; draw < kCompressions; ++draw) {
    Matrix w(cols, rows);
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = gauss(rng);
    spectra.push_back(finite_generalized_eigenvalues(d0 * w, e0 * w));
  }
  const auto close = [](std::complex<double> a, std::complex<double> b) {
    return std::abs(a - b) <= 1e-4 * (1.0 + std::abs(a));
  };
  for (const auto& lambda : spectra.front()) {
    const bool shared = std::all_of(spectra.begin() + 1, spectra.end(), [&](const auto& other) {
      return std::any_of(other.begin(), other.end(), [&](auto mu) { return close(lambda, mu); });
    });
    const bool seen = std::any_of(out.invariant_zeros.begin(), out.invariant_zeros.end(),
                                  [&](auto z) { return close(z, lambda); });
    if (!shared || seen) continue;
    if (pencil_rank_complex(sys, lambda, tol) < static_cast<std::size_t>(rows)) {
      out.invariant_zeros.push_back(lambda);
    }
  }
  out.holds = out.invariant_zeros.empty();
  return out;
}

namespace {

bool nonzero_entry(const Vector& v, Index i, double zero_tol) {
  return std::abs(v(i)) > zero_tol * v.norm();
}

bool covers_targets(const Vector& v, const TargetSpec& targets, Index n, double zero_tol) {
  for (Index i : targets.state_targets) {
    if (!nonzero_entry(v, i, zero_tol)) return false;
  }
  for (Index j : targets.input_targets) {
    if (!nonzero_entry(v, n + j, zero_tol)) return false;
  }
  return true;
}

}  // namespace

ProtectionReport protected_entries(const LinearSystem& perturbed, const TargetSpec& targets, double z,
                                   const Tolerance& tol, std::size_t trials, std::uint64_t seed, double rank_scale) {
  if (!std::isfinite(z)) throw ArgumentError("protected_entries: z must be finite");
  if (trials < 1) throw ArgumentError("protected_entries: trials must be at least 1");
  if (targets.empty()) throw ArgumentError("protected_entries: no target entries given");
  const Index n = perturbed.n();
  targets.validate(n, perturbed.p());

  ProtectionReport report;
  report.witness_z = z;
  const Matrix kernel = null_space(pencil(perturbed, z), tol, rank_scale);
  report.kernel_dim = static_cast<std::size_t>(kernel.cols());
  const bool z_nonzero = std::abs(z) > tol.zero_tol;

  auto row_supported = [&](Index row) {
    for (Index c = 0; c < kernel.cols(); ++c) {
      if (nonzero_entry(kernel.col(c), row, tol.zero_tol)) return true;
    }
    return false;
  };
  for (Index i : targets.state_targets) report.state_flags.push_back({i, row_supported(i)});
  for (Index j : targets.input_targets) report.input_flags.push_back({j, z_nonzero && row_supported(n + j)});

  const auto all_flags = [&] {
    auto ok = [](const EntryFlag& f) { return f.certified; };
    return std::all_of(report.state_flags.begin(), report.state_flags.end(), ok) &&
           std::all_of(report.input_flags.begin(), report.input_flags.end(), ok);
  }();
  if (kernel.cols() == 0 || !all_flags) return report;

  for (Index c = 0; c < kernel.cols(); ++c) {
    if (covers_targets(kernel.col(c), targets, n, tol.zero_tol)) {
      report.witness_vector = kernel.col(c);
      report.all_protected = true;
      report.trials_used = 1;
      return report;
    }
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t t = 0; t < trials; ++t) {
    Vector coeff(kernel.cols());
    for (Index i = 0; i < coeff.size(); ++i) coeff(i) = gauss(rng);
    const Vector v = kernel * coeff;
    if (covers_targets(v, targets, n, tol.zero_tol)) {
      report.witness_vector = v / v.norm();
      report.all_protected = true;
      report.trials_used = t + 1;
      return report;
    }
  }
  report.trials_used = trials;
  return report;
}

std::size_t min_protected_count(const LinearSystem& perturbed, double z, const Tolerance& tol) {
  if (!(std::abs(z) > tol.zero_tol)) throw ArgumentError("min_protected_count: z must be nonzero");
  const auto cols = static_cast<std::size_t>(perturbed.n() + perturbed.p());
  return cols - numerical_rank(pencil(perturbed, z), tol);
}

WitnessDeviation output_invariance_witness_test(const LinearSystem& perturbed, double z, const Vector& v,
                                                double m, std::size_t horizon, const Vector& x0,
                                                std::span<const Vector> inputs) {
  const Index n = perturbed.n();
  const Index p = perturbed.p();
  if (v.size() != n + p) throw ArgumentError("witness vector must have n+p entries");
  if (inputs.size() != horizon + 1) throw ArgumentError("witness test: expected horizon+1 input samples");

  WitnessDeviation out;
  out.horizon_used = horizon;
  constexpr double kMagnitudeCap = 1e150;
  const double base = std::abs(m) * v.norm();
  if (std::abs(z) > 1.0 && base > 0.0) {
    const double k_max = std::floor((std::log(kMagnitudeCap) - std::log(base)) / std::log(std::abs(z)));
    if (k_max < static_cast<double>(horizon)) {
      out.horizon_used = k_max < 0.0 ? 0 : static_cast<std::size_t>(k_max);
      out.horizon_capped = true;
    }
  }
  const std::size_t h = out.horizon_used;
  const auto nominal_inputs = inputs.first(h + 1);
  const Trajectory nominal = simulate(perturbed, x0, nominal_inputs, h);

  std::vector<Vector> shadow_inputs(nominal_inputs.begin(), nominal_inputs.end());
  double zk = 1.0;
  for (std::size_t k = 0; k <= h; ++k) {
    shadow_inputs[k] += m * zk * v.tail(p);
    zk *= z;
  }
  const Trajectory shadow = simulate(perturbed, x0 + m * v.head(n), shadow_inputs, h);
  for (std::size_t k = 0; k <= h; ++k) {
    out.max_deviation = std::max(out.max_deviation, (shadow.outputs[k] - nominal.outputs[k]).norm());
    out.max_output_norm = std::max(out.max_output_norm, nominal.outputs[k].norm());
  }
  return out;
}

}  // namespace privperturb
