#include "privperturb/design.hpp"

#include "privperturb/errors.hpp"

#include <algorithm>
#include <string>

namespace privperturb {

TargetSpec targets_in_view(const TargetSpec& targets, const DesignView& view) {
  TargetSpec out;
  out.state_targets = targets.state_targets;
  for (Index j : targets.input_targets) {
    const auto it = std::find(view.input_map.begin(), view.input_map.end(), j);
    if (it == view.input_map.end()) {
      throw ArgumentError("input target u[" + std::to_string(j + 1) + "] is a control input; only exogenous inputs can be protected");
    }
    out.input_targets.push_back(static_cast<Index>(it - view.input_map.begin()));
  }
  return out;
}

DesignResult evaluate_design(const LinearSystem& sys, const ReleaseMap& rel, const DesignView* view,
                             const Perturbation& k, double z, const TargetSpec& targets, const Tolerance& tol,
                             std::uint64_t seed) {
  targets.validate(sys.n(), sys.p());
  DesignResult r;
  r.z = z;
  const LinearSystem perturbed_design =
      view ? apply_perturbation(view->system, view->release, k) : apply_perturbation(sys, rel, k);
  r.k = view ? embed_perturbation(k, *view, sys.p()) : k;
  const LinearSystem perturbed = apply_perturbation(sys, rel, r.k);

  const Matrix d_hat = pencil(perturbed_design, z);
  const double scale = spectral_norm(pencil(view ? view->system : sys, z));
  r.pencil_rank = numerical_rank(d_hat, tol, scale);

  const TargetSpec design_targets = view ? targets_in_view(targets, *view) : targets;
  ProtectionReport report = protected_entries(perturbed_design, design_targets, z, tol, 8, seed, scale);
  if (view) {
    for (auto& f : report.input_flags) f.index = view->input_map[static_cast<std::size_t>(f.index)];
    if (report.witness_vector) {
      const Vector& v = *report.witness_vector;
      Vector lifted = Vector::Zero(sys.n() + sys.p());
      lifted.head(sys.n()) = v.head(sys.n());
      for (std::size_t i = 0; i < view->input_map.size(); ++i) {
        lifted(sys.n() + view->input_map[i]) = v(sys.n() + static_cast<Index>(i));
      }
      report.witness_vector = lifted;
    }
  }
  r.protection = std::move(report);
  r.controllability = is_controllable(perturbed.A(), perturbed.control_input_matrix(), tol);

  const Matrix kk = r.k.assembled();
  const double k_norm = kk.norm();
  r.objective.l1_value = kk.cwiseAbs().sum();
  r.objective.l0_count = k_norm > 0.0 ? static_cast<std::size_t>((kk.array().abs() > tol.zero_tol * k_norm).count()) : 0;
  r.objective.nuclear_value = nuclear_norm(d_hat);
  Matrix h_pi(sys.q(), sys.p() + rel.l());
  h_pi << sys.H(), rel.pi;
  r.objective.l2_value = spectral_norm(h_pi * kk);
  return r;
}

}  // namespace privperturb
