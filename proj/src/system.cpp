#include "privperturb/system.hpp"

#include "privperturb/errors.hpp"

#include <algorithm>
#include <string>

namespace privperturb {

namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_shape(const Matrix& m, Index rows, Index cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ArgumentError(std::string(name) + " has shape " + shape(m) + ", expected " +
                        std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix select_columns(const Matrix& m, const std::vector<Index>& cols) {
  Matrix out(m.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Index>(j)) = m.col(cols[j]);
  return out;
}

}  // namespace

LinearSystem::LinearSystem(Matrix a, Matrix b, Matrix g, Matrix h, std::optional<InputPartition> partition)
    : a_(std::move(a)), b_(std::move(b)), g_(std::move(g)), h_(std::move(h)), partition_(std::move(partition)) {
  const Index n = a_.rows();
  if (n < 1 || a_.cols() != n) throw ArgumentError("A must be square and non-empty, got " + shape(a_));
  if (b_.rows() != n || b_.cols() < 1) throw ArgumentError("B must have n rows, got " + shape(b_));
  if (g_.cols() != n || g_.rows() < 1) throw ArgumentError("G must have n columns, got " + shape(g_));
  require_shape(h_, g_.rows(), b_.cols(), "H");
  require_finite(a_, "A");
  require_finite(b_, "B");
  require_finite(g_, "G");
  require_finite(h_, "H");
  if (partition_) {
    std::vector<int> seen(static_cast<std::size_t>(b_.cols()), 0);
    auto mark = [&](const std::vector<Index>& idx) {
      for (Index i : idx) {
        if (i < 0 || i >= b_.cols()) throw ArgumentError("input partition index out of range");
        ++seen[static_cast<std::size_t>(i)];
      }
    };
    mark(partition_->exogenous);
    mark(partition_->control);
    if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; })) {
      throw ArgumentError("input partition must cover every input exactly once");
    }
  }
}

Matrix LinearSystem::control_input_matrix() const {
  if (!partition_) return b_;
  return select_columns(b_, partition_->control);
}

ReleaseMap ReleaseMap::identity(const LinearSystem& sys) {
  return {Matrix::Identity(sys.q(), sys.q()), sys.G(), sys.H()};
}

void ReleaseMap::validate(const LinearSystem& sys) const {
  require_shape(pi, sys.q(), pi.cols(), "Pi");
  if (pi.cols() < 1) throw ArgumentError("Pi must have at least one column");
  require_shape(g_raw, pi.cols(), sys.n(), "G_raw");
  require_shape(h_raw, pi.cols(), sys.p(), "H_raw");
  const double g_err = (pi * g_raw - sys.G()).cwiseAbs().maxCoeff();
  const double h_err = (pi * h_raw - sys.H()).cwiseAbs().maxCoeff();
  const double scale = 1.0 + std::max(sys.G().cwiseAbs().maxCoeff(), sys.H().cwiseAbs().maxCoeff());
  if (g_err > 1e-12 * scale || h_err > 1e-12 * scale) {
    throw ArgumentError("release map does not reproduce G = Pi G_raw and H = Pi H_raw");
  }
}

Perturbation Perturbation::zeros(Index n, Index p, Index l) {
  return {Matrix::Zero(p, n), Matrix::Zero(p, p), Matrix::Zero(l, n), Matrix::Zero(l, p)};
}

Perturbation Perturbation::from_assembled(const Matrix& k, Index n, Index p) {
  if (k.cols() != n + p || k.rows() <= p) {
    throw ArgumentError("assembled perturbation has shape " + shape(k) + ", expected (p+l)x(n+p)");
  }
  const Index l = k.rows() - p;
  return {k.topLeftCorner(p, n), k.topRightCorner(p, p), k.bottomLeftCorner(l, n), k.bottomRightCorner(l, p)};
}

Matrix Perturbation::assembled() const {
  Matrix k(p() + l(), n() + p());
  k << k_ss, k_si, k_os, k_oi;
  return k;
}

void Perturbation::validate(Index n, Index p, Index l) const {
  require_shape(k_ss, p, n, "K_SS");
  require_shape(k_si, p, p, "K_SI");
  require_shape(k_os, l, n, "K_OS");
  require_shape(k_oi, l, p, "K_OI");
}

Matrix pencil(const LinearSystem& sys, double z) {
  const Index n = sys.n();
  Matrix d(n + sys.q(), n + sys.p());
  d << z * Matrix::Identity(n, n) - sys.A(), -sys.B(), sys.G(), sys.H();
  return d;
}

Matrix f_matrix(const LinearSystem& sys, const ReleaseMap& rel) {
  rel.validate(sys);
  const Index n = sys.n();
  const Index l = rel.l();
  Matrix f(n + sys.q(), sys.p() + l);
  f << -sys.B(), Matrix::Zero(n, l), sys.H(), rel.pi;
  return f;
}

LinearSystem apply_perturbation(const LinearSystem& sys, const ReleaseMap& rel, const Perturbation& k) {
  rel.validate(sys);
  k.validate(sys.n(), sys.p(), rel.l());
  const Matrix& b = sys.B();
  const Matrix& h = sys.H();
  const Matrix eye = Matrix::Identity(sys.p(), sys.p());
  return LinearSystem(sys.A() + b * k.k_ss, b * (eye + k.k_si), sys.G() + h * k.k_ss + rel.pi * k.k_os,
                      h + h * k.k_si + rel.pi * k.k_oi, sys.partition());
}

Trajectory simulate(const LinearSystem& sys, const Vector& x0, std::span<const Vector> inputs,
                    std::size_t horizon) {
  if (inputs.size() != horizon + 1) {
    throw ArgumentError("simulate: expected " + std::to_string(horizon + 1) + " input samples, got " +
                        std::to_string(inputs.size()));
  }
  if (x0.size() != sys.n()) throw ArgumentError("simulate: initial state has wrong dimension");
  Trajectory t;
  t.states.reserve(horizon + 1);
  t.inputs.assign(inputs.begin(), inputs.end());
  t.outputs.reserve(horizon + 1);
  Vector x = x0;
  for (std::size_t k = 0; k <= horizon; ++k) {
    const Vector& u = inputs[k];
    if (u.size() != sys.p()) throw ArgumentError("simulate: input sample has wrong dimension");
    t.states.push_back(x);
    t.outputs.push_back(sys.G() * x + sys.H() * u);
    x = sys.A() * x + sys.B() * u;
  }
  return t;
}

DesignView exogenous_view(const LinearSystem& sys, const ReleaseMap& rel) {
  rel.validate(sys);
  if (!sys.partition()) {
    std::vector<Index> identity(static_cast<std::size_t>(sys.p()));
    for (Index i = 0; i < sys.p(); ++i) identity[static_cast<std::size_t>(i)] = i;
    return {sys, rel, identity};
  }
  const auto& exo = sys.partition()->exogenous;
  if (exo.empty()) throw ArgumentError("input partition has no exogenous inputs to perturb");
  LinearSystem sub(sys.A(), select_columns(sys.B(), exo), sys.G(), select_columns(sys.H(), exo));
  ReleaseMap sub_rel{rel.pi, rel.g_raw, select_columns(rel.h_raw, exo)};
  return {std::move(sub), std::move(sub_rel), exo};
}

Perturbation embed_perturbation(const Perturbation& design_k, const DesignView& view, Index full_p) {
  const Index n = design_k.n();
  const Index l = design_k.l();
  Perturbation full = Perturbation::zeros(n, full_p, l);
  const auto& map = view.input_map;
  const auto pe = static_cast<Index>(map.size());
  if (design_k.p() != pe) throw ArgumentError("embed_perturbation: design perturbation width mismatch");
  for (Index i = 0; i < pe; ++i) {
    full.k_ss.row(map[static_cast<std::size_t>(i)]) = design_k.k_ss.row(i);
    full.k_oi.col(map[static_cast<std::size_t>(i)]) = design_k.k_oi.col(i);
    for (Index j = 0; j < pe; ++j) {
      full.k_si(map[static_cast<std::size_t>(i)], map[static_cast<std::size_t>(j)]) = design_k.k_si(i, j);
    }
  }
  full.k_os = design_k.k_os;
  return full;
}

}  // namespace privperturb
