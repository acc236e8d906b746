#include "privperturb/sdp.hpp"

#include "privperturb/errors.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace privperturb {

// ---------------------------------------------------------------- problem

Index SdpProblem::add_variable(std::string name, double cost) {
  names_.push_back(std::move(name));
  cost_.conservativeResize(static_cast<Index>(names_.size()));
  cost_(cost_.size() - 1) = cost;
  return static_cast<Index>(names_.size()) - 1;
}

Index SdpProblem::add_block(Index size) {
  if (size < 1) throw ArgumentError("PSD block size must be at least 1");
  blocks_.push_back({size, Matrix::Zero(size, size), {}});
  term_index_.emplace_back();
  return static_cast<Index>(blocks_.size()) - 1;
}

void SdpProblem::add_coefficient(Index block, Index var, Index row, Index col, double value) {
  if (block < 0 || block >= static_cast<Index>(blocks_.size())) throw ArgumentError("block index out of range");
  if (var < 0 || var >= num_vars()) throw ArgumentError("variable index out of range");
  auto& b = blocks_[static_cast<std::size_t>(block)];
  if (row < 0 || col < 0 || row >= b.size || col >= b.size) throw ArgumentError("block entry out of range");
  if (value == 0.0) return;
  auto& slots = term_index_[static_cast<std::size_t>(block)];
  auto [it, inserted] = slots.try_emplace(var, static_cast<Index>(b.terms.size()));
  if (inserted) b.terms.push_back({var, {}});
  b.terms[static_cast<std::size_t>(it->second)].entries.push_back({std::min(row, col), std::max(row, col), value});
}

void SdpProblem::add_constant(Index block, Index row, Index col, double value) {
  if (block < 0 || block >= static_cast<Index>(blocks_.size())) throw ArgumentError("block index out of range");
  auto& c = blocks_[static_cast<std::size_t>(block)].constant;
  if (row < 0 || col < 0 || row >= c.rows() || col >= c.cols()) throw ArgumentError("block entry out of range");
  c(row, col) += value;
  if (row != col) c(col, row) += value;
}

void SdpProblem::add_equality(std::vector<std::pair<Index, double>> coeffs, double rhs) {
  equalities_.push_back({std::move(coeffs), rhs});
}

void SdpProblem::set_cost(Index var, double cost) {
  if (var < 0 || var >= num_vars()) throw ArgumentError("variable index out of range");
  cost_(var) = cost;
}

namespace {

double inner(const std::vector<SymEntry>& entries, const Matrix& z) {
  double s = 0.0;
  for (const auto& e : entries) {
    s += e.row == e.col ? e.value * z(e.row, e.row) : e.value * (z(e.row, e.col) + z(e.col, e.row));
  }
  return s;
}

void accumulate(const std::vector<SymEntry>& entries, double scale, Matrix& z) {
  for (const auto& e : entries) {
    z(e.row, e.col) += scale * e.value;
    if (e.row != e.col) z(e.col, e.row) += scale * e.value;
  }
}

double scalar_coefficient(const std::vector<SymEntry>& entries) {
  double s = 0.0;
  for (const auto& e : entries) s += e.value;
  return s;
}

}  // namespace

Matrix SdpProblem::evaluate_block(Index block, const Vector& y) const {
  const auto& b = blocks_.at(static_cast<std::size_t>(block));
  Matrix s = b.constant;
  for (const auto& t : b.terms) accumulate(t.entries, y(t.var), s);
  return s;
}

void SdpProblem::adjoint_add(Index block, const Matrix& z, Vector& out) const {
  const auto& b = blocks_.at(static_cast<std::size_t>(block));
  for (const auto& t : b.terms) out(t.var) += inner(t.entries, z);
}

void SdpProblem::validate() const {
  if (!cost_.allFinite()) throw ArgumentError("SDP objective has non-finite coefficients");
  for (const auto& b : blocks_) {
    if (b.size < 1) throw ArgumentError("PSD block size must be at least 1");
    if (!b.constant.allFinite()) throw ArgumentError("SDP block constant has non-finite entries");
    if ((b.constant - b.constant.transpose()).cwiseAbs().maxCoeff() > 0.0) {
      throw ArgumentError("SDP block constant is not symmetric");
    }
    for (const auto& t : b.terms) {
      if (t.var < 0 || t.var >= num_vars()) throw ArgumentError("SDP term refers to an unknown variable");
      for (const auto& e : t.entries) {
        if (e.row < 0 || e.col >= b.size || e.row > e.col || !std::isfinite(e.value)) {
          throw ArgumentError("SDP coefficient entry is malformed");
        }
      }
    }
  }
  for (const auto& eq : equalities_) {
    if (eq.coeffs.empty()) throw ArgumentError("SDP equality touches no variable");
    if (!std::isfinite(eq.rhs)) throw ArgumentError("SDP equality has a non-finite right-hand side");
    for (const auto& [var, v] : eq.coeffs) {
      if (var < 0 || var >= num_vars() || !std::isfinite(v)) throw ArgumentError("SDP equality is malformed");
    }
  }
}

const char* to_string(SdpStatus status) {
  switch (status) {
    case SdpStatus::optimal: return "optimal";
    case SdpStatus::infeasible: return "infeasible";
    case SdpStatus::max_iters: return "max_iters";
    case SdpStatus::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

// ---------------------------------------------------------------- residuals

namespace {

bool positive_definite(const Matrix& m) {
  if (m.rows() == 1) return m(0, 0) > 0.0;
  Eigen::LLT<Matrix> f(m);
  return f.info() == Eigen::Success;
}

double min_eigenvalue(const Matrix& m) {
  if (m.rows() == 1) return m(0, 0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double constant_norm(const SdpProblem& prob) {
  double s = 0.0;
  for (const auto& b : prob.blocks()) s += b.constant.squaredNorm();
  return std::sqrt(s);
}

Vector equality_values(const SdpProblem& prob, const Vector& y) {
  Vector out(static_cast<Index>(prob.equalities().size()));
  for (std::size_t k = 0; k < prob.equalities().size(); ++k) {
    double s = 0.0;
    for (const auto& [var, v] : prob.equalities()[k].coeffs) s += v * y(var);
    out(static_cast<Index>(k)) = s;
  }
  return out;
}

Vector equality_rhs(const SdpProblem& prob) {
  Vector out(static_cast<Index>(prob.equalities().size()));
  for (std::size_t k = 0; k < prob.equalities().size(); ++k) out(static_cast<Index>(k)) = prob.equalities()[k].rhs;
  return out;
}

void add_equality_adjoint(const SdpProblem& prob, const Vector& lambda, Vector& out) {
  for (std::size_t k = 0; k < prob.equalities().size(); ++k) {
    for (const auto& [var, v] : prob.equalities()[k].coeffs) out(var) += v * lambda(static_cast<Index>(k));
  }
}

}  // namespace

KktReport kkt_report(const SdpProblem& prob, const SdpSolution& sol) {
  const auto nb = static_cast<Index>(prob.blocks().size());
  if (sol.y.size() != prob.num_vars() || static_cast<Index>(sol.x.size()) != nb ||
      sol.lambda.size() != static_cast<Index>(prob.equalities().size())) {
    throw ArgumentError("kkt_report: solution does not match the problem dimensions");
  }
  const double c_norm = constant_norm(prob);
  const Vector e = equality_rhs(prob);
  KktReport r;

  double psd_violation = 0.0;
  double x_violation = 0.0;
  Vector stationarity = prob.objective();
  double dual_obj = e.dot(sol.lambda);
  for (Index j = 0; j < nb; ++j) {
    const Matrix s = prob.evaluate_block(j, sol.y);
    psd_violation = std::max(psd_violation, -min_eigenvalue(s));
    x_violation = std::max(x_violation, -min_eigenvalue(sol.x[static_cast<std::size_t>(j)]));
    r.complementarity += (sol.x[static_cast<std::size_t>(j)].cwiseProduct(s)).sum();
    Vector adj = Vector::Zero(prob.num_vars());
    prob.adjoint_add(j, sol.x[static_cast<std::size_t>(j)], adj);
    stationarity -= adj;
    dual_obj -= (prob.blocks()[static_cast<std::size_t>(j)].constant.cwiseProduct(sol.x[static_cast<std::size_t>(j)])).sum();
  }
  Vector eq_adj = Vector::Zero(prob.num_vars());
  add_equality_adjoint(prob, sol.lambda, eq_adj);
  stationarity -= eq_adj;

  const double eq_res = e.size() ? (equality_values(prob, sol.y) - e).norm() / (1.0 + e.norm()) : 0.0;
  r.primal_res = std::max(eq_res, std::max(0.0, psd_violation) / (1.0 + c_norm));
  r.dual_res = std::max(stationarity.norm(), std::max(0.0, x_violation)) / (1.0 + prob.objective().norm());
  const double primal_obj = prob.objective().dot(sol.y);
  r.gap = std::abs(primal_obj - dual_obj);
  r.rel_gap = r.gap / (1.0 + std::abs(primal_obj));
  return r;
}

// ---------------------------------------------------------------- solver

namespace {

struct BlockState {
  Matrix s, x, s_inv;
  Eigen::LLT<Matrix> s_chol;
};

struct Direction {
  Vector dy, dlambda;
  std::vector<Matrix> ds, dx;
};

class InteriorPoint {
 public:
  InteriorPoint(const SdpProblem& prob, const SdpOptions& opts) : prob_(prob), opts_(opts) {
    m_ = prob.num_vars();
    neq_ = static_cast<Index>(prob.equalities().size());
    e_ = equality_rhs(prob);
    c_norm_ = constant_norm(prob);
    partition_variables();
  }

  SdpSolution run();

 private:
  void partition_variables();
  void initialize();
  void residuals();
  bool factor_newton();
  Direction direction(double sigma_mu, const std::vector<Matrix>* corr);
  double max_step(const std::vector<Matrix>& base, const std::vector<Matrix>& delta,
                  const std::vector<Eigen::LLT<Matrix>>* chol) const;
  double merit() const;
  double trial_merit(const Direction& d, double ap, double ad) const;
  bool refresh_inverses();

  const SdpProblem& prob_;
  SdpOptions opts_;
  Index m_ = 0, neq_ = 0;
  Vector e_;
  double c_norm_ = 0.0;

  // Variables living only in isolated 1x1 blocks (epigraph scalars) are
  // eliminated from the Newton system through a diagonal Schur complement.
  std::vector<bool> eliminated_;
  std::vector<Index> local_;  // var -> index within retained or eliminated set
  Index n_ret_ = 0, n_elim_ = 0;

  Vector y_, lambda_;
  std::vector<BlockState> blocks_;
  std::vector<Matrix> r_blocks_;  // C + sum y A - S
  Vector r_dual_, r_eq_;
  double comp_ = 0.0;

  Eigen::LLT<Matrix> m_chol_;
  Matrix er_;                 // equality matrix restricted to retained vars
  Matrix minv_et_;            // M~^{-1} E^T
  Eigen::LLT<Matrix> e_chol_;
  Vector d_elim_;
  std::vector<std::vector<std::pair<Index, double>>> coupling_;
};

void InteriorPoint::partition_variables() {
  eliminated_.assign(static_cast<std::size_t>(m_), false);
  std::vector<bool> candidate(static_cast<std::size_t>(m_), true);
  std::vector<bool> seen(static_cast<std::size_t>(m_), false);
  for (const auto& b : prob_.blocks()) {
    for (const auto& t : b.terms) {
      seen[static_cast<std::size_t>(t.var)] = true;
      if (b.size > 1) candidate[static_cast<std::size_t>(t.var)] = false;
    }
  }
  for (const auto& eq : prob_.equalities()) {
    for (const auto& [var, v] : eq.coeffs) candidate[static_cast<std::size_t>(var)] = false;
  }
  std::vector<bool> block_claimed(prob_.blocks().size(), false);
  std::vector<std::vector<Index>> var_blocks(static_cast<std::size_t>(m_));
  for (std::size_t j = 0; j < prob_.blocks().size(); ++j) {
    for (const auto& t : prob_.blocks()[j].terms) var_blocks[static_cast<std::size_t>(t.var)].push_back(static_cast<Index>(j));
  }
  for (Index i = 0; i < m_; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (!candidate[ui] || !seen[ui]) continue;
    const bool free = std::none_of(var_blocks[ui].begin(), var_blocks[ui].end(),
                                   [&](Index j) { return block_claimed[static_cast<std::size_t>(j)]; });
    if (!free) continue;
    eliminated_[ui] = true;
    for (Index j : var_blocks[ui]) block_claimed[static_cast<std::size_t>(j)] = true;
  }
  local_.assign(static_cast<std::size_t>(m_), 0);
  for (Index i = 0; i < m_; ++i) {
    local_[static_cast<std::size_t>(i)] = eliminated_[static_cast<std::size_t>(i)] ? n_elim_++ : n_ret_++;
  }
  er_ = Matrix::Zero(neq_, n_ret_);
  for (Index k = 0; k < neq_; ++k) {
    for (const auto& [var, v] : prob_.equalities()[static_cast<std::size_t>(k)].coeffs) {
      er_(k, local_[static_cast<std::size_t>(var)]) += v;
    }
  }
}

void InteriorPoint::initialize() {
  y_ = Vector::Zero(m_);
  lambda_ = Vector::Zero(neq_);
  blocks_.clear();
  blocks_.resize(prob_.blocks().size());
  for (std::size_t j = 0; j < prob_.blocks().size(); ++j) {
    const auto& b = prob_.blocks()[j];
    const double dim = static_cast<double>(b.size);
    double a_max = 0.0;
    double x_scale = 0.0;
    for (const auto& t : b.terms) {
      Matrix a = Matrix::Zero(b.size, b.size);
      accumulate(t.entries, 1.0, a);
      const double a_norm = a.norm();
      a_max = std::max(a_max, a_norm);
      x_scale = std::max(x_scale, (1.0 + std::abs(prob_.objective()(t.var))) / (1.0 + a_norm));
    }
    const double eta = std::max({10.0, std::sqrt(dim), a_max, b.constant.norm()});
    const double xi = std::max({10.0, std::sqrt(dim), dim * x_scale});
    blocks_[j].s = eta * Matrix::Identity(b.size, b.size);
    blocks_[j].x = xi * Matrix::Identity(b.size, b.size);
  }
}

void InteriorPoint::residuals() {
  r_blocks_.resize(blocks_.size());
  r_dual_ = prob_.objective();
  comp_ = 0.0;
  for (std::size_t j = 0; j < blocks_.size(); ++j) {
    r_blocks_[j] = prob_.evaluate_block(static_cast<Index>(j), y_) - blocks_[j].s;
    Vector adj = Vector::Zero(m_);
    prob_.adjoint_add(static_cast<Index>(j), blocks_[j].x, adj);
    r_dual_ -= adj;
    comp_ += blocks_[j].x.cwiseProduct(blocks_[j].s).sum();
  }
  Vector eq_adj = Vector::Zero(m_);
  add_equality_adjoint(prob_, lambda_, eq_adj);
  r_dual_ -= eq_adj;
  r_eq_ = neq_ ? Vector(e_ - equality_values(prob_, y_)) : Vector(0);
}

double InteriorPoint::merit() const {
  double r = 0.0;
  for (const auto& rb : r_blocks_) r += rb.squaredNorm();
  return std::sqrt(r) + r_eq_.norm() + r_dual_.norm() + comp_;
}

bool InteriorPoint::refresh_inverses() {
  for (auto& b : blocks_) {
    b.s_chol.compute(b.s);
    if (b.s_chol.info() != Eigen::Success) return false;
    b.s_inv = b.s_chol.solve(Matrix::Identity(b.s.rows(), b.s.cols()));
    b.s_inv = 0.5 * (b.s_inv + b.s_inv.transpose()).eval();
  }
  return true;
}

bool InteriorPoint::factor_newton() {
  Matrix mrr = Matrix::Zero(n_ret_, n_ret_);
  d_elim_ = Vector::Zero(n_elim_);
  coupling_.assign(static_cast<std::size_t>(n_elim_), {});

  for (std::size_t j = 0; j < blocks_.size(); ++j) {
    const auto& pb = prob_.blocks()[j];
    const auto& st = blocks_[j];
    const auto& terms = pb.terms;
    if (pb.size == 1) {
      const double w0 = st.x(0, 0) * st.s_inv(0, 0);
      for (std::size_t a = 0; a < terms.size(); ++a) {
        const double ca = scalar_coefficient(terms[a].entries);
        const auto va = static_cast<std::size_t>(terms[a].var);
        for (std::size_t b = a; b < terms.size(); ++b) {
          const double w = w0 * ca * scalar_coefficient(terms[b].entries);
          const auto vb = static_cast<std::size_t>(terms[b].var);
          if (eliminated_[va] && a == b) {
            d_elim_(local_[va]) += w;
          } else if (eliminated_[va]) {
            coupling_[static_cast<std::size_t>(local_[va])].push_back({local_[vb], w});
          } else if (eliminated_[vb]) {
            coupling_[static_cast<std::size_t>(local_[vb])].push_back({local_[va], w});
          } else {
            mrr(local_[va], local_[vb]) += w;
            if (a != b) mrr(local_[vb], local_[va]) += w;
          }
        }
      }
      continue;
    }
    Matrix g(pb.size, pb.size);
    for (std::size_t a = 0; a < terms.size(); ++a) {
      // G = S^{-1} A_a X, so that <A_b, G> = Tr(A_a X A_b S^{-1}).
      g.setZero();
      for (const auto& e : terms[a].entries) {
        g.noalias() += e.value * st.s_inv.col(e.row) * st.x.row(e.col);
        if (e.row != e.col) g.noalias() += e.value * st.s_inv.col(e.col) * st.x.row(e.row);
      }
      const Index la = local_[static_cast<std::size_t>(terms[a].var)];
      for (std::size_t b = a; b < terms.size(); ++b) {
        const double w = inner(terms[b].entries, g);
        const Index lb = local_[static_cast<std::size_t>(terms[b].var)];
        mrr(la, lb) += w;
        if (a != b) mrr(lb, la) += w;
      }
    }
  }
  for (Index t = 0; t < n_elim_; ++t) {
    if (!(d_elim_(t) > 0.0)) return false;
    const auto& cp = coupling_[static_cast<std::size_t>(t)];
    for (const auto& [i, wi] : cp) {
      for (const auto& [k, wk] : cp) mrr(i, k) -= wi * wk / d_elim_(t);
    }
  }
  mrr = 0.5 * (mrr + mrr.transpose()).eval();

  const double diag_max = n_ret_ ? mrr.diagonal().cwiseAbs().maxCoeff() : 1.0;
  double shift = 0.0;
  for (int attempt = 0; attempt < 6; ++attempt) {
    if (shift > 0.0) mrr.diagonal().array() += shift;
    m_chol_.compute(mrr);
    if (m_chol_.info() == Eigen::Success) break;
    if (shift > 0.0) mrr.diagonal().array() -= shift;
    shift = shift == 0.0 ? 1e-14 * std::max(1.0, diag_max) : shift * 100.0;
    if (attempt == 5) return false;
  }
  if (neq_ > 0) {
    minv_et_ = m_chol_.solve(er_.transpose());
    const Matrix schur = er_ * minv_et_;
    e_chol_.compute(0.5 * (schur + schur.transpose()));
    if (e_chol_.info() != Eigen::Success) return false;
  }
  return true;
}

Direction InteriorPoint::direction(double sigma_mu, const std::vector<Matrix>* corr) {
  Vector g = -r_dual_;
  std::vector<Matrix> rhs_blocks(blocks_.size());
  for (std::size_t j = 0; j < blocks_.size(); ++j) {
    const auto& st = blocks_[j];
    Matrix w = st.x * r_blocks_[j];
    if (corr) w += (*corr)[j];
    Matrix z = sigma_mu * st.s_inv - st.x - w * st.s_inv;
    prob_.adjoint_add(static_cast<Index>(j), z, g);
  }
  Vector g_ret(n_ret_), g_elim(n_elim_);
  for (Index i = 0; i < m_; ++i) {
    (eliminated_[static_cast<std::size_t>(i)] ? g_elim : g_ret)(local_[static_cast<std::size_t>(i)]) = g(i);
  }
  for (Index t = 0; t < n_elim_; ++t) {
    for (const auto& [i, w] : coupling_[static_cast<std::size_t>(t)]) g_ret(i) -= w * g_elim(t) / d_elim_(t);
  }
  Direction d;
  Vector dy_ret;
  if (neq_ > 0) {
    const Vector minv_g = m_chol_.solve(g_ret);
    d.dlambda = e_chol_.solve(r_eq_ - er_ * minv_g);
    dy_ret = minv_g + minv_et_ * d.dlambda;
  } else {
    d.dlambda = Vector(0);
    dy_ret = m_chol_.solve(g_ret);
  }
  Vector dy_elim(n_elim_);
  for (Index t = 0; t < n_elim_; ++t) {
    double s = g_elim(t);
    for (const auto& [i, w] : coupling_[static_cast<std::size_t>(t)]) s -= w * dy_ret(i);
    dy_elim(t) = s / d_elim_(t);
  }
  d.dy.resize(m_);
  for (Index i = 0; i < m_; ++i) {
    d.dy(i) = eliminated_[static_cast<std::size_t>(i)] ? dy_elim(local_[static_cast<std::size_t>(i)])
                                                        : dy_ret(local_[static_cast<std::size_t>(i)]);
  }
  d.ds.resize(blocks_.size());
  d.dx.resize(blocks_.size());
  for (std::size_t j = 0; j < blocks_.size(); ++j) {
    const auto& st = blocks_[j];
    Matrix ds = r_blocks_[j];
    for (const auto& t : prob_.blocks()[j].terms) accumulate(t.entries, d.dy(t.var), ds);
    Matrix w = st.x * ds;
    if (corr) w += (*corr)[j];
    Matrix dx = sigma_mu * st.s_inv - st.x - w * st.s_inv;
    d.dx[j] = 0.5 * (dx + dx.transpose());
    d.ds[j] = std::move(ds);
  }
  return d;
}

double InteriorPoint::max_step(const std::vector<Matrix>& base, const std::vector<Matrix>& delta,
                               const std::vector<Eigen::LLT<Matrix>>* chol) const {
  double alpha = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < base.size(); ++j) {
    double lam;
    if (base[j].rows() == 1) {
      lam = delta[j](0, 0) / base[j](0, 0);
    } else {
      Eigen::LLT<Matrix> local;
      const Eigen::LLT<Matrix>* f = chol ? &(*chol)[j] : nullptr;
      if (!f) {
        local.compute(base[j]);
        f = &local;
      }
      const Matrix l_inv_d = f->matrixL().solve(delta[j]);
      const Matrix scaled = f->matrixL().solve(l_inv_d.transpose());
      lam = min_eigenvalue(0.5 * (scaled + scaled.transpose()));
    }
    if (lam < 0.0) alpha = std::min(alpha, -1.0 / lam);
  }
  return alpha;
}

double InteriorPoint::trial_merit(const Direction& d, double ap, double ad) const {
  const Vector y = y_ + ap * d.dy;
  double r = 0.0;
  double comp = 0.0;
  Vector r_dual = prob_.objective();
  for (std::size_t j = 0; j < blocks_.size(); ++j) {
    const Matrix s = blocks_[j].s + ap * d.ds[j];
    const Matrix x = blocks_[j].x + ad * d.dx[j];
    r += (prob_.evaluate_block(static_cast<Index>(j), y) - s).squaredNorm();
    comp += x.cwiseProduct(s).sum();
    Vector adj = Vector::Zero(m_);
    prob_.adjoint_add(static_cast<Index>(j), x, adj);
    r_dual -= adj;
  }
  if (neq_ > 0) {
    Vector eq_adj = Vector::Zero(m_);
    add_equality_adjoint(prob_, Vector(lambda_ + ad * d.dlambda), eq_adj);
    r_dual -= eq_adj;
  }
  const double r_eq = neq_ ? (e_ - equality_values(prob_, y)).norm() : 0.0;
  return std::sqrt(r) + r_eq + r_dual.norm() + comp;
}

SdpSolution InteriorPoint::run() {
  SdpSolution sol;
  initialize();
  double total_dim = 0.0;
  for (const auto& b : prob_.blocks()) total_dim += static_cast<double>(b.size);
  const double cost_norm = prob_.objective().norm();
  const double tol = opts_.tol;

  auto finish = [&](SdpStatus status, std::string msg) {
    sol.status = status;
    sol.message = std::move(msg);
    sol.y = y_;
    sol.lambda = lambda_;
    sol.x.clear();
    for (const auto& b : blocks_) sol.x.push_back(b.x);
    sol.objective_value = prob_.objective().dot(y_);
    sol.kkt = kkt_report(prob_, sol);
    double dual_obj = e_.dot(lambda_);
    for (std::size_t j = 0; j < blocks_.size(); ++j) {
      dual_obj -= prob_.blocks()[j].constant.cwiseProduct(blocks_[j].x).sum();
    }
    sol.dual_objective = dual_obj;
    return sol;
  };

  for (std::size_t iter = 0;; ++iter) {
    residuals();
    sol.iterations = iter;
    sol.merit_history.push_back(merit());

    const double pobj = prob_.objective().dot(y_);
    double dobj = e_.dot(lambda_);
    double r_norm = 0.0;
    for (std::size_t j = 0; j < blocks_.size(); ++j) {
      dobj -= prob_.blocks()[j].constant.cwiseProduct(blocks_[j].x).sum();
      r_norm += r_blocks_[j].squaredNorm();
    }
    const double p_inf = std::max(std::sqrt(r_norm) / (1.0 + c_norm_), neq_ ? r_eq_.norm() / (1.0 + e_.norm()) : 0.0);
    const double d_inf = r_dual_.norm() / (1.0 + cost_norm);
    const double scale = 1.0 + std::abs(pobj);
    if (p_inf <= tol && d_inf <= tol && std::abs(pobj - dobj) <= tol * scale && comp_ <= tol * scale) {
      return finish(SdpStatus::optimal, "converged");
    }
    // Dual ray: X >= 0 with A*(X) + E^T lambda ~ 0 and positive dual value.
    const double ray_value = dobj;
    if (ray_value > 0.0 && (prob_.objective() - r_dual_).norm() <= tol * ray_value && ray_value > 1e6 * (1.0 + cost_norm)) {
      std::vector<Matrix> ray;
      for (const auto& b : blocks_) ray.push_back(b.x / ray_value);
      sol.infeasibility_ray = std::move(ray);
      return finish(SdpStatus::infeasible, "primal infeasibility certificate found");
    }
    if (iter >= opts_.max_iters) return finish(SdpStatus::max_iters, "iteration limit reached");

    if (!refresh_inverses()) return finish(SdpStatus::numerical_failure, "slack block lost positive definiteness");
    if (!factor_newton()) return finish(SdpStatus::numerical_failure, "Newton system is not positive definite");

    const double mu = comp_ / total_dim;
    std::vector<Matrix> s_list, x_list;
    std::vector<Eigen::LLT<Matrix>> s_chols;
    for (const auto& b : blocks_) {
      s_list.push_back(b.s);
      x_list.push_back(b.x);
      s_chols.push_back(b.s_chol);
    }

    const Direction pred = direction(0.0, nullptr);
    const double ap_aff = std::min(1.0, max_step(s_list, pred.ds, &s_chols));
    const double ad_aff = std::min(1.0, max_step(x_list, pred.dx, nullptr));
    double comp_aff = 0.0;
    for (std::size_t j = 0; j < blocks_.size(); ++j) {
      comp_aff += (x_list[j] + ad_aff * pred.dx[j]).cwiseProduct(s_list[j] + ap_aff * pred.ds[j]).sum();
    }
    const double sigma = std::clamp(std::pow(std::max(comp_aff, 0.0) / comp_, 3.0), 0.0, 1.0);

    std::vector<Matrix> corr(blocks_.size());
    for (std::size_t j = 0; j < blocks_.size(); ++j) corr[j] = pred.dx[j] * pred.ds[j];
    const Direction d = direction(sigma * mu, &corr);
    if (!d.dy.allFinite()) return finish(SdpStatus::numerical_failure, "search direction is not finite");

    double ap = std::min(1.0, opts_.step_fraction * max_step(s_list, d.ds, &s_chols));
    double ad = std::min(1.0, opts_.step_fraction * max_step(x_list, d.dx, nullptr));
    const double current = sol.merit_history.back();

    // Rounding can push an iterate that sits close to the boundary out of
    // the cone, so every trial is also checked by factorization.
    std::vector<Matrix> s_next(blocks_.size()), x_next(blocks_.size());
    auto stays_inside = [&](double a_p, double a_d) {
      for (std::size_t j = 0; j < blocks_.size(); ++j) {
        s_next[j] = blocks_[j].s + a_p * d.ds[j];
        x_next[j] = blocks_[j].x + a_d * d.dx[j];
        s_next[j] = 0.5 * (s_next[j] + s_next[j].transpose()).eval();
        x_next[j] = 0.5 * (x_next[j] + x_next[j].transpose()).eval();
        if (!positive_definite(s_next[j]) || !positive_definite(x_next[j])) return false;
      }
      return true;
    };
    double fallback_p = -1.0, fallback_d = -1.0;
    bool accepted = false;
    for (int k = 0; k < 40; ++k) {
      if (stays_inside(ap, ad)) {
        if (fallback_p < 0.0) {
          fallback_p = ap;
          fallback_d = ad;
        }
        if (trial_merit(d, ap, ad) <= current) {
          accepted = true;
          break;
        }
      }
      ap *= 0.5;
      ad *= 0.5;
    }
    if (!accepted) {
      if (fallback_p < 0.0) return finish(SdpStatus::numerical_failure, "no step keeps the iterates positive definite");
      // Infeasible problems cannot reduce the residual part of the merit;
      // the longest interior step lets the dual iterate grow into a certificate.
      ap = fallback_p;
      ad = fallback_d;
      stays_inside(ap, ad);
    }

    y_ += ap * d.dy;
    if (neq_) lambda_ += ad * d.dlambda;
    for (std::size_t j = 0; j < blocks_.size(); ++j) {
      blocks_[j].s = std::move(s_next[j]);
      blocks_[j].x = std::move(x_next[j]);
    }
  }
}

}  // namespace

SdpSolution solve(const SdpProblem& prob, const SdpOptions& opts) {
  prob.validate();
  if (!(opts.tol > 0.0) || !(opts.step_fraction > 0.0 && opts.step_fraction < 1.0)) {
    throw ArgumentError("SDP options out of range");
  }
  if (prob.blocks().empty()) throw ArgumentError("SDP problem has no PSD blocks");
  InteriorPoint ip(prob, opts);
  return ip.run();
}

// ---------------------------------------------------------------- dumps

namespace {

using nlohmann::json;

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from(const json& j) {
  const auto rows = static_cast<Index>(j.size());
  const auto cols = rows ? static_cast<Index>(j.at(0).size()) : 0;
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    if (static_cast<Index>(j.at(r).size()) != cols) throw ArgumentError("ragged matrix in SDP dump");
    for (Index c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
  }
  return m;
}

json vector_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vector_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

SdpStatus status_from(const std::string& s) {
  for (auto st : {SdpStatus::optimal, SdpStatus::infeasible, SdpStatus::max_iters, SdpStatus::numerical_failure}) {
    if (s == to_string(st)) return st;
  }
  throw ArgumentError("unknown SDP status '" + s + "'");
}

}  // namespace

std::string sdp_debug_dump(const SdpProblem& prob, const SdpSolution* sol) {
  json j;
  j["variables"] = prob.variable_names();
  j["objective"] = vector_json(prob.objective());
  json blocks = json::array();
  for (const auto& b : prob.blocks()) {
    json terms = json::array();
    for (const auto& t : b.terms) {
      json entries = json::array();
      for (const auto& e : t.entries) entries.push_back({e.row, e.col, e.value});
      terms.push_back({{"var", t.var}, {"entries", entries}});
    }
    blocks.push_back({{"size", b.size}, {"constant", matrix_json(b.constant)}, {"terms", terms}});
  }
  j["blocks"] = blocks;
  json eqs = json::array();
  for (const auto& eq : prob.equalities()) {
    json coeffs = json::array();
    for (const auto& [var, v] : eq.coeffs) coeffs.push_back({var, v});
    eqs.push_back({{"coeffs", coeffs}, {"rhs", eq.rhs}});
  }
  j["equalities"] = eqs;
  if (sol) {
    json s;
    s["status"] = to_string(sol->status);
    s["y"] = vector_json(sol->y);
    s["lambda"] = vector_json(sol->lambda);
    json xs = json::array();
    for (const auto& x : sol->x) xs.push_back(matrix_json(x));
    s["x"] = xs;
    s["objective_value"] = sol->objective_value;
    s["dual_objective"] = sol->dual_objective;
    s["iterations"] = sol->iterations;
    s["merit_history"] = sol->merit_history;
    s["kkt"] = {{"primal_res", sol->kkt.primal_res}, {"dual_res", sol->kkt.dual_res}, {"gap", sol->kkt.gap},
                {"rel_gap", sol->kkt.rel_gap}, {"complementarity", sol->kkt.complementarity}};
    s["message"] = sol->message;
    j["solution"] = s;
  }
  return j.dump(1);
}

SdpProblem sdp_problem_from_dump(const std::string& json_text) {
  try {
    const json j = json::parse(json_text);
    SdpProblem prob;
    const auto names = j.at("variables").get<std::vector<std::string>>();
    const Vector cost = vector_from(j.at("objective"));
    if (cost.size() != static_cast<Index>(names.size())) throw ArgumentError("objective length mismatch in SDP dump");
    for (std::size_t i = 0; i < names.size(); ++i) prob.add_variable(names[i], cost(static_cast<Index>(i)));
    for (const auto& b : j.at("blocks")) {
      const Index blk = prob.add_block(b.at("size").get<Index>());
      const Matrix c = matrix_from(b.at("constant"));
      for (Index r = 0; r < c.rows(); ++r) {
        for (Index col = r; col < c.cols(); ++col) {
          if (c(r, col) != 0.0) prob.add_constant(blk, r, col, c(r, col));
        }
      }
      for (const auto& t : b.at("terms")) {
        const auto var = t.at("var").get<Index>();
        for (const auto& e : t.at("entries")) {
          prob.add_coefficient(blk, var, e.at(0).get<Index>(), e.at(1).get<Index>(), e.at(2).get<double>());
        }
      }
    }
    for (const auto& eq : j.at("equalities")) {
      std::vector<std::pair<Index, double>> coeffs;
      for (const auto& c : eq.at("coeffs")) coeffs.emplace_back(c.at(0).get<Index>(), c.at(1).get<double>());
      prob.add_equality(std::move(coeffs), eq.at("rhs").get<double>());
    }
    prob.validate();
    return prob;
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("malformed SDP dump: ") + e.what());
  }
}

SdpSolution sdp_solution_from_dump(const std::string& json_text) {
  try {
    const json j = json::parse(json_text).at("solution");
    SdpSolution sol;
    sol.status = status_from(j.at("status").get<std::string>());
    sol.y = vector_from(j.at("y"));
    sol.lambda = vector_from(j.at("lambda"));
    for (const auto& x : j.at("x")) sol.x.push_back(matrix_from(x));
    sol.objective_value = j.at("objective_value").get<double>();
    sol.dual_objective = j.at("dual_objective").get<double>();
    sol.iterations = j.at("iterations").get<std::size_t>();
    sol.merit_history = j.at("merit_history").get<std::vector<double>>();
    const auto& k = j.at("kkt");
    sol.kkt = {k.at("primal_res").get<double>(), k.at("dual_res").get<double>(), k.at("gap").get<double>(),
               k.at("rel_gap").get<double>(), k.at("complementarity").get<double>()};
    sol.message = j.at("message").get<std::string>();
    return sol;
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("malformed SDP dump: ") + e.what());
  }
}

}  // namespace privperturb
