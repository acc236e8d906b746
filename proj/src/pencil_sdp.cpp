#include "pencil_sdp.hpp"

#include "privperturb/errors.hpp"

#include <string>

namespace privperturb {

namespace detail {

PencilSdp pencil_sdp_core(const LinearSystem& sys, const ReleaseMap& rel, double c, double eps) {
  if (!(c > 0.0)) throw ArgumentError("nuclear-norm weight c must be positive");
  if (!(eps > 0.0)) throw ArgumentError("eps must be positive");
  const Index n = sys.n();
  const Index p = sys.p();
  const Index q = sys.q();
  const Index l = rel.l();
  const Matrix d0 = pencil(sys, 0.0);
  const Matrix f = f_matrix(sys, rel);

  PencilSdp out;
  auto& prob = out.problem;
  auto& lay = out.layout;
  const Index rows = n + q;
  const Index cols = n + p;

  lay.z = prob.add_variable("z");
  lay.k.assign(static_cast<std::size_t>(p + l), std::vector<Index>(static_cast<std::size_t>(cols)));
  for (Index s = 0; s < p + l; ++s) {
    for (Index j = 0; j < cols; ++j) {
      lay.k[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)] =
          prob.add_variable("K[" + std::to_string(s) + "," + std::to_string(j) + "]");
    }
  }
  for (Index i = 0; i < rows; ++i) {
    for (Index j = i; j < rows; ++j) lay.w1.push_back(prob.add_variable("W1[" + std::to_string(i) + "," + std::to_string(j) + "]", i == j ? c : 0.0));
  }
  for (Index i = 0; i < cols; ++i) {
    for (Index j = i; j < cols; ++j) lay.w2.push_back(prob.add_variable("W2[" + std::to_string(i) + "," + std::to_string(j) + "]", i == j ? c : 0.0));
  }

  const Index nb = prob.add_block(rows + cols);
  lay.nuclear_block = nb;
  std::size_t w = 0;
  for (Index i = 0; i < rows; ++i) {
    for (Index j = i; j < rows; ++j) prob.add_coefficient(nb, lay.w1[w++], i, j, 1.0);
  }
  w = 0;
  for (Index i = 0; i < cols; ++i) {
    for (Index j = i; j < cols; ++j) prob.add_coefficient(nb, lay.w2[w++], rows + i, rows + j, 1.0);
  }
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      if (d0(i, j) != 0.0) prob.add_constant(nb, i, rows + j, d0(i, j));
    }
  }
  for (Index i = 0; i < n; ++i) prob.add_coefficient(nb, lay.z, i, rows + i, 1.0);
  for (Index s = 0; s < p + l; ++s) {
    for (Index j = 0; j < cols; ++j) {
      const Index var = lay.k[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)];
      for (Index r = 0; r < rows; ++r) {
        if (f(r, s) != 0.0) prob.add_coefficient(nb, var, r, rows + j, f(r, s));
      }
    }
  }

  // K_SI occupies rows 0..p-1 and columns n..n+p-1 of K.
  const Index eb = prob.add_block(p);
  lay.eps_block = eb;
  for (Index i = 0; i < p; ++i) prob.add_constant(eb, i, i, 1.0 - eps);
  auto k_si = [&](Index i, Index j) { return lay.k[static_cast<std::size_t>(i)][static_cast<std::size_t>(n + j)]; };
  for (Index i = 0; i < p; ++i) {
    prob.add_coefficient(eb, k_si(i, i), i, i, 1.0);
    for (Index j = i + 1; j < p; ++j) {
      prob.add_coefficient(eb, k_si(i, j), i, j, 0.5);
      prob.add_coefficient(eb, k_si(j, i), i, j, 0.5);
      prob.add_equality({{k_si(i, j), 1.0}, {k_si(j, i), -1.0}}, 0.0);
    }
  }
  return out;
}

}  // namespace detail

Perturbation perturbation_from_solution(const PencilSdpLayout& layout, const Vector& y, Index n, Index p) {
  const auto rows = static_cast<Index>(layout.k.size());
  if (rows <= p) throw ArgumentError("layout does not match the system dimensions");
  Matrix k(rows, n + p);
  for (Index s = 0; s < rows; ++s) {
    for (Index j = 0; j < n + p; ++j) k(s, j) = y(layout.k[static_cast<std::size_t>(s)][static_cast<std::size_t>(j)]);
  }
  Perturbation out = Perturbation::from_assembled(k, n, p);
  out.k_si = 0.5 * (out.k_si + out.k_si.transpose()).eval();
  return out;
}

}  // namespace privperturb
