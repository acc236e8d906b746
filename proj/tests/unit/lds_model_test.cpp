#include "privperturb/errors.hpp"
#include "privperturb/system.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace privperturb;
using testsupport::gaussian;

namespace {

LinearSystem scalar_system() {
  return {Matrix::Zero(1, 1), Matrix::Ones(1, 1), Matrix::Ones(1, 1), Matrix::Zero(1, 1)};
}

Perturbation random_perturbation(std::mt19937_64& rng, Index n, Index p, Index l) {
  return {gaussian(rng, p, n), gaussian(rng, p, p), gaussian(rng, l, n), gaussian(rng, l, p)};
}

ReleaseMap random_release(std::mt19937_64& rng, Index q, Index l, Index n, Index p) {
  return {gaussian(rng, q, l), gaussian(rng, l, n), gaussian(rng, l, p)};
}

}  // namespace

TEST(Pencil, ScalarExample) {
  Matrix expected(2, 2);
  expected << 2.0, -1.0, 1.0, 0.0;
  EXPECT_EQ(pencil(scalar_system(), 2.0), expected);
}

TEST(Pencil, AtZeroAndAffineInZ) {
  std::mt19937_64 rng(1);
  const LinearSystem sys = testsupport::random_system(rng, 3, 2, 2);
  Matrix at_zero(5, 5);
  at_zero << -sys.A(), -sys.B(), sys.G(), sys.H();
  EXPECT_EQ(pencil(sys, 0.0), at_zero);

  Matrix shift = Matrix::Zero(5, 5);
  shift.topLeftCorner(3, 3) = 1.7 * Matrix::Identity(3, 3);
  EXPECT_LE((pencil(sys, 1.7) - pencil(sys, 0.0) - shift).cwiseAbs().maxCoeff(), 1e-15);

  for (double alpha : {0.0, 0.25, 0.5, 1.0}) {
    const double z1 = -1.3, z2 = 2.9;
    const Matrix lhs = pencil(sys, alpha * z1 + (1 - alpha) * z2);
    const Matrix rhs = alpha * pencil(sys, z1) + (1 - alpha) * pencil(sys, z2);
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(FMatrix, BlockExamples) {
  LinearSystem zero_io(Matrix::Ones(2, 2), Matrix::Zero(2, 1), Matrix::Ones(1, 2), Matrix::Zero(1, 1));
  Matrix expected = Matrix::Zero(3, 2);
  expected(2, 1) = 1.0;
  EXPECT_EQ(f_matrix(zero_io, ReleaseMap::identity(zero_io)), expected);

  const LinearSystem s = scalar_system();
  Matrix f(2, 2);
  f << -1.0, 0.0, 0.0, 1.0;
  EXPECT_EQ(f_matrix(s, ReleaseMap::identity(s)), f);
}

TEST(FMatrix, RankBoundedByShape) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const LinearSystem sys = testsupport::random_system(rng, 3, 2, 2);
    const Matrix f = f_matrix(sys, ReleaseMap::identity(sys));
    EXPECT_LE(testsupport::reference_rank(f), static_cast<std::size_t>(std::min(f.rows(), f.cols())));
  }
}

TEST(ApplyPerturbation, ZeroIsIdentityAndMinusIdentityKillsInputs) {
  std::mt19937_64 rng(3);
  const LinearSystem sys = testsupport::random_system(rng, 3, 2, 2);
  const ReleaseMap rel = ReleaseMap::identity(sys);
  const LinearSystem same = apply_perturbation(sys, rel, Perturbation::zeros(3, 2, 2));
  EXPECT_EQ(same.A(), sys.A());
  EXPECT_EQ(same.B(), sys.B());
  EXPECT_EQ(same.G(), sys.G());
  EXPECT_EQ(same.H(), sys.H());

  Perturbation k = Perturbation::zeros(3, 2, 2);
  k.k_si = -Matrix::Identity(2, 2);
  const LinearSystem killed = apply_perturbation(sys, rel, k);
  EXPECT_EQ(killed.B(), Matrix::Zero(3, 2));
  EXPECT_EQ(killed.H(), Matrix::Zero(2, 2));
}

TEST(ApplyPerturbation, PencilIdentityWithGeneralReleaseMap) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = testsupport::uniform_int(rng, 1, 5);
    const Index p = testsupport::uniform_int(rng, 1, 4);
    const Index q = testsupport::uniform_int(rng, 1, 4);
    const Index l = testsupport::uniform_int(rng, 1, 5);
    const ReleaseMap rel = random_release(rng, q, l, n, p);
    const LinearSystem sys(testsupport::stable_matrix(rng, n), gaussian(rng, n, p), rel.pi * rel.g_raw,
                           rel.pi * rel.h_raw);
    const Perturbation k = random_perturbation(rng, n, p, l);
    const double z = gaussian(rng, 1, 1)(0, 0);
    const Matrix lhs = pencil(apply_perturbation(sys, rel, k), z);
    const Matrix rhs = pencil(sys, z) + f_matrix(sys, rel) * k.assembled();
    ASSERT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ApplyPerturbation, RejectsWrongBlockShapes) {
  const LinearSystem s = scalar_system();
  Perturbation k = Perturbation::zeros(1, 1, 1);
  k.k_oi = Matrix::Zero(2, 1);
  EXPECT_THROW(apply_perturbation(s, ReleaseMap::identity(s), k), ArgumentError);
}

TEST(PerturbationBlocks, AssembleRoundTrip) {
  std::mt19937_64 rng(5);
  const Perturbation k = random_perturbation(rng, 3, 2, 4);
  const Matrix assembled = k.assembled();
  EXPECT_EQ(assembled.rows(), 6);
  EXPECT_EQ(assembled.cols(), 5);
  const Perturbation back = Perturbation::from_assembled(assembled, 3, 2);
  EXPECT_EQ(back.k_ss, k.k_ss);
  EXPECT_EQ(back.k_si, k.k_si);
  EXPECT_EQ(back.k_os, k.k_os);
  EXPECT_EQ(back.k_oi, k.k_oi);
}

TEST(Simulate, IdentityDynamicsHoldState) {
  LinearSystem sys(Matrix::Identity(2, 2), Matrix::Zero(2, 1), Matrix::Ones(1, 2), Matrix::Zero(1, 1));
  const Vector x0 = Vector::LinSpaced(2, 1.0, 2.0);
  const std::vector<Vector> u(6, Vector::Ones(1));
  const Trajectory t = simulate(sys, x0, u, 5);
  for (const auto& x : t.states) EXPECT_EQ(x, x0);
  EXPECT_EQ(t.horizon(), 5u);
}

TEST(Simulate, PureInputDelay) {
  LinearSystem sys(Matrix::Zero(2, 2), Matrix::Identity(2, 2), Matrix::Ones(1, 2), Matrix::Zero(1, 2));
  const std::vector<Vector> u(5, Vector::Unit(2, 0));
  const Trajectory t = simulate(sys, Vector::Zero(2), u, 4);
  for (std::size_t k = 1; k < t.states.size(); ++k) EXPECT_EQ(t.states[k], Vector::Unit(2, 0));
}

TEST(Simulate, MatchesClosedForm) {
  std::mt19937_64 rng(6);
  const LinearSystem sys = testsupport::random_system(rng, 4, 2, 3);
  const Vector x0 = gaussian(rng, 4, 1);
  std::vector<Vector> u;
  for (int k = 0; k <= 20; ++k) u.push_back(gaussian(rng, 2, 1));
  const Trajectory t = simulate(sys, x0, u, 20);
  for (std::size_t k = 0; k <= 20; ++k) {
    Matrix a_pow = Matrix::Identity(4, 4);
    for (std::size_t i = 0; i < k; ++i) a_pow = a_pow * sys.A();
    Vector y = sys.G() * a_pow * x0 + sys.H() * u[k];
    Matrix a_j = Matrix::Identity(4, 4);
    for (std::size_t j = k; j-- > 0;) {
      y += sys.G() * a_j * sys.B() * u[j];
      a_j = a_j * sys.A();
    }
    EXPECT_LE((t.outputs[k] - y).norm(), 1e-8 * (1.0 + y.norm()));
  }
}

TEST(Simulate, RejectsHorizonMismatch) {
  const std::vector<Vector> u(3, Vector::Ones(1));
  EXPECT_THROW(simulate(scalar_system(), Vector::Zero(1), u, 5), ArgumentError);
}

TEST(Simulate, KernelShiftLeavesOutputsUnchanged) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const LinearSystem sys = testsupport::random_system(rng, 3, 3, 1);
    const double z = 0.7;
    const Matrix kernel = null_space(pencil(sys, z));
    ASSERT_GE(kernel.cols(), 1);
    const Vector v = kernel.col(0);
    const Vector x0 = gaussian(rng, 3, 1);
    std::vector<Vector> u;
    for (int k = 0; k <= 30; ++k) u.push_back(gaussian(rng, 3, 1));
    const Trajectory nominal = simulate(sys, x0, u, 30);
    for (double m : {-10.0, 1.0, 7.0}) {
      std::vector<Vector> shifted = u;
      double zk = 1.0;
      for (auto& uk : shifted) {
        uk += m * zk * v.tail(3);
        zk *= z;
      }
      const Trajectory shadow = simulate(sys, x0 + m * v.head(3), shifted, 30);
      double ymax = 0.0;
      for (const auto& y : nominal.outputs) ymax = std::max(ymax, y.norm());
      for (std::size_t k = 0; k <= 30; ++k) {
        EXPECT_LE((shadow.outputs[k] - nominal.outputs[k]).norm(), 1e-6 * ymax);
      }
    }
  }
}

TEST(LinearSystemModel, ValidatesShapesAndPartition) {
  EXPECT_THROW(LinearSystem(Matrix::Zero(2, 3), Matrix::Zero(2, 1), Matrix::Zero(1, 2), Matrix::Zero(1, 1)),
               ArgumentError);
  EXPECT_THROW(LinearSystem(Matrix::Zero(2, 2), Matrix::Zero(2, 1), Matrix::Zero(1, 2), Matrix::Zero(2, 1)),
               ArgumentError);
  EXPECT_THROW(LinearSystem(Matrix::Zero(2, 2), Matrix::Zero(2, 2), Matrix::Zero(1, 2), Matrix::Zero(1, 2),
                            InputPartition{{0}, {0}}),
               ArgumentError);
  LinearSystem ok(Matrix::Zero(2, 2), Matrix::Ones(2, 2), Matrix::Zero(1, 2), Matrix::Zero(1, 2),
                  InputPartition{{1}, {0}});
  EXPECT_EQ(ok.control_input_matrix().cols(), 1);
}

TEST(ReleaseMapModel, RejectsInconsistentAggregation) {
  const LinearSystem s = scalar_system();
  ReleaseMap rel = ReleaseMap::identity(s);
  rel.g_raw(0, 0) = 2.0;
  EXPECT_THROW(rel.validate(s), ArgumentError);
}

TEST(ExogenousView, SelectsColumnsAndEmbedsBack) {
  std::mt19937_64 rng(8);
  const Matrix b = gaussian(rng, 3, 4);
  const LinearSystem sys(testsupport::stable_matrix(rng, 3), b, gaussian(rng, 2, 3), gaussian(rng, 2, 4),
                         InputPartition{{0, 2}, {1, 3}});
  const DesignView view = exogenous_view(sys, ReleaseMap::identity(sys));
  EXPECT_EQ(view.system.p(), 2);
  EXPECT_EQ(view.system.B().col(1), b.col(2));

  const Perturbation k = random_perturbation(rng, 3, 2, 2);
  const Perturbation full = embed_perturbation(k, view, 4);
  EXPECT_EQ(full.k_ss.row(2), k.k_ss.row(1));
  EXPECT_EQ(full.k_si(2, 0), k.k_si(1, 0));
  EXPECT_EQ(full.k_oi.col(2), k.k_oi.col(1));
  EXPECT_TRUE(full.k_ss.row(1).isZero(0.0));
  EXPECT_TRUE(full.k_si.col(3).isZero(0.0));

  const double z = 0.3;
  const LinearSystem perturbed = apply_perturbation(sys, ReleaseMap::identity(sys), full);
  const LinearSystem perturbed_view = apply_perturbation(view.system, view.release, k);
  const DesignView after = exogenous_view(perturbed, ReleaseMap::identity(perturbed));
  EXPECT_LE((pencil(after.system, z) - pencil(perturbed_view, z)).norm(), 1e-12);
}
