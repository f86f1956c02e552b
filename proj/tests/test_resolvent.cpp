#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "hypinv/parallel.hpp"
#include "hypinv/projection.hpp"
#include "hypinv/resolvent.hpp"
#include "hypinv/verify.hpp"
#include "oracles.hpp"

using namespace hypinv;

namespace {

// T = diag(0, 2) + e0 (x) e1 on two unit atoms.
PerturbedOperator canonical() {
  ComplexVector f(2), e0 = ComplexVector::Zero(2), e1 = ComplexVector::Zero(2);
  f << 0.0, 2.0;
  e0(0) = 1.0;
  e1(1) = 1.0;
  return PerturbedOperator(MultiplicationOperator(MeasureSpace::unit_atoms(2), f),
                           CompactPerturbation({{1.0, e0, e1}}));
}

// Weighted atoms with a few seeded rank-one terms; atoms on a circle of
// radius 3 so that z near the origin stays clear of f.
PerturbedOperator seeded_operator(int n, int r, unsigned seed) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = 0.5 + 0.05 * i;
  ComplexVector f(n);
  for (int i = 0; i < n; ++i) f(i) = std::polar(3.0 + 0.1 * i, 0.7 * i);
  const oracle::Mat u = oracle::random_matrix(n, r, seed);
  const oracle::Mat v = oracle::random_matrix(n, r, seed + 1);
  std::vector<RankOneTerm> terms;
  for (int k = 0; k < r; ++k) terms.push_back({0.3 / (1.0 + k), u.col(k) / u.col(k).norm(), v.col(k) / v.col(k).norm()});
  return PerturbedOperator(MultiplicationOperator(MeasureSpace(w), f), CompactPerturbation(std::move(terms)));
}

}  // namespace

TEST(BuildA, CanonicalEntryByHand) {
  const PerturbedOperator t = canonical();
  for (Complex z : {Complex(0.5, 0.0), Complex(0.0, 1.0), std::polar(1.0, 2.0)}) {
    const ComplexMatrix a = build_A(t, z);
    EXPECT_NEAR(std::abs(a(0, 1) - (-1.0 / (z * (2.0 - z)))), 0.0, 1e-15);
    EXPECT_EQ(a(0, 0), Complex(0.0));
    EXPECT_EQ(a(1, 0), Complex(0.0));
    EXPECT_EQ(a(1, 1), Complex(0.0));
  }
}

TEST(BuildB, CanonicalEqualsA) {
  // A(M_f - z) is nilpotent and annihilates A, so B = A.
  const PerturbedOperator t = canonical();
  const Complex z = std::polar(1.0, 0.4);
  for (auto method : {ResolventMethod::dense, ResolventMethod::structured}) {
    ResolventSettings s;
    s.method = method;
    const ResolventOperatorAt b = build_B(t, z, s);
    EXPECT_NEAR(std::abs(b.B(0, 1) - (-1.0 / (z * (2.0 - z)))), 0.0, 1e-14);
    EXPECT_NEAR(b.B(0, 0).real(), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(b.B(1, 1)), 0.0, 1e-15);
  }
}

TEST(BuildB, DenseAndStructuredAgreeAndMatchResolvent) {
  const PerturbedOperator t = seeded_operator(12, 3, 40);
  const ComplexMatrix tm = materialize(t);
  const Complex z(0.3, -0.2);
  ResolventSettings dense;
  dense.method = ResolventMethod::dense;
  const ResolventOperatorAt bd = build_B(t, z, dense);
  const ResolventOperatorAt bs = build_B(t, z);
  EXPECT_LT((bd.B - bs.B).norm(), 1e-12 * (1.0 + bd.B.norm()));
  EXPECT_NEAR(resolvent_B_norm(t, build_B(t, z, {}, false)), operator_norm(bs.B, t.space()), 1e-10);
  // R(z) = (M_f - z)^{-1} - B(z) inverts T - z.
  const ComplexMatrix r = resolvent_R(t, bs);
  const ComplexMatrix want = oracle::gauss_jordan_inverse(tm - z * ComplexMatrix::Identity(12, 12));
  EXPECT_LT((r - want).norm(), 1e-11 * want.norm());
  EXPECT_NEAR(bs.invertibility_sigma_min, invertibility_certificate(t, z, bs.A), 1e-10);
}

TEST(BuildB, RightInverseResidualIsSmall) {
  const PerturbedOperator t = seeded_operator(16, 4, 7);
  const oracle::Mat w = oracle::random_matrix(16, 1, 99);
  EXPECT_LT(right_inverse_residual(t, Complex(-0.4, 0.9), ComplexVector(w.col(0)), 1e-6), 1e-12);
}

TEST(BuildB, LatticeViolationWhenSupportedNearZ) {
  const PerturbedOperator t = canonical();
  ComplexVector w = ComplexVector::Zero(2);
  w(1) = 1.0;
  const ResolventOperatorAt b = build_B(t, Complex(0.5, 0.0));
  EXPECT_THROW(right_inverse_residual(t, Complex(2.0, 1e-9), w, b, 1e-6), Error);
}

TEST(BuildB, NearSingularAtAnEigenvalueOfT) {
  // diag(0, 2) + (1, 1) (x) (1, 1) has eigenvalues 2 +- sqrt 2.
  ComplexVector f(2), one = ComplexVector::Ones(2);
  f << 0.0, 2.0;
  const PerturbedOperator t(MultiplicationOperator(MeasureSpace::unit_atoms(2), f),
                            CompactPerturbation({{1.0, one, one}}));
  const Complex z(2.0 - std::sqrt(2.0), 0.0);
  try {
    build_B(t, z);
    FAIL() << "expected NearSingular";
  } catch (const NearSingular& e) {
    EXPECT_LT(e.sigma_min(), 1e-12);
    EXPECT_EQ(e.z(), z);
  }
  EXPECT_NO_THROW(build_B(t, z + Complex(0.0, 0.1)));
}

TEST(RangeMembership, NamesTermAndAtom) {
  const PerturbedOperator t = canonical();
  try {
    a_factors(t, Complex(2.0, 0.0));
    FAIL() << "expected RangeMembership";
  } catch (const RangeMembership& e) {
    EXPECT_EQ(e.term(), 0u);
    EXPECT_EQ(e.atom(), 1u);
  }
}

TEST(Factorization, ProductIsA) {
  const PerturbedOperator t = seeded_operator(10, 3, 3);
  const FactoredCoefficients c({0.2, 0.5, 1.0}, {0.3 / 0.2, 0.15 / 0.5, 0.1 / 1.0});
  const Complex z(0.1, 0.5);
  const AFactorization f = build_A1_A2(t, c, z);
  const ComplexMatrix a = build_A(t, z);
  EXPECT_LT((f.a1 * f.a2 - a).norm(), 1e-13 * a.norm());
  EXPECT_THROW(build_A1_A2(t, FactoredCoefficients({1.0, 1.0, 1.0}, {1.0, 1.0, 1.0}), z), Error);
}

TEST(Factorization, NormAndTailBoundsHold) {
  const PerturbedOperator t = seeded_operator(10, 3, 5);
  const FactoredCoefficients c = FactoredCoefficients::symmetric(t.perturbation());
  const Complex z(0.2, 0.7);
  const AFactorization f = build_A1_A2(t, c, z);
  std::vector<double> w(10);
  for (int i = 0; i < 10; ++i) w[static_cast<std::size_t>(i)] = t.space().weight(static_cast<std::size_t>(i));

  // sum_{k >= N} sum_n a_n^2 w_k |u_n(k)|^2 / |Re f_k - Re z|^2
  const auto formula = [&](std::size_t first) {
    double acc = 0.0;
    for (std::size_t n = 0; n < t.term_count(); ++n) {
      const double an = std::sqrt(t.perturbation()[n].s);
      for (std::size_t k = first; k < 10; ++k) {
        const double gap = t.symbol()(static_cast<Eigen::Index>(k)).real() - z.real();
        acc += an * an * w[k] * std::norm(t.perturbation()[n].u(static_cast<Eigen::Index>(k))) / (gap * gap);
      }
    }
    return acc;
  };
  EXPECT_NEAR(norm_bound_A1(t, c, z), formula(0), 1e-12 * formula(0));
  for (std::size_t cut : {0u, 2u, 5u, 9u}) {
    const double bound = tail_bound(t, c, z, cut);
    EXPECT_NEAR(bound, formula(cut), 1e-12 * (1.0 + formula(cut)));
    const double tail = oracle::weighted_norm(f.a1 - project_first_atoms(f.a1, cut), w);
    EXPECT_LE(tail * tail, bound * (1.0 + 1e-10));
  }
  EXPECT_EQ(tail_bound(t, c, z, 10), 0.0);
  const double a2 = oracle::weighted_norm(f.a2, w);
  EXPECT_LE(a2 * a2, norm_bound_A2(t, c, z) * (1.0 + 1e-10));
}

TEST(Projection, AnalyticPIsTheIndicatorOfTheInterior) {
  ComplexVector f(4);
  f << 0.0, 2.0, Complex(0.1, 0.5), -3.0;
  const MultiplicationOperator m(MeasureSpace::unit_atoms(4), f);
  const ComplexMatrix p = analytic_P(m, circle(0.0, 1.0));
  EXPECT_EQ(p.diagonal().real(), Eigen::Vector4d(1.0, 0.0, 1.0, 0.0));
  EXPECT_EQ((p - ComplexMatrix(p.diagonal().asDiagonal())).norm(), 0.0);
  EXPECT_THROW(analytic_P(m, circle(0.0, 2.0)), OnCurve);
}

TEST(Projection, ZeroPerturbationGivesLZero) {
  ComplexVector f(3);
  f << 0.0, 2.0, 0.3;
  const PerturbedOperator t(MultiplicationOperator(MeasureSpace::unit_atoms(3), f), CompactPerturbation());
  const ProjectionBundle b = assemble(t, circle(0.0, 1.0), 32);
  EXPECT_EQ(b.L.norm(), 0.0);
  EXPECT_EQ(b.PplusL, b.P);
}

TEST(Projection, CanonicalHandValues) {
  const PerturbedOperator t = canonical();
  const ProjectionBundle b = assemble(t, circle(0.0, 1.0), 128);
  // Residue of -1 / (z (2 - z)) at 0 is -1/2.
  EXPECT_NEAR(std::abs(b.L(0, 1) + 0.5), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(b.L(0, 0)) + std::abs(b.L(1, 0)) + std::abs(b.L(1, 1)), 0.0, 1e-12);
  const oracle::Mat want = oracle::riesz_circle(materialize(t), 0.0, 1.0, 256);
  EXPECT_LT((b.PplusL - want).norm(), 1e-12);
}

TEST(Projection, WorkerCountDoesNotChangeTheResult) {
  const PerturbedOperator t = seeded_operator(14, 3, 12);
  const Contour g = circle(Complex(3.0, 0.0), 0.9);
  ProjectionSettings one, four;
  four.workers = 4;
  const ProjectionBundle a = assemble(t, g, 48, one);
  const ProjectionBundle b = assemble(t, g, 48, four);
  EXPECT_EQ(a.PplusL, b.PplusL);
  EXPECT_EQ(a.min_certificate_node, b.min_certificate_node);
}

TEST(Riesz, AgreesWithTrapezoidOracle) {
  const PerturbedOperator t = seeded_operator(8, 2, 31);
  const ComplexMatrix tm = materialize(t);
  const Contour g = circle(Complex(3.0, 0.0), 1.0);
  const RieszResult r = riesz_projection(tm, g);
  const oracle::Mat want = oracle::riesz_circle(tm, Complex(3.0, 0.0), 1.0, 512);
  EXPECT_LT((r.projector - want).norm(), 1e-9);
  EXPECT_LT((r.projector * r.projector - r.projector).norm(), 1e-9);
}

TEST(Riesz, DefectiveMatrixFallsBackToQuadrature) {
  ComplexMatrix j(3, 3);
  j << 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 4.0;
  const RieszResult r = riesz_projection(j, circle(1.0, 1.0));
  EXPECT_TRUE(r.used_quadrature);
  ComplexMatrix want = ComplexMatrix::Zero(3, 3);
  want(0, 0) = want(1, 1) = 1.0;
  EXPECT_LT((r.projector - want).norm(), 1e-10);
}

TEST(Subspace, CanonicalRangeIsSpannedByE0) {
  const PerturbedOperator t = canonical();
  const ProjectionBundle b = assemble(t, circle(0.0, 1.0), 128);
  const SubspaceBasis s = extract_subspace(b, t.space());
  EXPECT_EQ(s.dimension, 1u);
  EXPECT_NEAR(std::abs(s.basis(0, 0)), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(s.basis(1, 0)), 0.0, 1e-12);
}

TEST(Subspace, TrivialRangeRaises) {
  const MeasureSpace space = MeasureSpace::unit_atoms(3);
  try {
    extract_subspace(ComplexMatrix::Identity(3, 3), space);
    FAIL() << "expected TrivialSubspace";
  } catch (const TrivialSubspace& e) {
    EXPECT_EQ(e.rank(), 3u);
    EXPECT_EQ(e.dimension(), 3u);
  }
  EXPECT_THROW(extract_subspace(ComplexMatrix::Zero(3, 3), space), TrivialSubspace);
}

TEST(OrderedMap, KeepsOrderAndRethrows) {
  const auto sq = ordered_map(100, 4, [](std::size_t i) { return i * i; });
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(sq[i], i * i);
  EXPECT_THROW(ordered_map(10, 3,
                           [](std::size_t i) {
                             if (i == 7) throw std::runtime_error("seven");
                             return i;
                           }),
               std::runtime_error);
}

TEST(Lattice, RightInverseOnSeededOperator) {
  const PerturbedOperator t = seeded_operator(12, 3, 77);
  const Contour g = circle(Complex(3.0, 0.0), 0.9);
  const LatticeResidual lr = lattice_right_inverse(t, g, quadrature(g, 32), {});
  EXPECT_EQ(lr.lattice_size, 12u);
  EXPECT_LT(lr.max_residual, 1e-12);
}
