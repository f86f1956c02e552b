// T = diag(0, 2) + e0 (x) e1 on two unit atoms, Gamma = |z| = 1.
// Prints P, L, P + L and the extracted subspace.

#include <iostream>

#include "hypinv/hypinv.hpp"

int main() {
  using namespace hypinv;
  const MeasureSpace space = MeasureSpace::unit_atoms(2);
  ComplexVector f(2), e0 = ComplexVector::Zero(2), e1 = ComplexVector::Zero(2);
  f << 0.0, 2.0;
  e0(0) = 1.0;
  e1(1) = 1.0;
  const PerturbedOperator t(MultiplicationOperator(space, f), CompactPerturbation({{1.0, e0, e1}}));
  const Contour gamma = circle(0.0, 1.0);

  const ProjectionBundle b = assemble(t, gamma, 128);
  std::cout << "P =\n" << b.P << "\nL =\n" << b.L << "\nP + L =\n" << b.PplusL << '\n';
  std::cout << "oracle gap " << operator_norm(b.PplusL - riesz_of_T(t, gamma).projector, space) << '\n';
  const SubspaceBasis sub = extract_subspace(b, space);
  std::cout << "subspace dimension " << sub.dimension << ", basis\n" << sub.basis << '\n';
}
