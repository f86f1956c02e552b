// The damped-series disk example: hypotheses, build and verification.

#include <iostream>

#include "hypinv/hypinv.hpp"

int main() {
  using namespace hypinv;
  const Scenario sc = example2_scenario({});
  const ResolvedContour rc = resolve_contour(sc);
  const HypothesisReport h = full_hypothesis_report(sc.op, rc.contour, sc.coeffs(), hypothesis_settings(sc, false));
  for (const auto& e : h.entries) std::cout << e.name << ": " << (e.pass ? "pass" : "FAIL") << '\n';

  const ProjectionBundle b = assemble(sc.op, rc.contour, sc.numerics.nodes, projection_settings(sc.numerics));
  CommutantSpec spec;
  spec.seed = sc.numerics.seed;
  const VerificationReport v = verify_bundle(sc.op, rc.contour, b, sample_commutant(materialize(sc.op), spec), sc.numerics);
  for (const Check& c : v.checks) {
    std::cout << c.name << " " << c.value << " <= " << c.limit << (c.pass ? "" : "  FAIL") << '\n';
  }
  return v.all_pass() && h.all_pass() ? 0 : 1;
}
