#pragma once

// End-to-end residual checks of an assembled bundle against the Riesz
// oracle and a commutant sample, and truncation / node convergence sweeps.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hypinv/commutant.hpp"
#include "hypinv/contour.hpp"
#include "hypinv/errors.hpp"
#include "hypinv/numkernel.hpp"
#include "hypinv/operator_model.hpp"
#include "hypinv/parallel.hpp"
#include "hypinv/projection.hpp"
#include "hypinv/resolvent.hpp"
#include "hypinv/scenario.hpp"

namespace hypinv {

struct Check {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool pass = false;
};

struct VerificationReport {
  std::vector<Check> checks;
  std::vector<std::pair<std::string, double>> info;
  std::optional<SubspaceBasis> subspace;

  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
  const Check& at(const std::string& name) const {
    for (const auto& c : checks) {
      if (c.name == name) return c;
    }
    throw InvalidArgument("VerificationReport: no check '" + name + "'");
  }
  bool has(const std::string& name) const {
    return std::any_of(checks.begin(), checks.end(), [&](const Check& c) { return c.name == name; });
  }
  void add(std::string name, double value, double limit) {
    checks.push_back({std::move(name), value, limit, value <= limit});
  }
};

struct LatticeResidual {
  double max_residual = 0.0;
  std::size_t worst_node = 0;
  std::size_t worst_atom = 0;
  std::size_t lattice_size = 0;
  std::size_t nodes = 0;
};

/// max over nodes z_j and lattice atoms i (distance of f_i to the contour at
/// least delta) of ||(T - z_j) R(z_j) e_i - e_i|| / ||e_i||.
inline LatticeResidual lattice_right_inverse(const PerturbedOperator& t, const Contour& g,
                                             const QuadratureRule& rule,
                                             const ProjectionSettings& settings) {
  const std::size_t n = t.atom_count();
  std::vector<Eigen::Index> atoms;
  for (std::size_t i = 0; i < n; ++i) {
    if (distance_to(g, t.base().value(i)) >= settings.delta) atoms.push_back(static_cast<Eigen::Index>(i));
  }
  LatticeResidual out;
  out.lattice_size = atoms.size();
  out.nodes = rule.size();
  if (atoms.empty()) return out;
  const auto cols = static_cast<Eigen::Index>(atoms.size());
  ComplexMatrix e = ComplexMatrix::Zero(static_cast<Eigen::Index>(n), cols);
  for (Eigen::Index c = 0; c < cols; ++c) e(atoms[static_cast<std::size_t>(c)], c) = 1.0;
  const RealVector w = t.space().weight_vector();
  const RealVector sw = w.cwiseSqrt();
  const ComplexMatrix u = t.perturbation().u_matrix(n);
  const ComplexMatrix v = t.perturbation().v_matrix(n);
  const ComplexVector s = t.perturbation().s_vector().cast<Complex>();

  struct NodeResult {
    double residual = 0.0;
    std::size_t atom = 0;
  };
  const auto per_node = ordered_map(rule.size(), settings.workers, [&](std::size_t j) {
    const Complex z = rule.nodes[j];
    ResolventOperatorAt b;
    try {
      b = build_B(t, z, settings.resolvent, false);
    } catch (const NearSingular& err) {
      throw NearSingular("node " + std::to_string(j) + ": " + err.what(), j, z, err.sigma_min());
    }
    const ComplexVector d = t.symbol().array() - z;
    ComplexMatrix r = -b.apply_B(e);
    for (Eigen::Index c = 0; c < cols; ++c) r(atoms[static_cast<std::size_t>(c)], c) += 1.0 / d(atoms[static_cast<std::size_t>(c)]);
    ComplexMatrix image = d.asDiagonal() * r;
    if (t.term_count() > 0) image += u * (s.asDiagonal() * (v.adjoint() * (w.cast<Complex>().asDiagonal() * r)));
    image -= e;
    NodeResult best;
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Eigen::Index i = atoms[static_cast<std::size_t>(c)];
      const double res = sw.cwiseProduct(image.col(c).cwiseAbs()).norm() / sw(i);
      if (c == 0 || res > best.residual) best = {res, static_cast<std::size_t>(i)};
    }
    return best;
  });
  for (std::size_t j = 0; j < per_node.size(); ++j) {
    if (j == 0 || per_node[j].residual > out.max_residual) {
      out.max_residual = per_node[j].residual;
      out.worst_node = j;
      out.worst_atom = per_node[j].atom;
    }
  }
  return out;
}

/// Largest distance of an eigenvalue of x to the set {0, 1}.
inline double zero_one_defect(const ComplexMatrix& x) {
  const EigenDecomposition dec = eig(x);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < dec.eigenvalues.size(); ++k) {
    const Complex mu = dec.eigenvalues(k);
    worst = std::max(worst, std::min(std::abs(mu), std::abs(mu - 1.0)));
  }
  return worst;
}

/// Oracle gap, idempotency, {0, 1} spectrum, commutation with every sample,
/// invariance of the extracted subspace and right-inversion on the lattice.
inline VerificationReport verify_bundle(const PerturbedOperator& t, const Contour& g,
                                        const ProjectionBundle& bundle, const CommutantSet& samples,
                                        const Numerics& numerics) {
  const Tolerances& tol = numerics.tolerances;
  const MeasureSpace& space = t.space();
  const ComplexMatrix tm = materialize(t);
  const double norm_t = operator_norm(tm, space);
  const ComplexMatrix& x = bundle.PplusL;
  const double norm_x = operator_norm(x, space);
  VerificationReport rep;

  const RieszResult oracle = riesz_of_T(t, g, numerics.delta);
  rep.add("oracle_gap", operator_norm(x - oracle.projector, space), tol.oracle * (1.0 + norm_t));
  rep.info.emplace_back("oracle_used_quadrature", oracle.used_quadrature ? 1.0 : 0.0);
  rep.info.emplace_back("oracle_condition", oracle.condition_estimate);
  rep.info.emplace_back("eigenvalues_inside", static_cast<double>(oracle.eigenvalues_inside));
  rep.info.emplace_back("norm_T", norm_t);
  rep.info.emplace_back("norm_PplusL", norm_x);

  rep.add("idempotency", operator_norm(x * x - x, space) / ((1.0 + norm_x) * (1.0 + norm_x)), tol.idempotency);
  rep.add("eigenvalues_01", zero_one_defect(x), tol.eigenvalue);

  double worst_comm = 0.0;
  for (const auto& smp : samples.samples) {
    const double ns = operator_norm(smp.matrix, space);
    const double res = ns > 0.0 ? operator_norm(smp.matrix * x - x * smp.matrix, space) / (ns * (1.0 + norm_x)) : 0.0;
    rep.add("commutation." + smp.label, res, tol.commutation);
    worst_comm = std::max(worst_comm, res);
  }
  rep.info.emplace_back("commutant_samples", static_cast<double>(samples.samples.size()));
  rep.info.emplace_back("commutant_rejected", static_cast<double>(samples.rejected.size()));
  rep.info.emplace_back("commutation_max", worst_comm);

  const auto n = static_cast<double>(t.atom_count());
  try {
    SubspaceBasis sub = extract_subspace(x, space);
    rep.add("subspace_trivial", 0.0, 0.5);
    rep.info.emplace_back("subspace_dimension", static_cast<double>(sub.dimension));
    const ComplexMatrix q = sub.projector(space);
    const ComplexMatrix iq = ComplexMatrix::Identity(q.rows(), q.cols()) - q;
    double worst_inv = 0.0;
    for (const auto& smp : samples.samples) {
      const double ns = operator_norm(smp.matrix, space);
      const double res = ns > 0.0 ? operator_norm(iq * smp.matrix * q, space) / ns : 0.0;
      rep.add("invariance." + smp.label, res, tol.invariance);
      worst_inv = std::max(worst_inv, res);
    }
    rep.info.emplace_back("invariance_max", worst_inv);
    rep.subspace = std::move(sub);
  } catch (const TrivialSubspace& e) {
    rep.add("subspace_trivial", 1.0, 0.5);
    rep.info.emplace_back("subspace_dimension", static_cast<double>(e.rank()));
  }
  rep.info.emplace_back("atom_count", n);

  const LatticeResidual lr =
      lattice_right_inverse(t, g, quadrature(g, numerics.nodes), projection_settings(numerics));
  rep.add("right_inverse", lr.max_residual, tol.right_inverse);
  rep.info.emplace_back("right_inverse_worst_node", static_cast<double>(lr.worst_node));
  rep.info.emplace_back("right_inverse_worst_atom", static_cast<double>(lr.worst_atom));
  rep.info.emplace_back("lattice_size", static_cast<double>(lr.lattice_size));
  return rep;
}

struct SweepRow {
  std::size_t terms = 0;  // N: number of kept terms
  std::size_t nodes = 0;  // per segment
  double oracle_gap = 0.0;
  double tail_bound = 0.0;  // sum_{n >= N} s_n sup_z ||x_n(z)|| ||y_n(z)||
  double s_tail = 0.0;      // sum_{n >= N} s_n
  double tail_norm = 0.0;   // sup_z ||A(z) - A_N(z)||
  double sup_norm_B = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double floor = 0.0;
  bool gap_monotone = true;
  bool tail_monotone = true;
  std::vector<std::string> violations;

  bool pass() const { return gap_monotone && tail_monotone; }
};

namespace detail {

struct TailSample {
  std::vector<double> term_scale;  // sup_z ||x_n|| ||y_n||, weighted
  std::vector<double> tail_norm;   // index N: sup_z ||sum_{n >= N} s_n x_n (x) y_n||
};

inline TailSample tail_sample(const PerturbedOperator& t, const QuadratureRule& rule,
                              const std::vector<std::size_t>& cuts, double range_guard) {
  const std::size_t r = t.term_count();
  TailSample out;
  out.term_scale.assign(r, 0.0);
  out.tail_norm.assign(r + 1, 0.0);
  if (r == 0) return out;
  const RealVector sw = t.space().sqrt_weights();
  for (std::size_t j = 0; j < rule.size(); ++j) {
    const AFactors fac = a_factors(t, rule.nodes[j], range_guard);
    const ComplexMatrix left = sw.cast<Complex>().asDiagonal() * fac.x * fac.s.cast<Complex>().asDiagonal();
    const ComplexMatrix right = sw.cast<Complex>().asDiagonal() * fac.y;
    for (std::size_t k = 0; k < r; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      out.term_scale[k] = std::max(out.term_scale[k], fac.x.col(kk).cwiseProduct(sw.cast<Complex>()).norm() *
                                                          fac.y.col(kk).cwiseProduct(sw.cast<Complex>()).norm());
    }
    for (std::size_t cut : cuts) {
      if (cut >= r) continue;
      const auto c = static_cast<Eigen::Index>(cut);
      const auto m = static_cast<Eigen::Index>(r) - c;
      out.tail_norm[cut] = std::max(out.tail_norm[cut], low_rank_norm(left.rightCols(m), right.rightCols(m)));
    }
  }
  return out;
}

}  // namespace detail

/// For every N in the truncation ladder and M in the node ladder: the oracle
/// gap of T_N = M_f + K_N at M nodes per segment, the tail quantities of
/// A - A_N and sup_z ||B(z)||. Checks that the gap does not grow with M
/// (unless both values sit under the floor) and the tail bound does not
/// grow with N.
inline SweepResult convergence_sweep(const Scenario& sc, const Contour& g) {
  std::vector<std::size_t> cuts = sc.numerics.truncation_ladder;
  if (cuts.empty()) cuts.push_back(sc.op.term_count());
  std::vector<std::size_t> ladder = sc.numerics.node_ladder;
  if (ladder.empty()) ladder.push_back(sc.numerics.nodes);
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    if (cuts[i] <= cuts[i - 1]) throw InvalidArgument("convergence_sweep: truncation ladder must increase");
  }
  for (std::size_t i = 1; i < ladder.size(); ++i) {
    if (ladder[i] <= ladder[i - 1]) throw InvalidArgument("convergence_sweep: node ladder must increase");
  }
  const ProjectionSettings ps = projection_settings(sc.numerics);
  const double norm_t = operator_norm(materialize(sc.op), sc.op.space());
  SweepResult out;
  out.floor = sc.numerics.tolerances.sweep_floor * (1.0 + norm_t);
  const RealVector s = sc.op.perturbation().s_vector();

  std::vector<detail::TailSample> tails;
  for (std::size_t m : ladder) {
    tails.push_back(detail::tail_sample(sc.op, quadrature(g, m), cuts, ps.resolvent.range_guard));
  }

  struct Job {
    std::size_t cut, ladder_index;
  };
  std::vector<Job> jobs;
  for (std::size_t cut : cuts) {
    for (std::size_t li = 0; li < ladder.size(); ++li) jobs.push_back({cut, li});
  }
  std::vector<ComplexMatrix> oracles;
  for (std::size_t cut : cuts) {
    oracles.push_back(riesz_of_T(sc.op.with_perturbation(sc.op.perturbation().truncated(cut)), g, ps.delta).projector);
  }
  ProjectionSettings inner = ps;
  inner.workers = 1;
  out.rows = ordered_map(jobs.size(), ps.workers, [&](std::size_t idx) {
    const Job& job = jobs[idx];
    const PerturbedOperator tn = sc.op.with_perturbation(sc.op.perturbation().truncated(job.cut));
    const ProjectionBundle b = assemble(tn, g, ladder[job.ladder_index], inner);
    SweepRow row;
    row.terms = job.cut;
    row.nodes = ladder[job.ladder_index];
    row.oracle_gap = operator_norm(b.PplusL - oracles[idx / ladder.size()], tn.space());
    row.sup_norm_B = b.sup_norm_B;
    const detail::TailSample& ts = tails[job.ladder_index];
    for (std::size_t k = job.cut; k < sc.op.term_count(); ++k) {
      row.s_tail += s(static_cast<Eigen::Index>(k));
      row.tail_bound += s(static_cast<Eigen::Index>(k)) * ts.term_scale[k];
    }
    row.tail_norm = job.cut < sc.op.term_count() ? ts.tail_norm[job.cut] : 0.0;
    return row;
  });

  for (std::size_t ci = 0; ci < cuts.size(); ++ci) {
    for (std::size_t li = 1; li < ladder.size(); ++li) {
      const SweepRow& prev = out.rows[ci * ladder.size() + li - 1];
      const SweepRow& cur = out.rows[ci * ladder.size() + li];
      if (cur.oracle_gap > std::max(prev.oracle_gap, out.floor)) {
        out.gap_monotone = false;
        out.violations.push_back("oracle gap grows from " + std::to_string(prev.nodes) + " to " +
                                 std::to_string(cur.nodes) + " nodes at N = " + std::to_string(cur.terms));
      }
    }
  }
  for (std::size_t li = 0; li < ladder.size(); ++li) {
    for (std::size_t ci = 1; ci < cuts.size(); ++ci) {
      const SweepRow& prev = out.rows[(ci - 1) * ladder.size() + li];
      const SweepRow& cur = out.rows[ci * ladder.size() + li];
      if (cur.tail_bound > prev.tail_bound * (1.0 + 1e-12)) {
        out.tail_monotone = false;
        out.violations.push_back("tail bound grows from N = " + std::to_string(prev.terms) + " to N = " +
                                 std::to_string(cur.terms));
      }
    }
  }
  return out;
}

}  // namespace hypinv
