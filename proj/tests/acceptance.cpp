// Acceptance run: one line per criterion, nonzero exit when any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "hypinv/hypinv.hpp"

using namespace hypinv;
namespace fs = std::filesystem;

namespace {

struct Instance {
  std::string name;
  Scenario scenario;
  Contour contour;
  ProjectionBundle bundle;
};

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Instance build_instance(std::string name, Scenario sc) {
  const ResolvedContour rc = resolve_contour(sc);
  ProjectionBundle b = assemble(sc.op, rc.contour, sc.numerics.nodes, projection_settings(sc.numerics));
  return {std::move(name), std::move(sc), rc.contour, std::move(b)};
}

// Corpus entries whose recorded exit status is 0.
std::vector<Instance> corpus_instances() {
  std::vector<Instance> out;
  for (const fs::path& dir : corpus_entries(HYPINV_CORPUS_DIR)) {
    const nlohmann::json base = read_json_file(dir / "baseline.json");
    if (base.at("exit_status").get<int>() != 0) continue;
    LoadedConfig cfg = load_config_file(dir / "config.json");
    out.push_back(build_instance(dir.filename().string(), std::move(cfg.scenario)));
  }
  return out;
}

std::vector<Instance> random_instances(std::uint64_t first, std::size_t count) {
  std::vector<Instance> out;
  for (std::uint64_t s = first; s < first + count; ++s) out.push_back(build_instance("random-" + std::to_string(s), random_scenario(s)));
  return out;
}

PerturbedOperator canonical() {
  ComplexVector f(2), e0 = ComplexVector::Zero(2), e1 = ComplexVector::Zero(2);
  f << 0.0, 2.0;
  e0(0) = 1.0;
  e1(1) = 1.0;
  return PerturbedOperator(MultiplicationOperator(MeasureSpace::unit_atoms(2), f), CompactPerturbation({{1.0, e0, e1}}));
}

Outcome oracle_equivalence() {
  Outcome o;
  double worst_ratio = 0.0, worst_time = 0.0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario sc = random_scenario(seed);
    const ResolvedContour rc = resolve_contour(sc);
    const ProjectionBundle b = assemble(sc.op, rc.contour, 128, projection_settings(sc.numerics));
    const RieszResult r = riesz_of_T(sc.op, rc.contour, sc.numerics.delta);
    const double gap = operator_norm(b.PplusL - r.projector, sc.op.space());
    const double limit = 1e-8 * (1.0 + operator_norm(materialize(sc.op), sc.op.space()));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    worst_ratio = std::max(worst_ratio, gap / limit);
    worst_time = std::max(worst_time, secs);
    if (!(gap <= limit) || secs >= 5.0) {
      o.pass = false;
      o.detail += " seed " + std::to_string(seed) + fmt(" gap %.3g", gap) + fmt(" time %.2fs", secs) +
                  (rc.rectangle ? " (rectangle)" : " (circle)") + ";";
    }
  }
  o.detail = "50 random instances, worst gap/limit" + fmt(" %.3g", worst_ratio) + fmt(", slowest %.2f s", worst_time) + o.detail;
  return o;
}

Outcome right_inversion(const std::vector<Instance>& corpus) {
  Outcome o;
  double worst = 0.0;
  for (const Instance& in : corpus) {
    const Scenario& sc = in.scenario;
    const LatticeResidual lr =
        lattice_right_inverse(sc.op, in.contour, quadrature(in.contour, sc.numerics.nodes), projection_settings(sc.numerics));
    worst = std::max(worst, lr.max_residual);
    if (!(lr.max_residual <= 1e-10)) {
      o.pass = false;
      o.detail += " " + in.name + fmt(" %.3g;", lr.max_residual);
    }
  }
  o.detail = std::to_string(corpus.size()) + " corpus instances, worst residual" + fmt(" %.3g", worst) + o.detail;
  return o;
}

CommutantSet samples_for(const Instance& in) {
  CommutantSpec spec;
  spec.seed = derive_seed(in.scenario.numerics.seed, 0xC0);
  return sample_commutant(materialize(in.scenario.op), spec);
}

Outcome commutation(const std::vector<Instance>& all) {
  Outcome o;
  double worst = 0.0;
  std::size_t fewest = 1000;
  for (const Instance& in : all) {
    const MeasureSpace& space = in.scenario.op.space();
    const ComplexMatrix& x = in.bundle.PplusL;
    const double nx = operator_norm(x, space);
    const CommutantSet s = samples_for(in);
    fewest = std::min(fewest, s.samples.size());
    if (s.samples.size() < 10) {
      o.pass = false;
      o.detail += " " + in.name + " has " + std::to_string(s.samples.size()) + " samples;";
    }
    for (const auto& smp : s.samples) {
      const double res = operator_norm(smp.matrix * x - x * smp.matrix, space) / (operator_norm(smp.matrix, space) * (1.0 + nx));
      worst = std::max(worst, res);
      if (!(res <= 1e-8)) {
        o.pass = false;
        o.detail += " " + in.name + "/" + smp.label + fmt(" %.3g;", res);
      }
    }
  }
  o.detail = std::to_string(all.size()) + " instances, at least " + std::to_string(fewest) +
             " samples each, worst residual" + fmt(" %.3g", worst) + o.detail;
  return o;
}

Outcome idempotency(const std::vector<Instance>& all) {
  Outcome o;
  double worst_idem = 0.0, worst_eig = 0.0;
  for (const Instance& in : all) {
    const MeasureSpace& space = in.scenario.op.space();
    const ComplexMatrix& x = in.bundle.PplusL;
    const double nx = operator_norm(x, space);
    const double idem = operator_norm(x * x - x, space) / ((1.0 + nx) * (1.0 + nx));
    double eig_defect = 0.0;
    const EigenDecomposition d = eig(x);
    for (Eigen::Index k = 0; k < d.eigenvalues.size(); ++k) {
      eig_defect = std::max(eig_defect, std::min(std::abs(d.eigenvalues(k)), std::abs(d.eigenvalues(k) - 1.0)));
    }
    worst_idem = std::max(worst_idem, idem);
    worst_eig = std::max(worst_eig, eig_defect);
    if (!(idem <= 1e-8) || !(eig_defect <= 1e-8)) {
      o.pass = false;
      o.detail += " " + in.name + fmt(" idem %.3g", idem) + fmt(" eig %.3g;", eig_defect);
    }
  }
  o.detail = std::to_string(all.size()) + " instances, worst idempotency" + fmt(" %.3g", worst_idem) +
             ", worst {0,1} distance" + fmt(" %.3g", worst_eig) + o.detail;
  return o;
}

Outcome invariance(const std::vector<Instance>& all) {
  Outcome o;
  double worst = 0.0;
  for (const Instance& in : all) {
    const MeasureSpace& space = in.scenario.op.space();
    const std::size_t n = space.atom_count();
    SubspaceBasis sub;
    try {
      sub = extract_subspace(in.bundle, space);
    } catch (const TrivialSubspace& e) {
      o.pass = false;
      o.detail += " " + in.name + " trivial (rank " + std::to_string(e.rank()) + ");";
      continue;
    }
    if (sub.dimension == 0 || sub.dimension >= n) {
      o.pass = false;
      o.detail += " " + in.name + " dimension " + std::to_string(sub.dimension) + ";";
    }
    const ComplexMatrix q = sub.projector(space);
    const ComplexMatrix iq = ComplexMatrix::Identity(q.rows(), q.cols()) - q;
    const CommutantSet s = samples_for(in);
    bool saw_t = false;
    for (const auto& smp : s.samples) {
      saw_t = saw_t || smp.label == "T";
      const double res = operator_norm(iq * smp.matrix * q, space) / operator_norm(smp.matrix, space);
      worst = std::max(worst, res);
      if (!(res <= 1e-8)) {
        o.pass = false;
        o.detail += " " + in.name + "/" + smp.label + fmt(" %.3g;", res);
      }
    }
    if (!saw_t) {
      o.pass = false;
      o.detail += " " + in.name + " lacks S = T;";
    }
  }
  o.detail = std::to_string(all.size()) + " instances, worst invariance residual" + fmt(" %.3g", worst) + o.detail;
  return o;
}

Outcome factor_bounds() {
  Outcome o;
  std::size_t pairs = 0, checks = 0, violations = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 1; pairs < 100; ++seed) {
    const Scenario sc = random_scenario(1000 + seed);
    const Contour g = resolve_contour(sc).contour;
    const QuadratureRule rule = quadrature(g, 16);
    Rng rng(seed);
    const Complex z = rule.nodes[static_cast<std::size_t>(rng.uniform() * static_cast<double>(rule.size()))];
    const FactoredCoefficients c = sc.coeffs();
    const MeasureSpace& space = sc.op.space();
    AFactorization f;
    double full = 0.0;
    try {
      f = build_A1_A2(sc.op, c, z);
      full = norm_bound_A1(sc.op, c, z);
    } catch (const RealLineCollision&) {
      continue;
    }
    ++pairs;
    const double a1 = operator_norm(f.a1, space);
    ++checks;
    worst = std::max(worst, a1 * a1 / full);
    if (!(a1 * a1 <= full * (1.0 + 1e-12))) ++violations;
    for (std::size_t cut = 0; cut <= sc.op.atom_count(); ++cut) {
      const double tail = operator_norm(f.a1 - project_first_atoms(f.a1, cut), space);
      const double bound = tail_bound(sc.op, c, z, cut);
      ++checks;
      if (bound > 0.0) worst = std::max(worst, tail * tail / bound);
      if (!(tail * tail <= bound * (1.0 + 1e-12) + 1e-300)) ++violations;
    }
  }
  o.pass = violations == 0;
  o.detail = std::to_string(pairs) + " (instance, z) pairs, " + std::to_string(checks) + " inequalities, " +
             std::to_string(violations) + " violations, largest norm/bound" + fmt(" %.3g", worst);
  return o;
}

Outcome canonical_values() {
  Outcome o;
  const PerturbedOperator t = canonical();
  const Contour g = circle(0.0, 1.0);
  const QuadratureRule rule = quadrature(g, 128);
  double worst_b = 0.0;
  for (std::size_t j = 0; j < rule.size(); j += 8) {
    const Complex z = rule.nodes[j];
    const ResolventOperatorAt b = build_B(t, z);
    worst_b = std::max(worst_b, std::abs(b.B(0, 1) - (-1.0 / (z * (2.0 - z)))));
  }
  const ProjectionBundle bundle = assemble(t, g, 128);
  ComplexMatrix l = ComplexMatrix::Zero(2, 2), pl = ComplexMatrix::Zero(2, 2);
  l(0, 1) = -0.5;
  pl(0, 0) = 1.0;
  pl(0, 1) = -0.5;
  const double el = (bundle.L - l).cwiseAbs().maxCoeff();
  const double epl = (bundle.PplusL - pl).cwiseAbs().maxCoeff();
  o.pass = worst_b <= 1e-12 && el <= 1e-10 && epl <= 1e-10;
  o.detail = "B(0,1) error" + fmt(" %.3g", worst_b) + ", L error" + fmt(" %.3g", el) + ", P+L error" + fmt(" %.3g", epl);
  return o;
}

Outcome quadrature_convergence() {
  Outcome o;
  const PerturbedOperator t = canonical();
  const Contour g = circle(0.0, 1.0);
  const ComplexMatrix riesz = riesz_of_T(t, g).projector;
  constexpr double floor = 1e-12;
  double prev = -1.0;
  std::string ladder;
  for (std::size_t n : {4u, 8u, 16u, 32u, 64u, 128u}) {
    const double gap = operator_norm(assemble(t, g, n).PplusL - riesz, t.space());
    ladder += " " + std::to_string(n) + ":" + fmt("%.2g", gap);
    if (prev > floor && gap > floor && !(prev / gap >= 4.0)) o.pass = false;
    prev = gap;
  }
  if (!(prev <= floor)) o.pass = false;
  o.detail = "canonical gaps" + ladder;
  return o;
}

Outcome examples() {
  Outcome o;
  CommandOptions opts;
  opts.write = false;
  for (const char* name : {"ex1", "ex2"}) {
    const auto t0 = std::chrono::steady_clock::now();
    const CommandResult r = run_example(name, opts);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.detail += std::string(" ") + name + " exit " + std::to_string(r.status) + fmt(" (%.1f s)", secs);
    if (r.status != kExitPass) o.pass = false;
  }
  const CommandResult ex2 = run_example("ex2", opts);
  const Report& r = ex2.report;
  const bool sup_ok = r.get<double>("example.sup_norm_A") <= r.get<double>("example.sum_s");
  const bool tails_ok = r.get<bool>("example.series_bounds_hold");
  o.pass = o.pass && sup_ok && tails_ok;
  o.detail += fmt(", ex2 sup ||A|| %.4g", r.get<double>("example.sup_norm_A")) + fmt(" <= sum s %.4g", r.get<double>("example.sum_s")) +
              (tails_ok ? ", tail bounds hold at " : ", tail bound violated at some of ") +
              std::to_string(r.get<std::int64_t>("example.nodes_checked")) + " nodes";
  return o;
}

Outcome hypothesis_machinery() {
  Outcome o;
  // lambda = {0, 2}, u = e0, a = 1: G(x) = 1/x^2 is 4, 1, 4/9.
  ComplexVector f(2), e0 = ComplexVector::Zero(2);
  f << 0.0, 2.0;
  e0(0) = 1.0;
  const PerturbedOperator t(MultiplicationOperator(MeasureSpace::unit_atoms(2), f),
                            CompactPerturbation({{1.0, e0, ComplexVector::Zero(2)}}));
  const X0Choice x = choose_x0(t, FactoredCoefficients({1.0}, {1.0}), std::vector<double>{0.5, 1.0, 1.5}, 0.1);
  const bool x0_ok = x.x0 == 1.5 && std::abs(x.objective - 4.0 / 9.0) <= 1e-15;

  ComplexMatrix alpha(3, 4);
  double l1 = 0.0;
  for (Eigen::Index n = 0; n < 3; ++n) {
    for (Eigen::Index k = 0; k < 4; ++k) {
      alpha(n, k) = std::ldexp(1.0, -static_cast<int>(n + k));
      l1 += std::ldexp(1.0, -static_cast<int>(n + k));
    }
  }
  const bool bad_ok = bad_set_bound(alpha, 0.125) == 2.0 * 0.125 * l1;

  const fs::path entry = fs::path(HYPINV_CORPUS_DIR) / "contour-through-eigenvalue" / "config.json";
  CommandOptions opts;
  opts.write = false;
  opts.force = true;
  const CommandResult b = run_build(load_config_file(entry), opts);
  opts.force = false;
  const CommandResult c = run_check(load_config_file(entry), opts);
  const bool names_node = b.report.contains("build.singular_node") && b.message.find("node") != std::string::npos;
  o.pass = x0_ok && bad_ok && b.status == kExitSingular && c.status == kExitSingular && names_node;
  o.detail = fmt("choose_x0 -> %.3g", x.x0) + (bad_ok ? ", bad_set_bound exact" : ", bad_set_bound off") +
             ", contour through an eigenvalue: build exit " + std::to_string(b.status) + ", check exit " +
             std::to_string(c.status) + " (" + b.message.substr(0, b.message.find(':')) + ")";
  return o;
}

}  // namespace

int main() {
  const std::vector<Instance> corpus = corpus_instances();
  std::vector<Instance> all = corpus;
  for (Instance& in : random_instances(1, 10)) all.push_back(std::move(in));

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"oracle equivalence", oracle_equivalence},
      {"right inversion", [&] { return right_inversion(corpus); }},
      {"commutation", [&] { return commutation(all); }},
      {"idempotency and spectrum", [&] { return idempotency(all); }},
      {"subspace nontriviality and invariance", [&] { return invariance(corpus); }},
      {"factor norm and tail bounds", factor_bounds},
      {"canonical 2x2 hand values", canonical_values},
      {"quadrature convergence", quadrature_convergence},
      {"disk examples", examples},
      {"hypothesis machinery", hypothesis_machinery},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("criterion %zu %s: %s: %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
