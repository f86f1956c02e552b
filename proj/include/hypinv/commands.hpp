#pragma once

// check / build / verify / sweep / example: each turns a loaded scenario
// into a Report, writes artifacts and returns an exit status.
//
// Exit statuses: 0 pass, 2 configuration error, 3 hypothesis or
// verification failure, 4 singular node (contour meets the spectrum of T),
// 5 trivial subspace, 6 sweep not monotone.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hypinv/commutant.hpp"
#include "hypinv/config.hpp"
#include "hypinv/errors.hpp"
#include "hypinv/hypotheses.hpp"
#include "hypinv/matrix_io.hpp"
#include "hypinv/projection.hpp"
#include "hypinv/random.hpp"
#include "hypinv/report.hpp"
#include "hypinv/scenario.hpp"
#include "hypinv/verify.hpp"

namespace hypinv {

enum ExitStatus : int {
  kExitPass = 0,
  kExitDrift = 1,
  kExitConfig = 2,
  kExitHypothesis = 3,
  kExitSingular = 4,
  kExitTrivial = 5,
  kExitNonMonotone = 6,
};

inline constexpr const char* kOutDirEnv = "HYPINV_OUT_DIR";
inline constexpr const char* kDefaultOutDir = "hypinv-out";

struct CommandOptions {
  Overrides overrides;
  std::optional<std::string> out_dir;
  bool force = false;
  bool write = true;  // false: compute the report only
};

struct CommandResult {
  int status = kExitPass;
  Report report;
  std::filesystem::path out_dir;
  std::string message;  // one line for stderr when status != 0
};

/// --out, then outputs.dir, then $HYPINV_OUT_DIR, then ./hypinv-out.
inline std::filesystem::path resolve_out_dir(const CommandOptions& opts, const OutputOptions& outputs) {
  if (opts.out_dir) return *opts.out_dir;
  if (outputs.dir) return *outputs.dir;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return kDefaultOutDir;
}

namespace detail {

/// Lower statuses are overridden by more specific ones: 4 > 5 > 3 > 0.
inline int merge_status(int a, int b) {
  auto rank = [](int s) {
    switch (s) {
      case kExitSingular: return 3;
      case kExitTrivial: return 2;
      case kExitPass: return 0;
      default: return 1;
    }
  };
  return rank(b) > rank(a) ? b : a;
}

inline void put_entry(Report& r, const std::string& prefix, const HypothesisEntry& e) {
  const std::string base = prefix + "hypothesis." + e.name + ".";
  r.set(base + "pass", e.pass);
  for (const auto& [k, v] : e.witnesses) r.set(base + k, v);
  if (!e.note.empty()) r.set(base + "note", e.note);
}

inline void put_scenario(Report& r, const Scenario& sc, const ResolvedContour& rc) {
  r.set("scenario.name", sc.name);
  r.set("scenario.atoms", sc.op.atom_count());
  r.set("scenario.terms", sc.op.term_count());
  r.set("scenario.seed", std::to_string(sc.numerics.seed));
  r.set("scenario.nodes_per_segment", sc.numerics.nodes);
  r.set("contour.kind", rc.rectangle ? "rectangle" : "circle");
  r.set("contour.segments", rc.contour.segments().size());
  r.set("contour.length", rc.contour.length());
}

struct Stage {
  int status = kExitPass;
  std::string message;

  void fail(int s, std::string msg) {
    if (merge_status(status, s) != status || status == kExitPass) {
      status = merge_status(status, s);
      message = std::move(msg);
    }
  }
};

inline Stage stage_contour(const Scenario& sc, Report& r, std::optional<ResolvedContour>& out) {
  Stage st;
  try {
    out = resolve_contour(sc);
  } catch (const Error& e) {
    r.set("contour.error", e.what());
    st.fail(kExitHypothesis, std::string("contour: ") + e.what());
  }
  return st;
}

inline Stage stage_check(const Scenario& sc, const ResolvedContour& rc, Report& r, const std::string& prefix) {
  Stage st;
  HypothesisReport h = full_hypothesis_report(sc.op, rc.contour, sc.coeffs(), hypothesis_settings(sc, rc.rectangle));
  if (rc.x0) h.entries.push_back(x0_entry(*rc.x0));
  for (const auto& e : h.entries) put_entry(r, prefix, e);
  r.set(prefix + "hypotheses.all_pass", h.all_pass());
  for (const auto& e : h.entries) {
    if (e.pass) continue;
    if (e.name == "invertibility") {
      st.fail(kExitSingular, "hypothesis invertibility fails: " + e.note);
    } else {
      st.fail(kExitHypothesis, "hypothesis " + e.name + " fails" + (e.note.empty() ? "" : ": " + e.note));
    }
  }
  return st;
}

struct Built {
  ProjectionBundle bundle;
  std::optional<SubspaceBasis> subspace;
};

inline Stage stage_build(const Scenario& sc, const ResolvedContour& rc, Report& r, const std::string& prefix,
                         std::optional<Built>& out) {
  Stage st;
  const ProjectionSettings ps = projection_settings(sc.numerics);
  Built b;
  try {
    b.bundle = assemble(sc.op, rc.contour, sc.numerics.nodes, ps);
  } catch (const NearSingular& e) {
    r.set(prefix + "singular_node", e.node());
    r.set(prefix + "singular_z.re", e.z().real());
    r.set(prefix + "singular_z.im", e.z().imag());
    r.set(prefix + "singular_sigma_min", e.sigma_min());
    st.fail(kExitSingular, "singular node " + std::to_string(e.node()) + ": " + e.what());
    return st;
  } catch (const OnCurve& e) {
    r.set(prefix + "on_curve_distance", e.distance());
    st.fail(kExitHypothesis, e.what());
    return st;
  }
  const double norm_t = operator_norm(materialize(sc.op), sc.op.space());
  r.set(prefix + "nodes", b.bundle.quadrature_nodes_used);
  r.set(prefix + "min_certificate", b.bundle.min_certificate);
  r.set(prefix + "min_certificate_node", b.bundle.min_certificate_node);
  r.set(prefix + "sup_norm_B", b.bundle.sup_norm_B);
  r.set(prefix + "norm_L", operator_norm(b.bundle.L, sc.op.space()));
  try {
    const RieszResult oracle = riesz_of_T(sc.op, rc.contour, sc.numerics.delta);
    const double gap = operator_norm(b.bundle.PplusL - oracle.projector, sc.op.space());
    const double limit = sc.numerics.tolerances.oracle * (1.0 + norm_t);
    r.set(prefix + "oracle_gap", gap);
    r.set(prefix + "oracle_gap_limit", limit);
    r.set(prefix + "oracle_pass", gap <= limit);
    if (!(gap <= limit)) st.fail(kExitHypothesis, "oracle gap " + std::to_string(gap) + " exceeds " + std::to_string(limit));
  } catch (const OnCurve& e) {
    r.set(prefix + "oracle_on_curve.re", e.point().real());
    r.set(prefix + "oracle_on_curve.im", e.point().imag());
    st.fail(kExitSingular, e.what());
  }
  try {
    b.subspace = extract_subspace(b.bundle, sc.op.space());
    r.set(prefix + "subspace_dimension", b.subspace->dimension);
  } catch (const TrivialSubspace& e) {
    r.set(prefix + "subspace_dimension", e.rank());
    st.fail(kExitTrivial, e.what());
  }
  out = std::move(b);
  return st;
}

inline Stage stage_verify(const Scenario& sc, const ResolvedContour& rc, const Built& b, Report& r,
                          const std::string& prefix) {
  Stage st;
  CommutantSpec spec;
  spec.seed = derive_seed(sc.numerics.seed, 0xC0);
  spec.min_spectrum_distance = sc.numerics.delta;
  const CommutantSet samples = sample_commutant(materialize(sc.op), spec);
  VerificationReport v;
  try {
    v = verify_bundle(sc.op, rc.contour, b.bundle, samples, sc.numerics);
  } catch (const NearSingular& e) {
    r.set(prefix + "singular_node", e.node());
    st.fail(kExitSingular, "singular node " + std::to_string(e.node()) + ": " + e.what());
    return st;
  } catch (const OnCurve& e) {
    st.fail(kExitSingular, e.what());
    return st;
  }
  for (const Check& c : v.checks) {
    r.set(prefix + c.name + ".value", c.value);
    r.set(prefix + c.name + ".limit", c.limit);
    r.set(prefix + c.name + ".pass", c.pass);
  }
  for (const auto& [k, x] : v.info) r.set(prefix + "info." + k, x);
  for (const auto& rej : samples.rejected) r.set(prefix + "rejected." + rej.label, rej.reason);
  r.set(prefix + "all_pass", v.all_pass());
  for (const Check& c : v.checks) {
    if (c.pass) continue;
    if (c.name == "subspace_trivial") {
      st.fail(kExitTrivial, "extracted subspace is trivial");
    } else {
      st.fail(kExitHypothesis, "check " + c.name + " fails: " + std::to_string(c.value) + " > " +
                                   std::to_string(c.limit));
    }
  }
  return st;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

inline void write_built(const std::filesystem::path& dir, const Built& b) {
  write_matrix(dir / "P.json", b.bundle.P);
  write_matrix(dir / "L.json", b.bundle.L);
  write_matrix(dir / "PplusL.json", b.bundle.PplusL);
  if (b.subspace) write_matrix(dir / "basis.json", b.subspace->basis);
}

inline void finish(CommandResult& res, const LoadedConfig& cfg, const CommandOptions& opts, const Stage& st,
                   const Built* built) {
  res.status = st.status;
  res.message = st.message;
  res.report.set("status", st.status);
  if (!st.message.empty()) res.report.set("status.reason", st.message);
  res.report.set_config_digest(cfg.digest);
  res.out_dir = resolve_out_dir(opts, cfg.outputs);
  if (!opts.write) return;
  std::filesystem::create_directories(res.out_dir);
  if (built && cfg.outputs.matrices) write_built(res.out_dir, *built);
  write_json_file(res.out_dir / "report.json", res.report.to_json());
  if (cfg.outputs.text) write_text(res.out_dir / "report.txt", res.report.render_text());
}

}  // namespace detail

inline CommandResult run_check(const LoadedConfig& cfg, const CommandOptions& opts = {}) {
  CommandResult res{kExitPass, Report("check"), {}, {}};
  const Scenario& sc = cfg.scenario;
  std::optional<ResolvedContour> rc;
  detail::Stage st = detail::stage_contour(sc, res.report, rc);
  if (rc) {
    detail::put_scenario(res.report, sc, *rc);
    st = detail::stage_check(sc, *rc, res.report, "");
  }
  detail::finish(res, cfg, opts, st, nullptr);
  return res;
}

inline CommandResult run_build(const LoadedConfig& cfg, const CommandOptions& opts = {}) {
  CommandResult res{kExitPass, Report("build"), {}, {}};
  const Scenario& sc = cfg.scenario;
  std::optional<ResolvedContour> rc;
  detail::Stage st = detail::stage_contour(sc, res.report, rc);
  std::optional<detail::Built> built;
  if (rc) {
    detail::put_scenario(res.report, sc, *rc);
    st = detail::stage_check(sc, *rc, res.report, "check.");
    res.report.set("forced", opts.force);
    if (st.status == kExitPass || opts.force) {
      const detail::Stage b = detail::stage_build(sc, *rc, res.report, "build.", built);
      if (b.status != kExitPass) st.fail(b.status, b.message);
    }
  }
  detail::finish(res, cfg, opts, st, built ? &*built : nullptr);
  return res;
}

inline CommandResult run_verify(const LoadedConfig& cfg, const CommandOptions& opts = {}) {
  CommandResult res{kExitPass, Report("verify"), {}, {}};
  const Scenario& sc = cfg.scenario;
  std::optional<ResolvedContour> rc;
  detail::Stage st = detail::stage_contour(sc, res.report, rc);
  std::optional<detail::Built> built;
  if (rc) {
    detail::put_scenario(res.report, sc, *rc);
    st = detail::stage_check(sc, *rc, res.report, "check.");
    res.report.set("forced", opts.force);
    if (st.status == kExitPass || opts.force) {
      detail::Stage b = detail::stage_build(sc, *rc, res.report, "build.", built);
      if (built && b.status != kExitSingular) {
        const detail::Stage v = detail::stage_verify(sc, *rc, *built, res.report, "verify.");
        if (v.status != kExitPass) b.fail(v.status, v.message);
      }
      if (b.status != kExitPass) st.fail(b.status, b.message);
    }
  }
  detail::finish(res, cfg, opts, st, built ? &*built : nullptr);
  return res;
}

inline std::string sweep_csv(const SweepResult& s) {
  std::ostringstream os;
  os.precision(17);
  os << "N,nodes,oracle_gap,tail_bound,s_tail,tail_norm,sup_normB\n";
  for (const SweepRow& row : s.rows) {
    os << row.terms << ',' << row.nodes << ',' << row.oracle_gap << ',' << row.tail_bound << ',' << row.s_tail
       << ',' << row.tail_norm << ',' << row.sup_norm_B << '\n';
  }
  return os.str();
}

inline CommandResult run_sweep(const LoadedConfig& cfg, const CommandOptions& opts = {}) {
  CommandResult res{kExitPass, Report("sweep"), {}, {}};
  const Scenario& sc = cfg.scenario;
  std::optional<ResolvedContour> rc;
  detail::Stage st = detail::stage_contour(sc, res.report, rc);
  std::optional<SweepResult> sweep;
  if (rc) {
    detail::put_scenario(res.report, sc, *rc);
    if (sc.numerics.node_ladder.empty() && sc.numerics.truncation_ladder.empty()) {
      throw ConfigError("$.numerics.node_ladder", "sweep needs node_ladder or truncation_ladder");
    }
    try {
      sweep = convergence_sweep(sc, rc->contour);
    } catch (const NearSingular& e) {
      res.report.set("sweep.singular_node", e.node());
      st.fail(kExitSingular, "singular node " + std::to_string(e.node()) + ": " + e.what());
    } catch (const OnCurve& e) {
      st.fail(kExitSingular, e.what());
    }
  }
  if (sweep) {
    Report& r = res.report;
    r.set("sweep.rows", sweep->rows.size());
    r.set("sweep.floor", sweep->floor);
    r.set("sweep.gap_monotone", sweep->gap_monotone);
    r.set("sweep.tail_monotone", sweep->tail_monotone);
    for (std::size_t i = 0; i < sweep->rows.size(); ++i) {
      const SweepRow& row = sweep->rows[i];
      const std::string p = "sweep." + std::to_string(i) + ".";
      r.set(p + "N", row.terms);
      r.set(p + "nodes", row.nodes);
      r.set(p + "oracle_gap", row.oracle_gap);
      r.set(p + "tail_bound", row.tail_bound);
      r.set(p + "s_tail", row.s_tail);
      r.set(p + "tail_norm", row.tail_norm);
      r.set(p + "sup_normB", row.sup_norm_B);
    }
    for (std::size_t i = 0; i < sweep->violations.size(); ++i) {
      r.set("sweep.violation." + std::to_string(i), sweep->violations[i]);
    }
    if (!sweep->pass()) st.fail(kExitNonMonotone, sweep->violations.front());
  }
  detail::finish(res, cfg, opts, st, nullptr);
  if (sweep && opts.write) detail::write_text(res.out_dir / "sweep.csv", sweep_csv(*sweep));
  return res;
}

/// Configuration documents for the two disk examples; they reproduce
/// example1_scenario / example2_scenario with default parameters.
inline std::optional<nlohmann::json> example_config(const std::string& name) {
  using nlohmann::json;
  if (name == "ex1") {
    return json{{"schema", kScenarioSchema},
                {"name", "example1"},
                {"space", {{"kind", "disk-grid"}, {"radius", 1.0}, {"breaks", {0.5}}, {"radial", 8}, {"angular", 16}}},
                {"symbol", {{"kind", "identity"}}},
                {"perturbation",
                 {{"kind", "generator"}, {"generator", "masked-annulus"}, {"s", 0.1}, {"inner", 1.0 / 3.0},
                  {"outer", 2.0 / 3.0}}},
                {"contour", {{"kind", "circle"}, {"center", {0.0, 0.0}}, {"radius", 0.5}}},
                {"numerics",
                 {{"seed", 1}, {"nodes", 256}, {"node_ladder", {32, 64, 128, 256}}, {"truncation_ladder", {0, 1}}}}};
  }
  if (name == "ex2") {
    return json{{"schema", kScenarioSchema},
                {"name", "example2"},
                {"space", {{"kind", "disk-grid"}, {"radius", 2.0}, {"breaks", {1.0}}, {"radial", 8}, {"angular", 16}}},
                {"symbol", {{"kind", "identity"}}},
                {"perturbation",
                 {{"kind", "generator"}, {"generator", "damped-series"}, {"term_count", 8}, {"ratio", 0.5},
                  {"min_spectrum_distance", 0.1}, {"max_attempts", 32}}},
                {"contour", {{"kind", "circle"}, {"center", {0.0, 0.0}}, {"radius", 1.0}}},
                {"numerics",
                 {{"seed", 2},
                  {"nodes", 256},
                  {"node_ladder", {32, 64, 128, 256}},
                  {"truncation_ladder", {0, 1, 2, 3, 4, 5, 6, 7, 8}}}}};
  }
  return std::nullopt;
}

/// sup_z ||A(z)|| <= sum s_n and sup_z ||A(z) - A_N(z)|| <= sum_{n > N} s_n
/// at the build nodes, recorded per N.
inline detail::Stage record_series_bounds(const Scenario& sc, const Contour& g, Report& r) {
  detail::Stage st;
  const std::size_t count = sc.op.term_count();
  std::vector<std::size_t> cuts;
  for (std::size_t k = 0; k <= count; ++k) cuts.push_back(k);
  const QuadratureRule rule = quadrature(g, sc.numerics.nodes);
  const detail::TailSample ts = detail::tail_sample(sc.op, rule, cuts, sc.numerics.range_guard);
  const RealVector s = sc.op.perturbation().s_vector();
  bool holds = true;
  for (std::size_t cut = 0; cut < count; ++cut) {
    double tail = 0.0;
    for (std::size_t k = cut; k < count; ++k) tail += s(static_cast<Eigen::Index>(k));
    const std::string p = "example.tail." + std::to_string(cut) + ".";
    r.set(p + "sup_norm", ts.tail_norm[cut]);
    r.set(p + "s_sum", tail);
    const bool ok = ts.tail_norm[cut] <= tail * (1.0 + 1e-12);
    r.set(p + "holds", ok);
    holds = holds && ok;
  }
  r.set("example.sup_norm_A", count ? ts.tail_norm[0] : 0.0);
  r.set("example.sum_s", sc.op.perturbation().sum_s());
  r.set("example.nodes_checked", rule.size());
  r.set("example.series_bounds_hold", holds);
  if (!holds) st.fail(kExitHypothesis, "series bound sup ||A - A_N|| <= sum s_n violated");
  return st;
}

/// Generates ex1 or ex2 and runs check, build and verify into one report.
/// Unknown names raise ConfigError (status 2).
inline CommandResult run_example(const std::string& name, const CommandOptions& opts = {}) {
  const std::optional<nlohmann::json> doc = example_config(name);
  if (!doc) throw ConfigError("example", "unknown example \"" + name + "\", expected ex1 or ex2");
  const LoadedConfig cfg = load_config(*doc, opts.overrides);
  CommandResult res{kExitPass, Report("example"), {}, {}};
  res.report.set("example.name", name);
  const Scenario& sc = cfg.scenario;
  std::optional<ResolvedContour> rc;
  detail::Stage st = detail::stage_contour(sc, res.report, rc);
  std::optional<detail::Built> built;
  if (rc) {
    detail::put_scenario(res.report, sc, *rc);
    st = detail::stage_check(sc, *rc, res.report, "check.");
    if (st.status == kExitPass || opts.force) {
      detail::Stage b = detail::stage_build(sc, *rc, res.report, "build.", built);
      if (built && b.status != kExitSingular) {
        const detail::Stage v = detail::stage_verify(sc, *rc, *built, res.report, "verify.");
        if (v.status != kExitPass) b.fail(v.status, v.message);
      }
      if (b.status != kExitPass) st.fail(b.status, b.message);
    }
    if (sc.op.term_count() > 1) {
      const detail::Stage sb = record_series_bounds(sc, rc->contour, res.report);
      if (sb.status != kExitPass) st.fail(sb.status, sb.message);
    }
  }
  detail::finish(res, cfg, opts, st, built ? &*built : nullptr);
  if (opts.write) write_json_file(res.out_dir / "config.json", cfg.effective);
  return res;
}

}  // namespace hypinv
