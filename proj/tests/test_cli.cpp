#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hypinv/hypinv.hpp"
#include "oracles.hpp"

using namespace hypinv;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json canonical_doc() {
  return json{{"schema", kScenarioSchema},
              {"name", "canonical"},
              {"space", {{"kind", "atoms"}, {"count", 2}}},
              {"symbol", {{"kind", "values"}, {"values", {0, 2}}}},
              {"perturbation", {{"kind", "terms"}, {"terms", json::array({{{"s", 1}, {"u", {1, 0}}, {"v", {0, 1}}}})}}},
              {"contour", {{"kind", "circle"}, {"center", {0, 0}}, {"radius", 1}}},
              {"numerics", {{"seed", 7}, {"nodes", 64}}}};
}

json corpus_config(const std::string& entry) {
  std::ifstream in(fs::path(HYPINV_CORPUS_DIR) / entry / "config.json");
  return json::parse(in);
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hypinv-test-" + name);
  fs::remove_all(p);
  return p;
}

std::string location_of(const json& doc) {
  try {
    load_config(doc);
  } catch (const ConfigError& e) {
    return e.location();
  }
  return "";
}

}  // namespace

TEST(Config, CanonicalLoads) {
  const LoadedConfig c = load_config(canonical_doc());
  EXPECT_EQ(c.scenario.op.atom_count(), 2u);
  EXPECT_EQ(c.scenario.numerics.nodes, 64u);
  EXPECT_EQ(c.digest.size(), 64u);
  EXPECT_EQ(c.digest, load_config(canonical_doc()).digest);
}

TEST(Config, ErrorsCarryTheirLocation) {
  json d = canonical_doc();
  d["numerics"]["nodez"] = 64;
  EXPECT_EQ(location_of(d), "$.numerics.nodez");

  d = canonical_doc();
  d["symbol"]["values"] = {0, 2, 3};
  EXPECT_EQ(location_of(d), "$.symbol.values");

  d = canonical_doc();
  d["contour"]["radius"] = -1;
  EXPECT_NE(location_of(d).find("$.contour"), std::string::npos);

  d = canonical_doc();
  d["schema"] = "hypinv.scenario/9";
  EXPECT_EQ(location_of(d), "$.schema");

  d = canonical_doc();
  d["perturbation"]["terms"][0]["s"] = -1;
  EXPECT_NE(location_of(d).find("$.perturbation"), std::string::npos);

  EXPECT_EQ(location_of(json::array()), "$");
}

TEST(Config, OverridesChangeTheDigest) {
  Overrides o;
  o.nodes = 32;
  o.seed = 99;
  const LoadedConfig c = load_config(canonical_doc(), o);
  EXPECT_EQ(c.scenario.numerics.nodes, 32u);
  EXPECT_EQ(c.scenario.numerics.seed, 99u);
  EXPECT_NE(c.digest, load_config(canonical_doc()).digest);
  EXPECT_EQ(c.effective["numerics"]["nodes"], 32);
}

TEST(Config, ExampleDocumentsReproduceTheGenerators) {
  const LoadedConfig one = load_config(*example_config("ex1"));
  const Scenario e1 = example1_scenario({});
  EXPECT_EQ(materialize(one.scenario.op), materialize(e1.op));
  EXPECT_EQ(one.scenario.numerics.truncation_ladder, e1.numerics.truncation_ladder);
  const LoadedConfig two = load_config(*example_config("ex2"));
  const Scenario e2 = example2_scenario({});
  EXPECT_EQ(materialize(two.scenario.op), materialize(e2.op));
  EXPECT_EQ(two.scenario.numerics.node_ladder, e2.numerics.node_ladder);
  EXPECT_FALSE(example_config("ex3").has_value());
}

TEST(Config, NormalMatrixSymbolKeepsTheSpectrum) {
  ComplexMatrix n(2, 2);
  n << 0.0, 1.0, -1.0, 0.0;
  json d = canonical_doc();
  d["symbol"] = {{"kind", "normal-matrix"}, {"matrix", matrix_to_json(n)}};
  d["perturbation"]["terms"][0]["s"] = 0.25;
  const LoadedConfig c = load_config(d);
  // N + K with K = 0.25 e0 (x) e1 is similar to the loaded operator.
  ComplexMatrix want = n;
  want(0, 1) += 0.25;
  const ComplexMatrix got = materialize(c.scenario.op);
  EXPECT_NEAR(std::abs(got.trace() - want.trace()), 0.0, 1e-13);
  EXPECT_NEAR(std::abs(got.determinant() - (want(0, 0) * want(1, 1) - want(0, 1) * want(1, 0))), 0.0, 1e-13);

  ComplexMatrix j(2, 2);
  j << 1.0, 1.0, 0.0, 1.0;
  d["symbol"]["matrix"] = matrix_to_json(j);
  EXPECT_EQ(location_of(d), "$.symbol.matrix");
}

TEST(Report, JsonRoundTrip) {
  Report r("verify");
  r.set_config_digest("abc");
  r.set("a.flag", true);
  r.set("a.count", std::size_t{7});
  r.set("a.value", 0.125);
  r.set("a.inf", std::numeric_limits<double>::infinity());
  r.set("a.text", "x y");
  const Report back = Report::from_json(json::parse(r.to_json().dump()));
  EXPECT_EQ(back, r);
  EXPECT_EQ(back.get<std::string>("a.inf"), "inf");
  EXPECT_EQ(back.values_digest(), r.values_digest());
  EXPECT_NE(r.render_text().find("a.flag"), std::string::npos);
}

TEST(MatrixIo, FileRoundTripIsExact) {
  const fs::path dir = scratch("matrix");
  fs::create_directories(dir);
  const ComplexMatrix m = oracle::random_matrix(3, 4, 8);
  write_matrix(dir / "m.json", m);
  EXPECT_EQ(read_matrix(dir / "m.json"), m);
  EXPECT_EQ(matrix_from_json(matrix_to_json(m)), m);
  EXPECT_THROW(matrix_from_json(json{{"rows", 1}, {"cols", 1}, {"data", json::array()}}), ConfigError);
  fs::remove_all(dir);
}

TEST(Commands, OutDirPrecedence) {
  CommandOptions opts;
  OutputOptions outputs;
  ::unsetenv(kOutDirEnv);
  EXPECT_EQ(resolve_out_dir(opts, outputs), fs::path(kDefaultOutDir));
  ::setenv(kOutDirEnv, "/tmp/from-env", 1);
  EXPECT_EQ(resolve_out_dir(opts, outputs), fs::path("/tmp/from-env"));
  outputs.dir = "/tmp/from-config";
  EXPECT_EQ(resolve_out_dir(opts, outputs), fs::path("/tmp/from-config"));
  opts.out_dir = "/tmp/from-flag";
  EXPECT_EQ(resolve_out_dir(opts, outputs), fs::path("/tmp/from-flag"));
  ::unsetenv(kOutDirEnv);
}

TEST(Commands, StatusPrecedence) {
  using detail::merge_status;
  EXPECT_EQ(merge_status(kExitHypothesis, kExitSingular), kExitSingular);
  EXPECT_EQ(merge_status(kExitTrivial, kExitHypothesis), kExitTrivial);
  EXPECT_EQ(merge_status(kExitSingular, kExitTrivial), kExitSingular);
  EXPECT_EQ(merge_status(kExitPass, kExitHypothesis), kExitHypothesis);
}

TEST(Commands, CheckBuildVerifyWriteTheirFiles) {
  const LoadedConfig cfg = load_config(canonical_doc());
  CommandOptions opts;
  opts.out_dir = scratch("canonical").string();

  const CommandResult c = run_check(cfg, opts);
  EXPECT_EQ(c.status, kExitPass) << c.message;
  EXPECT_TRUE(fs::exists(*opts.out_dir / fs::path("report.json")));
  EXPECT_TRUE(c.report.get<bool>("hypothesis.separation.pass"));

  const CommandResult b = run_build(cfg, opts);
  EXPECT_EQ(b.status, kExitPass) << b.message;
  for (const char* f : {"P.json", "L.json", "PplusL.json", "basis.json", "report.txt"}) {
    EXPECT_TRUE(fs::exists(fs::path(*opts.out_dir) / f)) << f;
  }
  const ComplexMatrix pl = read_matrix(fs::path(*opts.out_dir) / "PplusL.json");
  EXPECT_NEAR(std::abs(pl(0, 1) + 0.5), 0.0, 1e-12);

  const CommandResult v = run_verify(cfg, opts);
  EXPECT_EQ(v.status, kExitPass) << v.message;
  EXPECT_TRUE(v.report.get<bool>("verify.all_pass"));
  const Report on_disk = Report::from_json(read_json_file(fs::path(*opts.out_dir) / "report.json"));
  EXPECT_EQ(on_disk, v.report);
  fs::remove_all(*opts.out_dir);
}

TEST(Commands, ReportsAreDeterministic) {
  CommandOptions opts;
  opts.write = false;
  const CommandResult a = run_verify(load_config(canonical_doc()), opts);
  const CommandResult b = run_verify(load_config(canonical_doc()), opts);
  EXPECT_EQ(a.report.values_digest(), b.report.values_digest());
}

TEST(Commands, ExitCodesForFailureModes) {
  CommandOptions opts;
  opts.write = false;
  EXPECT_EQ(run_command("check", corpus_config("atom-on-contour"), opts).status, kExitHypothesis);
  EXPECT_EQ(run_command("check", corpus_config("malformed"), opts).status, kExitConfig);
  EXPECT_EQ(run_command("check", corpus_config("contour-through-eigenvalue"), opts).status, kExitSingular);
  opts.force = true;
  const CommandResult s = run_command("build", corpus_config("contour-through-eigenvalue"), opts);
  EXPECT_EQ(s.status, kExitSingular);
  EXPECT_EQ(s.report.get<std::int64_t>("build.singular_node"), 0);
  EXPECT_NE(s.message.find("node 0"), std::string::npos) << s.message;
  EXPECT_EQ(run_command("build", corpus_config("trivial-subspace"), opts).status, kExitTrivial);
  const CommandResult bad = run_command("frobnicate", canonical_doc(), opts);
  EXPECT_EQ(bad.status, kExitConfig);
  EXPECT_THROW(run_example("ex3", opts), ConfigError);
}

TEST(Commands, SweepWritesCsv) {
  const LoadedConfig cfg = load_config(corpus_config("canonical-sweep"));
  CommandOptions opts;
  opts.out_dir = scratch("sweep").string();
  const CommandResult r = run_sweep(cfg, opts);
  EXPECT_EQ(r.status, kExitPass) << r.message;
  EXPECT_TRUE(r.report.get<bool>("sweep.gap_monotone"));
  std::ifstream csv(fs::path(*opts.out_dir) / "sweep.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_NE(header.find("oracle_gap"), std::string::npos);
  fs::remove_all(*opts.out_dir);

  json d = canonical_doc();
  EXPECT_THROW(run_sweep(load_config(d), opts), ConfigError);
}

TEST(Corpus, BaselinesMatch) {
  const CorpusSummary s = regenerate_baselines(HYPINV_CORPUS_DIR, false, 1);
  EXPECT_GE(s.entries.size(), 10u);
  for (const auto& e : s.entries) EXPECT_TRUE(e.match) << e.entry << ": " << e.detail;
}
