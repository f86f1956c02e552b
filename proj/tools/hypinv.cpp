// hypinv: check | build | verify | sweep | example | corpus

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "hypinv/commands.hpp"
#include "hypinv/corpus.hpp"

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::size_t> nodes;
  std::optional<std::uint64_t> seed;
  bool force = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Flags& f, bool needs_config) {
  if (needs_config) cmd->add_option("--config", f.config, "scenario config (JSON)")->required();
  cmd->add_option("--out", f.out, std::string("output directory (default: $") + hypinv::kOutDirEnv + " or " +
                                      hypinv::kDefaultOutDir + ")");
  cmd->add_option("--nodes", f.nodes, "quadrature nodes per contour segment")->check(CLI::Range(2, 1 << 20));
  cmd->add_option("--seed", f.seed, "seed override");
  cmd->add_flag("--force", f.force, "build despite failed hypotheses");
  cmd->add_flag("-q,--quiet", f.quiet, "do not print the report");
}

hypinv::CommandOptions options_of(const Flags& f) {
  hypinv::CommandOptions o;
  o.overrides.nodes = f.nodes;
  o.overrides.seed = f.seed;
  if (!f.out.empty()) o.out_dir = f.out;
  o.force = f.force;
  return o;
}

int emit(const hypinv::CommandResult& r, const Flags& f) {
  if (!f.quiet) std::cout << r.report.render_text();
  if (r.status != hypinv::kExitPass) std::cerr << "hypinv: " << r.message << " (exit " << r.status << ")\n";
  return r.status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperinvariant subspaces of compact perturbations of multiplication operators"};
  app.require_subcommand(1);
  Flags f;
  std::string example_name;
  std::string corpus_dir;
  bool update = false;

  CLI::App* check = app.add_subcommand("check", "evaluate the hypotheses on a scenario");
  CLI::App* build = app.add_subcommand("build", "assemble P, L, P + L and the subspace basis");
  CLI::App* verify = app.add_subcommand("verify", "build and run the residual suite");
  CLI::App* sweep = app.add_subcommand("sweep", "truncation and node ladders");
  CLI::App* example = app.add_subcommand("example", "run a built-in example (ex1, ex2)");
  CLI::App* corpus = app.add_subcommand("corpus", "re-run corpus entries against their baselines");
  for (CLI::App* c : {check, build, verify, sweep}) add_common(c, f, true);
  add_common(example, f, false);
  example->add_option("name", example_name, "ex1 or ex2")->required();
  corpus->add_option("dir", corpus_dir, "corpus directory")->required();
  corpus->add_flag("--update", update, "rewrite baselines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : hypinv::kExitConfig;
  }

  try {
    if (corpus->parsed()) {
      const hypinv::CorpusSummary s = hypinv::regenerate_baselines(corpus_dir, update);
      for (const auto& e : s.entries) {
        std::cout << (e.match ? "match " : "DRIFT ") << e.entry << "  exit " << e.status << "  " << e.digest.substr(0, 16)
                  << (e.detail.empty() ? "" : "  " + e.detail) << '\n';
      }
      return s.all_match() ? hypinv::kExitPass : hypinv::kExitDrift;
    }
    const hypinv::CommandOptions opts = options_of(f);
    if (example->parsed()) return emit(hypinv::run_example(example_name, opts), f);
    const hypinv::LoadedConfig cfg = hypinv::load_config_file(f.config, opts.overrides);
    if (check->parsed()) return emit(hypinv::run_check(cfg, opts), f);
    if (build->parsed()) return emit(hypinv::run_build(cfg, opts), f);
    if (verify->parsed()) return emit(hypinv::run_verify(cfg, opts), f);
    return emit(hypinv::run_sweep(cfg, opts), f);
  } catch (const hypinv::ConfigError& e) {
    std::cerr << "hypinv: config error: " << e.what() << '\n';
    return hypinv::kExitConfig;
  } catch (const hypinv::Error& e) {
    std::cerr << "hypinv: " << e.what() << '\n';
    return hypinv::kExitHypothesis;
  }
}
