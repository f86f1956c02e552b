#pragma once

// Regression corpus: one directory per entry holding config.json,
// baseline.json and note.md. A baseline pins the command, its exit status
// and the digest of the machine-readable report values.

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "hypinv/commands.hpp"
#include "hypinv/config.hpp"
#include "hypinv/digest.hpp"
#include "hypinv/matrix_io.hpp"
#include "hypinv/parallel.hpp"
#include "hypinv/report.hpp"

namespace hypinv {

inline constexpr const char* kBaselineSchema = "hypinv.baseline/1";

/// Dispatches check|build|verify|sweep on a configuration document.
/// Schema violations come back as status 2 with the location in the report.
inline CommandResult run_command(const std::string& command, const nlohmann::json& doc,
                                 const CommandOptions& opts) {
  try {
    const LoadedConfig cfg = load_config(doc, opts.overrides);
    if (command == "check") return run_check(cfg, opts);
    if (command == "build") return run_build(cfg, opts);
    if (command == "verify") return run_verify(cfg, opts);
    if (command == "sweep") return run_sweep(cfg, opts);
    throw ConfigError("command", "unknown command \"" + command + "\"");
  } catch (const ConfigError& e) {
    CommandResult res{kExitConfig, Report(command), {}, e.what()};
    res.report.set("status", static_cast<int>(kExitConfig));
    res.report.set("error.location", e.location());
    res.report.set("error.message", std::string(e.what()));
    return res;
  }
}

struct CorpusOutcome {
  std::string entry;
  bool match = false;
  int status = 0;
  std::string digest;
  std::string detail;  // why it drifted
};

struct CorpusSummary {
  std::vector<CorpusOutcome> entries;

  bool all_match() const {
    return std::all_of(entries.begin(), entries.end(), [](const CorpusOutcome& e) { return e.match; });
  }
};

inline std::vector<std::filesystem::path> corpus_entries(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error("corpus: " + dir.string() + " is not a directory");
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_directory() && std::filesystem::exists(e.path() / "config.json")) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Re-runs every entry and compares against its baseline. With `update`
/// the baselines are rewritten instead (command and force are kept).
inline CorpusSummary regenerate_baselines(const std::filesystem::path& dir, bool update = false,
                                          std::size_t workers = 1) {
  const std::vector<std::filesystem::path> entries = corpus_entries(dir);
  CorpusSummary out;
  out.entries = ordered_map(entries.size(), workers, [&](std::size_t i) {
    const std::filesystem::path& path = entries[i];
    CorpusOutcome o;
    o.entry = path.filename().string();
    nlohmann::json baseline = nlohmann::json::object();
    const bool have_baseline = std::filesystem::exists(path / "baseline.json");
    if (have_baseline) baseline = read_json_file(path / "baseline.json");
    const std::string command = baseline.value("command", std::string("verify"));
    CommandOptions opts;
    opts.force = baseline.value("force", false);
    opts.write = false;

    CommandResult res;
    try {
      res = run_command(command, read_json_file(path / "config.json"), opts);
    } catch (const ConfigError& e) {
      res = CommandResult{kExitConfig, Report(command), {}, e.what()};
      res.report.set("status", static_cast<int>(kExitConfig));
      res.report.set("error.location", e.location());
      res.report.set("error.message", std::string(e.what()));
    }
    o.status = res.status;
    o.digest = res.report.values_digest();

    if (update) {
      nlohmann::json b{{"schema", kBaselineSchema},
                       {"command", command},
                       {"force", opts.force},
                       {"exit_status", res.status},
                       {"digest", o.digest},
                       {"values", res.report.values_json()}};
      write_json_file(path / "baseline.json", b);
      o.match = true;
      o.detail = "updated";
      return o;
    }
    if (!have_baseline) {
      o.detail = "no baseline.json";
      return o;
    }
    const int want_status = baseline.value("exit_status", -1);
    const std::string want_digest = baseline.value("digest", std::string());
    if (want_status != res.status) {
      o.detail = "exit status " + std::to_string(res.status) + ", baseline " + std::to_string(want_status);
    } else if (want_digest != o.digest) {
      o.detail = "report digest " + o.digest.substr(0, 12) + ", baseline " + want_digest.substr(0, 12);
      if (baseline.contains("values")) {
        const nlohmann::json now = res.report.values_json();
        for (const auto& [k, v] : baseline["values"].items()) {
          if (!now.contains(k)) {
            o.detail += "; missing " + k;
            break;
          }
          if (now[k] != v) {
            o.detail += "; first difference at " + k;
            break;
          }
        }
      }
    } else {
      o.match = true;
    }
    return o;
  });
  return out;
}

}  // namespace hypinv
