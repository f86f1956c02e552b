#pragma once

// Scenario configuration: a JSON document with schema id "hypinv.scenario/1".
// Every object is closed (unknown keys are errors) and every error names its
// location as a path like $.numerics.node_ladder[2].

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hypinv/contour.hpp"
#include "hypinv/digest.hpp"
#include "hypinv/errors.hpp"
#include "hypinv/matrix_io.hpp"
#include "hypinv/operator_model.hpp"
#include "hypinv/resolvent.hpp"
#include "hypinv/scenario.hpp"

namespace hypinv {

inline constexpr const char* kScenarioSchema = "hypinv.scenario/1";

struct OutputOptions {
  std::optional<std::string> dir;
  bool matrices = true;
  bool text = true;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> nodes;
};

struct LoadedConfig {
  Scenario scenario;
  OutputOptions outputs;
  nlohmann::json effective;  // document after overrides
  std::string digest;        // sha256 of effective.dump()
};

namespace detail {

using json = nlohmann::json;

/// A JSON object together with its path, for validated field access.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const json& raw() const noexcept { return j_; }
  const std::string& path() const noexcept { return path_; }
  std::string at_key(const std::string& key) const { return path_ + "." + key; }

  const Node& object(std::initializer_list<const char*> allowed) const {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
    for (const auto& [key, value] : j_.items()) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || key == a;
      if (!ok) throw ConfigError(at_key(key), "unknown key");
    }
    return *this;
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  Node child(const std::string& key) const {
    if (!j_.contains(key)) throw ConfigError(at_key(key), "missing required key");
    return Node(j_.at(key), at_key(key));
  }

  std::string string(const std::string& key) const {
    const Node c = child(key);
    if (!c.j_.is_string()) throw ConfigError(c.path_, "expected a string");
    return c.j_.get<std::string>();
  }
  std::string string_or(const std::string& key, std::string fallback) const {
    return has(key) ? string(key) : fallback;
  }

  bool boolean_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const Node c = child(key);
    if (!c.j_.is_boolean()) throw ConfigError(c.path_, "expected true or false");
    return c.j_.get<bool>();
  }

  double number(const std::string& key) const { return child(key).as_number(); }
  double number_or(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }
  double positive(const std::string& key) const {
    const double x = number(key);
    if (!(x > 0.0)) throw ConfigError(at_key(key), "must be positive");
    return x;
  }
  double positive_or(const std::string& key, double fallback) const { return has(key) ? positive(key) : fallback; }

  std::uint64_t count(const std::string& key) const { return child(key).as_count(); }
  std::uint64_t count_or(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? count(key) : fallback;
  }

  double as_number() const {
    if (!j_.is_number()) throw ConfigError(path_, "expected a number");
    const double x = j_.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path_, "expected a finite number");
    return x;
  }
  std::uint64_t as_count() const {
    if (!j_.is_number_integer() || (!j_.is_number_unsigned() && j_.get<std::int64_t>() < 0)) {
      throw ConfigError(path_, "expected a nonnegative integer");
    }
    return j_.get<std::uint64_t>();
  }
  Complex as_complex() const {
    const Complex z = complex_from_json(j_, path_);
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw ConfigError(path_, "non-finite value");
    return z;
  }

  std::vector<Node> array(const std::string& key) const {
    const Node c = child(key);
    if (!c.j_.is_array()) throw ConfigError(c.path_, "expected an array");
    std::vector<Node> out;
    for (std::size_t i = 0; i < c.j_.size(); ++i) out.emplace_back(c.j_[i], c.path_ + "[" + std::to_string(i) + "]");
    return out;
  }

  std::vector<double> numbers(const std::string& key) const {
    std::vector<double> out;
    for (const Node& n : array(key)) out.push_back(n.as_number());
    return out;
  }
  std::vector<std::size_t> counts(const std::string& key) const {
    std::vector<std::size_t> out;
    for (const Node& n : array(key)) out.push_back(static_cast<std::size_t>(n.as_count()));
    return out;
  }
  ComplexVector complexes(const std::string& key) const {
    const std::vector<Node> items = array(key);
    ComplexVector out(static_cast<Eigen::Index>(items.size()));
    for (std::size_t i = 0; i < items.size(); ++i) out(static_cast<Eigen::Index>(i)) = items[i].as_complex();
    return out;
  }

 private:
  const json& j_;
  std::string path_;
};

struct SpacePart {
  MeasureSpace space;
  std::optional<ComplexVector> centroids;  // disk grid sample points
};

inline SpacePart parse_space(const Node& n) {
  const std::string kind = n.string("kind");
  if (kind == "atoms") {
    n.object({"kind", "count", "weights", "measure", "p"});
    const double p = n.number_or("p", 2.0);
    if (!(p > 1.0)) throw ConfigError(n.at_key("p"), "must exceed 1");
    const std::string measure = n.string_or("measure", "atomic");
    MeasureKind mk;
    if (measure == "atomic") {
      mk = MeasureKind::atomic;
    } else if (measure == "continuous") {
      mk = MeasureKind::continuous;
    } else {
      throw ConfigError(n.at_key("measure"), "expected \"atomic\" or \"continuous\"");
    }
    std::vector<double> w;
    if (n.has("weights")) {
      w = n.numbers("weights");
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (!(w[i] > 0.0)) throw ConfigError(n.at_key("weights") + "[" + std::to_string(i) + "]", "must be positive");
      }
      if (n.has("count") && n.count("count") != w.size()) {
        throw ConfigError(n.at_key("count"), "disagrees with the length of weights");
      }
    } else {
      w.assign(static_cast<std::size_t>(n.count("count")), 1.0);
    }
    if (w.empty()) throw ConfigError(n.path(), "need at least one atom");
    return {MeasureSpace(std::move(w), mk, p), std::nullopt};
  }
  if (kind == "disk-grid") {
    n.object({"kind", "radius", "breaks", "radial", "angular", "p"});
    const double p = n.number_or("p", 2.0);
    if (!(p > 1.0)) throw ConfigError(n.at_key("p"), "must exceed 1");
    const double radius = n.positive("radius");
    std::vector<double> breaks = n.has("breaks") ? n.numbers("breaks") : std::vector<double>{};
    const auto radial = static_cast<std::size_t>(n.count("radial"));
    const auto angular = static_cast<std::size_t>(n.count("angular"));
    try {
      DiskGrid g = disk_grid(radius, std::move(breaks), radial, angular);
      return {MeasureSpace(g.space.weights(), MeasureKind::continuous, p), std::move(g.centroids)};
    } catch (const InvalidArgument& e) {
      throw ConfigError(n.path(), e.what());
    }
  }
  throw ConfigError(n.at_key("kind"), "expected \"atoms\" or \"disk-grid\"");
}

struct SymbolPart {
  ComplexVector f;
  std::optional<ComplexMatrix> unitary;  // set when a normal matrix was diagonalized
};

inline SymbolPart parse_symbol(const Node& n, const SpacePart& sp) {
  const std::string kind = n.string("kind");
  const std::size_t atoms = sp.space.atom_count();
  if (kind == "values") {
    n.object({"kind", "values"});
    ComplexVector f = n.complexes("values");
    if (static_cast<std::size_t>(f.size()) != atoms) {
      throw ConfigError(n.at_key("values"), "has " + std::to_string(f.size()) + " entries for " +
                                                std::to_string(atoms) + " atoms");
    }
    return {std::move(f), std::nullopt};
  }
  if (kind == "identity") {
    n.object({"kind"});
    if (!sp.centroids) throw ConfigError(n.at_key("kind"), "\"identity\" needs a disk-grid space");
    return {*sp.centroids, std::nullopt};
  }
  if (kind == "normal-matrix") {
    n.object({"kind", "matrix"});
    const ComplexMatrix m = matrix_from_json(n.child("matrix").raw(), n.at_key("matrix"));
    if (static_cast<std::size_t>(m.rows()) != atoms || m.rows() != m.cols()) {
      throw ConfigError(n.at_key("matrix"), "must be square with one row per atom");
    }
    if (!sp.space.unit_weights()) throw ConfigError(n.at_key("kind"), "\"normal-matrix\" needs unit weights");
    try {
      DiagonalForm d = normal_to_diagonal(m);
      return {d.op.symbol(), std::move(d.unitary)};
    } catch (const NotNormal& e) {
      throw ConfigError(n.at_key("matrix"), e.what());
    }
  }
  throw ConfigError(n.at_key("kind"), "expected \"values\", \"identity\" or \"normal-matrix\"");
}

inline ContourSpec parse_contour(const Node& n) {
  const std::string kind = n.string("kind");
  ContourSpec c;
  if (kind == "circle") {
    n.object({"kind", "center", "radius", "nodes_per_segment"});
    c.kind = ContourKind::circle;
    c.center = n.has("center") ? n.child("center").as_complex() : Complex{};
    c.radius = n.positive("radius");
  } else if (kind == "rectangle" || kind == "rectangle-thm4") {
    n.object({"kind", "x0", "rho", "nodes_per_segment"});
    c.kind = ContourKind::rectangle;
    c.x0 = n.number("x0");
    c.rho = n.positive("rho");
  } else if (kind == "auto") {
    n.object({"kind", "nodes_per_segment"});
    c.kind = ContourKind::automatic;
  } else {
    throw ConfigError(n.at_key("kind"), "expected \"circle\", \"rectangle\", \"rectangle-thm4\" or \"auto\"");
  }
  return c;
}

inline Contour contour_of(const ContourSpec& c) {
  return c.kind == ContourKind::circle ? circle(c.center, c.radius) : rectangle_contour(c.x0, c.rho);
}

inline void require_increasing(const std::vector<std::size_t>& v, const std::string& where) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] <= v[i - 1]) throw ConfigError(where + "[" + std::to_string(i) + "]", "ladder must increase strictly");
  }
}

inline Numerics parse_numerics(const Node& n, const Node* contour) {
  n.object({"seed", "nodes", "node_ladder", "truncation_ladder", "delta", "cluster_eps", "cluster_min_mass",
            "near_singular", "range_guard", "summability_cap", "plateau_tol", "x0_candidates", "x0_guard",
            "workers", "tolerances"});
  Numerics x;
  x.seed = n.count("seed");
  x.nodes = static_cast<std::size_t>(n.count_or("nodes", x.nodes));
  if (contour && contour->has("nodes_per_segment")) {
    const auto per = static_cast<std::size_t>(contour->count("nodes_per_segment"));
    if (n.has("nodes") && per != x.nodes) {
      throw ConfigError(contour->at_key("nodes_per_segment"), "disagrees with $.numerics.nodes");
    }
    x.nodes = per;
  }
  if (x.nodes < 2) throw ConfigError(n.at_key("nodes"), "need at least 2 nodes per segment");
  if (n.has("node_ladder")) {
    x.node_ladder = n.counts("node_ladder");
    require_increasing(x.node_ladder, n.at_key("node_ladder"));
    for (std::size_t i = 0; i < x.node_ladder.size(); ++i) {
      if (x.node_ladder[i] < 2) {
        throw ConfigError(n.at_key("node_ladder") + "[" + std::to_string(i) + "]", "need at least 2 nodes");
      }
    }
  }
  if (n.has("truncation_ladder")) {
    x.truncation_ladder = n.counts("truncation_ladder");
    require_increasing(x.truncation_ladder, n.at_key("truncation_ladder"));
  }
  x.delta = n.positive_or("delta", x.delta);
  x.cluster_eps = n.positive_or("cluster_eps", 0.0);
  x.cluster_min_mass = n.positive_or("cluster_min_mass", 0.0);
  x.near_singular = n.positive_or("near_singular", x.near_singular);
  x.range_guard = n.positive_or("range_guard", x.range_guard);
  x.summability_cap = n.positive_or("summability_cap", x.summability_cap);
  x.plateau_tol = n.positive_or("plateau_tol", x.plateau_tol);
  x.x0_candidates = static_cast<std::size_t>(n.count_or("x0_candidates", x.x0_candidates));
  if (x.x0_candidates < 1) throw ConfigError(n.at_key("x0_candidates"), "need at least one candidate");
  x.x0_guard = n.positive_or("x0_guard", x.x0_guard);
  x.workers = static_cast<std::size_t>(n.count_or("workers", x.workers));
  if (n.has("tolerances")) {
    const Node t = n.child("tolerances");
    t.object({"oracle", "idempotency", "eigenvalue", "commutation", "invariance", "right_inverse", "sweep_floor"});
    Tolerances& tol = x.tolerances;
    tol.oracle = t.positive_or("oracle", tol.oracle);
    tol.idempotency = t.positive_or("idempotency", tol.idempotency);
    tol.eigenvalue = t.positive_or("eigenvalue", tol.eigenvalue);
    tol.commutation = t.positive_or("commutation", tol.commutation);
    tol.invariance = t.positive_or("invariance", tol.invariance);
    tol.right_inverse = t.positive_or("right_inverse", tol.right_inverse);
    tol.sweep_floor = t.positive_or("sweep_floor", tol.sweep_floor);
  }
  return x;
}

inline CompactPerturbation parse_perturbation(const Node& n, const MultiplicationOperator& m,
                                              const ContourSpec& contour, std::uint64_t seed) {
  const std::string kind = n.string("kind");
  const std::size_t atoms = m.atom_count();
  if (kind == "none") {
    n.object({"kind"});
    return {};
  }
  if (kind == "terms") {
    n.object({"kind", "terms"});
    std::vector<RankOneTerm> terms;
    for (const Node& t : n.array("terms")) {
      t.object({"s", "u", "v"});
      RankOneTerm term{t.positive("s"), t.complexes("u"), t.complexes("v")};
      if (static_cast<std::size_t>(term.u.size()) != atoms) throw ConfigError(t.at_key("u"), "length differs from atom count");
      if (static_cast<std::size_t>(term.v.size()) != atoms) throw ConfigError(t.at_key("v"), "length differs from atom count");
      terms.push_back(std::move(term));
    }
    return CompactPerturbation(std::move(terms));
  }
  if (kind == "matrix") {
    n.object({"kind", "matrix"});
    const ComplexMatrix k = matrix_from_json(n.child("matrix").raw(), n.at_key("matrix"));
    if (static_cast<std::size_t>(k.rows()) != atoms || k.rows() != k.cols()) {
      throw ConfigError(n.at_key("matrix"), "must be square with one row per atom");
    }
    return svd_of_K(k, m.space());
  }
  if (kind == "generator") {
    const std::string name = n.string("generator");
    try {
      if (name == "masked-annulus") {
        n.object({"kind", "generator", "s", "inner", "outer"});
        const double inner = n.number("inner"), outer = n.number("outer");
        if (!(inner < outer)) throw ConfigError(n.at_key("outer"), "must exceed inner");
        return masked_annulus_perturbation(m, n.positive("s"), inner, outer, seed);
      }
      if (name == "damped-series") {
        n.object({"kind", "generator", "term_count", "ratio", "min_spectrum_distance", "max_attempts"});
        const auto count = static_cast<std::size_t>(n.count("term_count"));
        const double ratio = n.positive("ratio");
        const double min_d = n.number_or("min_spectrum_distance", 0.0);
        const auto attempts = static_cast<std::size_t>(n.count_or("max_attempts", 32));
        if (min_d > 0.0 && contour.kind == ContourKind::automatic) {
          throw ConfigError(n.at_key("min_spectrum_distance"), "needs an explicit circle or rectangle contour");
        }
        if (!(min_d > 0.0)) return damped_series_perturbation(m, count, ratio, seed);
        return redraw_until_clear(m, contour_of(contour), min_d, seed, attempts, [&](std::uint64_t sd) {
          return damped_series_perturbation(m, count, ratio, sd);
        });
      }
      if (name == "gaussian") {
        n.object({"kind", "generator", "term_count", "scale", "decay"});
        return gaussian_perturbation(m, static_cast<std::size_t>(n.count("term_count")), n.positive("scale"),
                                     n.positive("decay"), seed);
      }
    } catch (const InvalidArgument& e) {
      throw ConfigError(n.path(), e.what());
    }
    throw ConfigError(n.at_key("generator"), "expected \"masked-annulus\", \"damped-series\" or \"gaussian\"");
  }
  throw ConfigError(n.at_key("kind"), "expected \"none\", \"terms\", \"matrix\" or \"generator\"");
}

/// K' = W K W^H in terms: u' = W u, v' = W v (W unitary, unit weights).
inline CompactPerturbation rotate(const CompactPerturbation& k, const ComplexMatrix& w) {
  std::vector<RankOneTerm> terms;
  for (const auto& t : k.terms()) terms.push_back({t.s, w * t.u, w * t.v});
  return CompactPerturbation(std::move(terms));
}

inline OutputOptions parse_outputs(const Node& n) {
  n.object({"dir", "matrices", "text"});
  OutputOptions o;
  if (n.has("dir")) o.dir = n.string("dir");
  o.matrices = n.boolean_or("matrices", true);
  o.text = n.boolean_or("text", true);
  return o;
}

}  // namespace detail

/// Writes --seed / --nodes into the document so the digest covers them.
inline nlohmann::json apply_overrides(nlohmann::json doc, const Overrides& o) {
  if (!doc.is_object()) throw ConfigError("$", "expected an object");
  if (o.seed || o.nodes) {
    if (!doc.contains("numerics")) doc["numerics"] = nlohmann::json::object();
    if (!doc["numerics"].is_object()) throw ConfigError("$.numerics", "expected an object");
  }
  if (o.seed) doc["numerics"]["seed"] = *o.seed;
  if (o.nodes) {
    doc["numerics"]["nodes"] = *o.nodes;
    if (doc.contains("contour") && doc["contour"].is_object()) doc["contour"].erase("nodes_per_segment");
  }
  return doc;
}

inline LoadedConfig load_config(const nlohmann::json& input, const Overrides& overrides = {}) {
  using detail::Node;
  nlohmann::json doc = apply_overrides(input, overrides);
  const Node root(doc, "$");
  root.object({"schema", "name", "space", "symbol", "perturbation", "coefficients", "contour", "numerics", "outputs"});
  const std::string schema = root.string("schema");
  if (schema != kScenarioSchema) {
    throw ConfigError("$.schema", "unsupported schema \"" + schema + "\", expected \"" + kScenarioSchema + "\"");
  }
  const std::string name = root.string_or("name", "scenario");
  const Node contour_node = root.child("contour");
  const ContourSpec contour = detail::parse_contour(contour_node);
  const Numerics numerics = detail::parse_numerics(root.child("numerics"), &contour_node);

  const detail::SpacePart sp = detail::parse_space(root.child("space"));
  const detail::SymbolPart sym = detail::parse_symbol(root.child("symbol"), sp);
  MultiplicationOperator m(sp.space, sym.f);
  CompactPerturbation k = root.has("perturbation")
                              ? detail::parse_perturbation(root.child("perturbation"), m, contour, numerics.seed)
                              : CompactPerturbation{};
  if (sym.unitary) k = detail::rotate(k, *sym.unitary);

  std::optional<FactoredCoefficients> coeffs;
  if (root.has("coefficients")) {
    const Node c = root.child("coefficients");
    c.object({"a", "b"});
    std::vector<double> a = c.numbers("a");
    if (a.size() != k.size()) {
      throw ConfigError(c.at_key("a"), "has " + std::to_string(a.size()) + " entries for " +
                                           std::to_string(k.size()) + " terms");
    }
    std::vector<double> b;
    if (c.has("b")) {
      b = c.numbers("b");
    } else {
      for (std::size_t i = 0; i < a.size(); ++i) b.push_back(a[i] > 0.0 ? k[i].s / a[i] : 0.0);
    }
    try {
      FactoredCoefficients fc(std::move(a), std::move(b));
      fc.require_matches(k);
      coeffs = std::move(fc);
    } catch (const Error& e) {
      throw ConfigError(c.path(), e.what());
    }
  }

  OutputOptions outputs = root.has("outputs") ? detail::parse_outputs(root.child("outputs")) : OutputOptions{};
  Scenario s{name, PerturbedOperator(std::move(m), std::move(k)), contour, numerics, std::move(coeffs)};
  LoadedConfig out{std::move(s), std::move(outputs), doc, sha256_hex(doc.dump())};
  return out;
}

inline LoadedConfig load_config_file(const std::filesystem::path& path, const Overrides& overrides = {}) {
  return load_config(read_json_file(path), overrides);
}

}  // namespace hypinv
