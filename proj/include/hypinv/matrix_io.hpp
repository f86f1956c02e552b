#pragma once

// Matrices as JSON: {"rows": r, "cols": c, "data": [[re, im], ...]} in
// row-major order. Doubles are written with shortest round-trip digits.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

#include "hypinv/errors.hpp"
#include "hypinv/numkernel.hpp"

namespace hypinv {

inline nlohmann::json complex_to_json(Complex z) { return nlohmann::json::array({z.real(), z.imag()}); }

/// Accepts a number (real) or a [re, im] pair. `where` names the location
/// for error messages.
inline Complex complex_from_json(const nlohmann::json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  throw ConfigError(where, "expected a number or a [re, im] pair");
}

inline nlohmann::json matrix_to_json(const ComplexMatrix& m) {
  nlohmann::json data = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(complex_to_json(m(i, j)));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline ComplexMatrix matrix_from_json(const nlohmann::json& j, const std::string& where = "$") {
  if (!j.is_object()) throw ConfigError(where, "expected a matrix object");
  for (const auto& [key, value] : j.items()) {
    if (key != "rows" && key != "cols" && key != "data") throw ConfigError(where + "." + key, "unknown key");
  }
  auto is_count = [&](const char* key) {
    return j.contains(key) && j[key].is_number_integer() && j[key].get<std::int64_t>() >= 0;
  };
  if (!is_count("rows")) throw ConfigError(where + ".rows", "expected a count");
  if (!is_count("cols")) throw ConfigError(where + ".cols", "expected a count");
  if (!j.contains("data") || !j["data"].is_array()) throw ConfigError(where + ".data", "expected an array");
  const auto rows = j["rows"].get<Eigen::Index>();
  const auto cols = j["cols"].get<Eigen::Index>();
  const auto& data = j["data"];
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw ConfigError(where + ".data", "has " + std::to_string(data.size()) + " entries, expected " +
                                           std::to_string(rows * cols));
  }
  ComplexMatrix m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c, ++k) {
      m(i, c) = complex_from_json(data[k], where + ".data[" + std::to_string(k) + "]");
      if (!std::isfinite(m(i, c).real()) || !std::isfinite(m(i, c).imag())) {
        throw ConfigError(where + ".data[" + std::to_string(k) + "]", "non-finite entry");
      }
    }
  }
  return m;
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("$", "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("$", std::string("parse error: ") + e.what());
  }
}

inline void write_matrix(const std::filesystem::path& path, const ComplexMatrix& m) {
  write_json_file(path, matrix_to_json(m));
}

inline ComplexMatrix read_matrix(const std::filesystem::path& path) {
  return matrix_from_json(read_json_file(path), path.filename().string());
}

}  // namespace hypinv
