#pragma once

// Flat key -> value report with a JSON machine section and a text rendering.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>

#include "json.hpp"

#include "hypinv/digest.hpp"
#include "hypinv/errors.hpp"

namespace hypinv {

inline constexpr const char* kReportSchema = "hypinv.report/1";
inline constexpr const char* kArtifactVersion = "0.1.0";

using ReportValue = std::variant<bool, std::int64_t, double, std::string>;

class Report {
 public:
  Report() = default;
  explicit Report(std::string command) : command_(std::move(command)) {}

  const std::string& command() const noexcept { return command_; }
  const std::string& config_digest() const noexcept { return config_digest_; }
  void set_config_digest(std::string d) { config_digest_ = std::move(d); }

  void set(const std::string& key, bool v) { values_[key] = v; }
  void set(const std::string& key, const char* v) { values_[key] = std::string(v); }
  void set(const std::string& key, std::string v) { values_[key] = std::move(v); }
  void set(const std::string& key, std::int64_t v) { values_[key] = v; }
  void set(const std::string& key, int v) { values_[key] = static_cast<std::int64_t>(v); }
  void set(const std::string& key, std::size_t v) { values_[key] = static_cast<std::int64_t>(v); }
  /// Non-finite doubles are stored as the strings "inf", "-inf" and "nan".
  void set(const std::string& key, double v) {
    if (std::isfinite(v)) {
      values_[key] = v;
    } else {
      values_[key] = std::string(std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf"));
    }
  }

  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  const ReportValue& at(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw InvalidArgument("Report: no key '" + key + "'");
    return it->second;
  }
  template <class T>
  T get(const std::string& key) const {
    return std::get<T>(at(key));
  }
  const std::map<std::string, ReportValue>& values() const noexcept { return values_; }

  nlohmann::json values_json() const {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [k, v] : values_) {
      std::visit([&](const auto& x) { out[k] = x; }, v);
    }
    return out;
  }

  /// SHA-256 of the serialized machine-readable values.
  std::string values_digest() const { return sha256_hex(values_json().dump()); }

  nlohmann::json to_json() const {
    return {{"schema", kReportSchema},
            {"version", kArtifactVersion},
            {"command", command_},
            {"config_digest", config_digest_},
            {"values", values_json()}};
  }

  static Report from_json(const nlohmann::json& j) {
    Report r(j.at("command").get<std::string>());
    r.config_digest_ = j.at("config_digest").get<std::string>();
    for (const auto& [k, v] : j.at("values").items()) {
      if (v.is_boolean()) {
        r.values_[k] = v.get<bool>();
      } else if (v.is_number_integer()) {
        r.values_[k] = v.get<std::int64_t>();
      } else if (v.is_number_float()) {
        r.values_[k] = v.get<double>();
      } else if (v.is_string()) {
        r.values_[k] = v.get<std::string>();
      } else {
        throw InvalidArgument("Report: value of '" + k + "' is not a scalar");
      }
    }
    return r;
  }

  std::string render_text() const {
    std::ostringstream os;
    os << "hypinv " << command_ << " (report " << kArtifactVersion << ")\n";
    os << "config " << config_digest_ << "\n";
    std::size_t width = 0;
    for (const auto& [k, v] : values_) width = std::max(width, k.size());
    for (const auto& [k, v] : values_) {
      os << "  " << k << std::string(width - k.size() + 2, ' ');
      std::visit(
          [&](const auto& x) {
            using X = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<X, bool>) {
              os << (x ? "yes" : "no");
            } else if constexpr (std::is_same_v<X, double>) {
              char buf[32];
              std::snprintf(buf, sizeof buf, "%.6g", x);
              os << buf;
            } else {
              os << x;
            }
          },
          v);
      os << '\n';
    }
    return os.str();
  }

  friend bool operator==(const Report& a, const Report& b) {
    return a.command_ == b.command_ && a.config_digest_ == b.config_digest_ && a.values_ == b.values_;
  }

 private:
  std::string command_;
  std::string config_digest_;
  std::map<std::string, ReportValue> values_;
};

}  // namespace hypinv
