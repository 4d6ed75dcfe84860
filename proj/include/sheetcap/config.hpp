#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sheetcap/geometry.hpp"
#include "sheetcap/mesh_io.hpp"

namespace sheetcap {

// Config validation failures are collected and thrown together, so a bad
// config is diagnosed in one pass.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> issues)
      : std::runtime_error(join(issues)), issues_(std::move(issues)) {}

  const std::vector<std::string>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues) {
    std::ostringstream os;
    os << "config invalid (" << issues.size() << " issue" << (issues.size() == 1 ? "" : "s")
       << "):";
    for (const auto& issue : issues) os << "\n  - " << issue;
    return os.str();
  }

  std::vector<std::string> issues_;
};

// Typed accessors over a JSON config that record problems instead of
// throwing; callers check the error list once at the end.
class ConfigReader {
 public:
  ConfigReader(const nlohmann::json& j, std::vector<std::string>& errors, std::string scope = "")
      : j_(j), errors_(errors), scope_(std::move(scope)) {}

  const nlohmann::json& raw() const { return j_; }
  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(key, "has the wrong type");
      return fallback;
    }
  }

  template <typename T>
  T require(const std::string& key, T fallback = T{}) {
    if (!has(key)) {
      fail(key, "is required");
      return fallback;
    }
    return get<T>(key, fallback);
  }

  double positive(const std::string& key, double fallback) {
    const double v = get<double>(key, fallback);
    if (!(v > 0.0)) fail(key, "must be positive");
    return v;
  }

  long positive_count(const std::string& key, long fallback) {
    const long v = get<long>(key, fallback);
    if (v < 1) fail(key, "must be a positive count");
    return v;
  }

  void fail(const std::string& key, const std::string& what) {
    errors_.push_back(scoped(key) + " " + what);
  }

  std::string scoped(const std::string& key) const {
    return scope_.empty() ? key : scope_ + "." + key;
  }

 private:
  const nlohmann::json& j_;
  std::vector<std::string>& errors_;
  std::string scope_;
};

inline std::optional<TimePoint> parse_time_point(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    return std::nullopt;
  }
  return TimePoint{j[0].get<double>(), j[1].get<double>()};
}

// Mesh specs accepted in configs:
//   {"type": "rect", "lo": [1,1], "hi": [2,2], "n1": 16, "n2": 16}
//   {"type": "segment", "from": [1,1], "to": [2,2], "n": 32}
//   {"type": "atoms", "atoms": [[s1,s2],...], "cell_weights": [...]?, "mesh_gauge": g?}
//   {"type": "file", "path": "mesh.json"}
inline std::optional<CompactMesh> parse_mesh(const nlohmann::json& j,
                                             std::vector<std::string>& errors,
                                             const std::string& scope) {
  if (!j.is_object()) {
    errors.push_back(scope + " must be a mesh object");
    return std::nullopt;
  }
  ConfigReader r(j, errors, scope);
  const std::string type = r.get<std::string>("type", "rect");
  try {
    if (type == "rect") {
      std::optional<TimePoint> lo = TimePoint{0.0, 0.0};
      if (j.contains("lo")) lo = parse_time_point(j["lo"]);
      std::optional<TimePoint> hi;
      if (j.contains("hi")) hi = parse_time_point(j["hi"]);
      if (!lo || !hi) {
        errors.push_back(scope + ".lo/.hi must be [s1, s2] pairs");
        return std::nullopt;
      }
      const int n1 = static_cast<int>(r.positive_count("n1", 1));
      const int n2 = static_cast<int>(r.positive_count("n2", 1));
      return build_rect_mesh(*lo, *hi, n1, n2);
    }
    if (type == "segment") {
      std::optional<TimePoint> from;
      std::optional<TimePoint> to;
      if (j.contains("from")) from = parse_time_point(j["from"]);
      if (j.contains("to")) to = parse_time_point(j["to"]);
      if (!from || !to) {
        errors.push_back(scope + ".from/.to must be [s1, s2] pairs");
        return std::nullopt;
      }
      return build_segment_mesh(*from, *to, static_cast<int>(r.positive_count("n", 1)));
    }
    if (type == "atoms") {
      return mesh_from_json(j);
    }
    if (type == "file") {
      const std::string path = r.require<std::string>("path");
      if (path.empty()) return std::nullopt;
      std::ifstream in(path);
      if (!in) {
        errors.push_back(scope + ".path: cannot open " + path);
        return std::nullopt;
      }
      nlohmann::json doc = nlohmann::json::parse(in);
      return mesh_from_json(doc);
    }
    errors.push_back(scope + ".type must be rect, segment, atoms or file");
  } catch (const std::exception& e) {
    errors.push_back(scope + ": " + e.what());
  }
  return std::nullopt;
}

inline nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file: " + path});
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({std::string("config parse error in ") + path + ": " + e.what()});
  }
}

}  // namespace sheetcap
