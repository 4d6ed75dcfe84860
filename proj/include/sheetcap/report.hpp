#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sheetcap/capacity.hpp"
#include "sheetcap/constants.hpp"
#include "sheetcap/montecarlo.hpp"

namespace sheetcap {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kSoftwareVersion = "sheetcap 0.1.0";

// One checked inequality lhs <= rhs + slack. The slack is stored next to the
// verdict so the arithmetic is recomputable from the report alone.
struct Verdict {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  double margin = 0.0;  // rhs + slack - lhs
  bool pass = false;
  std::string note;
};

inline Verdict make_verdict(std::string name, double lhs, double rhs, double slack,
                            std::string note = {}) {
  Verdict v;
  v.name = std::move(name);
  v.lhs = lhs;
  v.rhs = rhs;
  v.slack = slack;
  v.margin = rhs + slack - lhs;
  v.pass = v.margin >= 0.0;
  v.note = std::move(note);
  return v;
}

inline nlohmann::ordered_json to_json(const Verdict& v) {
  nlohmann::ordered_json j;
  j["name"] = v.name;
  j["lhs"] = v.lhs;
  j["rhs"] = v.rhs;
  j["slack"] = v.slack;
  j["margin"] = v.margin;
  j["pass"] = v.pass;
  if (!v.note.empty()) j["note"] = v.note;
  return j;
}

inline bool all_pass(const std::vector<Verdict>& vs) {
  for (const Verdict& v : vs) {
    if (!v.pass) return false;
  }
  return true;
}

inline nlohmann::ordered_json to_json(const MCEstimate& e) {
  nlohmann::ordered_json j;
  j["mean"] = e.mean;
  j["std_error"] = e.std_error;
  j["n_samples"] = e.n_samples;
  j["ci95_lo"] = e.ci95_lo;
  j["ci95_hi"] = e.ci95_hi;
  return j;
}

inline nlohmann::ordered_json to_json(const CapacityResult& r) {
  nlohmann::ordered_json j;
  j["energy"] = r.energy;
  j["capacity"] = r.capacity;
  j["duality_gap"] = r.duality_gap;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["weights"] = r.optimal_measure.weights;
  return j;
}

inline nlohmann::ordered_json to_json(const ConstantSet& c) {
  nlohmann::ordered_json j;
  j["c3"] = c.lemma.c3;
  j["c3_proof_variant"] = c.lemma.c3_proof;
  j["c4"] = c.lemma.c4;
  j["c5"] = c.lemma.c5;
  j["c6"] = c.lemma.c6;
  j["A1"] = c.theorem.A1;
  j["A2"] = c.theorem.A2;
  j["A3"] = c.theorem.A3;
  j["A4"] = c.theorem.A4;
  j["A5"] = c.theorem.A5;
  j["alt_A1"] = c.alt_A1;
  j["alt_A2"] = c.alt_A2;
  j["weaker_lower"] = weaker_lower_constant(c);
  j["weaker_upper"] = weaker_upper_constant(c);
  return j;
}

inline std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
  return buf;
}

// Flat CSV table with a fixed column order.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

inline void write_csv(std::ostream& os, const CsvTable& table) {
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    os << (c ? "," : "") << table.columns[c];
  }
  os << "\n";
  os.precision(17);
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << row[c];
    os << "\n";
  }
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace sheetcap
