#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sheetcap/geometry.hpp"

namespace sheetcap {

// Mesh document format shared with the harness:
// {atoms: [[s1, s2], ...], cell_weights: [...], mesh_gauge, c1, c2}

inline nlohmann::ordered_json mesh_to_json(const CompactMesh& mesh) {
  nlohmann::ordered_json j;
  auto& atoms = j["atoms"] = nlohmann::ordered_json::array();
  for (const TimePoint& a : mesh.atoms()) atoms.push_back({a.s1, a.s2});
  j["cell_weights"] = mesh.cell_weights();
  j["mesh_gauge"] = mesh.mesh_gauge();
  j["c1"] = mesh.c1();
  j["c2"] = mesh.c2();
  return j;
}

inline CompactMesh mesh_from_json(const nlohmann::json& j) {
  if (!j.contains("atoms") || !j["atoms"].is_array()) {
    throw std::invalid_argument("mesh document: missing atoms array");
  }
  std::vector<TimePoint> atoms;
  for (const auto& entry : j["atoms"]) {
    if (!entry.is_array() || entry.size() != 2) {
      throw std::invalid_argument("mesh document: each atom must be [s1, s2]");
    }
    atoms.push_back({entry[0].get<double>(), entry[1].get<double>()});
  }
  std::vector<double> weights;
  if (j.contains("cell_weights")) {
    weights = j["cell_weights"].get<std::vector<double>>();
  } else {
    weights.assign(atoms.size(), 1.0 / static_cast<double>(std::max<std::size_t>(atoms.size(), 1)));
  }
  double gauge = 0.0;
  if (j.contains("mesh_gauge")) gauge = j["mesh_gauge"].get<double>();
  CompactMesh mesh = gauge > 0.0
                         ? CompactMesh(std::move(atoms), std::move(weights), gauge)
                         : make_scatter_mesh(std::move(atoms));
  // Stored radii, when present, must agree with the atoms they describe.
  for (const char* key : {"c1", "c2"}) {
    if (j.contains(key)) {
      const double stored = j[key].get<double>();
      const double actual = std::string(key) == "c1" ? mesh.c1() : mesh.c2();
      if (std::abs(stored - actual) > 1e-9 * std::max(1.0, actual)) {
        throw std::invalid_argument(std::string("mesh document: stored ") + key +
                                    " disagrees with atoms");
      }
    }
  }
  return mesh;
}

}  // namespace sheetcap
