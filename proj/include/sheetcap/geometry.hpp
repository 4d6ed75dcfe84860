#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sheetcap {

// Point in the two-parameter time domain [0, inf)^2.
struct TimePoint {
  double s1 = 0.0;
  double s2 = 0.0;

  friend bool operator==(const TimePoint&, const TimePoint&) = default;
};

// Point in d-dimensional space.
struct SpacePoint {
  std::vector<double> coords;

  int dimension() const { return static_cast<int>(coords.size()); }
};

inline SpacePoint origin(int d) { return SpacePoint{std::vector<double>(static_cast<std::size_t>(d), 0.0)}; }

inline double sup_norm(const TimePoint& p) { return std::max(p.s1, p.s2); }

inline double sup_dist(const TimePoint& p, const TimePoint& q) {
  return std::max(std::abs(p.s1 - q.s1), std::abs(p.s2 - q.s2));
}

inline double sup_norm(const SpacePoint& x) {
  double m = 0.0;
  for (double c : x.coords) m = std::max(m, std::abs(c));
  return m;
}

// p dominates q in both coordinates.
inline bool succ1(const TimePoint& p, const TimePoint& q) {
  return p.s1 >= q.s1 && p.s2 >= q.s2;
}

// p dominates q in the first coordinate and is dominated in the second.
inline bool succ2(const TimePoint& p, const TimePoint& q) {
  return p.s1 >= q.s1 && p.s2 <= q.s2;
}

// The two coordinatewise partial orders, evaluated both ways round. Together
// they totally order the quadrant: at least one flag holds for every pair.
struct OrderRelation {
  bool p_succ1_q = false;
  bool p_succ2_q = false;
  bool q_succ1_p = false;
  bool q_succ2_p = false;

  bool any() const { return p_succ1_q || p_succ2_q || q_succ1_p || q_succ2_p; }
};

inline OrderRelation partial_order(const TimePoint& p, const TimePoint& q) {
  return {succ1(p, q), succ2(p, q), succ1(q, p), succ2(q, p)};
}

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace detail

// Finite discretization of a compact subset of [0, inf)^2. Atoms are the
// support points, cell_weights the Lebesgue mass each atom stands for, and
// mesh_gauge the largest sup-norm diameter of any cell. c1/c2 are the
// smallest/largest sup norm over the atoms.
class CompactMesh {
 public:
  CompactMesh(std::vector<TimePoint> atoms, std::vector<double> cell_weights,
              double mesh_gauge)
      : atoms_(std::move(atoms)),
        cell_weights_(std::move(cell_weights)),
        mesh_gauge_(mesh_gauge) {
    detail::require(!atoms_.empty(), "CompactMesh: atoms must be nonempty");
    detail::require(cell_weights_.size() == atoms_.size(),
                    "CompactMesh: one cell weight per atom required");
    detail::require(mesh_gauge_ > 0.0 && std::isfinite(mesh_gauge_),
                    "CompactMesh: mesh_gauge must be positive and finite");
    for (const TimePoint& a : atoms_) {
      detail::require(a.s1 >= 0.0 && a.s2 >= 0.0 && std::isfinite(a.s1) && std::isfinite(a.s2),
                      "CompactMesh: atoms must have finite nonnegative coordinates");
    }
    for (double w : cell_weights_) {
      detail::require(w > 0.0 && std::isfinite(w),
                      "CompactMesh: cell weights must be positive and finite");
    }
    check_distinct();
    c1_ = sup_norm(atoms_.front());
    c2_ = c1_;
    for (const TimePoint& a : atoms_) {
      const double r = sup_norm(a);
      c1_ = std::min(c1_, r);
      c2_ = std::max(c2_, r);
    }
    detail::require(c2_ > 0.0, "CompactMesh: c2 must be positive");
  }

  const std::vector<TimePoint>& atoms() const { return atoms_; }
  const std::vector<double>& cell_weights() const { return cell_weights_; }
  double mesh_gauge() const { return mesh_gauge_; }
  double c1() const { return c1_; }
  double c2() const { return c2_; }
  std::size_t size() const { return atoms_.size(); }

 private:
  void check_distinct() const {
    std::vector<std::size_t> order(atoms_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
      return atoms_[i].s1 != atoms_[j].s1 ? atoms_[i].s1 < atoms_[j].s1
                                          : atoms_[i].s2 < atoms_[j].s2;
    });
    for (std::size_t k = 1; k < order.size(); ++k) {
      detail::require(!(atoms_[order[k - 1]] == atoms_[order[k]]),
                      "CompactMesh: atoms must be distinct");
    }
  }

  std::vector<TimePoint> atoms_;
  std::vector<double> cell_weights_;
  double mesh_gauge_;
  double c1_ = 0.0;
  double c2_ = 0.0;
};

// Uniform n1 x n2 cell-center mesh of the rectangle [t_lo, t_hi]. Atoms sit
// at cell centers so no two cells share an atom and each weight is a plain
// cell area.
inline CompactMesh build_rect_mesh(const TimePoint& t_lo, const TimePoint& t_hi,
                                   int n1, int n2) {
  detail::require(n1 >= 1 && n2 >= 1, "build_rect_mesh: need n1, n2 >= 1");
  detail::require(t_lo.s1 >= 0.0 && t_lo.s2 >= 0.0,
                  "build_rect_mesh: rectangle must lie in [0, inf)^2");
  detail::require(t_lo.s1 < t_hi.s1 && t_lo.s2 < t_hi.s2,
                  "build_rect_mesh: degenerate rectangle (zero side length)");
  const double dx = (t_hi.s1 - t_lo.s1) / n1;
  const double dy = (t_hi.s2 - t_lo.s2) / n2;
  std::vector<TimePoint> atoms;
  atoms.reserve(static_cast<std::size_t>(n1) * n2);
  for (int i = 0; i < n1; ++i) {
    for (int j = 0; j < n2; ++j) {
      atoms.push_back({t_lo.s1 + (i + 0.5) * dx, t_lo.s2 + (j + 0.5) * dy});
    }
  }
  std::vector<double> weights(atoms.size(), dx * dy);
  return CompactMesh(std::move(atoms), std::move(weights), std::max(dx, dy));
}

// n equally spaced atoms at the midpoints of n equal sub-segments. Weights
// are Euclidean sub-segment lengths (the 1-dimensional Lebesgue mass); the
// gauge is the sup-norm sub-segment length.
inline CompactMesh build_segment_mesh(const TimePoint& a, const TimePoint& b, int n) {
  detail::require(n >= 1, "build_segment_mesh: need n >= 1");
  detail::require(a.s1 >= 0.0 && a.s2 >= 0.0 && b.s1 >= 0.0 && b.s2 >= 0.0,
                  "build_segment_mesh: endpoints must lie in [0, inf)^2");
  detail::require(!(a == b), "build_segment_mesh: coincident endpoints");
  std::vector<TimePoint> atoms;
  atoms.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double u = (k + 0.5) / n;
    atoms.push_back({a.s1 + u * (b.s1 - a.s1), a.s2 + u * (b.s2 - a.s2)});
  }
  const double euclid = std::hypot(b.s1 - a.s1, b.s2 - a.s2);
  std::vector<double> weights(atoms.size(), euclid / n);
  return CompactMesh(std::move(atoms), std::move(weights), sup_dist(a, b) / n);
}

// Keeps the atoms with sup norm at least min_norm, as in the exhaustion
// E_n = { t in E : |t| >= 1/n } used to remove the origin.
inline CompactMesh restrict_mesh(const CompactMesh& m, double min_norm) {
  std::vector<TimePoint> atoms;
  std::vector<double> weights;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (sup_norm(m.atoms()[i]) >= min_norm) {
      atoms.push_back(m.atoms()[i]);
      weights.push_back(m.cell_weights()[i]);
    }
  }
  if (atoms.empty()) {
    throw std::runtime_error("restrict_mesh: no atom has sup norm >= min_norm");
  }
  return CompactMesh(std::move(atoms), std::move(weights), m.mesh_gauge());
}

// Convenience mesh over an explicit scatter of atoms: uniform unit weights
// and, unless given, a gauge equal to the smallest positive pairwise
// sup distance (or the largest atom norm for a singleton).
inline CompactMesh make_scatter_mesh(std::vector<TimePoint> atoms, double gauge = 0.0) {
  detail::require(!atoms.empty(), "make_scatter_mesh: atoms must be nonempty");
  if (gauge <= 0.0) {
    if (atoms.size() == 1) {
      gauge = std::max(sup_norm(atoms.front()), 1.0);
    } else {
      gauge = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < atoms.size(); ++i) {
        for (std::size_t j = i + 1; j < atoms.size(); ++j) {
          const double r = sup_dist(atoms[i], atoms[j]);
          if (r > 0.0) gauge = std::min(gauge, r);
        }
      }
      if (!std::isfinite(gauge)) gauge = 1.0;
    }
  }
  std::vector<double> weights(atoms.size(), 1.0 / static_cast<double>(atoms.size()));
  return CompactMesh(std::move(atoms), std::move(weights), gauge);
}

}  // namespace sheetcap
