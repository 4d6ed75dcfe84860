#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sheetcap/gaussian.hpp"
#include "sheetcap/geometry.hpp"
#include "sheetcap/rng.hpp"

namespace sheetcap {

// Covariance of one coordinate of the (2,d)-Brownian sheet:
// E[B(p) B(q)] = (p.s1 ^ q.s1)(p.s2 ^ q.s2).
inline double sheet_covariance(const TimePoint& p, const TimePoint& q) {
  return std::min(p.s1, q.s1) * std::min(p.s2, q.s2);
}

// Per-coordinate variance of B(s) - B(t) when s dominates t coordinatewise:
// s2 (s1 - t1) + t1 (s2 - t2).
inline double increment_variance_ord1(const TimePoint& s, const TimePoint& t) {
  if (!succ1(s, t)) {
    throw std::invalid_argument("increment_variance_ord1: s must dominate t coordinatewise");
  }
  return s.s2 * (s.s1 - t.s1) + t.s1 * (s.s2 - t.s2);
}

// A realized field over a mesh: one row per atom, one column per coordinate.
struct SheetSample {
  CompactMesh mesh;
  Eigen::MatrixXd values;
  SeedSpec seed;

  int dimension() const { return static_cast<int>(values.cols()); }
};

inline void write_sample_csv(std::ostream& os, const SheetSample& sample) {
  os << "s1,s2";
  for (int c = 0; c < sample.dimension(); ++c) os << ",v" << c;
  os << "\n";
  for (std::size_t i = 0; i < sample.mesh.size(); ++i) {
    os << sample.mesh.atoms()[i].s1 << "," << sample.mesh.atoms()[i].s2;
    for (int c = 0; c < sample.dimension(); ++c) {
      os << "," << sample.values(static_cast<Eigen::Index>(i), c);
    }
    os << "\n";
  }
}

namespace detail {

inline void require_dimension(int d) {
  if (d < 1) throw std::invalid_argument("field sampler: dimension d must be >= 1");
}

}  // namespace detail

// Exact sampler over mesh atoms: the atom covariance is factored once, after
// which each draw costs one triangular multiply per coordinate. Coordinates
// are independent copies; the normal stream is consumed coordinate-major.
class ExactSheetSampler {
 public:
  ExactSheetSampler(CompactMesh mesh, int d)
      : mesh_(std::move(mesh)), d_(d), gauss_(covariance_matrix(mesh_)) {
    detail::require_dimension(d);
  }

  static Eigen::MatrixXd covariance_matrix(const CompactMesh& mesh) {
    const auto n = static_cast<Eigen::Index>(mesh.size());
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i; j < n; ++j) {
        cov(i, j) = cov(j, i) = sheet_covariance(mesh.atoms()[static_cast<std::size_t>(i)],
                                                 mesh.atoms()[static_cast<std::size_t>(j)]);
      }
    }
    return cov;
  }

  const CompactMesh& mesh() const { return mesh_; }
  int dimension() const { return d_; }

  Eigen::MatrixXd draw_values(SeedSpec seed) const {
    NormalStream normals(seed);
    return gauss_.draw(d_, normals);
  }

  SheetSample draw(SeedSpec seed) const { return {mesh_, draw_values(seed), seed}; }

 private:
  CompactMesh mesh_;
  int d_;
  GaussianSampler gauss_;
};

inline SheetSample sample_exact(const CompactMesh& mesh, int d, SeedSpec seed) {
  return ExactSheetSampler(mesh, d).draw(seed);
}

// White-noise construction on the full grid of [0, t_hi]: independent cell
// increments with variance equal to cell area, accumulated by 2-dimensional
// prefix sums. Exact in law at the grid nodes; axis nodes are exactly zero.
// Node atoms are ordered row-major in (i, j); increments are drawn
// coordinate-major, cells row-major.
inline SheetSample sample_grid_chentsov(const TimePoint& t_hi, int n1, int n2, int d,
                                        SeedSpec seed) {
  detail::require_dimension(d);
  if (n1 < 1 || n2 < 1) throw std::invalid_argument("sample_grid_chentsov: need n1, n2 >= 1");
  if (!(t_hi.s1 > 0.0 && t_hi.s2 > 0.0)) {
    throw std::invalid_argument("sample_grid_chentsov: t_hi must be coordinatewise positive");
  }
  const double h1 = t_hi.s1 / n1;
  const double h2 = t_hi.s2 / n2;
  const double cell_sd = std::sqrt(h1 * h2);

  NormalStream normals(seed);
  const Eigen::Index rows = static_cast<Eigen::Index>(n1 + 1) * (n2 + 1);
  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(rows, d);
  Eigen::MatrixXd node(n1 + 1, n2 + 1);
  for (int c = 0; c < d; ++c) {
    node.setZero();
    for (int i = 1; i <= n1; ++i) {
      for (int j = 1; j <= n2; ++j) {
        const double inc = cell_sd * normals.next();
        node(i, j) = node(i - 1, j) + node(i, j - 1) - node(i - 1, j - 1) + inc;
      }
    }
    for (int i = 0; i <= n1; ++i) {
      for (int j = 0; j <= n2; ++j) {
        values(static_cast<Eigen::Index>(i) * (n2 + 1) + j, c) = node(i, j);
      }
    }
  }

  std::vector<TimePoint> atoms;
  std::vector<double> weights;
  atoms.reserve(static_cast<std::size_t>(rows));
  weights.reserve(static_cast<std::size_t>(rows));
  for (int i = 0; i <= n1; ++i) {
    const double wx = (i == 0 || i == n1) ? h1 / 2.0 : h1;
    for (int j = 0; j <= n2; ++j) {
      const double wy = (j == 0 || j == n2) ? h2 / 2.0 : h2;
      atoms.push_back({i * h1, j * h2});
      weights.push_back(wx * wy);
    }
  }
  CompactMesh mesh(std::move(atoms), std::move(weights), std::max(h1, h2));
  return {std::move(mesh), std::move(values), seed};
}

namespace detail {

// Fragment atom list for a decomposition anchored at t: t first, then the
// targets with any occurrence of t dropped.
inline std::vector<TimePoint> anchored_atoms(const TimePoint& t,
                                             const std::vector<TimePoint>& targets) {
  std::vector<TimePoint> atoms{t};
  for (const TimePoint& s : targets) {
    if (!(s == t)) atoms.push_back(s);
  }
  return atoms;
}

}  // namespace detail

// Beyond-t decomposition along the coordinatewise order (Chentsov picture):
//   B(s) = B(t) + sqrt(t2) b1(s1 - t1) + sqrt(t1) b2(s2 - t2) + W(s - t)
// with b1, b2 d-dimensional Brownian motions and W an independent sheet.
// The returned fragment holds {t} followed by the targets; its joint law
// matches sample_exact on the same atoms. Draw order: B(t), then the b1
// term, the b2 term, and the fresh-sheet term, each coordinate-major.
inline SheetSample sample_decomposition_ord1(const TimePoint& t,
                                             const std::vector<TimePoint>& targets, int d,
                                             SeedSpec seed) {
  detail::require_dimension(d);
  for (const TimePoint& s : targets) {
    if (!succ1(s, t)) {
      throw std::invalid_argument("sample_decomposition_ord1: targets must dominate t");
    }
  }
  const std::vector<TimePoint> atoms = detail::anchored_atoms(t, targets);
  const auto n = static_cast<Eigen::Index>(atoms.size());
  const Eigen::Index k = n - 1;  // targets beyond t

  NormalStream normals(seed);
  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(n, d);

  const double sd_t = std::sqrt(t.s1 * t.s2);
  for (int c = 0; c < d; ++c) values(0, c) = sd_t * normals.next();

  if (k > 0) {
    Eigen::MatrixXd cov1(k, k), cov2(k, k), cov_sheet(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      const TimePoint& si = atoms[static_cast<std::size_t>(i + 1)];
      for (Eigen::Index j = 0; j < k; ++j) {
        const TimePoint& sj = atoms[static_cast<std::size_t>(j + 1)];
        const double d1 = std::min(si.s1 - t.s1, sj.s1 - t.s1);
        const double d2 = std::min(si.s2 - t.s2, sj.s2 - t.s2);
        cov1(i, j) = t.s2 * d1;
        cov2(i, j) = t.s1 * d2;
        cov_sheet(i, j) = d1 * d2;
      }
    }
    const Eigen::MatrixXd term1 = GaussianSampler(cov1).draw(d, normals);
    const Eigen::MatrixXd term2 = GaussianSampler(cov2).draw(d, normals);
    const Eigen::MatrixXd fresh = GaussianSampler(cov_sheet).draw(d, normals);
    for (Eigen::Index i = 0; i < k; ++i) {
      values.row(i + 1) = values.row(0) + term1.row(i) + term2.row(i) + fresh.row(i);
    }
  }
  return {make_scatter_mesh(atoms), std::move(values), seed};
}

// Brownian bridge marginals entering the second decomposition: the process
// x -> B(t1, x) - (x/t2) B(t1, t2) on [0, t2], pinned to an exact zero at
// both ends, with covariance t1 (x ^ y - x y / t2).
inline Eigen::MatrixXd sample_bridge_values(const std::vector<double>& s2_points, double t1,
                                            double t2, int d, NormalStream& normals) {
  if (!(t2 > 0.0)) throw std::invalid_argument("sample_bridge_values: need t2 > 0");
  if (t1 < 0.0) throw std::invalid_argument("sample_bridge_values: need t1 >= 0");
  const auto n = static_cast<Eigen::Index>(s2_points.size());
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = s2_points[static_cast<std::size_t>(i)];
    if (x < 0.0 || x > t2) {
      throw std::invalid_argument("sample_bridge_values: points must lie in [0, t2]");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const double y = s2_points[static_cast<std::size_t>(j)];
      cov(i, j) = t1 * (std::min(x, y) - x * y / t2);
    }
  }
  // The bridge is pinned at both ends; rounding in x*y/t2 must not turn the
  // exactly-zero variance there into dust, so zero those rows outright.
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = s2_points[static_cast<std::size_t>(i)];
    if (x == 0.0 || x == t2) {
      cov.row(i).setZero();
      cov.col(i).setZero();
    }
  }
  return GaussianSampler(cov).draw(d, normals);
}

// Beyond-t decomposition along the mixed order (s1 >= t1, s2 <= t2):
//   B(s) = V(s2) + U(s) + (s2/t2) B(t)
// with V the Brownian bridge above and U an independent field with
// covariance (s1 ^ s1' - t1)(s2 ^ s2'). Draw order: B(t), bridge, U.
inline SheetSample sample_decomposition_ord2(const TimePoint& t,
                                             const std::vector<TimePoint>& targets, int d,
                                             SeedSpec seed) {
  detail::require_dimension(d);
  if (!(t.s2 > 0.0)) throw std::invalid_argument("sample_decomposition_ord2: need t.s2 > 0");
  for (const TimePoint& s : targets) {
    if (!succ2(s, t)) {
      throw std::invalid_argument(
          "sample_decomposition_ord2: targets must satisfy s1 >= t1 and s2 <= t2");
    }
  }
  const std::vector<TimePoint> atoms = detail::anchored_atoms(t, targets);
  const auto n = static_cast<Eigen::Index>(atoms.size());
  const Eigen::Index k = n - 1;

  NormalStream normals(seed);
  Eigen::MatrixXd values = Eigen::MatrixXd::Zero(n, d);

  const double sd_t = std::sqrt(t.s1 * t.s2);
  for (int c = 0; c < d; ++c) values(0, c) = sd_t * normals.next();

  if (k > 0) {
    std::vector<double> s2_points(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < k; ++i) {
      s2_points[static_cast<std::size_t>(i)] = atoms[static_cast<std::size_t>(i + 1)].s2;
    }
    const Eigen::MatrixXd bridge = sample_bridge_values(s2_points, t.s1, t.s2, d, normals);

    Eigen::MatrixXd cov_u(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      const TimePoint& si = atoms[static_cast<std::size_t>(i + 1)];
      for (Eigen::Index j = 0; j < k; ++j) {
        const TimePoint& sj = atoms[static_cast<std::size_t>(j + 1)];
        cov_u(i, j) = (std::min(si.s1, sj.s1) - t.s1) * std::min(si.s2, sj.s2);
      }
    }
    const Eigen::MatrixXd u_term = GaussianSampler(cov_u).draw(d, normals);

    for (Eigen::Index i = 0; i < k; ++i) {
      const double ratio = atoms[static_cast<std::size_t>(i + 1)].s2 / t.s2;
      values.row(i + 1) = bridge.row(i) + u_term.row(i) + ratio * values.row(0);
    }
  }
  return {make_scatter_mesh(atoms), std::move(values), seed};
}

// Additive Brownian motion Z(s1, s2) = X(s1) + Y(s2) over the mesh atoms.
// X and Y are realized at the sorted distinct first/second coordinates by
// cumulative independent increments, X first, coordinate-major within each.
class AdditiveBmSampler {
 public:
  AdditiveBmSampler(CompactMesh mesh, int d) : mesh_(std::move(mesh)), d_(d) {
    detail::require_dimension(d);
    for (const TimePoint& a : mesh_.atoms()) {
      u_.push_back(a.s1);
      v_.push_back(a.s2);
    }
    sort_unique(u_);
    sort_unique(v_);
    for (const TimePoint& a : mesh_.atoms()) {
      ui_.push_back(index_of(u_, a.s1));
      vi_.push_back(index_of(v_, a.s2));
    }
  }

  const CompactMesh& mesh() const { return mesh_; }

  Eigen::MatrixXd draw_values(SeedSpec seed) const {
    NormalStream normals(seed);
    const Eigen::MatrixXd x = motion_values(u_, normals);
    const Eigen::MatrixXd y = motion_values(v_, normals);
    Eigen::MatrixXd values(static_cast<Eigen::Index>(mesh_.size()), d_);
    for (std::size_t i = 0; i < mesh_.size(); ++i) {
      values.row(static_cast<Eigen::Index>(i)) =
          x.row(static_cast<Eigen::Index>(ui_[i])) + y.row(static_cast<Eigen::Index>(vi_[i]));
    }
    return values;
  }

  SheetSample draw(SeedSpec seed) const { return {mesh_, draw_values(seed), seed}; }

 private:
  static void sort_unique(std::vector<double>& xs) {
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  }

  static std::size_t index_of(const std::vector<double>& xs, double x) {
    return static_cast<std::size_t>(std::lower_bound(xs.begin(), xs.end(), x) - xs.begin());
  }

  Eigen::MatrixXd motion_values(const std::vector<double>& times, NormalStream& normals) const {
    const auto n = static_cast<Eigen::Index>(times.size());
    Eigen::MatrixXd out(n, d_);
    for (int c = 0; c < d_; ++c) {
      double prev_time = 0.0;
      double level = 0.0;
      for (Eigen::Index kidx = 0; kidx < n; ++kidx) {
        const double dt = times[static_cast<std::size_t>(kidx)] - prev_time;
        if (dt > 0.0) level += std::sqrt(dt) * normals.next();  // time 0 stays exactly 0
        out(kidx, c) = level;
        prev_time = times[static_cast<std::size_t>(kidx)];
      }
    }
    return out;
  }

  CompactMesh mesh_;
  int d_;
  std::vector<double> u_;
  std::vector<double> v_;
  std::vector<std::size_t> ui_;
  std::vector<std::size_t> vi_;
};

inline SheetSample sample_additive_bm(const CompactMesh& mesh, int d, SeedSpec seed) {
  return AdditiveBmSampler(mesh, d).draw(seed);
}

}  // namespace sheetcap
