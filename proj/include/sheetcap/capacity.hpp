#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sheetcap/geometry.hpp"

namespace sheetcap {

// Riesz kernel with optional truncation, as a function of the sup-norm time
// distance r:
//   kappa(r) = (max(eps, sqrt(r)))^(-2 beta).
// At beta = d/2 this is the eps-truncated hitting kernel; at eps = 0 it is
// the pure Riesz kernel r^(-beta).
struct KernelSpec {
  double beta = 0.5;
  double truncation_eps = 0.0;
};

inline double kernel_value(const KernelSpec& spec, double r) {
  if (!(spec.beta > 0.0)) throw std::invalid_argument("kernel_value: beta must be positive");
  if (spec.truncation_eps < 0.0) {
    throw std::invalid_argument("kernel_value: truncation_eps must be nonnegative");
  }
  if (r < 0.0) throw std::invalid_argument("kernel_value: distance must be nonnegative");
  const double base = std::max(spec.truncation_eps, std::sqrt(r));
  if (base == 0.0) {
    throw std::domain_error("kernel_value: pure Riesz kernel diverges at r = 0");
  }
  return std::pow(base, -2.0 * spec.beta);
}

using KernelMatrix = Eigen::MatrixXd;

// Gram matrix of the kernel over mesh atoms. With an untruncated spec the
// diagonal (r = 0) falls back to the mesh gauge as its truncation level:
// below the mesh resolution, distances are not meaningful.
inline KernelMatrix kernel_matrix(const CompactMesh& mesh, const KernelSpec& spec) {
  KernelSpec diag_spec = spec;
  if (diag_spec.truncation_eps == 0.0) diag_spec.truncation_eps = mesh.mesh_gauge();
  const auto n = static_cast<Eigen::Index>(mesh.size());
  KernelMatrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = kernel_value(diag_spec, 0.0);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double r = sup_dist(mesh.atoms()[static_cast<std::size_t>(i)],
                                mesh.atoms()[static_cast<std::size_t>(j)]);
      k(i, j) = k(j, i) = kernel_value(spec, r);
    }
  }
  return k;
}

// Nonnegative weights over mesh atoms summing to one: a discretized
// probability measure.
struct DiscreteMeasure {
  std::vector<double> weights;
};

inline DiscreteMeasure uniform_measure(std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform_measure: need at least one atom");
  return DiscreteMeasure{std::vector<double>(n, 1.0 / static_cast<double>(n))};
}

inline void validate_measure(const DiscreteMeasure& m, std::size_t n_atoms) {
  if (m.weights.size() != n_atoms) {
    throw std::invalid_argument("DiscreteMeasure: weight count must match atom count");
  }
  double sum = 0.0;
  for (double w : m.weights) {
    if (w < 0.0 || !std::isfinite(w)) {
      throw std::invalid_argument("DiscreteMeasure: weights must be finite and nonnegative");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument("DiscreteMeasure: weights must sum to 1 within 1e-12");
  }
}

// Quadratic energy w^T K w of a measure against a kernel matrix.
inline double energy(const KernelMatrix& k, const DiscreteMeasure& m) {
  if (static_cast<Eigen::Index>(m.weights.size()) != k.rows()) {
    throw std::invalid_argument("energy: measure and kernel dimensions disagree");
  }
  const Eigen::Map<const Eigen::VectorXd> w(m.weights.data(),
                                            static_cast<Eigen::Index>(m.weights.size()));
  return w.dot(k * w);
}

struct CapacityResult {
  DiscreteMeasure optimal_measure;
  double energy = std::numeric_limits<double>::infinity();
  double capacity = 0.0;
  long iterations = 0;
  double duality_gap = 0.0;
  bool converged = false;
};

namespace detail {

inline void require_kernel(const KernelMatrix& k) {
  if (k.rows() != k.cols() || k.rows() < 1) {
    throw std::invalid_argument("minimize_energy: kernel matrix must be square and nonempty");
  }
  const double scale = k.cwiseAbs().maxCoeff();
  if ((k - k.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1.0)) {
    throw std::invalid_argument("minimize_energy: kernel matrix must be symmetric");
  }
  for (Eigen::Index i = 0; i < k.rows(); ++i) {
    if (!(k(i, i) > 0.0)) {
      throw std::invalid_argument("minimize_energy: kernel diagonal must be positive");
    }
  }
}

inline Eigen::Index argmin_first(const Eigen::VectorXd& g) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < g.size(); ++i) {
    if (g[i] < g[best]) best = i;  // strict: ties keep the smallest index
  }
  return best;
}

}  // namespace detail

// Minimizes w^T K w over the probability simplex by Frank-Wolfe. The linear
// subproblem over the simplex is solved by the coordinate with the smallest
// gradient entry (smallest index on ties), the step size is the standard
// 2/(k+2), and the Frank-Wolfe gap g^T (w - e_i) certifies the distance to
// the optimum. Stops once the gap falls below tol relative to the current
// energy; past max_iter the result is returned with converged = false.
//
// The gradient and energy are updated incrementally (the iterate moves along
// one kernel column per step) and recomputed from scratch periodically to
// shed floating-point drift.
inline CapacityResult minimize_energy(const KernelMatrix& k, double tol = 1e-8,
                                      long max_iter = 100000) {
  detail::require_kernel(k);
  if (!(tol > 0.0)) throw std::invalid_argument("minimize_energy: tol must be positive");
  if (max_iter < 1) throw std::invalid_argument("minimize_energy: max_iter must be >= 1");

  const Eigen::Index n = k.rows();
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  Eigen::VectorXd g = 2.0 * (k * w);
  double e = 0.5 * w.dot(g);

  constexpr long kRefreshPeriod = 1024;
  long iter = 0;
  double gap = 0.0;
  bool converged = false;
  for (; iter < max_iter; ++iter) {
    const Eigen::Index i = detail::argmin_first(g);
    gap = g.dot(w) - g[i];
    if (gap <= tol * e) {
      converged = true;
      break;
    }
    const double step = 2.0 / static_cast<double>(iter + 2);
    e = (1.0 - step) * (1.0 - step) * e + step * (1.0 - step) * g[i] + step * step * k(i, i);
    w *= (1.0 - step);
    w[i] += step;
    g = (1.0 - step) * g + (2.0 * step) * k.col(i);
    if ((iter + 1) % kRefreshPeriod == 0) {
      g = 2.0 * (k * w);
      e = 0.5 * w.dot(g);
    }
  }

  // Final certificate from scratch.
  w /= w.sum();
  g = 2.0 * (k * w);
  e = 0.5 * w.dot(g);
  gap = g.dot(w) - g[detail::argmin_first(g)];
  converged = gap <= tol * e;

  CapacityResult result;
  result.optimal_measure.weights.assign(w.data(), w.data() + n);
  result.energy = e;
  result.capacity = std::isfinite(e) ? 1.0 / e : 0.0;
  result.iterations = iter;
  result.duality_gap = gap;
  result.converged = converged;
  return result;
}

// Nominal energy error of the best lattice measure with spacing
// 1/grid_steps: the gradient 2 K w has sup norm at most 2 max|K| on the
// simplex and the minimizer rounds to the lattice within 1/grid_steps per
// coordinate. Near an interior optimum the first-order term vanishes, so the
// realized error is quadratically smaller than this bound.
inline double lattice_error_bound(const KernelMatrix& k, int grid_steps) {
  return 2.0 * k.cwiseAbs().maxCoeff() / static_cast<double>(grid_steps);
}

inline void kernel_matrix_to_csv(std::ostream& os, const KernelMatrix& k) {
  os.precision(17);
  for (Eigen::Index i = 0; i < k.rows(); ++i) {
    for (Eigen::Index j = 0; j < k.cols(); ++j) os << (j ? "," : "") << k(i, j);
    os << "\n";
  }
}

// Exhaustive search over the simplex lattice {k/N : sum k = N}: the
// independent oracle for minimize_energy. Exponential in the atom count,
// hence the hard cap at 5 atoms.
inline CapacityResult brute_force_energy_min(const KernelMatrix& k, int grid_steps) {
  detail::require_kernel(k);
  if (grid_steps < 1) {
    throw std::invalid_argument("brute_force_energy_min: grid_steps must be >= 1");
  }
  const Eigen::Index n = k.rows();
  if (n > 5) {
    throw std::invalid_argument("brute_force_energy_min: supports at most 5 atoms");
  }
  const auto big_n = static_cast<double>(grid_steps);

  std::vector<long> counts(static_cast<std::size_t>(n), 0);
  std::vector<long> best(static_cast<std::size_t>(n), 0);
  double best_scaled = std::numeric_limits<double>::infinity();
  std::int64_t evaluated = 0;

  if (n == 1) {
    best = {grid_steps};
    best_scaled = k(0, 0) * big_n * big_n;
    evaluated = 1;
  } else {
    // Enumerate the first n-2 coordinates recursively; the final two are a
    // 1-dimensional scan u, remaining-u whose scaled energy is an explicit
    // quadratic A + B u + C u^2, evaluated in O(1) per lattice point.
    const Eigen::Index iu = n - 2;
    const Eigen::Index iv = n - 1;
    auto scan_last_two = [&](long remaining, double prefix_energy,
                             const Eigen::VectorXd& prefix_dot) {
      const double r = static_cast<double>(remaining);
      const double a =
          prefix_energy + 2.0 * r * prefix_dot[iv] + r * r * k(iv, iv);
      const double b = 2.0 * (prefix_dot[iu] - prefix_dot[iv]) +
                       2.0 * r * (k(iu, iv) - k(iv, iv));
      const double c = k(iu, iu) + k(iv, iv) - 2.0 * k(iu, iv);
      for (long u = 0; u <= remaining; ++u) {
        const double du = static_cast<double>(u);
        const double scaled = a + du * (b + du * c);
        ++evaluated;
        if (scaled < best_scaled) {
          best_scaled = scaled;
          for (Eigen::Index t = 0; t < iu; ++t) best[static_cast<std::size_t>(t)] = counts[static_cast<std::size_t>(t)];
          best[static_cast<std::size_t>(iu)] = u;
          best[static_cast<std::size_t>(iv)] = remaining - u;
        }
      }
    };

    // prefix_dot[j] = sum_{t < iu} counts[t] K(t, j); prefix_energy is the
    // scaled self-energy of the prefix.
    auto enumerate = [&](auto&& self, Eigen::Index pos, long remaining, double prefix_energy,
                         Eigen::VectorXd& prefix_dot) -> void {
      if (pos == iu) {
        scan_last_two(remaining, prefix_energy, prefix_dot);
        return;
      }
      for (long c = 0; c <= remaining; ++c) {
        counts[static_cast<std::size_t>(pos)] = c;
        const double dc = static_cast<double>(c);
        const double child_energy =
            prefix_energy + 2.0 * dc * prefix_dot[pos] + dc * dc * k(pos, pos);
        Eigen::VectorXd child_dot = prefix_dot + dc * k.col(pos);
        self(self, pos + 1, remaining - c, child_energy, child_dot);
      }
      counts[static_cast<std::size_t>(pos)] = 0;
    };

    Eigen::VectorXd zero_dot = Eigen::VectorXd::Zero(n);
    enumerate(enumerate, 0, grid_steps, 0.0, zero_dot);
  }

  CapacityResult result;
  result.optimal_measure.weights.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    result.optimal_measure.weights[static_cast<std::size_t>(i)] =
        static_cast<double>(best[static_cast<std::size_t>(i)]) / big_n;
  }
  result.energy = best_scaled / (big_n * big_n);
  result.capacity = 1.0 / result.energy;
  result.iterations = static_cast<long>(std::min<std::int64_t>(
      evaluated, std::numeric_limits<long>::max()));
  result.duality_gap = lattice_error_bound(k, grid_steps);
  result.converged = true;
  return result;
}

// Capacity of a mesh for the canonical exponent beta = d/2: kernel matrix at
// truncation eps, then simplex minimization. eps = 0 falls back to the mesh
// gauge (the discretization cannot resolve finer scales anyway); a fixed
// positive eps is kept as-is so that refinement chains share one kernel.
inline double effective_truncation(const CompactMesh& mesh, double eps) {
  return eps > 0.0 ? eps : mesh.mesh_gauge();
}

inline CapacityResult capacity_of_mesh(const CompactMesh& mesh, int d, double eps,
                                       double tol = 1e-8, long max_iter = 100000) {
  if (d < 1) throw std::invalid_argument("capacity_of_mesh: dimension d must be >= 1");
  if (eps < 0.0) throw std::invalid_argument("capacity_of_mesh: eps must be nonnegative");
  const KernelSpec spec{d / 2.0, effective_truncation(mesh, eps)};
  return minimize_energy(kernel_matrix(mesh, spec), tol, max_iter);
}

struct MonotoneEntry {
  std::size_t n_atoms = 0;
  double energy = 0.0;
  double capacity = 0.0;
  double duality_gap = 0.0;
  bool converged = false;
};

struct MonotoneReport {
  std::vector<MonotoneEntry> entries;
  double slack = 0.0;       // relative slack 2 tol applied to each comparison
  double worst_drop = 0.0;  // most negative relative increment, 0 if none
  bool nondecreasing = true;
};

// Capacities along a chain of meshes ordered by inclusion of atom sets, with
// a nondecreasing verdict within a 2 tol relative slack. The inclusion
// ordering is the caller's contract; it is not re-checked here.
inline MonotoneReport capacity_limit_check(const std::vector<CompactMesh>& chain, int d,
                                           double eps, double tol = 1e-8,
                                           long max_iter = 100000) {
  MonotoneReport report;
  report.slack = 2.0 * tol;
  for (const CompactMesh& mesh : chain) {
    const CapacityResult r = capacity_of_mesh(mesh, d, eps, tol, max_iter);
    report.entries.push_back({mesh.size(), r.energy, r.capacity, r.duality_gap, r.converged});
  }
  for (std::size_t i = 1; i < report.entries.size(); ++i) {
    const double prev = report.entries[i - 1].capacity;
    const double cur = report.entries[i].capacity;
    const double rel_drop = prev > 0.0 ? (cur - prev) / prev : 0.0;
    report.worst_drop = std::min(report.worst_drop, std::min(rel_drop, 0.0));
    if (cur < prev * (1.0 - report.slack)) report.nondecreasing = false;
  }
  return report;
}

}  // namespace sheetcap
