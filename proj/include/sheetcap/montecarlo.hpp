#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sheetcap/capacity.hpp"
#include "sheetcap/constants.hpp"
#include "sheetcap/field_sim.hpp"
#include "sheetcap/geometry.hpp"
#include "sheetcap/parallel.hpp"
#include "sheetcap/rng.hpp"

namespace sheetcap {

// Point estimate with a normal-approximation 95% interval.
struct MCEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long n_samples = 0;
  double ci95_lo = 0.0;
  double ci95_hi = 0.0;
};

inline MCEstimate make_mc_estimate(double mean, double std_error, long n_samples) {
  return {mean, std_error, n_samples, mean - 1.96 * std_error, mean + 1.96 * std_error};
}

// Target point, hit radius and the box bound |a| <= M it lives in.
struct HitQuery {
  SpacePoint a;
  double eps = 0.0;
  double M = 0.0;
};

inline void validate_hit_query(const HitQuery& q) {
  if (q.a.dimension() < 1) throw std::invalid_argument("HitQuery: target needs dimension >= 1");
  if (!(q.eps > 0.0)) throw std::invalid_argument("HitQuery: eps must be positive");
  if (!(q.M > 0.0)) throw std::invalid_argument("HitQuery: M must be positive");
  if (sup_norm(q.a) > q.M) throw std::invalid_argument("HitQuery: need sup norm of a <= M");
}

// eps-hitting on a discrete mesh under-counts hits between atoms; the sheet's
// parabolic scaling (variance ~ distance) keeps the per-cell fluctuation
// below eps only when the gauge is at most eps^2.
inline bool gauge_warning(const CompactMesh& mesh, double eps) {
  return mesh.mesh_gauge() > eps * eps;
}

namespace detail {

inline double occupation_from_values(const Eigen::MatrixXd& values,
                                     const std::vector<double>& weights, const SpacePoint& a,
                                     double eps) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    double dist = 0.0;
    for (int c = 0; c < values.cols(); ++c) {
      dist = std::max(dist, std::abs(values(i, c) - a.coords[static_cast<std::size_t>(c)]));
    }
    if (dist <= eps) total += weights[static_cast<std::size_t>(i)];
  }
  return total;
}

inline bool hit_from_values(const Eigen::MatrixXd& values, const SpacePoint& a, double eps) {
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    double dist = 0.0;
    for (int c = 0; c < values.cols(); ++c) {
      dist = std::max(dist, std::abs(values(i, c) - a.coords[static_cast<std::size_t>(c)]));
    }
    if (dist <= eps) return true;
  }
  return false;
}

inline MCEstimate estimate_from_samples(const std::vector<double>& xs) {
  const long n = static_cast<long>(xs.size());
  if (n < 1) throw std::invalid_argument("estimate_from_samples: need at least one sample");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  // n = 1 degenerates to a zero sample variance; n_samples flags the case.
  const double var = n > 1 ? ss / static_cast<double>(n - 1) : 0.0;
  return make_mc_estimate(mean, std::sqrt(var / static_cast<double>(n)), n);
}

// One occupation value per sample, sample k on stream seed.stream_index + k;
// the fold over k is in stream order no matter how the work is scheduled.
inline std::vector<double> occupation_samples(const CompactMesh& mesh,
                                              const DiscreteMeasure& m, const HitQuery& q,
                                              int d, long n_samples, SeedSpec seed) {
  validate_hit_query(q);
  validate_measure(m, mesh.size());
  if (q.a.dimension() != d) {
    throw std::invalid_argument("occupation_samples: target dimension must equal d");
  }
  if (n_samples < 1) throw std::invalid_argument("occupation_samples: need n_samples >= 1");
  const ExactSheetSampler sampler(mesh, d);
  std::vector<double> out(static_cast<std::size_t>(n_samples));
  parallel_for_index(static_cast<std::size_t>(n_samples), [&](std::size_t k) {
    const Eigen::MatrixXd values = sampler.draw_values(substream(seed, k));
    out[k] = occupation_from_values(values, mesh.cell_weights(), q.a, q.eps);
  });
  return out;
}

}  // namespace detail

// Mass the measure assigns to atoms whose realized field value lies within
// eps of the target: I = sum_i w_i 1{|B(atom_i) - a| <= eps}.
inline double occupation_integral(const SheetSample& sample, const DiscreteMeasure& m,
                                  const HitQuery& q) {
  validate_hit_query(q);
  validate_measure(m, sample.mesh.size());
  if (q.a.dimension() != sample.dimension()) {
    throw std::invalid_argument("occupation_integral: target dimension mismatch");
  }
  return detail::occupation_from_values(sample.values, m.weights, q.a, q.eps);
}

inline MCEstimate estimate_mean_occupation(const CompactMesh& mesh, const DiscreteMeasure& m,
                                           const HitQuery& q, int d, long n_samples,
                                           SeedSpec seed) {
  if (!(q.eps < q.M)) {
    throw std::invalid_argument("estimate_mean_occupation: needs eps < M (small-radius regime)");
  }
  return detail::estimate_from_samples(detail::occupation_samples(mesh, m, q, d, n_samples, seed));
}

// Lower bounds c3 eps^d for the mean occupation, in both c3 variants.
struct OccupationLowerBounds {
  double statement = 0.0;
  double proof = 0.0;
};

inline OccupationLowerBounds occupation_lower_bounds(const ProblemParams& p, double eps) {
  const LemmaConstants lc = compute_lemma_constants(p);
  const double eps_d = std::pow(eps, p.d);
  return {lc.c3 * eps_d, lc.c3_proof * eps_d};
}

// Exact double sum on the right side of the second-moment bound:
// c4 eps^d sum_ij w_i w_j (1 ^ eps / |t_i - t_j|^(1/2))^d.
inline double second_moment_upper_bound(const CompactMesh& mesh, const DiscreteMeasure& m,
                                  const ProblemParams& p, double eps) {
  validate_measure(m, mesh.size());
  const LemmaConstants lc = compute_lemma_constants(p);
  double total = 0.0;
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    for (std::size_t j = 0; j < mesh.size(); ++j) {
      const double r = sup_dist(mesh.atoms()[i], mesh.atoms()[j]);
      const double factor = r > 0.0 ? std::min(1.0, eps / std::sqrt(r)) : 1.0;
      total += m.weights[i] * m.weights[j] * std::pow(factor, p.d);
    }
  }
  return lc.c4 * std::pow(eps, p.d) * total;
}

struct SecondMomentCheck {
  MCEstimate estimate;  // Monte Carlo mean of I^2
  double bound = 0.0;   // exact double-sum right side
  double slack = 0.0;   // 4 standard errors
  bool pass = false;    // estimate.mean - slack <= bound
};

inline SecondMomentCheck estimate_second_moment(const CompactMesh& mesh,
                                                const DiscreteMeasure& m, const HitQuery& q,
                                                int d, long n_samples, SeedSpec seed) {
  if (!(q.eps < q.M)) {
    throw std::invalid_argument("estimate_second_moment: needs eps < M (small-radius regime)");
  }
  std::vector<double> xs = detail::occupation_samples(mesh, m, q, d, n_samples, seed);
  for (double& x : xs) x *= x;
  SecondMomentCheck check;
  check.estimate = detail::estimate_from_samples(xs);
  check.bound = second_moment_upper_bound(mesh, m, params_for_mesh(mesh, d, q.M), q.eps);
  check.slack = 4.0 * check.estimate.std_error;
  check.pass = check.estimate.mean - check.slack <= check.bound;
  return check;
}

// P(I > 0) >= (E I)^2 / E[I^2], checked on a shared sample set. The combined
// standard error of the margin is a batch-mean estimate over 100 batches,
// which absorbs the correlation between the three empirical moments.
struct PaleyZygmundVerdict {
  double p_positive = 0.0;
  double lower_bound = 0.0;  // (E I)^2 / E[I^2]
  double margin = 0.0;       // p_positive - lower_bound
  double combined_se = 0.0;
  long n_samples = 0;
  bool pass = false;
};

inline PaleyZygmundVerdict paley_zygmund_check(const CompactMesh& mesh,
                                               const DiscreteMeasure& m, const HitQuery& q,
                                               int d, long n_samples, SeedSpec seed) {
  if (!(q.eps < q.M)) {
    throw std::invalid_argument("paley_zygmund_check: needs eps < M (small-radius regime)");
  }
  const std::vector<double> xs =
      detail::occupation_samples(mesh, m, q, d, n_samples, seed);
  const auto n = xs.size();

  double m1 = 0.0, m2 = 0.0, pos = 0.0;
  for (double x : xs) {
    m1 += x;
    m2 += x * x;
    if (x > 0.0) pos += 1.0;
  }
  m1 /= static_cast<double>(n);
  m2 /= static_cast<double>(n);
  pos /= static_cast<double>(n);

  PaleyZygmundVerdict v;
  v.p_positive = pos;
  v.lower_bound = m2 > 0.0 ? m1 * m1 / m2 : 0.0;
  v.margin = v.p_positive - v.lower_bound;
  v.n_samples = static_cast<long>(n);

  const std::size_t n_batches = std::min<std::size_t>(100, n);
  std::vector<double> batch_margin(n_batches, 0.0);
  for (std::size_t b = 0; b < n_batches; ++b) {
    const std::size_t lo = b * n / n_batches;
    const std::size_t hi = (b + 1) * n / n_batches;
    double bm1 = 0.0, bm2 = 0.0, bpos = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      bm1 += xs[i];
      bm2 += xs[i] * xs[i];
      if (xs[i] > 0.0) bpos += 1.0;
    }
    const double cnt = static_cast<double>(hi - lo);
    bm1 /= cnt;
    bm2 /= cnt;
    bpos /= cnt;
    batch_margin[b] = bpos - (bm2 > 0.0 ? bm1 * bm1 / bm2 : 0.0);
  }
  double bmean = 0.0;
  for (double x : batch_margin) bmean += x;
  bmean /= static_cast<double>(n_batches);
  double bss = 0.0;
  for (double x : batch_margin) bss += (x - bmean) * (x - bmean);
  const double batch_var = n_batches > 1 ? bss / static_cast<double>(n_batches - 1) : 0.0;
  v.combined_se = std::sqrt(batch_var / static_cast<double>(n_batches));
  v.pass = v.margin >= -4.0 * v.combined_se;
  return v;
}

enum class FieldKind { sheet, additive };

// Fraction of samples whose realized field comes within eps of the target,
// with binomial standard error.
inline MCEstimate estimate_hit_probability(const CompactMesh& mesh, const HitQuery& q, int d,
                                           long n_samples, SeedSpec seed, FieldKind kind) {
  validate_hit_query(q);
  if (q.a.dimension() != d) {
    throw std::invalid_argument("estimate_hit_probability: target dimension must equal d");
  }
  if (n_samples < 1) throw std::invalid_argument("estimate_hit_probability: need n_samples >= 1");

  std::vector<unsigned char> hits(static_cast<std::size_t>(n_samples), 0);
  if (kind == FieldKind::sheet) {
    const ExactSheetSampler sampler(mesh, d);
    parallel_for_index(hits.size(), [&](std::size_t k) {
      hits[k] = detail::hit_from_values(sampler.draw_values(substream(seed, k)), q.a, q.eps);
    });
  } else {
    const AdditiveBmSampler sampler(mesh, d);
    parallel_for_index(hits.size(), [&](std::size_t k) {
      hits[k] = detail::hit_from_values(sampler.draw_values(substream(seed, k)), q.a, q.eps);
    });
  }
  double p = 0.0;
  for (unsigned char h : hits) p += h;
  p /= static_cast<double>(n_samples);
  const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n_samples));
  return make_mc_estimate(p, se, n_samples);
}

// Expected Lebesgue measure of the image within [-M, M]^d, estimated per
// sample by counting occupied cells of the grid_res^d partition. Mesh- and
// grid-resolution-dependent, biased low; reported as such.
inline MCEstimate estimate_image_measure(const CompactMesh& mesh, int d, double m_box,
                                         int grid_res, long n_samples, SeedSpec seed) {
  if (d < 1) throw std::invalid_argument("estimate_image_measure: d must be >= 1");
  if (!(m_box > 0.0)) throw std::invalid_argument("estimate_image_measure: M must be positive");
  if (grid_res < 1) throw std::invalid_argument("estimate_image_measure: grid_res must be >= 1");
  if (n_samples < 1) throw std::invalid_argument("estimate_image_measure: need n_samples >= 1");

  const double cell = 2.0 * m_box / static_cast<double>(grid_res);
  const double cell_volume = std::pow(cell, d);
  const ExactSheetSampler sampler(mesh, d);
  std::vector<double> volume(static_cast<std::size_t>(n_samples), 0.0);
  parallel_for_index(volume.size(), [&](std::size_t k) {
    const Eigen::MatrixXd values = sampler.draw_values(substream(seed, k));
    std::vector<std::int64_t> cells;
    cells.reserve(static_cast<std::size_t>(values.rows()));
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      std::int64_t id = 0;
      bool inside = true;
      for (int c = 0; c < d; ++c) {
        const auto idx = static_cast<std::int64_t>(std::floor((values(i, c) + m_box) / cell));
        if (idx < 0 || idx >= grid_res) {
          inside = false;
          break;
        }
        id = id * grid_res + idx;
      }
      if (inside) cells.push_back(id);
    }
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    volume[k] = static_cast<double>(cells.size()) * cell_volume;
  });
  return detail::estimate_from_samples(volume);
}

}  // namespace sheetcap
