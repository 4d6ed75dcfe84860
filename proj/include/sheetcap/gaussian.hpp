#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sheetcap/rng.hpp"

namespace sheetcap {

// Draws centered Gaussian vectors with a fixed covariance matrix.
//
// Coordinates whose variance is exactly zero (axis atoms, pinned bridge
// endpoints) are emitted as exact zeros. The remaining block is factored once
// by Cholesky; discretized covariances are routinely near-singular, so on
// failure the factorization retries with an escalating diagonal jitter from
// 1e-12 up to 1e-6 of the largest variance before giving up.
class GaussianSampler {
 public:
  explicit GaussianSampler(const Eigen::MatrixXd& cov) : n_(static_cast<int>(cov.rows())) {
    if (cov.rows() != cov.cols()) {
      throw std::invalid_argument("GaussianSampler: covariance must be square");
    }
    const double scale = cov.cwiseAbs().maxCoeff();
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(scale, 1.0)) {
      throw std::invalid_argument("GaussianSampler: covariance must be symmetric");
    }
    for (int i = 0; i < n_; ++i) {
      const double v = cov(i, i);
      if (v < 0.0 || !std::isfinite(v)) {
        throw std::invalid_argument("GaussianSampler: variances must be finite and nonnegative");
      }
      if (v > 0.0) active_.push_back(i);
    }
    const int m = static_cast<int>(active_.size());
    if (m == 0) return;
    Eigen::MatrixXd sub(m, m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) sub(i, j) = cov(active_[i], active_[j]);
    }
    const double max_diag = sub.diagonal().maxCoeff();
    for (double rel = 0.0; rel <= 1e-6; rel = (rel == 0.0 ? 1e-12 : rel * 10.0)) {
      Eigen::MatrixXd shifted = sub;
      shifted.diagonal().array() += rel * max_diag;
      Eigen::LLT<Eigen::MatrixXd> llt(shifted);
      if (llt.info() == Eigen::Success) {
        chol_ = llt.matrixL();
        jitter_ = rel * max_diag;
        return;
      }
    }
    throw std::runtime_error(
        "GaussianSampler: covariance numerically non-positive after maximum jitter");
  }

  int dim() const { return n_; }
  double jitter() const { return jitter_; }

  // One joint draw per column; consumes standard normals column-major.
  Eigen::MatrixXd draw(int cols, NormalStream& normals) const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_, cols);
    const int m = static_cast<int>(active_.size());
    if (m == 0) return out;
    Eigen::VectorXd z(m);
    for (int c = 0; c < cols; ++c) {
      for (int i = 0; i < m; ++i) z[i] = normals.next();
      const Eigen::VectorXd y = chol_.triangularView<Eigen::Lower>() * z;
      for (int i = 0; i < m; ++i) out(active_[i], c) = y[i];
    }
    return out;
  }

 private:
  int n_;
  std::vector<int> active_;
  Eigen::MatrixXd chol_;
  double jitter_ = 0.0;
};

}  // namespace sheetcap
