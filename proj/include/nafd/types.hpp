// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace nafd {

using Complex = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using MatR = Eigen::MatrixXd;
using VecC = Eigen::VectorXcd;
using VecR = Eigen::VectorXd;

/// Invalid dimensions, parameters out of range, malformed config files.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerically degenerate inputs (rank-deficient ZF channel, zero precoder).
class IllConditionedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fixed-point or linear-system failure in the deterministic-equivalent code.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// tr(A*B) for square matrices of equal size without forming the product.
inline Complex trace_prod(const MatC& a, const MatC& b) {
  return (a.transpose().cwiseProduct(b)).sum();
}

inline bool is_hermitian(const MatC& a, double tol = 1e-12) {
  return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace nafd
