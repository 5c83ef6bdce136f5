// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "nafd/config.hpp"
#include "nafd/types.hpp"

namespace nafd {

/// All deterministic second-order statistics of one scenario: M x M Hermitian
/// PSD correlation blocks per (user, RAU) link, per (transmit RAU, receive
/// RAU) interference link, and scalar cross-user gains.
///
/// Interference blocks are stored per transmit RAU; the per-transmit-antenna
/// view required by the residual-covariance formulas is t_I(j, n) with
/// j = 0..M*n_tx-1, which maps antenna j onto its RAU block.
class CorrelationSet {
 public:
  int M = 0, n_rx = 0, n_tx = 0, k_ul = 0, k_dl = 0;

  // t_ul[k][n]: uplink user k -> receiving RAU n. t_dl[k][n]: transmitting
  // RAU n -> downlink user k. t_I[m][n]: transmitting RAU m -> receiving RAU n.
  std::vector<std::vector<MatC>> t_ul, t_dl, t_I;
  MatR t_uu;  // k_dl x k_ul, scalar cross-user variances

  const MatC& t_I_antenna(int antenna, int rx_rau) const {
    return t_I[antenna / M][rx_rau];
  }

  /// Hermitian square root of every block, cached for channel sampling.
  struct Sqrts {
    std::vector<std::vector<MatC>> ul, dl, I;
  };

  const Sqrts& sqrts() const {
    if (!sqrts_ready_) {
      sqrts_.ul = sqrt_all(t_ul);
      sqrts_.dl = sqrt_all(t_dl);
      sqrts_.I = sqrt_all(t_I);
      sqrts_ready_ = true;
    }
    return sqrts_;
  }

  void invalidate_cache() { sqrts_ready_ = false; }

  /// Hermitian within 1e-12 and PSD up to -1e-10 on every block.
  void validate() const {
    auto check = [](const std::vector<std::vector<MatC>>& grid, const char* name) {
      for (const auto& row : grid)
        for (const MatC& b : row) {
          if (!is_hermitian(b, 1e-12))
            throw ConfigError(std::string("correlation block not Hermitian: ") + name);
          Eigen::SelfAdjointEigenSolver<MatC> es(b, Eigen::EigenvaluesOnly);
          if (es.eigenvalues().minCoeff() < -1e-10)
            throw ConfigError(std::string("correlation block not PSD: ") + name);
        }
    };
    check(t_ul, "t_ul");
    check(t_dl, "t_dl");
    check(t_I, "t_I");
    if (t_uu.size() > 0 && t_uu.minCoeff() < 0.0)
      throw ConfigError("cross-user variances must be >= 0");
  }

  static MatC matrix_sqrt(const MatC& a) {
    Eigen::SelfAdjointEigenSolver<MatC> es(a);
    VecR ev = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() *
           es.eigenvectors().adjoint();
  }

 private:
  static std::vector<std::vector<MatC>> sqrt_all(
      const std::vector<std::vector<MatC>>& grid) {
    std::vector<std::vector<MatC>> out(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
      out[i].reserve(grid[i].size());
      for (const MatC& b : grid[i]) out[i].push_back(matrix_sqrt(b));
    }
    return out;
  }

  mutable Sqrts sqrts_;
  mutable bool sqrts_ready_ = false;
};

/// [T]_{a,b} = scale * rho^|a-b|, the exponential correlation profile. PSD for
/// |rho| < 1.
inline MatC exponential_profile(int M, double rho, double scale = 1.0) {
  MatC t(M, M);
  for (int a = 0; a < M; ++a)
    for (int b = 0; b < M; ++b) t(a, b) = scale * std::pow(rho, std::abs(a - b));
  return t;
}

/// T = I on every user/RAU link; interference links T = I; cross-user
/// variances all equal to t_uu. The setting of the identity-correlation
/// validation experiments.
inline CorrelationSet identity_correlations(const SystemConfig& cfg, double t_uu = 1.0) {
  CorrelationSet c;
  c.M = cfg.M;
  c.n_rx = cfg.n_rx;
  c.n_tx = cfg.n_tx;
  c.k_ul = cfg.k_ul;
  c.k_dl = cfg.k_dl;
  const MatC eye = MatC::Identity(cfg.M, cfg.M);
  c.t_ul.assign(cfg.k_ul, std::vector<MatC>(cfg.n_rx, eye));
  c.t_dl.assign(cfg.k_dl, std::vector<MatC>(cfg.n_tx, eye));
  c.t_I.assign(cfg.n_tx, std::vector<MatC>(cfg.n_rx, eye));
  c.t_uu = MatR::Constant(cfg.k_dl, cfg.k_ul, t_uu);
  return c;
}

/// Identity-scale user links replaced by the exponential profile; the
/// quasi-static RAU-to-RAU links keep the uncorrelated (scalar) model.
inline CorrelationSet exponential_correlations(const SystemConfig& cfg, double rho,
                                               double t_uu = 1.0) {
  CorrelationSet c = identity_correlations(cfg, t_uu);
  const MatC prof = exponential_profile(cfg.M, rho);
  for (auto& row : c.t_ul)
    for (auto& b : row) b = prof;
  for (auto& row : c.t_dl)
    for (auto& b : row) b = prof;
  return c;
}

/// phi = sqrt(1 - tau^2) for one link.
inline double phi_of(double tau2) { return std::sqrt(1.0 - tau2); }

/// Diagonal entries a_j(n) of the A_n matrices: the per-entry variance of the
/// residual interference channel after digital cancellation. For row q of
/// Q = T^(1/2), tr[(I - Lambda) q^H q] reduces to (1 - phi) times the matching
/// diagonal entry of T itself. The factor 2 bundles the h and z estimation
/// error contributions of the channel model.
inline MatR residual_gain_table(const SystemConfig& cfg, const CorrelationSet& corr) {
  const int M = cfg.M;
  const int rows = cfg.tx_dim(), cols = cfg.rx_dim();
  MatR a(rows, cols);
  for (int j = 0; j < rows; ++j) {
    for (int nr = 0; nr < cfg.n_rx; ++nr) {
      const double one_minus_phi = 1.0 - phi_of(cfg.tau2_I(j, nr));
      const MatC& block = corr.t_I_antenna(j, nr);
      for (int i = 0; i < M; ++i) {
        // receive antenna nr*M+i picks the i-th diagonal entry of the block
        a(j, nr * M + i) = 2.0 / (M * cfg.n_rx) * one_minus_phi * block(i, i).real();
      }
    }
  }
  return a;
}

}  // namespace nafd
