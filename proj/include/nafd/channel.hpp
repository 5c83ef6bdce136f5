// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "nafd/config.hpp"
#include "nafd/correlation.hpp"
#include "nafd/rng.hpp"
#include "nafd/types.hpp"

namespace nafd {

/// One block-fading draw: true channels, the cross-user channel, and the
/// imperfect-CSI estimates built from the same fast-fading vectors.
struct ChannelRealization {
  MatC G_ul, Ghat_ul;   // (M*n_rx) x k_ul
  MatC G_dl, Ghat_dl;   // (M*n_tx) x k_dl
  MatC G_I, Ghat_I;     // (M*n_rx) x (M*n_tx)
  MatC U;               // k_dl x k_ul cross-user channel
};

namespace detail {

// g = T^(1/2) h blockwise with h ~ CN(0, I/M); the estimate mixes the same h
// with an independent z through phi = sqrt(1-tau^2).
inline void sample_link_columns(const std::vector<std::vector<MatC>>& sqrts,
                                const MatR& tau2, int M, int n_rau, RngStream& rng,
                                MatC& G, MatC& Ghat) {
  const int cols = static_cast<int>(sqrts.size());
  G.resize(M * n_rau, cols);
  Ghat.resize(M * n_rau, cols);
  VecC h(M), z(M);
  for (int c = 0; c < cols; ++c) {
    for (int n = 0; n < n_rau; ++n) {
      for (int i = 0; i < M; ++i) h(i) = rng.cnormal();
      for (int i = 0; i < M; ++i) z(i) = rng.cnormal();
      h /= std::sqrt(static_cast<double>(M));
      z /= std::sqrt(static_cast<double>(M));
      const double tau = std::sqrt(tau2(c, n));
      const double phi = phi_of(tau2(c, n));
      const auto& sq = sqrts[c][n];
      G.block(n * M, c, M, 1) = sq * h;
      Ghat.block(n * M, c, M, 1) = sq * (phi * h + tau * z);
    }
  }
}

}  // namespace detail

/// Draws one ChannelRealization. The cross-user scalars use unit-variance
/// fading (no antenna normalization applies to a scalar link).
inline ChannelRealization sample_realization(const SystemConfig& cfg,
                                             const CorrelationSet& corr,
                                             RngStream& rng) {
  if (corr.M != cfg.M || corr.n_rx != cfg.n_rx || corr.n_tx != cfg.n_tx ||
      corr.k_ul != cfg.k_ul || corr.k_dl != cfg.k_dl)
    throw ConfigError("sample_realization: correlation set does not match config");

  const auto& sq = corr.sqrts();
  ChannelRealization out;
  detail::sample_link_columns(sq.dl, cfg.tau2_dl, cfg.M, cfg.n_tx, rng, out.G_dl,
                              out.Ghat_dl);
  detail::sample_link_columns(sq.ul, cfg.tau2_ul, cfg.M, cfg.n_rx, rng, out.G_ul,
                              out.Ghat_ul);

  // Interference channel: column per transmit antenna, blocks per receive RAU.
  const int rx_dim = cfg.rx_dim(), tx_dim = cfg.tx_dim();
  out.G_I.resize(rx_dim, tx_dim);
  out.Ghat_I.resize(rx_dim, tx_dim);
  VecC h(cfg.M), z(cfg.M);
  for (int j = 0; j < tx_dim; ++j) {
    for (int n = 0; n < cfg.n_rx; ++n) {
      for (int i = 0; i < cfg.M; ++i) h(i) = rng.cnormal();
      for (int i = 0; i < cfg.M; ++i) z(i) = rng.cnormal();
      h /= std::sqrt(static_cast<double>(cfg.M));
      z /= std::sqrt(static_cast<double>(cfg.M));
      const double tau = std::sqrt(cfg.tau2_I(j, n));
      const double phi = phi_of(cfg.tau2_I(j, n));
      const MatC& s = sq.I[j / cfg.M][n];
      out.G_I.block(n * cfg.M, j, cfg.M, 1) = s * h;
      out.Ghat_I.block(n * cfg.M, j, cfg.M, 1) = s * (phi * h + tau * z);
    }
  }

  out.U.resize(cfg.k_dl, cfg.k_ul);
  for (int i = 0; i < cfg.k_ul; ++i)
    for (int k = 0; k < cfg.k_dl; ++k)
      out.U(k, i) = std::sqrt(corr.t_uu(k, i)) * rng.cnormal();
  return out;
}

}  // namespace nafd
