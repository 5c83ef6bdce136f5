// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>

#include "nafd/channel.hpp"
#include "nafd/config.hpp"
#include "nafd/correlation.hpp"
#include "nafd/downlink.hpp"
#include "nafd/types.hpp"

namespace nafd {

/// Diagonal covariance of the residual DL-to-UL interference plus noise after
/// digital cancellation at the CPU. delta(n) >= sigma2_ul always; the a table
/// holds the per-(transmit antenna, receive antenna) residual gains.
struct ResidualCovariance {
  VecR delta;  // length M*n_rx
  MatR a;      // (M*n_tx) x (M*n_rx)
};

/// Sigma as the deterministic function of the given precoder: the expectation
/// runs over estimation error only, the precoder is known at the CPU.
inline ResidualCovariance residual_covariance(const SystemConfig& cfg,
                                              const CorrelationSet& corr,
                                              const Precoder& pre) {
  ResidualCovariance rc;
  rc.a = residual_gain_table(cfg, corr);
  const VecR row_power = pre.W.rowwise().squaredNorm();
  rc.delta = rc.a.transpose() * row_power;
  rc.delta.array() += cfg.sigma2_ul;
  return rc;
}

/// MMSE combining matrix R = (sum_i p_i ghat_i ghat_i^H + Sigma)^-1 Ghat,
/// computed through the k_ul-sided Woodbury form.
inline MatC mmse_combiner(const MatC& Ghat_ul, const VecR& delta, const VecR& p_ul) {
  const Eigen::Index K = Ghat_ul.cols();
  if (K == 0) return MatC(Ghat_ul.rows(), 0);
  if (delta.size() != Ghat_ul.rows())
    throw ConfigError("mmse_combiner: Sigma dimension mismatch");
  const MatC D = delta.cwiseInverse().asDiagonal() * Ghat_ul;  // Sigma^-1 Ghat
  MatC S = MatC::Identity(K, K);
  S += p_ul.asDiagonal() * (Ghat_ul.adjoint() * D);
  return D * S.partialPivLu().solve(MatC::Identity(K, K));
}

struct UlRates {
  VecR sinr;
  double sum_rate;
};

/// Per-user uplink SINR with the MMSE combiner built from estimates and the
/// diagonal residual covariance; true channels enter the bilinear forms.
inline UlRates ul_sinr(const MatC& G_ul, const MatC& Ghat_ul,
                       const ResidualCovariance& rc, const VecR& p_ul) {
  const MatC F = mmse_combiner(Ghat_ul, rc.delta, p_ul);
  const Eigen::Index K = G_ul.cols();
  const MatC B = F.adjoint() * G_ul;  // b_ki = f_k^H g_i
  UlRates out;
  out.sinr.resize(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const double sig = p_ul(k) * std::norm(B(k, k));
    double intf = 0.0;
    for (Eigen::Index i = 0; i < K; ++i)
      if (i != k) intf += p_ul(i) * std::norm(B(k, i));
    const double noise = (F.col(k).adjoint() * rc.delta.asDiagonal() * F.col(k)).real()(0, 0);
    out.sinr(k) = sig / (intf + noise);
  }
  out.sum_rate = (out.sinr.array() + 1.0).log().sum() / std::log(2.0);
  return out;
}

inline UlRates ul_sinr(const ChannelRealization& ch, const ResidualCovariance& rc,
                       const VecR& p_ul) {
  return ul_sinr(ch.G_ul, ch.Ghat_ul, rc, p_ul);
}

/// Ergodic uplink sum-rate by Monte-Carlo. Every trial builds the downlink
/// precoder first, since Sigma depends on it.
inline McEstimate mc_ul_sum_rate(const SystemConfig& cfg, const CorrelationSet& corr,
                                 PrecoderKind kind, int trials, std::uint64_t master,
                                 std::uint64_t point_index = 0) {
  if (trials < 1) throw ConfigError("mc_ul_sum_rate: trials must be >= 1");
  double sum = 0.0, sumsq = 0.0;
  int done = 0, skipped = 0;
  for (int t = 0; t < trials; ++t) {
    RngStream rng(master, "mc_ul", point_index, static_cast<std::uint64_t>(t));
    const ChannelRealization ch = sample_realization(cfg, corr, rng);
    double rate = 0.0;
    try {
      const Precoder pre =
          make_precoder(kind, ch.Ghat_dl, cfg.alpha, cfg.power, cfg.M, cfg.n_tx);
      const ResidualCovariance rc = residual_covariance(cfg, corr, pre);
      rate = ul_sinr(ch, rc, cfg.p_ul).sum_rate;
    } catch (const IllConditionedError&) {
      ++skipped;
      if (skipped > trials / 100)
        throw IllConditionedError("mc_ul_sum_rate: more than 1% of trials skipped");
      continue;
    }
    sum += rate;
    sumsq += rate * rate;
    ++done;
  }
  McEstimate est;
  est.trials = done;
  est.skipped = skipped;
  est.mean = sum / done;
  const double var = std::max(0.0, sumsq / done - est.mean * est.mean);
  est.stderr_ = std::sqrt(var / done);
  return est;
}

}  // namespace nafd
