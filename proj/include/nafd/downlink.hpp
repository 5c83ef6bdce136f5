// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>

#include "nafd/channel.hpp"
#include "nafd/config.hpp"
#include "nafd/rng.hpp"
#include "nafd/types.hpp"

namespace nafd {

enum class PrecoderKind { RZF, ZF };

inline const char* to_string(PrecoderKind k) {
  return k == PrecoderKind::RZF ? "rzf" : "zf";
}

/// Normalized downlink precoding matrix. xi2 is the shared power scalar that
/// makes the most loaded RAU meet its per-RAU budget tr(E_i W W^H E_i) = M*P
/// with equality; every other RAU stays below it.
struct Precoder {
  MatC W;        // (M*n_tx) x k_dl, already scaled by xi
  double xi2 = 0.0;
  PrecoderKind kind = PrecoderKind::RZF;
  double alpha = 0.0;  // regularizer used (RZF only)
};

struct DlRates {
  VecR sinr;        // per downlink user
  double sum_rate;  // bits/s/Hz

  static DlRates from_sinr(VecR s) {
    DlRates r;
    r.sum_rate = (s.array() + 1.0).log().sum() / std::log(2.0);
    r.sinr = std::move(s);
    return r;
  }
};

namespace detail {

/// xi^2 = min_i M*P / tr(E_i Wu Wu^H E_i) over transmitting RAUs; ties go to
/// the lowest RAU index.
inline double power_scalar(const MatC& Wu, double P, int M, int n_tx) {
  double max_block = 0.0;
  for (int i = 0; i < n_tx; ++i) {
    const double pw = Wu.middleRows(i * M, M).squaredNorm();
    if (pw > max_block) max_block = pw;
  }
  if (max_block <= 0.0)
    throw IllConditionedError("precoder normalization: zero channel estimate");
  return M * P / max_block;
}

}  // namespace detail

/// W = xi (Ghat Ghat^H + alpha I)^-1 Ghat, evaluated through the equivalent
/// k_dl-sided form Ghat (Ghat^H Ghat + alpha I)^-1 and a Cholesky solve.
inline Precoder rzf_precoder(const MatC& Ghat_dl, double alpha, double P, int M,
                             int n_tx) {
  if (alpha <= 0.0) throw ConfigError("rzf_precoder: alpha must be > 0");
  if (Ghat_dl.rows() != static_cast<Eigen::Index>(M) * n_tx)
    throw ConfigError("rzf_precoder: Ghat_dl row count != M*n_tx");
  const Eigen::Index K = Ghat_dl.cols();
  MatC S = Ghat_dl.adjoint() * Ghat_dl;
  S.diagonal().array() += alpha;
  const MatC Wu = Ghat_dl * S.llt().solve(MatC::Identity(K, K));
  Precoder p;
  p.kind = PrecoderKind::RZF;
  p.alpha = alpha;
  p.xi2 = detail::power_scalar(Wu, P, M, n_tx);
  p.W = std::sqrt(p.xi2) * Wu;
  return p;
}

/// W = xi Ghat (Ghat^H Ghat)^-1. Requires full column rank; a condition
/// number beyond 1e12 (or k_dl > M*n_tx) reports an ill-conditioned error.
inline Precoder zf_precoder(const MatC& Ghat_dl, double P, int M, int n_tx) {
  const Eigen::Index K = Ghat_dl.cols();
  if (K > Ghat_dl.rows())
    throw IllConditionedError("zf_precoder: k_dl=" + std::to_string(K) +
                              " exceeds M*n_tx=" + std::to_string(Ghat_dl.rows()));
  const MatC S = Ghat_dl.adjoint() * Ghat_dl;
  Eigen::SelfAdjointEigenSolver<MatC> es(S);
  const double emin = es.eigenvalues().minCoeff();
  const double emax = es.eigenvalues().maxCoeff();
  if (emin <= 0.0 || emax / emin > 1e12)
    throw IllConditionedError("zf_precoder: Ghat^H Ghat ill-conditioned (k_dl=" +
                              std::to_string(K) + ", M*n_tx=" +
                              std::to_string(Ghat_dl.rows()) + ")");
  const MatC Sinv = es.eigenvectors() *
                    es.eigenvalues().cwiseInverse().asDiagonal() *
                    es.eigenvectors().adjoint();
  const MatC Wu = Ghat_dl * Sinv;
  Precoder p;
  p.kind = PrecoderKind::ZF;
  p.xi2 = detail::power_scalar(Wu, P, M, n_tx);
  p.W = std::sqrt(p.xi2) * Wu;
  return p;
}

inline Precoder make_precoder(PrecoderKind kind, const MatC& Ghat_dl, double alpha,
                              double P, int M, int n_tx) {
  return kind == PrecoderKind::RZF ? rzf_precoder(Ghat_dl, alpha, P, M, n_tx)
                                   : zf_precoder(Ghat_dl, P, M, n_tx);
}

/// Instantaneous per-user downlink SINR: true channels against the precoder
/// built from the estimates, cross-user uplink interference included.
inline DlRates dl_sinr(const ChannelRealization& ch, const Precoder& pre,
                       const SystemConfig& cfg) {
  const MatC B = ch.G_dl.adjoint() * pre.W;  // b_kj = g_k^H w_j
  VecR sinr(cfg.k_dl);
  for (int k = 0; k < cfg.k_dl; ++k) {
    const double sig = std::norm(B(k, k));
    const double intf = B.row(k).squaredNorm() - sig;
    double cross = 0.0;
    for (int i = 0; i < cfg.k_ul; ++i) cross += cfg.p_ul(i) * std::norm(ch.U(k, i));
    sinr(k) = sig / (intf + cross + cfg.sigma2_dl);
  }
  return DlRates::from_sinr(std::move(sinr));
}

struct McEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  int trials = 0;
  int skipped = 0;
};

/// Ergodic downlink sum-rate by Monte-Carlo over fresh realizations. Trials
/// whose ZF precoder is ill-conditioned are skipped and counted; more than 1%
/// skipped aborts.
inline McEstimate mc_dl_sum_rate(const SystemConfig& cfg, const CorrelationSet& corr,
                                 PrecoderKind kind, int trials, std::uint64_t master,
                                 std::uint64_t point_index = 0) {
  if (trials < 1) throw ConfigError("mc_dl_sum_rate: trials must be >= 1");
  double sum = 0.0, sumsq = 0.0;
  int done = 0, skipped = 0;
  for (int t = 0; t < trials; ++t) {
    RngStream rng(master, "mc_dl", point_index, static_cast<std::uint64_t>(t));
    const ChannelRealization ch = sample_realization(cfg, corr, rng);
    double rate = 0.0;
    try {
      const Precoder pre =
          make_precoder(kind, ch.Ghat_dl, cfg.alpha, cfg.power, cfg.M, cfg.n_tx);
      rate = dl_sinr(ch, pre, cfg).sum_rate;
    } catch (const IllConditionedError&) {
      ++skipped;
      if (skipped > trials / 100)
        throw IllConditionedError("mc_dl_sum_rate: more than 1% of trials skipped");
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
