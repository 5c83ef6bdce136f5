// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "nafd/config.hpp"
#include "nafd/correlation.hpp"
#include "nafd/types.hpp"
#include "nafd/uplink.hpp"

namespace nafd {

// Deterministic equivalents of the ergodic rates: coupled trace fixed points,
// resolvent-derivative linear systems, and the assembled per-user SINR
// approximations for RZF/ZF downlink and MMSE uplink.

struct FixedPointOptions {
  double tol = 1e-10;   // on max |delta e| / (1 + |e|)
  int max_iterations = 2000;
};

/// Solution of one coupled trace fixed point:
///   Psi_n = ( (1/M) sum_j p_j T_{j,n} / (offset + p_j ubar_j) + diag(d_n) )^-1,
///   e_{k,n} = (1/M) tr(T_{k,n} Psi_n),  ubar_k = sum_n e_{k,n}.
/// offset = 1 gives the regularized systems; offset = 0 the ZF limit system.
struct BlockFixedPoint {
  MatR e;                  // K x N
  std::vector<MatC> psi;   // per RAU, Hermitian PD
  double residual = 0.0;
  int iterations = 0;

  VecR ubar() const { return e.rowwise().sum(); }
};

inline BlockFixedPoint solve_block_fixed_point(const std::vector<std::vector<MatC>>& T,
                                               int M, const VecR& p, double offset,
                                               const std::vector<VecR>& diag_addend,
                                               const FixedPointOptions& opt = {}) {
  const int K = static_cast<int>(T.size());
  const int N = K > 0 ? static_cast<int>(T[0].size()) : 0;
  BlockFixedPoint fp;
  fp.e = MatR::Ones(K, N);

  auto psi_of = [&](const MatR& e) {
    std::vector<MatC> psi(N);
    const VecR ub = e.rowwise().sum();
    for (int n = 0; n < N; ++n) {
      MatC acc = MatC::Zero(M, M);
      for (int j = 0; j < K; ++j) {
        const double denom = offset + p(j) * ub(j);
        acc += (p(j) / (M * denom)) * T[j][n];
      }
      acc += MatC(diag_addend[n].cast<Complex>().asDiagonal());
      psi[n] = acc.inverse();
    }
    return psi;
  };

  double prev_res = std::numeric_limits<double>::infinity();
  int grew = 0;
  bool damped = false;
  for (fp.iterations = 1; fp.iterations <= opt.max_iterations; ++fp.iterations) {
    fp.psi = psi_of(fp.e);
    MatR e_new(K, N);
    for (int k = 0; k < K; ++k)
      for (int n = 0; n < N; ++n)
        e_new(k, n) = trace_prod(T[k][n], fp.psi[n]).real() / M;
    const double res =
        ((e_new - fp.e).cwiseAbs().array() / (1.0 + e_new.cwiseAbs().array())).maxCoeff();
    if (damped)
      fp.e = 0.5 * (e_new + fp.e);
    else
      fp.e = e_new;
    fp.residual = res;
    if (res < opt.tol) {
      fp.psi = psi_of(fp.e);
      return fp;
    }
    // Engage damping only once the residual has grown twice in a row.
    grew = res > prev_res ? grew + 1 : 0;
    if (grew >= 2) damped = true;
    prev_res = res;
  }
  throw SolverError("fixed point did not converge after " +
                    std::to_string(opt.max_iterations) +
                    " iterations; last residual " + std::to_string(fp.residual));
}

struct DlFixedPoint {
  BlockFixedPoint fp;
  double alpha = 0.0;
};

/// Downlink RZF fixed point (unit powers, offset 1, alpha I addend).
inline DlFixedPoint solve_dl_fixed_point(const std::vector<std::vector<MatC>>& t_dl,
                                         double alpha, int M,
                                         const FixedPointOptions& opt = {}) {
  if (alpha <= 0.0) throw ConfigError("solve_dl_fixed_point: alpha must be > 0");
  const int K = static_cast<int>(t_dl.size());
  const int N = K > 0 ? static_cast<int>(t_dl[0].size()) : 0;
  DlFixedPoint out;
  out.alpha = alpha;
  out.fp = solve_block_fixed_point(t_dl, M, VecR::Ones(K), 1.0,
                                   std::vector<VecR>(N, VecR::Constant(M, alpha)), opt);
  return out;
}

/// Precomputed trace tensors shared by every derivative solve on one fixed
/// point: X_{k,n} = Psi_n T_{k,n} Psi_n and
/// tr3[(k,n), j] = tr(T_{k,n} Psi_n T_{j,n} Psi_n)  (real for Hermitian data).
struct DeTraces {
  int K = 0, N = 0, M = 0;
  std::vector<std::vector<MatC>> X;
  MatR tr3;    // (K*N) x K
  MatR trX;    // K x N, tr(X_{k,n})

  static DeTraces build(const std::vector<std::vector<MatC>>& T,
                        const std::vector<MatC>& psi, int M) {
    DeTraces t;
    t.K = static_cast<int>(T.size());
    t.N = t.K > 0 ? static_cast<int>(T[0].size()) : 0;
    t.M = M;
    t.X.assign(t.K, std::vector<MatC>(t.N));
    t.trX.resize(t.K, t.N);
    for (int k = 0; k < t.K; ++k)
      for (int n = 0; n < t.N; ++n) {
        t.X[k][n] = psi[n] * T[k][n] * psi[n];
        t.trX(k, n) = t.X[k][n].trace().real();
      }
    t.tr3.resize(t.K * t.N, t.K);
    for (int k = 0; k < t.K; ++k)
      for (int n = 0; n < t.N; ++n)
        for (int j = 0; j < t.K; ++j)
          t.tr3(k * t.N + n, j) = trace_prod(t.X[k][n], T[j][n]).real();
    return t;
  }
};

/// One derivative solution: udot[k][n] = -d e_{k,n} / dt for a perturbation
/// C -> C + t D of the resolvent, obtained from (I - F) vec(udot) = vec(b).
struct DerivativeSolution {
  MatR udot;              // K x N
  double residual = 0.0;  // relative residual of the linear solve

  VecR row_sum() const { return udot.rowwise().sum(); }
};

/// Factorizes I - F once; F couples row (k,n) to every column (j,m) with
/// weight w_j tr3[(k,n), j] / M^2 independent of m.
class DerivativeSolver {
 public:
  DerivativeSolver(const DeTraces& tr, const VecR& col_weight)
      : tr_(tr), K_(tr.K), N_(tr.N) {
    const int KN = K_ * N_;
    theta_ = MatR::Identity(KN, KN);
    for (int row = 0; row < KN; ++row)
      for (int j = 0; j < K_; ++j) {
        const double f = col_weight(j) * tr_.tr3(row, j) / (tr_.M * tr_.M);
        for (int m = 0; m < N_; ++m) theta_(row, j * N_ + m) -= f;
      }
    lu_.compute(theta_);
  }

  DerivativeSolution solve(const MatR& b) const {
    const int KN = K_ * N_;
    VecR rhs(KN);
    for (int k = 0; k < K_; ++k)
      for (int n = 0; n < N_; ++n) rhs(k * N_ + n) = b(k, n);
    const VecR x = lu_.solve(rhs);
    DerivativeSolution sol;
    sol.udot.resize(K_, N_);
    for (int k = 0; k < K_; ++k)
      for (int n = 0; n < N_; ++n) sol.udot(k, n) = x(k * N_ + n);
    const double bn = rhs.norm();
    sol.residual = bn > 0.0 ? (theta_ * x - rhs).norm() / bn : 0.0;
    if (sol.residual > 1e-9)
      throw SolverError("derivative system residual " + std::to_string(sol.residual));
    return sol;
  }

  /// b for the direction D = I (the regularizer derivative).
  MatR rhs_identity() const { return tr_.trX / tr_.M; }

  /// b for the direction given by one real diagonal per RAU block.
  MatR rhs_diagonal(const std::vector<VecR>& diag) const {
    MatR b(K_, N_);
    for (int k = 0; k < K_; ++k)
      for (int n = 0; n < N_; ++n) {
        double acc = 0.0;
        for (int i = 0; i < tr_.M; ++i)
          acc += diag[n](i) * tr_.X[k][n](i, i).real();
        b(k, n) = acc / tr_.M;
      }
    return b;
  }

  /// b for the direction D = T_j (user j's correlation blocks).
  MatR rhs_user(int j) const {
    MatR b(K_, N_);
    for (int k = 0; k < K_; ++k)
      for (int n = 0; n < N_; ++n) b(k, n) = tr_.tr3(k * N_ + n, j) / tr_.M;
    return b;
  }

 private:
  const DeTraces& tr_;
  int K_, N_;
  MatR theta_;
  Eigen::PartialPivLU<MatR> lu_;
};

struct DEResult {
  VecR gamma_bar;
  double sum_rate_bar = 0.0;
  double alpha_used = 0.0;
  double xi2_bar = 0.0;
  int fp_iterations = 0;
  double fp_residual = 0.0;
  double lin_residual = 0.0;
};

namespace detail {

inline VecR phi_weighted_rowsum(const MatR& values, const MatR& tau2) {
  VecR out(values.rows());
  for (Eigen::Index k = 0; k < values.rows(); ++k) {
    double acc = 0.0;
    for (Eigen::Index n = 0; n < values.cols(); ++n)
      acc += phi_of(tau2(k, n)) * values(k, n);
    out(k) = acc;
  }
  return out;
}

/// The deterministic equivalent of tr(E_n C^-1 Ghat Ghat^H C^-1 E_n): the
/// unnormalized per-RAU precoder power. Shared by xi2_bar and v_bar.
inline VecR rzf_power_brackets(const DlFixedPoint& dfp, const DeTraces& tr,
                               const MatR& udot_identity) {
  const int K = tr.K, N = tr.N, M = tr.M;
  const VecR ub = dfp.fp.ubar();
  VecR chat(K);
  for (int j = 0; j < K; ++j) {
    const double denom = 1.0 + ub(j);
    chat(j) = udot_identity.row(j).sum() / (M * denom * denom);
  }
  VecR bracket(N);
  for (int n = 0; n < N; ++n) {
    double tr_psi = dfp.fp.psi[n].trace().real();
    double tr_psi2 = (dfp.fp.psi[n] * dfp.fp.psi[n]).trace().real();
    double corr = 0.0;
    for (int j = 0; j < K; ++j) corr += chat(j) * tr.trX(j, n);
    bracket(n) = tr_psi - dfp.alpha * (tr_psi2 + corr);
  }
  return bracket;
}

}  // namespace detail

/// Theorem-style deterministic equivalent of the downlink RZF ergodic
/// sum-rate. alpha must be the regularizer actually used by the precoder.
inline DEResult de_dl_rzf(const SystemConfig& cfg, const CorrelationSet& corr,
                          double alpha) {
  const int K = cfg.k_dl, N = cfg.n_tx, M = cfg.M;
  DlFixedPoint dfp = solve_dl_fixed_point(corr.t_dl, alpha, M);
  const DeTraces tr = DeTraces::build(corr.t_dl, dfp.fp.psi, M);
  const VecR ub = dfp.fp.ubar();
  VecR w(K);
  for (int j = 0; j < K; ++j) w(j) = 1.0 / ((1.0 + ub(j)) * (1.0 + ub(j)));
  const DerivativeSolver solver(tr, w);
  const DerivativeSolution dotI = solver.solve(solver.rhs_identity());

  const VecR u1 = ub;
  const VecR u2 = detail::phi_weighted_rowsum(dfp.fp.e, cfg.tau2_dl);
  const VecR ud1 = dotI.row_sum();
  const VecR ud2 = detail::phi_weighted_rowsum(dotI.udot, cfg.tau2_dl);
  const VecR bracket = detail::rzf_power_brackets(dfp, tr, dotI.udot);
  const double max_bracket = bracket.maxCoeff();

  DEResult out;
  out.alpha_used = alpha;
  out.xi2_bar = M * cfg.power / max_bracket;
  out.fp_iterations = dfp.fp.iterations;
  out.fp_residual = dfp.fp.residual;
  out.lin_residual = dotI.residual;
  out.gamma_bar.resize(K);
  for (int k = 0; k < K; ++k) {
    const double one_u1 = 1.0 + u1(k);
    const double u_dl = u1(k) - alpha * ud1(k) -
                        2.0 * u2(k) * (u2(k) - alpha * ud2(k)) / one_u1 +
                        u2(k) * u2(k) * (u1(k) - alpha * ud1(k)) / (one_u1 * one_u1);
    double cross = cfg.sigma2_dl;
    for (int i = 0; i < cfg.k_ul; ++i) cross += cfg.p_ul(i) * corr.t_uu(k, i);
    const double v_bar = cross * max_bracket / (M * cfg.power);
    out.gamma_bar(k) = u2(k) * u2(k) / (one_u1 * one_u1 * (u_dl + v_bar));
  }
  out.sum_rate_bar = (out.gamma_bar.array() + 1.0).log().sum() / std::log(2.0);
  return out;
}

/// Deterministic equivalent of the residual DL-to-UL interference covariance
/// (the Sigma_bar feeding the uplink analysis). One derivative solve per
/// receive antenna, all on one factorization.
inline ResidualCovariance de_residual_covariance(const SystemConfig& cfg,
                                                 const CorrelationSet& corr,
                                                 double alpha) {
  const int K = cfg.k_dl, M = cfg.M;
  DlFixedPoint dfp = solve_dl_fixed_point(corr.t_dl, alpha, M);
  const DeTraces tr = DeTraces::build(corr.t_dl, dfp.fp.psi, M);
  const VecR ub = dfp.fp.ubar();
  VecR w(K);
  for (int j = 0; j < K; ++j) w(j) = 1.0 / ((1.0 + ub(j)) * (1.0 + ub(j)));
  const DerivativeSolver solver(tr, w);
  const DerivativeSolution dotI = solver.solve(solver.rhs_identity());
  const VecR bracket = detail::rzf_power_brackets(dfp, tr, dotI.udot);
  const double xi2_bar = M * cfg.power / bracket.maxCoeff();

  ResidualCovariance rc;
  rc.a = residual_gain_table(cfg, corr);
  rc.delta.resize(cfg.rx_dim());
  std::vector<VecR> diag(cfg.n_tx, VecR::Zero(M));
  for (int n = 0; n < cfg.rx_dim(); ++n) {
    for (int m = 0; m < cfg.n_tx; ++m)
      for (int i = 0; i < M; ++i) diag[m](i) = rc.a(m * M + i, n);
    const DerivativeSolution dotA = solver.solve(solver.rhs_diagonal(diag));
    const VecR udA = dotA.row_sum();
    double acc = cfg.sigma2_ul;
    for (int k = 0; k < K; ++k) {
      const double one_u1 = 1.0 + ub(k);
      acc += xi2_bar * udA(k) / (one_u1 * one_u1);
    }
    rc.delta(n) = acc;
  }
  return rc;
}

/// Deterministic equivalent of the uplink MMSE ergodic sum-rate. Solves the
/// uplink fixed point against Sigma_bar, then one derivative system per user
/// plus one for the Sigma direction.
inline DEResult de_ul(const SystemConfig& cfg, const CorrelationSet& corr,
                      double alpha) {
  const int K = cfg.k_ul, N = cfg.n_rx, M = cfg.M;
  if (K == 0) throw ConfigError("de_ul: no uplink users");
  const ResidualCovariance rc = de_residual_covariance(cfg, corr, alpha);

  std::vector<VecR> sigma_diag(N);
  for (int n = 0; n < N; ++n) sigma_diag[n] = rc.delta.segment(n * M, M);

  BlockFixedPoint fp =
      solve_block_fixed_point(corr.t_ul, M, cfg.p_ul, 1.0, sigma_diag);
  const DeTraces tr = DeTraces::build(corr.t_ul, fp.psi, M);
  const VecR ub = fp.ubar();
  VecR w(K);
  for (int j = 0; j < K; ++j) {
    const double denom = 1.0 + cfg.p_ul(j) * ub(j);
    w(j) = cfg.p_ul(j) * cfg.p_ul(j) / (denom * denom);
  }
  const DerivativeSolver solver(tr, w);
  const DerivativeSolution dotS = solver.solve(solver.rhs_diagonal(sigma_diag));

  const VecR u1 = ub;
  const VecR u2 = detail::phi_weighted_rowsum(fp.e, cfg.tau2_ul);
  const VecR udS = dotS.row_sum();

  DEResult out;
  out.alpha_used = alpha;
  out.fp_iterations = fp.iterations;
  out.fp_residual = fp.residual;
  out.lin_residual = dotS.residual;
  out.gamma_bar = VecR::Zero(K);
  for (int k = 0; k < K; ++k) {
    if (cfg.p_ul(k) <= 0.0 || u2(k) <= 0.0) continue;
    const DerivativeSolution dotK = solver.solve(solver.rhs_user(k));
    const VecR ud1 = dotK.row_sum();
    const VecR ud2 = detail::phi_weighted_rowsum(dotK.udot, cfg.tau2_ul);
    double interf = 0.0;
    for (int i = 0; i < K; ++i) {
      if (i == k) continue;
      const double pi = cfg.p_ul(i);
      const double di = 1.0 + pi * u1(i);
      const double br = ud1(i) - 2.0 * pi * u2(i) * ud2(i) / di +
                        pi * pi * u2(i) * u2(i) * ud1(i) / (di * di);
      interf += pi * br;
    }
    out.gamma_bar(k) =
        cfg.p_ul(k) * u2(k) * u2(k) / (interf / M + udS(k));
    out.lin_residual = std::max(out.lin_residual, dotK.residual);
  }
  out.sum_rate_bar = (out.gamma_bar.array() + 1.0).log().sum() / std::log(2.0);
  return out;
}

/// Deterministic equivalent of the downlink ZF ergodic sum-rate: the exact
/// alpha -> 0 limit of the RZF equivalent, evaluated through the underline
/// fixed point plus the constant-order correction system of the Laurent
/// expansion e(alpha) = e_under/alpha + e0 + O(alpha).
inline DEResult de_dl_zf(const SystemConfig& cfg, const CorrelationSet& corr) {
  const int K = cfg.k_dl, N = cfg.n_tx, M = cfg.M;

  std::vector<int> active;
  for (int k = 0; k < K; ++k) {
    double norm = 0.0;
    for (int n = 0; n < N; ++n) norm += corr.t_dl[k][n].norm();
    if (norm > 0.0) active.push_back(k);
  }
  const int Ka = static_cast<int>(active.size());
  std::vector<std::vector<MatC>> T(Ka);
  for (int a = 0; a < Ka; ++a) T[a] = corr.t_dl[active[a]];

  BlockFixedPoint fp;
  try {
    fp = solve_block_fixed_point(T, M, VecR::Ones(Ka), 0.0,
                                 std::vector<VecR>(N, VecR::Ones(M)));
  } catch (const SolverError&) {
    throw SolverError(
        "de_dl_zf: underline fixed point degenerate (Assumption 3 regime "
        "violated, K_D too close to M*N_D); use RZF with alpha > 0");
  }
  const VecR ub = fp.ubar();
  if (ub.minCoeff() < 1e-8)
    throw SolverError(
        "de_dl_zf: underline solution not bounded away from zero (Assumption 3 "
        "regime violated); use RZF with alpha > 0");

  const DeTraces tr = DeTraces::build(T, fp.psi, M);

  // Constant-order system: ubar0_k = sum_j C_kj (1 + ubar0_j) with
  // C_kj = (1/(M^2 ub_j^2)) sum_n tr(T_k,n Psi_n T_j,n Psi_n).
  MatR C(Ka, Ka);
  for (int k = 0; k < Ka; ++k)
    for (int j = 0; j < Ka; ++j) {
      double acc = 0.0;
      for (int n = 0; n < N; ++n) acc += tr.tr3(k * N + n, j);
      C(k, j) = acc / (M * M * ub(j) * ub(j));
    }
  const VecR ones = VecR::Ones(Ka);
  Eigen::PartialPivLU<MatR> lu(MatR::Identity(Ka, Ka) - C);
  const VecR u0 = lu.solve(C * ones);
  const double lin_res = ((MatR::Identity(Ka, Ka) - C) * u0 - C * ones).norm() /
                         std::max(1e-300, (C * ones).norm());
  if (lin_res > 1e-9)
    throw SolverError("de_dl_zf: correction system residual " + std::to_string(lin_res));

  // e0 blocks and the limiting per-RAU power traces tr(Psi0_n).
  MatR e0(Ka, N);
  VecR tr_psi0 = VecR::Zero(N);
  for (int n = 0; n < N; ++n) {
    MatC R = MatC::Zero(M, M);
    for (int j = 0; j < Ka; ++j)
      R += ((1.0 + u0(j)) / (M * ub(j) * ub(j))) * T[j][n];
    const MatC psi0 = fp.psi[n] * R * fp.psi[n];
    tr_psi0(n) = psi0.trace().real();
    for (int k = 0; k < Ka; ++k)
      e0(k, n) = trace_prod(T[k][n], psi0).real() / M;
  }
  const double max_tr_psi0 = tr_psi0.maxCoeff();

  MatR tau2_active(Ka, N);
  for (int a = 0; a < Ka; ++a) tau2_active.row(a) = cfg.tau2_dl.row(active[a]);
  const VecR u2u = detail::phi_weighted_rowsum(fp.e, tau2_active);
  const VecR u10 = e0.rowwise().sum();
  const VecR u20 = detail::phi_weighted_rowsum(e0, tau2_active);

  DEResult out;
  out.alpha_used = 0.0;
  out.xi2_bar = M * cfg.power / max_tr_psi0;
  out.fp_iterations = fp.iterations;
  out.fp_residual = fp.residual;
  out.lin_residual = lin_res;
  out.gamma_bar = VecR::Zero(K);
  for (int a = 0; a < Ka; ++a) {
    const int k = active[a];
    const double ratio = u2u(a) / ub(a);
    const double u_dl = u10(a) - 2.0 * ratio * u20(a) + ratio * ratio * u10(a);
    double cross = cfg.sigma2_dl;
    for (int i = 0; i < cfg.k_ul; ++i) cross += cfg.p_ul(i) * corr.t_uu(k, i);
    const double v_bar = cross * max_tr_psi0 / (M * cfg.power);
    out.gamma_bar(k) = u2u(a) * u2u(a) / (ub(a) * ub(a) * (u_dl + v_bar));
  }
  out.sum_rate_bar = (out.gamma_bar.array() + 1.0).log().sum() / std::log(2.0);
  return out;
}

/// Golden-section maximization of the RZF deterministic-equivalent sum-rate
/// over log10(alpha). The window is shifted by the mean correlation scale so
/// path-loss scenarios search a sensible range.
inline double optimize_alpha(const SystemConfig& cfg, const CorrelationSet& corr,
                             double lo_exp = -6.0, double hi_exp = 2.0) {
  double scale = 0.0;
  for (const auto& row : corr.t_dl)
    for (const MatC& b : row) scale += b.trace().real() / cfg.M;
  scale /= std::max<size_t>(1, corr.t_dl.size() * corr.t_dl.front().size());
  const double shift = std::log10(std::max(scale, 1e-12));

  auto value = [&](double ex) {
    return de_dl_rzf(cfg, corr, std::pow(10.0, ex + shift)).sum_rate_bar;
  };
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo_exp, b = hi_exp;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = value(c), fd = value(d);
  for (int it = 0; it < 60 && (b - a) > 1e-4; ++it) {
    if (fc > fd) {
      b = d; d = c; fd = fc;
      c = b - gr * (b - a);
      fc = value(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + gr * (b - a);
      fd = value(d);
    }
  }
  return std::pow(10.0, 0.5 * (a + b) + shift);
}

/// Resolves the configured regularizer: explicit value or DE-optimized.
inline double resolve_alpha(const SystemConfig& cfg, const CorrelationSet& corr) {
  return cfg.auto_alpha() ? optimize_alpha(cfg, corr) : cfg.alpha;
}

}  // namespace nafd
