// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nafd/types.hpp"

namespace nafd {

/// Dimensions, powers, noise levels and CSI-quality grids for one system.
///
/// CSI grids hold tau^2 values in [0,1]: tau2_dl is (k_dl x n_tx), tau2_ul is
/// (k_ul x n_rx), tau2_I is (M*n_tx x n_rx), one entry per link endpoint pair.
struct SystemConfig {
  int M = 8;       // antennas per RAU
  int n_rx = 4;    // receiving RAUs (N_U)
  int n_tx = 4;    // transmitting RAUs (N_D)
  int k_ul = 32;   // active uplink users (K_U)
  int k_dl = 32;   // active downlink users (K_D)

  double power = 1.0;       // per-RAU power parameter P (budget is M*P)
  VecR p_ul;                // uplink transmit power per uplink user
  double sigma2_ul = 1.0;
  double sigma2_dl = 1.0;
  double alpha = 0.1;       // RZF regularizer; <=0 means "optimize via DE"

  MatR tau2_dl, tau2_ul, tau2_I;

  int rx_dim() const { return M * n_rx; }
  int tx_dim() const { return M * n_tx; }
  bool auto_alpha() const { return alpha <= 0.0; }

  static MatR expand_tau2(double v, int rows, int cols) {
    return MatR::Constant(rows, cols, v);
  }

  /// Per-RAU tau^2 list (the mixed-quality case), broadcast over users.
  static MatR expand_tau2(const std::vector<double>& per_rau, int rows, int cols) {
    if (static_cast<int>(per_rau.size()) != cols)
      throw ConfigError("tau2 per-RAU list length must equal the RAU count");
    MatR out(rows, cols);
    for (int c = 0; c < cols; ++c) out.col(c).setConstant(per_rau[c]);
    return out;
  }

  void fill_defaults() {
    if (p_ul.size() == 0) p_ul = VecR::Constant(k_ul, 1.0);
    if (tau2_dl.size() == 0) tau2_dl = MatR::Zero(k_dl, n_tx);
    if (tau2_ul.size() == 0) tau2_ul = MatR::Zero(k_ul, n_rx);
    if (tau2_I.size() == 0) tau2_I = MatR::Zero(M * n_tx, n_rx);
  }

  void validate() const {
    if (M < 1) throw ConfigError("system.M must be >= 1");
    if (n_rx < 1 || n_tx < 1) throw ConfigError("system.n_rx and system.n_tx must be >= 1");
    if (k_dl < 1) throw ConfigError("system.k_dl must be >= 1");
    if (k_ul < 0) throw ConfigError("system.k_ul must be >= 0");
    if (power <= 0.0) throw ConfigError("system.power must be > 0");
    if (sigma2_ul <= 0.0 || sigma2_dl <= 0.0)
      throw ConfigError("system.sigma2_ul and system.sigma2_dl must be > 0");
    if (p_ul.size() != k_ul) throw ConfigError("system.p_ul length must equal k_ul");
    if (k_ul > 0 && p_ul.minCoeff() < 0.0) throw ConfigError("system.p_ul must be >= 0");
    auto check_grid = [](const MatR& g, int rows, int cols, const char* name) {
      if (g.rows() != rows || g.cols() != cols)
        throw ConfigError(std::string(name) + ": bad grid shape");
      if (g.size() > 0 && (g.minCoeff() < 0.0 || g.maxCoeff() > 1.0))
        throw ConfigError(std::string(name) + ": tau^2 entries must lie in [0,1]");
    };
    check_grid(tau2_dl, k_dl, n_tx, "system.tau2_dl");
    if (k_ul > 0) check_grid(tau2_ul, k_ul, n_rx, "system.tau2_ul");
    check_grid(tau2_I, M * n_tx, n_rx, "system.tau2_I");
  }
};

enum class DuplexMode { NAFD, CCFD_MASSIVE, CCFD_CRAN };

inline const char* to_string(DuplexMode m) {
  switch (m) {
    case DuplexMode::NAFD: return "nafd";
    case DuplexMode::CCFD_MASSIVE: return "ccfd_massive";
    case DuplexMode::CCFD_CRAN: return "ccfd_cran";
  }
  return "?";
}

/// Circular service area with RAUs on an inner circle (or co-located at the
/// centre, depending on the duplex mode). Distances are stored in metres and
/// converted to kilometres inside the path-loss law, whose reference gain c_r
/// is quoted at 1 km.
struct GeometryScenario {
  DuplexMode mode = DuplexMode::NAFD;
  double area_radius_m = 1000.0;   // R
  double rau_radius_m = 500.0;     // r
  double min_dist_m = 30.0;        // r0
  double pathloss_exp = 3.7;       // eta
  double ref_gain = 1.0;           // c_r (linear, at 1 km)
  double sigma2_si = -1.0;         // CCFD residual self-interference; <0 -> 1/M

  double sigma2_si_for(int M) const { return sigma2_si > 0.0 ? sigma2_si : 1.0 / M; }

  void validate() const {
    if (mode == DuplexMode::NAFD &&
        !(0.0 < min_dist_m && min_dist_m < rau_radius_m && rau_radius_m < area_radius_m))
      throw ConfigError("geometry: need 0 < min_dist < rau_radius < area_radius for NAFD");
    if (area_radius_m <= 0.0 || min_dist_m <= 0.0)
      throw ConfigError("geometry: radii must be positive");
    if (pathloss_exp < 0.0) throw ConfigError("geometry.pathloss_exp must be >= 0");
    if (ref_gain <= 0.0) throw ConfigError("geometry.ref_gain must be > 0");
  }
};

struct GaParams {
  int population = 40;       // S_P
  int max_iterations = 100;  // S_I
  double crossover_rate = 0.8;
  double mutation_rate = 0.1;
  int elitism = 1;
  std::uint64_t seed = 1;

  void validate() const {
    if (population < 2) throw ConfigError("ga.population must be >= 2");
    if (max_iterations < 1) throw ConfigError("ga.max_iterations must be >= 1");
    if (crossover_rate < 0.0 || crossover_rate > 1.0 || mutation_rate < 0.0 ||
        mutation_rate > 1.0)
      throw ConfigError("ga rates must lie in [0,1]");
    if (elitism < 0 || elitism >= population)
      throw ConfigError("ga.elitism must lie in [0, population)");
  }
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

}  // namespace nafd
