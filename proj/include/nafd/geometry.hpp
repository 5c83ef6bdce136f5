// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include "nafd/config.hpp"
#include "nafd/correlation.hpp"
#include "nafd/rng.hpp"
#include "nafd/types.hpp"

namespace nafd {

struct Point {
  double x = 0.0, y = 0.0;
};

inline double distance_m(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

struct GeometryResult {
  std::vector<Point> rx_sites;   // receiving RAUs
  std::vector<Point> tx_sites;   // transmitting RAUs
  std::vector<Point> ul_users;
  std::vector<Point> dl_users;

  bool co_located(int tx_rau, int rx_rau) const {
    return distance_m(tx_sites[tx_rau], rx_sites[rx_rau]) < 1e-9;
  }
};

/// c_r * d^-eta * I_M with d in kilometres, clamped below at min_distance_km.
inline MatC pathloss_correlation(double distance_km, double eta, double c_r, int M,
                                 double min_distance_km = 0.0) {
  if (distance_km <= 0.0 && min_distance_km <= 0.0)
    throw ConfigError("pathloss_correlation: distance must be positive");
  const double d = std::max(distance_km, min_distance_km);
  return c_r * std::pow(d, -eta) * MatC::Identity(M, M);
}

/// RAU placement per duplex mode plus rejection-sampled user drops. Users are
/// uniform on the disc of radius R and re-drawn until at least r0 away from
/// every RAU (both roles); sampling for one user aborts after 10^4 attempts.
inline GeometryResult build_geometry(const GeometryScenario& sc, const SystemConfig& cfg,
                                     RngStream& rng) {
  sc.validate();
  GeometryResult g;
  const double r = sc.rau_radius_m;
  switch (sc.mode) {
    case DuplexMode::NAFD: {
      // N_U + N_D points equally spaced, alternating rx/tx, rx first at angle 0.
      const int total = cfg.n_rx + cfg.n_tx;
      int placed_rx = 0, placed_tx = 0;
      for (int i = 0; i < total; ++i) {
        const double ang = 2.0 * M_PI * i / total;
        const Point p{r * std::cos(ang), r * std::sin(ang)};
        bool want_rx = (i % 2 == 0);
        if (want_rx && placed_rx >= cfg.n_rx) want_rx = false;
        if (!want_rx && placed_tx >= cfg.n_tx) want_rx = true;
        if (want_rx) {
          g.rx_sites.push_back(p);
          ++placed_rx;
        } else {
          g.tx_sites.push_back(p);
          ++placed_tx;
        }
      }
      break;
    }
    case DuplexMode::CCFD_MASSIVE: {
      g.rx_sites.assign(cfg.n_rx, Point{0.0, 0.0});
      g.tx_sites.assign(cfg.n_tx, Point{0.0, 0.0});
      break;
    }
    case DuplexMode::CCFD_CRAN: {
      if (cfg.n_rx != cfg.n_tx)
        throw ConfigError("ccfd_cran requires n_rx == n_tx (co-located pairs)");
      for (int i = 0; i < cfg.n_rx; ++i) {
        const double ang = 2.0 * M_PI * i / cfg.n_rx;
        const Point p{r * std::cos(ang), r * std::sin(ang)};
        g.rx_sites.push_back(p);
        g.tx_sites.push_back(p);
      }
      break;
    }
  }

  auto draw_users = [&](int count) {
    std::vector<Point> users;
    users.reserve(count);
    for (int k = 0; k < count; ++k) {
      bool ok = false;
      for (int attempt = 0; attempt < 10000; ++attempt) {
        Point p{rng.uniform(-sc.area_radius_m, sc.area_radius_m),
                rng.uniform(-sc.area_radius_m, sc.area_radius_m)};
        if (p.x * p.x + p.y * p.y > sc.area_radius_m * sc.area_radius_m) continue;
        bool clear = true;
        for (const Point& s : g.rx_sites)
          if (distance_m(p, s) < sc.min_dist_m) { clear = false; break; }
        if (clear)
          for (const Point& s : g.tx_sites)
            if (distance_m(p, s) < sc.min_dist_m) { clear = false; break; }
        if (!clear) continue;
        users.push_back(p);
        ok = true;
        break;
      }
      if (!ok)
        throw ConfigError("rejection sampling exhausted 10^4 attempts for a user drop");
    }
    return users;
  };
  g.ul_users = draw_users(cfg.k_ul);
  g.dl_users = draw_users(cfg.k_dl);
  return g;
}

/// Correlation set for a geometry: scalar path-loss blocks on all links.
/// Co-located (intra-site) interference links model the residual
/// self-interference left by analog cancellation: i.i.d. entries of variance
/// sigma2_si, i.e. a block M * sigma2_si * I under the 1/M antenna
/// normalization of the channel model.
inline CorrelationSet correlations_from_geometry(const SystemConfig& cfg,
                                                 const GeometryScenario& sc,
                                                 const GeometryResult& geo) {
  CorrelationSet c;
  c.M = cfg.M;
  c.n_rx = cfg.n_rx;
  c.n_tx = cfg.n_tx;
  c.k_ul = cfg.k_ul;
  c.k_dl = cfg.k_dl;
  const double r0_km = sc.min_dist_m / 1000.0;
  auto pl = [&](double d_m) {
    return pathloss_correlation(d_m / 1000.0, sc.pathloss_exp, sc.ref_gain, cfg.M, r0_km);
  };

  c.t_ul.resize(cfg.k_ul);
  for (int k = 0; k < cfg.k_ul; ++k) {
    c.t_ul[k].reserve(cfg.n_rx);
    for (int n = 0; n < cfg.n_rx; ++n)
      c.t_ul[k].push_back(pl(distance_m(geo.ul_users[k], geo.rx_sites[n])));
  }
  c.t_dl.resize(cfg.k_dl);
  for (int k = 0; k < cfg.k_dl; ++k) {
    c.t_dl[k].reserve(cfg.n_tx);
    for (int n = 0; n < cfg.n_tx; ++n)
      c.t_dl[k].push_back(pl(distance_m(geo.dl_users[k], geo.tx_sites[n])));
  }
  c.t_I.resize(cfg.n_tx);
  for (int m = 0; m < cfg.n_tx; ++m) {
    c.t_I[m].reserve(cfg.n_rx);
    for (int n = 0; n < cfg.n_rx; ++n) {
      if (geo.co_located(m, n)) {
        c.t_I[m].push_back(cfg.M * sc.sigma2_si_for(cfg.M) * MatC::Identity(cfg.M, cfg.M));
      } else {
        c.t_I[m].push_back(pl(distance_m(geo.tx_sites[m], geo.rx_sites[n])));
      }
    }
  }
  c.t_uu.resize(cfg.k_dl, cfg.k_ul);
  for (int k = 0; k < cfg.k_dl; ++k)
    for (int i = 0; i < cfg.k_ul; ++i) {
      const double d = std::max(distance_m(geo.dl_users[k], geo.ul_users[i]), sc.min_dist_m);
      c.t_uu(k, i) = sc.ref_gain * std::pow(d / 1000.0, -sc.pathloss_exp);
    }
  return c;
}

/// Overwrites the interference CSI grid with one quality for inter-site links
/// and another for co-located (intra-site) links. Residual self-interference
/// is not learnable by pilots, so compare-duplex runs set tau2_intra = 1.
inline void apply_interference_csi(SystemConfig& cfg, const GeometryResult& geo,
                                   double tau2_inter, double tau2_intra) {
  cfg.tau2_I.resize(cfg.tx_dim(), cfg.n_rx);
  for (int j = 0; j < cfg.tx_dim(); ++j)
    for (int n = 0; n < cfg.n_rx; ++n)
      cfg.tau2_I(j, n) = geo.co_located(j / cfg.M, n) ? tau2_intra : tau2_inter;
}

}  // namespace nafd
