// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "nafd/types.hpp"

namespace nafd {

// Labeled, splittable random streams. A stream is an mt19937_64 engine seeded
// by mixing the master seed with a label hash and integer indices through
// SplitMix64. The mt19937_64 sequence and the Box-Muller transform below are
// fully specified, so a (seed, label, indices) tuple reproduces the same
// draws on any conforming platform.

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Derives the seed for a child stream identified by a label and up to three
/// integer indices (sweep point, trial, ...).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                                    std::uint64_t i0 = 0, std::uint64_t i1 = 0,
                                    std::uint64_t i2 = 0) {
  std::uint64_t h = splitmix64(master ^ fnv1a64(label));
  h = splitmix64(h ^ (0x9e3779b97f4a7c15ULL + i0));
  h = splitmix64(h ^ (0xc2b2ae3d27d4eb4fULL + i1));
  h = splitmix64(h ^ (0x165667b19e3779f9ULL + i2));
  return h;
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  RngStream(std::uint64_t master, std::string_view label, std::uint64_t i0 = 0,
            std::uint64_t i1 = 0, std::uint64_t i2 = 0)
      : engine_(derive_seed(master, label, i0, i1, i2)) {}

  std::uint64_t raw() { return engine_(); }

  /// Uniform on [0,1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller. One pair of uniforms per pair of normals;
  /// the spare value is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// Circularly symmetric complex Gaussian CN(0, 1).
  Complex cnormal() {
    const double re = normal();
    const double im = normal();
    return Complex(re, im) / std::sqrt(2.0);
  }

  /// Matrix with i.i.d. CN(0, variance) entries, filled column-major.
  MatC cnormal_matrix(Eigen::Index rows, Eigen::Index cols, double variance = 1.0) {
    MatC out(rows, cols);
    const double s = std::sqrt(variance);
    for (Eigen::Index c = 0; c < cols; ++c)
      for (Eigen::Index r = 0; r < rows; ++r) out(r, c) = s * cnormal();
    return out;
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection-free Lemire reduction would bias determinism tests across
    // word sizes; plain rejection keeps the draw count data-dependent but
    // platform-stable.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return v % n;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace nafd
