#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "wavestack/discretization.hpp"

namespace wavestack::testing {

/// Uniform samples in [-1, 1) from a seeded 64-bit Mersenne twister, built
/// from the raw bits so the sequence is identical on every platform.
class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53 * 2.0 - 1.0; }

  Eigen::VectorXd vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform();
    return v;
  }

 private:
  std::mt19937_64 engine_;
};

inline double relative_gap(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

/// Smooth field sum_{k<=modes, l<3} c_kl sin(k pi y) cos(l pi t / T) with
/// seeded coefficients, so the same target can be sampled on several grids.
inline Field smooth_field(const Grid& g, std::uint64_t seed, int modes = 3, double scale = 1.0) {
  Sampler rng(seed);
  double c[3][3];
  for (auto& row : c)
    for (double& x : row) x = scale * rng.uniform();
  const double pi = std::acos(-1.0);
  Field f(g);
  for (int n = 0; n < g.levels(); ++n)
    for (int j = 0; j < g.nodes(); ++j) {
      double s = 0.0;
      for (int k = 0; k < modes; ++k)
        for (int l = 0; l < 3; ++l)
          s += c[k][l] * std::sin((k + 1) * pi * g.y(j)) * std::cos(l * pi * g.t(n) / g.final_time());
      f(n, j) = s;
    }
  return f;
}

}  // namespace wavestack::testing
