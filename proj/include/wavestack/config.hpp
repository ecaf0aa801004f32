#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "wavestack/follower.hpp"
#include "wavestack/geometry.hpp"
#include "wavestack/leader.hpp"

namespace wavestack {

/// A target from the whitelist: `zero`, a sum of `[a*]sin(n)` terms
/// (a sin(n pi s)), `poly(c0, c1, ...)` (c0 + c1 s + ...) or `file:<path>`
/// (samples with a `# n=<count>` header, linearly interpolated on [0, 1]).
struct Expression {
  enum class Kind { zero, sines, poly, samples };
  Kind kind = Kind::zero;
  std::vector<std::pair<double, int>> sines;  // (amplitude, mode)
  std::vector<double> poly;
  Vector samples;
  std::string text = "zero";

  /// Value at s in [0, length]; sines and samples are scaled to the interval.
  double operator()(double s, double length = 1.0) const;
  /// Samples at the grid nodes on [0, length].
  Vector sample(const Grid& grid, double length = 1.0) const;
};

/// Throws ConfigError naming the offending text.
Expression parse_expression(const std::string& text, const std::filesystem::path& base_dir = {});

enum class ThresholdPolicy { warn, error, ignore };
enum class DataDomain { cylinder, physical };

struct ExperimentConfig {
  // [profile]
  std::string profile_kind = "affine";
  double profile_parameter = 0.3;  // k for affine, c for arctan_drift
  SpeedBounds bounds{0.2, 0.4};
  // [grid]
  int ny = 16;
  int nt = 160;
  double T = 1.6;
  double cfl = kDefaultCflRatio;
  // [problem]
  Side side = Side::gamma0;
  double sigma = kDefaultPenalty;
  double mu = kDefaultPenalty;
  double epsilon = 1e-2;
  // [targets]
  DataDomain domain = DataDomain::cylinder;
  Expression z0, z1, v0, v1, tracking;
  Expression boundary0, boundary_alpha;  // simulate only, functions of t / T
  // [solver]
  FollowerOptions follower;
  LeaderOptions leader;
  FixedPointOptions fixed_point;
  // [flags]
  bool allow_degenerate = false;
  bool dense_oracle = false;
  ThresholdPolicy threshold_policy = ThresholdPolicy::warn;
  // [thresholds]
  std::vector<double> threshold_m{0.1};
  std::vector<double> threshold_M{0.2};
  // [sweep]
  std::string sweep_command = "leader";
  std::vector<std::pair<std::string, std::vector<std::string>>> sweep_axes;
  // [output] / [run]
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;

  /// Active penalty: sigma on Gamma0, mu on Gamma_alpha.
  double penalty() const { return side == Side::gamma0 ? sigma : mu; }

  BoundaryProfile profile() const;
  Grid grid() const;
  FollowerProblem follower_problem() const;
  LeaderProblem leader_problem() const;
};

/// Parses INI text (`[section]` then `key = value`, `#` or `;` comments).
/// Unknown sections or keys, duplicate keys and malformed values are
/// ConfigErrors. File targets are resolved relative to base_dir.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Sets one sweepable key (Ny, Nt, T, cfl, k, c, sigma, mu, epsilon, side).
void apply_override(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Checks every field that a solve would depend on: grid CFL, profile
/// hypotheses (unless degenerate profiles are allowed), penalties, epsilon.
void validate_config(const ExperimentConfig& config);

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace wavestack
