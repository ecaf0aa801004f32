#pragma once

#include <memory>

#include "wavestack/discretization.hpp"
#include "wavestack/geometry.hpp"
#include "wavestack/step_operators.hpp"

namespace wavestack {

struct ForwardProblem {
  Grid grid;
  BoundaryProfile profile = BoundaryProfile::constant();
  Vector z0;  // empty means zero
  Vector z1;
  BoundaryTrace gamma0{Side::gamma0, {}};
  BoundaryTrace gamma_alpha{Side::gamma_alpha, {}};
  Field source;  // empty means zero
};

struct BackwardProblem {
  Grid grid;
  BoundaryProfile profile = BoundaryProfile::constant();
  Field source;
};

struct ForwardSolution {
  Field trajectory;
  StatePair terminal;
};

/// Cotangents of every input of the forward map.
struct ForwardCotangent {
  Vector z0;
  Vector z1;
  Vector gamma0;
  Vector gamma_alpha;
  Field source;

  const Vector& trace(Side side) const { return side == Side::gamma0 ? gamma0 : gamma_alpha; }
};

/// Forward and backward solvers sharing the assembled operators of one
/// (profile, grid) pair. Immutable after construction.
class WaveSolver {
 public:
  WaveSolver(const BoundaryProfile& profile, const Grid& grid);

  const Grid& grid() const noexcept { return forward_.grid(); }
  const BoundaryProfile& profile() const noexcept { return profile_; }
  /// alpha(t_n) per level.
  const Vector& alpha() const noexcept { return forward_.alpha(); }
  const Vector& speed() const noexcept { return forward_.speed(); }

  /// Empty vectors / fields stand for zero data. Throws SolverDivergence on
  /// non-finite values.
  Field forward(const Vector& z0, const Vector& z1, const Vector& gamma0, const Vector& gamma_alpha,
                const Field& source = Field()) const;

  /// Trajectory with zero initial data and a single boundary control.
  Field forward_control(Side side, const Vector& control) const;

  /// Exact transpose of `forward`: given the Euclidean cotangent of every
  /// trajectory entry, returns the Euclidean cotangent of every input.
  ForwardCotangent forward_transposed(const Field& cotangent) const;

  /// Marches p_tt + L* p = source backward from p(T) = p_t(T) = 0 with
  /// homogeneous Dirichlet conditions.
  Field backward(const Field& source) const;

 private:
  BoundaryProfile profile_;
  StepSequence forward_;
  StepSequence backward_;
};

ForwardSolution solve_forward(const ForwardProblem& problem);
Field solve_backward(const BackwardProblem& problem);

/// Transpose of terminal_state: Euclidean cotangent on the trajectory of the
/// functional z -> <position, dp> + <velocity, dv> (plain dot products).
Field terminal_cotangent(const Grid& grid, const Vector& dposition, const Vector& dvelocity);

/// Transpose of the control-to-terminal-state map f -> (z(T), z_t(T)) with
/// trapezoidal L2(Omega) pairing on both components and L2(Gamma) pairing on
/// the trace, so that <(z(T), z_t(T)), xi> = <f, result>_Gamma.
BoundaryTrace apply_transposed_forward(Side side, const WaveSolver& solver, const StatePair& dual);

}  // namespace wavestack
