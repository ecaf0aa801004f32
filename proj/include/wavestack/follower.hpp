#pragma once

#include <vector>

#include "wavestack/discretization.hpp"
#include "wavestack/geometry.hpp"
#include "wavestack/wave_solver.hpp"

namespace wavestack {

inline constexpr double kDefaultPenalty = 100.0;

/// Data of the follower's tracking problem. The leader and the follower act on
/// the same side. Empty vectors and fields stand for zero.
struct FollowerProblem {
  Grid grid;
  BoundaryProfile profile = BoundaryProfile::constant();
  Side actuated_side = Side::gamma0;
  BoundaryTrace leader{Side::gamma0, {}};
  double penalty = kDefaultPenalty;
  Field tracking_target;
  Vector z0;
  Vector z1;
};

struct FollowerOptions {
  double tolerance = 1e-10;
  int max_iterations = 500;
};

struct FixedPointOptions {
  double tolerance = 1e-10;
  int max_iterations = 200;
};

struct FollowerSolution {
  BoundaryTrace follower;
  Field state;
  Field adjoint;
  double cost = 0.0;
  double characterization_residual = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  std::vector<double> residual_history;
};

struct OptimalitySystem {
  Field state;
  Field adjoint;
  BoundaryTrace follower;
  int iterations = 0;
};

/// The discrete follower quadratic for one problem, with the solver operators
/// assembled once. Follower traces are plain vectors of length nt+1 on the
/// actuated side.
///
///   cost(v) = 1/2 sum_n wt_n alpha_n sum_j wy_j (z - z2)^2 + penalty/2 |v|^2_Gamma
///
/// with z the trajectory driven by leader + v. Gradients are Riesz
/// representatives in the trapezoidal L2(Gamma) inner product.
class FollowerModel {
 public:
  explicit FollowerModel(FollowerProblem problem);

  const FollowerProblem& problem() const noexcept { return problem_; }
  const WaveSolver& solver() const noexcept { return solver_; }
  const Grid& grid() const noexcept { return problem_.grid; }
  Side side() const noexcept { return problem_.actuated_side; }
  double penalty() const noexcept { return problem_.penalty; }

  /// Trajectory with the initial data, leader + follower on the actuated side.
  Field state(const Vector& follower) const;
  double cost(const Vector& follower) const;
  /// penalty * v + misfit_gradient(state(v)).
  Vector gradient(const Vector& follower) const;
  /// Riesz representative of z -> 1/2 |z - z2|^2_W with respect to the trace.
  Vector misfit_gradient(const Field& state) const;
  /// Homogeneous normal operator S u = B^T W B u (Riesz form), where B maps a
  /// trace to the trajectory with zero initial data.
  Vector normal(const Vector& u) const;
  /// Space-time weight wt_n * alpha_n * wy_j of the tracking term.
  const Field& weights() const noexcept { return weights_; }
  /// Backward solve with source alpha (z - z2).
  Field adjoint(const Field& state) const;
  /// Follower trace predicted from the adjoint by the closed form
  /// characterization, c(t) p_y with the sign of the discrete derivation.
  Vector characterization(const Field& adjoint) const;

 private:
  Field misfit(const Field& state) const;

  FollowerProblem problem_;
  WaveSolver solver_;
  Field weights_;
  Vector leader_;
};

double follower_cost(const FollowerProblem& problem, const BoundaryTrace& candidate);
BoundaryTrace follower_gradient(const FollowerProblem& problem, const BoundaryTrace& candidate);

/// Conjugate gradients on (penalty I + S) v = -misfit_gradient(state(0)) in the
/// L2(Gamma) inner product. Throws IterationError when max_iterations is hit.
FollowerSolution solve_follower(const FollowerProblem& problem, const FollowerOptions& options = {},
                                const BoundaryTrace* initial_guess = nullptr);

/// Fixed point of v = -(1/penalty) misfit_gradient(state(v)). Throws
/// ConvergenceError when the iteration does not contract.
OptimalitySystem solve_optimality_system(const FollowerProblem& problem,
                                         const FixedPointOptions& options = {});

/// |v - characterization(p)|_Gamma / |v|_Gamma, 0 when both vanish.
double characterization_residual(const FollowerModel& model, const Vector& follower,
                                 const Field& adjoint);

}  // namespace wavestack
