#pragma once

#include <string>
#include <vector>

#include "wavestack/follower.hpp"

namespace wavestack {

/// Minimal norm approximate controllability problem of the leader. The
/// follower template carries grid, profile, side, penalty, tracking target and
/// initial data; its leader slot is ignored.
struct LeaderProblem {
  FollowerProblem follower;
  Vector v0;  // position target, empty means zero
  Vector v1;  // velocity target, empty means zero
  double epsilon = 1e-2;
};

/// Dual pair {f0, f1}; f0 vanishes at both boundary nodes.
struct DualVariable {
  Vector f0;
  Vector f1;
  static DualVariable zero(const Grid& grid) {
    return {Vector::Zero(grid.nodes()), Vector::Zero(grid.nodes())};
  }
};

/// Leader-independent part of the optimality system: the follower response to
/// the initial data and tracking target alone.
struct Background {
  Field state;
  Field adjoint;
  StatePair terminal;
};

struct LeaderOptions {
  double tolerance = 1e-8;
  int max_iterations = 2000;
  /// Relative tolerance of the inner fixed points in A and A*.
  double fixed_point_tolerance = 1e-13;
  int power_iterations = 60;
  /// The dual problem is solved with epsilon (1 - margin) so that the
  /// recovered terminal errors land strictly inside the epsilon ball.
  double epsilon_margin = 1e-3;
};

struct ThetaTrace {
  std::vector<double> theta;
  std::vector<double> residual;
  int restarts = 0;
  double lipschitz = 0.0;
  bool converged = false;
};

struct LeaderSolution {
  BoundaryTrace leader;
  BoundaryTrace follower;
  DualVariable dual_optimum;
  double theta_value = 0.0;
  double leader_cost = 0.0;
  double terminal_position_error = 0.0;
  double terminal_velocity_error = 0.0;
  /// sqrt(alpha(T)) |z(T) - v0|_L2, the position error on the physical interval.
  double physical_position_error = 0.0;
  double duality_gap = 0.0;
  int iterations = 0;
  bool admissible = false;
  bool threshold_warning = false;
  double threshold = 0.0;
  std::vector<std::string> warnings;
  ThetaTrace history;
};

/// Linear maps of the follower-coupled control problem for one LeaderProblem.
///
///   A f = {h_t(T), -h(T)},  h = B P f,  P = penalty (penalty I + S)^{-1}
///
/// where P f = f + v is the leader plus the follower's reaction (a fixed
/// point), B the trace-to-trajectory map with zero data and S the follower
/// normal operator. A* is the adjoint under the trapezoidal pairing
/// <<{a, b}, {f0, f1}>> = (a, f0) + (b, f1) and the L2(Gamma) product.
class LeaderOperator {
 public:
  explicit LeaderOperator(const LeaderProblem& problem, double fixed_point_tolerance = 1e-13);

  const FollowerModel& model() const noexcept { return model_; }
  const Grid& grid() const noexcept { return model_.grid(); }
  Side side() const noexcept { return model_.side(); }

  /// P g by the fixed point u <- g - S u / penalty.
  Vector apply_P(const Vector& g) const;
  /// Returned pair: position = h_t(T), velocity = -h(T) (the {a, b} of A f).
  StatePair apply_A(const Vector& f) const;
  Vector apply_Astar(const DualVariable& xi) const;
  double pairing(const StatePair& a, const DualVariable& xi) const;

 private:
  FollowerModel model_;
  double tolerance_;
};

Background solve_background(const LeaderProblem& problem, const FixedPointOptions& options = {});

StatePair apply_A(const BoundaryTrace& f, const LeaderProblem& problem);
BoundaryTrace apply_Astar(const DualVariable& xi, const LeaderProblem& problem);

/// Dual functional split into its smooth part (quadratic + linear) and the
/// epsilon norm terms.
class ThetaModel {
 public:
  ThetaModel(const LeaderOperator& op, const LeaderProblem& problem, const Background& background,
             double epsilon);

  double smooth(const DualVariable& xi) const;
  double nonsmooth(const DualVariable& xi) const;
  double value(const DualVariable& xi) const { return smooth(xi) + nonsmooth(xi); }
  /// Gradient of the smooth part as plain partial derivatives.
  DualVariable euclidean_gradient(const DualVariable& xi) const;
  /// Same gradient represented in the H1_0 x L2 metric.
  DualVariable riesz_gradient(const DualVariable& xi) const;
  /// Riesz gradient when A* xi is already known.
  DualVariable riesz_gradient_from(const Vector& astar_xi) const;
  double metric_norm(const DualVariable& xi) const;
  double epsilon() const noexcept { return epsilon_; }
  const LeaderOperator& op() const noexcept { return op_; }
  /// d0 = v0 - nu0(T), d1 = v1 - (nu0)_t(T).
  const Vector& d0() const noexcept { return d0_; }
  const Vector& d1() const noexcept { return d1_; }

 private:
  const LeaderOperator& op_;
  Vector d0_;
  Vector d1_;
  double epsilon_;
};

double theta(const DualVariable& xi, const LeaderProblem& problem, const Background& background);

/// FISTA with restart on increase and exact radial-shrink prox. Throws
/// IterationError (residual history attached) when max_iterations is hit;
/// `last` then holds the final iterate.
DualVariable minimize_theta(const ThetaModel& model, const LeaderOptions& options = {},
                            ThetaTrace* trace = nullptr, DualVariable* last = nullptr);
DualVariable minimize_theta(const LeaderProblem& problem, const LeaderOptions& options = {});

LeaderSolution recover_and_verify(const LeaderProblem& problem, const DualVariable& xi,
                                  const Background& background, const LeaderOptions& options = {});

/// Background, dual minimization and recovery in one call.
LeaderSolution solve_leader(const LeaderProblem& problem, const LeaderOptions& options = {});

/// True when T is at or below the sufficient control time of the actuated side.
/// Degenerate profiles (no valid speed bounds) always warn.
bool threshold_warning(const BoundaryProfile& profile, Side side, double T, double* threshold);

}  // namespace wavestack
