#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

#include "wavestack/follower.hpp"
#include "wavestack/leader.hpp"

namespace wavestack {

using DenseMatrix = Eigen::MatrixXd;

inline constexpr long kDenseDofLimit = 10000;

/// Brute force linear maps of one (grid, profile, side), assembled from unit
/// impulse forward solves with zero initial data.
struct DenseMaps {
  Grid grid;
  Side side = Side::gamma0;
  /// Trace values (nt+1) to every trajectory entry, row index n*(ny+1)+j.
  DenseMatrix control_to_trajectory;
  /// Trace values to the interior terminal pair [z(T); z_t(T)], 2(ny-1) rows.
  DenseMatrix control_to_terminal;
  Vector trace_weights;
  Vector space_weights;
  /// alpha(t_n) wt_n wy_j per trajectory entry, same ordering as the rows above.
  Vector tracking_weights;
  /// Gram matrices on interior nodes: |u|^2_{H1_0} = u^T h10 u and
  /// |w|^2_{H^-1} = w^T hminus1 w.
  DenseMatrix h10_gram;
  DenseMatrix hminus1_gram;
};

/// Refuses (ConfigError) when ny * nt exceeds kDenseDofLimit.
DenseMaps assemble_dense_maps(const Grid& grid, const BoundaryProfile& profile, Side side);

/// Follower trace from the dense normal equations
///   (penalty Q + B^T W B) v = B^T W (z2 - z_leader).
/// LDLT is the answer; an LU solve of the same system must agree to 1e-8.
BoundaryTrace follower_qp_oracle(const FollowerProblem& problem, const DenseMaps& maps);

/// Dense A (rows: full-node a = h_t(T) then full-node b = -h(T)) and its
/// adjoint under the trapezoidal pairings, A^T_metric = Q^-1 A^T D.
struct DenseLeaderMaps {
  DenseMatrix A;
  DenseMatrix adjoint;
  /// The follower reaction P = penalty (penalty I + S)^-1 on traces.
  DenseMatrix P;
};

DenseLeaderMaps dense_A(const LeaderProblem& problem, const DenseMaps& maps);

/// Central differences, one component at a time.
Vector fd_gradient(const std::function<double(const Vector&)>& functional, const Vector& point,
                   double h);

/// Leader optimum from the dense primal: minimizes 1/2 |f|^2_Gamma subject to
/// the two ball constraints by projected Newton on the two multipliers. The
/// dual pair is read off the multipliers.
struct DenseLeaderSolution {
  Vector leader;
  DualVariable dual;
  double multiplier_position = 0.0;
  double multiplier_velocity = 0.0;
  double position_error = 0.0;
  double velocity_error = 0.0;
  int iterations = 0;
};

DenseLeaderSolution dense_leader_oracle(const LeaderProblem& problem, const DenseMaps& maps,
                                        const Background& background, double epsilon);

/// One row of oracle_report.csv.
struct OracleRecord {
  std::string test_id;
  std::string instance_hash;
  double discrepancy = 0.0;
  double tolerance = 0.0;
  bool pass() const { return discrepancy <= tolerance; }
};

}  // namespace wavestack
