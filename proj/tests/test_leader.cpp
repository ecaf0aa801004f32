#include <cmath>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "wavestack/errors.hpp"
#include "wavestack/leader.hpp"
#include "wavestack/oracle.hpp"

using namespace wavestack;
using wavestack::testing::Sampler;
using wavestack::testing::smooth_field;

namespace {

const double kPi = std::acos(-1.0);
const BoundaryProfile kAffine = BoundaryProfile::affine(0.3, {0.2, 0.4});

Vector sine(const Grid& g, double amplitude = 1.0) {
  Vector v(g.nodes());
  for (int j = 0; j < g.nodes(); ++j) v[j] = amplitude * std::sin(kPi * g.y(j));
  return v;
}

LeaderProblem small_problem(Side side = Side::gamma0, int ny = 8, int nt = 16, double T = 0.8) {
  LeaderProblem p;
  p.follower.grid = build_grid(ny, nt, T);
  p.follower.profile = kAffine;
  p.follower.actuated_side = side;
  p.follower.leader = {side, {}};
  p.follower.penalty = 100.0;
  p.v0 = sine(p.follower.grid, 0.1);
  p.epsilon = 1e-2;
  return p;
}

DualVariable random_dual(Sampler& rng, const Grid& g) {
  DualVariable xi{rng.vector(g.nodes()), rng.vector(g.nodes())};
  xi.f0[0] = xi.f0[g.ny()] = 0.0;
  return xi;
}

Vector stack(const DualVariable& xi) {
  Vector v(xi.f0.size() + xi.f1.size());
  v << xi.f0, xi.f1;
  return v;
}

DualVariable unstack(const Vector& v, int nodes) {
  return {v.head(nodes), v.tail(nodes)};
}

}  // namespace

TEST(Background, ZeroDataGivesZero) {
  const auto bg = solve_background(small_problem());
  EXPECT_EQ(bg.state.values().norm(), 0.0);
  EXPECT_EQ(bg.adjoint.values().norm(), 0.0);
}

TEST(Background, EqualsFollowerWithoutLeader) {
  LeaderProblem p = small_problem(Side::gamma0, 12, 24);
  p.follower.tracking_target = smooth_field(p.follower.grid, 3);
  const auto bg = solve_background(p);
  const auto s = solve_follower(p.follower);
  EXPECT_LE((bg.state.values() - s.state.values()).norm(), 1e-6 * s.state.values().norm());
}

TEST(Background, LinearInTrackingTarget) {
  LeaderProblem p = small_problem();
  p.follower.tracking_target = smooth_field(p.follower.grid, 5);
  const auto a = solve_background(p);
  p.follower.tracking_target.values() *= 2.0;
  const auto b = solve_background(p);
  EXPECT_LE((b.state.values() - 2.0 * a.state.values()).norm(), 1e-10 * b.state.values().norm());
}

TEST(ApplyA, ZeroControlGivesZero) {
  const LeaderProblem p = small_problem();
  const StatePair a = apply_A(BoundaryTrace::zero(Side::gamma0, p.follower.grid), p);
  EXPECT_EQ(a.position.norm() + a.velocity.norm(), 0.0);
}

TEST(ApplyA, Linear) {
  const LeaderProblem p = small_problem();
  const LeaderOperator op(p);
  Sampler rng(1);
  const Vector f1 = rng.vector(p.follower.grid.levels());
  const Vector f2 = rng.vector(p.follower.grid.levels());
  const StatePair lhs = op.apply_A(0.7 * f1 - 1.3 * f2);
  const StatePair a1 = op.apply_A(f1);
  const StatePair a2 = op.apply_A(f2);
  EXPECT_LE((lhs.position - 0.7 * a1.position + 1.3 * a2.position).norm(),
            1e-9 * lhs.position.norm());
  EXPECT_LE((lhs.velocity - 0.7 * a1.velocity + 1.3 * a2.velocity).norm(),
            1e-9 * lhs.velocity.norm());
}

TEST(ApplyA, MatchesDenseColumns) {
  for (Side side : {Side::gamma0, Side::gamma_alpha}) {
    const LeaderProblem p = small_problem(side);
    const Grid& g = p.follower.grid;
    const DenseMaps maps = assemble_dense_maps(g, p.follower.profile, side);
    const DenseLeaderMaps dense = dense_A(p, maps);
    const LeaderOperator op(p);
    for (int c = 0; c < g.levels(); ++c) {
      Vector e = Vector::Zero(g.levels());
      e[c] = 1.0;
      const StatePair col = op.apply_A(e);
      Vector mf(2 * g.nodes());
      mf << col.position, col.velocity;
      EXPECT_LE((mf - dense.A.col(c)).norm(), 1e-8 * std::max(1.0, dense.A.col(c).norm()))
          << "column " << c;
    }
  }
}

TEST(ApplyAstar, ZeroDualGivesZero) {
  const LeaderProblem p = small_problem();
  const auto f = apply_Astar(DualVariable::zero(p.follower.grid), p);
  EXPECT_EQ(f.values.norm(), 0.0);
}

TEST(ApplyAstar, AdjointIdentityMatrixFree) {
  for (Side side : {Side::gamma0, Side::gamma_alpha}) {
    const LeaderProblem p = small_problem(side);
    const Grid& g = p.follower.grid;
    const LeaderOperator op(p);
    Sampler rng(41);
    for (int trial = 0; trial < 20; ++trial) {
      const Vector f = rng.vector(g.levels());
      const DualVariable xi = random_dual(rng, g);
      const double lhs = op.pairing(op.apply_A(f), xi);
      const double rhs = trace_inner(g, f, op.apply_Astar(xi));
      EXPECT_LE(std::abs(lhs - rhs), 1e-8 * (1.0 + std::abs(lhs)));
    }
  }
}

TEST(ApplyAstar, DecoupledPlainWaveGivesHumTrace) {
  // alpha = 1, feedback off: phi = sin(pi y) cos(pi (T - t)) solves the
  // backward wave equation with phi(T) = f0, phi_t(T) = f1 = 0, and the
  // pairing identity gives A* xi = phi_y(0, t) = pi cos(pi (T - t)).
  // The last two trace levels only reach the terminal pair through boundary
  // nodes and the one-sided velocity stencil, so they are left out.
  const double T = 2.0;
  double previous = 0.0;
  for (int ny : {25, 50, 100}) {
    LeaderProblem p;
    p.follower.grid = build_grid(ny, 5 * ny, T);
    p.follower.profile = BoundaryProfile::constant();
    p.follower.penalty = 1e8;
    const Grid& g = p.follower.grid;
    const DualVariable xi{sine(g), Vector::Zero(g.nodes())};
    const Vector f = apply_Astar(xi, p).values;
    Vector exact(g.levels());
    for (int n = 0; n < g.levels(); ++n) exact[n] = kPi * std::cos(kPi * (T - g.t(n)));
    Vector diff = f - exact;
    diff.tail(2).setZero();
    const double err = norm(g, diff, NormKind::l2_gamma) / norm(g, exact, NormKind::l2_gamma);
    EXPECT_LE(err, 5e-3) << "Ny=" << ny;
    if (previous > 0.0) EXPECT_GE(std::log2(previous / err), 1.8) << "Ny=" << ny;
    previous = err;
  }
}

TEST(Theta, VanishesAtZero) {
  LeaderProblem p = small_problem();
  p.v1 = sine(p.follower.grid, 0.3);
  const auto bg = solve_background(p);
  EXPECT_EQ(theta(DualVariable::zero(p.follower.grid), p, bg), 0.0);
}

TEST(Theta, HomogeneityOfEachTerm) {
  LeaderProblem p = small_problem();
  p.v0 = Vector();
  const Grid& g = p.follower.grid;
  const auto bg = solve_background(p);
  Sampler rng(7);
  DualVariable xi = random_dual(rng, g);
  xi.f1.setZero();
  const LeaderOperator op(p);
  const ThetaModel model(op, p, bg, p.epsilon);
  const double quad = model.smooth(xi);
  const double reg = p.epsilon * norm(g, xi.f0, NormKind::h10_omega);
  for (double c : {0.5, 2.0, 7.0}) {
    const DualVariable scaled{c * xi.f0, xi.f1};
    EXPECT_NEAR(theta(scaled, p, bg), c * c * quad + c * reg, 1e-12 * (c * c * quad + c * reg));
  }
}

TEST(Theta, SmoothGradientMatchesFiniteDifferences) {
  for (Side side : {Side::gamma0, Side::gamma_alpha}) {
    LeaderProblem p = small_problem(side);
    p.v1 = sine(p.follower.grid, -0.2);
    p.follower.tracking_target = smooth_field(p.follower.grid, 17);
    const Grid& g = p.follower.grid;
    const auto bg = solve_background(p);
    const LeaderOperator op(p);
    const ThetaModel model(op, p, bg, p.epsilon);
    Sampler rng(13);
    const DualVariable xi = random_dual(rng, g);
    const Vector grad = stack(model.euclidean_gradient(xi));
    const Vector fd = fd_gradient(
        [&](const Vector& x) { return model.smooth(unstack(x, g.nodes())); }, stack(xi), 1e-5);
    for (Eigen::Index i = 0; i < grad.size(); ++i) {
      if (i == 0 || i == g.ny()) continue;  // f0 boundary entries are not variables
      EXPECT_LE(std::abs(fd[i] - grad[i]), 1e-5 * std::max(std::abs(grad[i]), 1e-6))
          << to_string(side) << " component " << i;
    }
  }
}

TEST(MinimizeTheta, TargetsAtBackgroundGiveZeroDual) {
  LeaderProblem p = small_problem();
  p.follower.tracking_target = smooth_field(p.follower.grid, 23);
  const auto bg = solve_background(p);
  p.v0 = bg.terminal.position;
  p.v1 = bg.terminal.velocity;
  const DualVariable xi = minimize_theta(p);
  EXPECT_EQ(xi.f0.norm() + xi.f1.norm(), 0.0);

  const auto s = solve_leader(p);
  EXPECT_EQ(s.leader.values.norm(), 0.0);
  EXPECT_LE(s.terminal_position_error, 1e-14);
  EXPECT_LE(s.terminal_velocity_error, 1e-14);
  EXPECT_EQ(s.duality_gap, 0.0);
}

// Ny = 8 with Nt = 16 forces T <= 0.8 under the CFL bound, where the leader
// cost is of order 1e6 and no first-order method resolves the dual. T = 1.6
// with Nt = 32 keeps Ny = 8.
TEST(MinimizeTheta, MatchesDenseOracle) {
  for (Side side : {Side::gamma0, Side::gamma_alpha}) {
    const LeaderProblem p = small_problem(side, 8, 32, 1.6);
    const Grid& g = p.follower.grid;
    const auto bg = solve_background(p);
    const LeaderOptions opts;
    const double eps = p.epsilon * (1.0 - opts.epsilon_margin);
    const LeaderOperator op(p);
    const ThetaModel model(op, p, bg, eps);
    const DualVariable xi = minimize_theta(model, opts);

    const DenseMaps maps = assemble_dense_maps(g, p.follower.profile, side);
    const DenseLeaderSolution dense = dense_leader_oracle(p, maps, bg, eps);
    const DualVariable diff{xi.f0 - dense.dual.f0, xi.f1 - dense.dual.f1};
    EXPECT_LE(model.metric_norm(diff), 1e-5 * std::max(1.0, model.metric_norm(dense.dual)))
        << to_string(side);
    EXPECT_LE(norm(g, op.apply_Astar(xi) - dense.leader, NormKind::l2_gamma),
              1e-5 * std::max(1.0, norm(g, dense.leader, NormKind::l2_gamma)));
  }
}

TEST(MinimizeTheta, ValuesNeverIncrease) {
  const LeaderProblem p = small_problem(Side::gamma0, 12, 48, 1.6);
  const auto bg = solve_background(p);
  const LeaderOperator op(p);
  const ThetaModel model(op, p, bg, p.epsilon);
  ThetaTrace trace;
  minimize_theta(model, {}, &trace);
  ASSERT_TRUE(trace.converged);
  for (std::size_t k = 1; k < trace.theta.size(); ++k) {
    EXPECT_LE(trace.theta[k], trace.theta[k - 1] + 1e-15) << "iteration " << k;
  }
}

TEST(MinimizeTheta, IterationLimitReturnsLastIterate) {
  const LeaderProblem p = small_problem(Side::gamma0, 12, 48, 1.6);
  const auto bg = solve_background(p);
  const LeaderOperator op(p);
  const ThetaModel model(op, p, bg, p.epsilon);
  LeaderOptions opts;
  opts.max_iterations = 3;
  DualVariable last;
  try {
    minimize_theta(model, opts, nullptr, &last);
    FAIL() << "expected IterationError";
  } catch (const IterationError& e) {
    EXPECT_EQ(e.history().size(), 3u);
    EXPECT_EQ(last.f0.size(), p.follower.grid.nodes());
  }
}

TEST(MinimizeTheta, VariationalInequalityAtOptimum) {
  const LeaderProblem p = small_problem(Side::gamma0, 12, 48, 1.6);
  const Grid& g = p.follower.grid;
  const auto bg = solve_background(p);
  const LeaderOperator op(p);
  const ThetaModel model(op, p, bg, p.epsilon);
  const DualVariable xi = minimize_theta(model);
  const double best = model.value(xi);
  Sampler rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    const DualVariable d = random_dual(rng, g);
    const double s = 1e-3 / model.metric_norm(d);
    const DualVariable probe{xi.f0 + s * d.f0, xi.f1 + s * d.f1};
    EXPECT_GE(model.value(probe), best - 1e-10);
  }
}

TEST(RecoverAndVerify, SmallInstanceIsAdmissibleWithSmallGap) {
  for (Side side : {Side::gamma0, Side::gamma_alpha}) {
    const LeaderProblem p = small_problem(side, 12, 48, 1.6);
    const auto s = solve_leader(p);
    EXPECT_TRUE(s.admissible) << to_string(side);
    EXPECT_LT(s.terminal_position_error, p.epsilon);
    EXPECT_LT(s.terminal_velocity_error, p.epsilon);
    EXPECT_LE(std::abs(s.duality_gap), 1e-4 * (1.0 + s.leader_cost));
    EXPECT_NEAR(s.duality_gap, s.leader_cost + s.theta_value, 1e-15);
    EXPECT_TRUE(s.threshold_warning);
    EXPECT_NEAR(s.physical_position_error,
                std::sqrt(1.0 + 0.3 * 1.6) * s.terminal_position_error, 1e-15);
  }
}

TEST(RecoverAndVerify, LargerEpsilonNeverCostsMore) {
  LeaderProblem p = small_problem(Side::gamma0, 12, 48, 1.6);
  const double tight = solve_leader(p).leader_cost;
  p.epsilon *= 2.0;
  const double loose = solve_leader(p).leader_cost;
  EXPECT_LE(loose, tight);
}

TEST(Thresholds, WarningFiresExactlyAtOrBelowThreshold) {
  const auto profile = BoundaryProfile::affine(0.3, {0.2, 0.4});
  const ControlTimes times = control_time_thresholds(0.2, 0.4);
  double limit = 0.0;
  EXPECT_TRUE(threshold_warning(profile, Side::gamma0, times.gamma0, &limit));
  EXPECT_EQ(limit, times.gamma0);
  EXPECT_FALSE(threshold_warning(profile, Side::gamma0, std::nextafter(times.gamma0, 1e300), nullptr));
  EXPECT_TRUE(threshold_warning(profile, Side::gamma_alpha, times.gamma_alpha, &limit));
  EXPECT_EQ(limit, times.gamma_alpha);
  EXPECT_FALSE(
      threshold_warning(profile, Side::gamma_alpha, std::nextafter(times.gamma_alpha, 1e300), nullptr));
  EXPECT_TRUE(threshold_warning(BoundaryProfile::constant(), Side::gamma0, 100.0, nullptr));
}

TEST(LeaderProblemChecks, RejectsBadInput) {
  LeaderProblem p = small_problem();
  p.epsilon = 0.0;
  EXPECT_THROW(solve_background(p), DomainError);
  p = small_problem();
  p.v0 = Vector::Zero(3);
  const auto bg = solve_background(small_problem());
  EXPECT_THROW(theta(DualVariable::zero(p.follower.grid), p, bg), ShapeError);
  EXPECT_THROW(apply_Astar(DualVariable{Vector::Zero(2), Vector::Zero(2)}, small_problem()),
               ShapeError);
}
