#include <cmath>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "wavestack/errors.hpp"
#include "wavestack/wave_solver.hpp"

using namespace wavestack;
using wavestack::testing::Sampler;

namespace {

const double kPi = std::acos(-1.0);

// Plain wave equation, z0 = sin(pi y), z1 = 0: z(., T) = sin(pi y) cos(pi T).
double eigenmode_error(int ny, int nt, double T) {
  const Grid g = build_grid(ny, nt, T);
  ForwardProblem prob;
  prob.grid = g;
  prob.profile = BoundaryProfile::constant();
  prob.z0.resize(g.nodes());
  for (int j = 0; j < g.nodes(); ++j) prob.z0[j] = std::sin(kPi * g.y(j));
  const auto sol = solve_forward(prob);
  const Vector exact = prob.z0 * std::cos(kPi * T);
  return norm(g, sol.terminal.position - exact, NormKind::l2_omega);
}

Field random_field(Sampler& rng, const Grid& g) {
  Field f(g);
  for (int n = 0; n < g.levels(); ++n) f.level(n) = rng.vector(g.nodes()).transpose();
  return f;
}

double field_dot(const Field& a, const Field& b) {
  return (a.values().array() * b.values().array()).sum();
}

}  // namespace

TEST(Forward, ZeroDataGivesZero) {
  const Grid g = build_grid(10, 40, 1.0);
  ForwardProblem prob;
  prob.grid = g;
  prob.profile = BoundaryProfile::affine(0.3, {0.2, 0.4});
  const auto sol = solve_forward(prob);
  EXPECT_EQ(sol.trajectory.values().norm(), 0.0);
}

TEST(Forward, EigenmodeAccuracy) {
  EXPECT_LT(eigenmode_error(100, 500, 1.0), 5e-3);
}

TEST(Forward, SecondOrderConvergence) {
  const double e1 = eigenmode_error(25, 125, 1.0);
  const double e2 = eigenmode_error(50, 250, 1.0);
  const double e3 = eigenmode_error(100, 500, 1.0);
  EXPECT_GE(std::log2(e1 / e2), 1.9);
  EXPECT_GE(std::log2(e2 / e3), 1.9);
}

// At T = 1 cos(pi T) sits at a turning point, so the phase error only enters
// quadratically there and the terminal error converges at fourth order.
TEST(Forward, SecondOrderAtGenericTime) {
  const double e1 = eigenmode_error(50, 250, 0.75);
  const double e2 = eigenmode_error(100, 500, 0.75);
  const double e3 = eigenmode_error(200, 1000, 0.75);
  EXPECT_NEAR(std::log2(e1 / e2), 2.0, 0.1);
  EXPECT_NEAR(std::log2(e2 / e3), 2.0, 0.1);
}

TEST(Forward, LinearInBoundaryControl) {
  const Grid g = build_grid(20, 100, 1.6);
  const WaveSolver solver(BoundaryProfile::affine(0.3, {0.2, 0.4}), g);
  Vector pulse = Vector::Zero(g.levels());
  for (int n = 0; n < g.levels(); ++n) {
    const double t = g.t(n);
    if (t < 0.5) pulse[n] = std::pow(std::sin(2 * kPi * t), 2);
  }
  const Field a = solver.forward_control(Side::gamma0, pulse);
  const Field b = solver.forward_control(Side::gamma0, 2.0 * pulse);
  EXPECT_LE((b.values() - 2.0 * a.values()).norm(), 1e-13 * b.values().norm());
}

TEST(Forward, Superposition) {
  const Grid g = build_grid(12, 60, 1.0);
  const WaveSolver solver(BoundaryProfile::arctan_drift(4.0, {0.24, 0.51}), g);
  Sampler rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    const Vector z0a = rng.vector(g.nodes()), z0b = rng.vector(g.nodes());
    const Vector z1a = rng.vector(g.nodes()), z1b = rng.vector(g.nodes());
    const Vector fa = rng.vector(g.levels()), fb = rng.vector(g.levels());
    const Field sa = random_field(rng, g), sb = random_field(rng, g);
    const Field za = solver.forward(z0a, z1a, fa, {}, sa);
    const Field zb = solver.forward(z0b, z1b, {}, fb, sb);
    Field ssum(g);
    ssum.values() = sa.values() + sb.values();
    const Field zab = solver.forward(z0a + z0b, z1a + z1b, fa, fb, ssum);
    EXPECT_LE((zab.values() - za.values() - zb.values()).norm(), 1e-12 * zab.values().norm());
  }
}

TEST(Forward, FiniteSpeedOfPropagation) {
  const double M = 0.4;
  const Grid g = build_grid(100, 500, 1.0);
  const WaveSolver solver(BoundaryProfile::affine(0.3, {0.2, M}), g);
  const double t0 = 0.1;
  Vector pulse = Vector::Zero(g.levels());
  for (int n = 0; n < g.levels(); ++n) {
    const double t = g.t(n);
    if (t >= t0 && t <= t0 + 0.1) pulse[n] = std::pow(std::sin(kPi * (t - t0) / 0.1), 4);
  }
  const Field z = solver.forward_control(Side::gamma0, pulse);
  const double peak = z.values().cwiseAbs().maxCoeff();
  for (int n : {200, 350, 500}) {
    const double front = (g.t(n) - t0) * (1 + M) + 3 * g.dy();
    double beyond = 0.0;
    for (int j = 0; j < g.nodes(); ++j)
      if (g.y(j) > front) beyond = std::max(beyond, std::abs(z(n, j)));
    EXPECT_LE(beyond, 1e-6 * peak) << "level " << n;
  }
}

TEST(Forward, RejectsBadShapes) {
  const Grid g = build_grid(10, 40, 1.0);
  const WaveSolver solver(BoundaryProfile::constant(), g);
  EXPECT_THROW(solver.forward(Vector::Zero(5), {}, {}, {}), ShapeError);
  EXPECT_THROW(solver.forward({}, {}, Vector::Zero(3), {}), ShapeError);
}

TEST(Forward, UnstableStepsReportDivergence) {
  // Bypasses build_grid: dt/dy = 4 is far outside the stability region.
  const Grid g(10, 10, 4.0);
  const WaveSolver solver(BoundaryProfile::constant(), g);
  Vector z0(g.nodes());
  for (int j = 0; j < g.nodes(); ++j) z0[j] = (j % 2 ? 1e300 : -1e300) * (j > 0 && j < 10);
  EXPECT_THROW(solver.forward(z0, {}, {}, {}), SolverDivergence);
}

TEST(Backward, ZeroSourceGivesZero) {
  const Grid g = build_grid(10, 40, 1.0);
  BackwardProblem prob{g, BoundaryProfile::affine(0.3, {0.2, 0.4}), Field(g)};
  EXPECT_EQ(solve_backward(prob).values().norm(), 0.0);
}

TEST(Backward, ConstantSourceExactSolution) {
  // p_tt - p_yy = sin(pi y), p(T) = p_t(T) = 0: p = sin(pi y)(1 - cos(pi(T - t)))/pi^2.
  const double T = 1.0;
  const Grid g = build_grid(100, 500, T);
  Field src(g);
  for (int n = 0; n < g.levels(); ++n)
    for (int j = 0; j < g.nodes(); ++j) src(n, j) = std::sin(kPi * g.y(j));
  const Field p = solve_backward({g, BoundaryProfile::constant(), src});
  double err = 0.0;
  for (int n = 0; n < g.levels(); ++n) {
    for (int j = 0; j < g.nodes(); ++j) {
      const double exact = std::sin(kPi * g.y(j)) * (1 - std::cos(kPi * (T - g.t(n)))) / (kPi * kPi);
      err = std::max(err, std::abs(p(n, j) - exact));
    }
  }
  EXPECT_LT(err, 1e-2);
}

TEST(Backward, Linear) {
  const Grid g = build_grid(12, 60, 1.0);
  const WaveSolver solver(BoundaryProfile::arctan_drift(4.0, {0.24, 0.51}), g);
  Sampler rng(29);
  const Field s1 = random_field(rng, g), s2 = random_field(rng, g);
  Field s12(g);
  s12.values() = s1.values() + s2.values();
  const Field p = solver.backward(s12);
  const RowMajorMatrix sum = solver.backward(s1).values() + solver.backward(s2).values();
  EXPECT_LE((p.values() - sum).norm(), 1e-13 * p.values().norm());
}

TEST(Backward, AgreesWithExactTransposeToDiscretizationOrder) {
  // The separately discretized L* and the transpose sweep differ by O(dt).
  auto gap = [](int ny) {
    const Grid g = build_grid(ny, 5 * ny, 1.0);
    const WaveSolver solver(BoundaryProfile::affine(0.3, {0.2, 0.4}), g);
    Field src(g);
    for (int n = 0; n < g.levels(); ++n)
      for (int j = 0; j < g.nodes(); ++j) src(n, j) = std::sin(kPi * g.y(j)) * (1 + g.t(n));
    const Field p = solver.backward(src);
    // Transpose route: the quadrature-weighted source as trajectory cotangent.
    Field cot(g);
    const Vector wt = g.time_weights();
    const Vector ws = g.space_weights();
    for (int n = 0; n < g.levels(); ++n)
      cot.level(n) = wt[n] * src.level(n).cwiseProduct(ws.transpose());
    const auto adj = solver.forward_transposed(cot);
    const BoundaryTrace py = normal_derivative_trace(p, Side::gamma0, g);
    const Vector route = adj.gamma0.cwiseQuotient(wt);
    // Both approximate the boundary flux (1/alpha^2) p_y.
    Vector stencil(g.levels());
    for (int n = 0; n < g.levels(); ++n) stencil[n] = py.values[n] / std::pow(1 + 0.3 * g.t(n), 2);
    return norm(g, route - stencil, NormKind::l2_gamma) / norm(g, stencil, NormKind::l2_gamma);
  };
  const double coarse = gap(20);
  const double fine = gap(40);
  EXPECT_LT(fine, coarse);
  EXPECT_LT(fine, 0.1);
}

TEST(TransposedForward, PairingMatchesDenseOracle) {
  const Grid g = build_grid(8, 16, 0.8);
  const auto profile = BoundaryProfile::affine(0.3, {0.2, 0.4});
  const WaveSolver solver(profile, g);
  const Vector ws = g.space_weights();
  const Vector wt = g.time_weights();
  for (Side side : {Side::gamma0, Side::gamma_alpha}) {
    // Dense control-to-terminal map, one column per impulse.
    Eigen::MatrixXd dense(2 * g.nodes(), g.levels());
    for (int c = 0; c < g.levels(); ++c) {
      const auto term = terminal_state(solver.forward_control(side, Vector::Unit(g.levels(), c)), g);
      dense.col(c) << term.position, term.velocity;
    }
    Sampler rng(31);
    for (int trial = 0; trial < 20; ++trial) {
      const Vector f = rng.vector(g.levels());
      const StatePair xi{rng.vector(g.nodes()), rng.vector(g.nodes())};
      const Vector image = dense * f;
      const double lhs = omega_inner(g, image.head(g.nodes()), xi.position) +
                         omega_inner(g, image.tail(g.nodes()), xi.velocity);
      const auto tr = apply_transposed_forward(side, solver, xi);
      EXPECT_EQ(tr.side, side);
      const double rhs = trace_inner(g, f, tr.values);
      EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::max(1.0, std::abs(lhs)));
      // Dense transpose in the weighted metrics.
      Vector wxi(2 * g.nodes());
      wxi << ws.cwiseProduct(xi.position), ws.cwiseProduct(xi.velocity);
      const Vector expected = (dense.transpose() * wxi).cwiseQuotient(wt);
      EXPECT_LE((tr.values - expected).norm(), 1e-12 * (1 + expected.norm()));
    }
  }
}

TEST(TransposedForward, ZeroAndScaling) {
  const Grid g = build_grid(8, 16, 0.8);
  const WaveSolver solver(BoundaryProfile::affine(0.3, {0.2, 0.4}), g);
  const StatePair zero{Vector::Zero(g.nodes()), Vector::Zero(g.nodes())};
  EXPECT_EQ(apply_transposed_forward(Side::gamma0, solver, zero).values.norm(), 0.0);
  Sampler rng(37);
  const StatePair xi{rng.vector(g.nodes()), rng.vector(g.nodes())};
  const StatePair xi2{2 * xi.position, 2 * xi.velocity};
  const Vector a = apply_transposed_forward(Side::gamma0, solver, xi).values;
  const Vector b = apply_transposed_forward(Side::gamma0, solver, xi2).values;
  EXPECT_LE((b - 2 * a).norm(), 1e-13 * b.norm());
}

TEST(TransposedForward, FullMapTransposeOnRandomInputs) {
  const Grid g = build_grid(10, 30, 1.0);
  const WaveSolver solver(BoundaryProfile::arctan_drift(4.0, {0.24, 0.51}), g);
  Sampler rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector z0 = rng.vector(g.nodes()), z1 = rng.vector(g.nodes());
    const Vector fa = rng.vector(g.levels()), fb = rng.vector(g.levels());
    const Field src = random_field(rng, g);
    const Field lam = random_field(rng, g);
    const Field z = solver.forward(z0, z1, fa, fb, src);
    const auto adj = solver.forward_transposed(lam);
    // Boundary entries of z0 and of the source are never read by the scheme.
    Field src_int = src;
    src_int.values().col(0).setZero();
    src_int.values().col(g.ny()).setZero();
    Vector z0_int = z0;
    z0_int[0] = z0_int[g.ny()] = 0.0;
    const double lhs = field_dot(z, lam);
    const double rhs = z0_int.dot(adj.z0) + z1.dot(adj.z1) + fa.dot(adj.gamma0) +
                       fb.dot(adj.gamma_alpha) + field_dot(src_int, adj.source);
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::max(1.0, std::abs(lhs)));
  }
}
