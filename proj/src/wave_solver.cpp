#include "wavestack/wave_solver.hpp"

#include <cmath>

#include "wavestack/errors.hpp"

namespace wavestack {

namespace {

Vector or_zero(const Vector& v, Eigen::Index n, const char* what) {
  if (v.size() == 0) return Vector::Zero(n);
  if (v.size() != n) throw ShapeError(std::string("forward solve: bad length for ") + what);
  return v;
}

void check_finite(const Vector& v, int level) {
  if (!v.allFinite()) {
    throw SolverDivergence("non-finite values at time level " + std::to_string(level), level);
  }
}

}  // namespace

WaveSolver::WaveSolver(const BoundaryProfile& profile, const Grid& grid)
    : profile_(profile),
      forward_(profile, grid, StepDirection::forward_L),
      backward_(profile, grid, StepDirection::backward_Lstar) {}

Field WaveSolver::forward(const Vector& z0_in, const Vector& z1_in, const Vector& gamma0_in,
                          const Vector& gamma_alpha_in, const Field& source) const {
  const Grid& g = grid();
  const int nodes = g.nodes();
  const int ny = g.ny();
  const int nt = g.nt();
  const double dt = g.dt();
  const Vector z0 = or_zero(z0_in, nodes, "z0");
  const Vector z1 = or_zero(z1_in, nodes, "z1");
  const Vector left = or_zero(gamma0_in, g.levels(), "gamma0 trace");
  const Vector right = or_zero(gamma_alpha_in, g.levels(), "gamma_alpha trace");
  const bool has_source = !source.empty();
  if (has_source && (source.levels() != g.levels() || source.nodes() != nodes)) {
    throw ShapeError("forward solve: source does not match grid");
  }
  const Vector zero_source = Vector::Zero(nodes);
  auto src = [&](int n) -> Vector { return has_source ? source.slice(n) : zero_source; };

  Field z(g);
  Vector level0 = z0;
  level0[0] = left[0];
  level0[ny] = right[0];
  z.level(0) = level0.transpose();

  // Second order Taylor start.
  const StepOperator& first = forward_[0];
  Vector accel = -first.spatial.apply(level0) - first.mixed.apply(z1) + src(0);
  Vector level1 = level0 + dt * z1 + 0.5 * dt * dt * accel;
  level1[0] = left[1];
  level1[ny] = right[1];
  check_finite(level1, 1);
  z.level(1) = level1.transpose();

  Vector prev = level0;
  Vector cur = level1;
  for (int n = 1; n < nt; ++n) {
    Vector next = forward_[n].apply(prev, cur, left[n + 1], right[n + 1], src(n));
    check_finite(next, n + 1);
    z.level(n + 1) = next.transpose();
    prev = std::move(cur);
    cur = std::move(next);
  }
  return z;
}

Field WaveSolver::forward_control(Side side, const Vector& control) const {
  return side == Side::gamma0 ? forward({}, {}, control, {}) : forward({}, {}, {}, control);
}

ForwardCotangent WaveSolver::forward_transposed(const Field& cotangent) const {
  const Grid& g = grid();
  const int nodes = g.nodes();
  const int ny = g.ny();
  const int nt = g.nt();
  const double dt = g.dt();
  if (cotangent.levels() != g.levels() || cotangent.nodes() != nodes) {
    throw ShapeError("forward_transposed: cotangent does not match grid");
  }

  ForwardCotangent out;
  out.gamma0 = Vector::Zero(g.levels());
  out.gamma_alpha = Vector::Zero(g.levels());
  out.source = Field(g);

  Field adj = cotangent;
  for (int n = nt - 1; n >= 1; --n) {
    const StepCotangent c = forward_[n].apply_transposed(adj.slice(n + 1));
    adj.level(n - 1) += c.prev.transpose();
    adj.level(n) += c.cur.transpose();
    out.gamma0[n + 1] = c.left;
    out.gamma_alpha[n + 1] = c.right;
    out.source.level(n) = c.source.transpose();
  }

  // Transpose of the Taylor start.
  const StepOperator& first = forward_[0];
  Vector mu = adj.slice(1);
  out.gamma0[1] = mu[0];
  out.gamma_alpha[1] = mu[ny];
  mu[0] = 0.0;
  mu[ny] = 0.0;
  Vector adj0 = adj.slice(0) + mu - 0.5 * dt * dt * first.spatial.apply_transposed(mu);
  out.z1 = dt * mu - 0.5 * dt * dt * first.mixed.apply_transposed(mu);
  out.source.level(0) = (0.5 * dt * dt * mu).transpose();

  out.gamma0[0] = adj0[0];
  out.gamma_alpha[0] = adj0[ny];
  adj0[0] = 0.0;
  adj0[ny] = 0.0;
  out.z0 = adj0;
  return out;
}

Field WaveSolver::backward(const Field& source) const {
  const Grid& g = grid();
  const int nodes = g.nodes();
  const int ny = g.ny();
  const int nt = g.nt();
  const double dt = g.dt();
  if (source.levels() != g.levels() || source.nodes() != nodes) {
    throw ShapeError("backward solve: source does not match grid");
  }
  Field p(g);
  // p(T) = p_t(T) = 0, so p_tt(T) equals the source there.
  Vector cur = 0.5 * dt * dt * source.slice(nt);
  cur[0] = 0.0;
  cur[ny] = 0.0;
  p.level(nt - 1) = cur.transpose();
  Vector next = Vector::Zero(nodes);
  for (int n = nt - 1; n >= 1; --n) {
    Vector prev = backward_[n].apply_backward(next, cur, source.slice(n));
    check_finite(prev, n - 1);
    p.level(n - 1) = prev.transpose();
    next = std::move(cur);
    cur = std::move(prev);
  }
  return p;
}

ForwardSolution solve_forward(const ForwardProblem& problem) {
  if (problem.gamma0.side != Side::gamma0 || problem.gamma_alpha.side != Side::gamma_alpha) {
    throw ShapeError("solve_forward: boundary traces attached to the wrong sides");
  }
  const WaveSolver solver(problem.profile, problem.grid);
  Field z = solver.forward(problem.z0, problem.z1, problem.gamma0.values,
                           problem.gamma_alpha.values, problem.source);
  StatePair terminal = terminal_state(z, problem.grid);
  return {std::move(z), std::move(terminal)};
}

Field solve_backward(const BackwardProblem& problem) {
  const WaveSolver solver(problem.profile, problem.grid);
  return solver.backward(problem.source);
}

Field terminal_cotangent(const Grid& grid, const Vector& dposition, const Vector& dvelocity) {
  const int nt = grid.nt();
  if (dposition.size() != grid.nodes() || dvelocity.size() != grid.nodes()) {
    throw ShapeError("terminal_cotangent: slice length");
  }
  const double s = 1.0 / (2.0 * grid.dt());
  Field c(grid);
  c.level(nt) = (dposition + 3.0 * s * dvelocity).transpose();
  c.level(nt - 1) = (-4.0 * s * dvelocity).transpose();
  c.level(nt - 2) = (s * dvelocity).transpose();
  return c;
}

BoundaryTrace apply_transposed_forward(Side side, const WaveSolver& solver, const StatePair& dual) {
  const Grid& g = solver.grid();
  if (dual.position.size() != g.nodes() || dual.velocity.size() != g.nodes()) {
    throw ShapeError("apply_transposed_forward: dual pair does not match grid");
  }
  const Vector w = g.space_weights();
  const Field c = terminal_cotangent(g, w.cwiseProduct(dual.position), w.cwiseProduct(dual.velocity));
  const ForwardCotangent adj = solver.forward_transposed(c);
  return {side, adj.trace(side).cwiseQuotient(g.time_weights())};
}

}  // namespace wavestack
