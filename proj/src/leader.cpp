#include "wavestack/leader.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "wavestack/errors.hpp"

namespace wavestack {

namespace {

Vector or_zero(const Vector& v, const Grid& g, const char* what) {
  if (v.size() == 0) return Vector::Zero(g.nodes());
  if (v.size() != g.nodes()) throw ShapeError(std::string(what) + " length must be Ny+1");
  return v;
}

void check_dual(const Grid& g, const DualVariable& xi) {
  if (xi.f0.size() != g.nodes() || xi.f1.size() != g.nodes()) {
    throw ShapeError("dual variable slices must have length Ny+1");
  }
}

FollowerProblem without_leader(const LeaderProblem& problem) {
  if (!(problem.epsilon > 0.0)) throw DomainError("epsilon must be positive");
  FollowerProblem p = problem.follower;
  p.leader = {p.actuated_side, {}};
  return p;
}

// Homogeneous version of the template: no data, no target.
FollowerProblem homogeneous(const LeaderProblem& problem) {
  FollowerProblem p = without_leader(problem);
  p.tracking_target = Field();
  p.z0 = Vector();
  p.z1 = Vector();
  return p;
}

// x -> max(0, 1 - r/|x|) x in a norm with value `size`.
double shrink_factor(double size, double r) {
  return size > r ? 1.0 - r / size : 0.0;
}

}  // namespace

LeaderOperator::LeaderOperator(const LeaderProblem& problem, double fixed_point_tolerance)
    : model_(homogeneous(problem)), tolerance_(fixed_point_tolerance) {}

Vector LeaderOperator::apply_P(const Vector& g) const {
  const Grid& grid = model_.grid();
  const double sigma = model_.penalty();
  std::vector<double> history;
  Vector u = g;
  const int max_iterations = 200;
  for (int it = 0; it < max_iterations; ++it) {
    Vector next = g - model_.normal(u) / sigma;
    const double change = norm(grid, next - u, NormKind::l2_gamma);
    const double size = norm(grid, next, NormKind::l2_gamma);
    history.push_back(change);
    u = std::move(next);
    if (!std::isfinite(change) ||
        (history.size() > 5 && change > 1e3 * history.front() && change > history[it - 1])) {
      throw ConvergenceError("coupled leader system is not contracting; increase the penalty",
                             history);
    }
    if (change <= tolerance_ * size) return u;
  }
  throw ConvergenceError("coupled leader system fixed point did not converge", history);
}

StatePair LeaderOperator::apply_A(const Vector& f) const {
  const Field h = model_.solver().forward_control(side(), apply_P(f));
  const StatePair s = terminal_state(h, grid());
  return {s.velocity, -s.position};
}

Vector LeaderOperator::apply_Astar(const DualVariable& xi) const {
  const Grid& g = grid();
  check_dual(g, xi);
  const Vector w = g.space_weights();
  Vector f0 = xi.f0;
  f0[0] = 0.0;
  f0[g.ny()] = 0.0;
  const Field cot = terminal_cotangent(g, -w.cwiseProduct(xi.f1), w.cwiseProduct(f0));
  const Vector trace =
      model_.solver().forward_transposed(cot).trace(side()).cwiseQuotient(g.time_weights());
  return apply_P(trace);
}

double LeaderOperator::pairing(const StatePair& a, const DualVariable& xi) const {
  const Grid& g = grid();
  check_dual(g, xi);
  Vector f0 = xi.f0;
  f0[0] = 0.0;
  f0[g.ny()] = 0.0;
  return omega_inner(g, a.position, f0) + omega_inner(g, a.velocity, xi.f1);
}

Background solve_background(const LeaderProblem& problem, const FixedPointOptions& options) {
  const OptimalitySystem s = solve_optimality_system(without_leader(problem), options);
  Background b{s.state, s.adjoint, terminal_state(s.state, problem.follower.grid)};
  return b;
}

StatePair apply_A(const BoundaryTrace& f, const LeaderProblem& problem) {
  if (f.side != problem.follower.actuated_side) throw ShapeError("leader trace on the wrong side");
  return LeaderOperator(problem).apply_A(f.values);
}

BoundaryTrace apply_Astar(const DualVariable& xi, const LeaderProblem& problem) {
  return {problem.follower.actuated_side, LeaderOperator(problem).apply_Astar(xi)};
}

ThetaModel::ThetaModel(const LeaderOperator& op, const LeaderProblem& problem,
                       const Background& background, double epsilon)
    : op_(op), epsilon_(epsilon) {
  const Grid& g = op.grid();
  d0_ = or_zero(problem.v0, g, "v0") - background.terminal.position;
  d1_ = or_zero(problem.v1, g, "v1") - background.terminal.velocity;
}

double ThetaModel::smooth(const DualVariable& xi) const {
  const Grid& g = op_.grid();
  const Vector f = op_.apply_Astar(xi);
  Vector f0 = xi.f0;
  f0[0] = 0.0;
  f0[g.ny()] = 0.0;
  return 0.5 * trace_inner(g, f, f) + omega_inner(g, d0_, xi.f1) - omega_inner(g, d1_, f0);
}

double ThetaModel::nonsmooth(const DualVariable& xi) const {
  const Grid& g = op_.grid();
  return epsilon_ * (norm(g, xi.f0, NormKind::h10_omega) + norm(g, xi.f1, NormKind::l2_omega));
}

DualVariable ThetaModel::euclidean_gradient(const DualVariable& xi) const {
  const Grid& g = op_.grid();
  const StatePair ab = op_.apply_A(op_.apply_Astar(xi));
  const Vector w = g.space_weights();
  DualVariable out{w.cwiseProduct(ab.position - d1_), w.cwiseProduct(ab.velocity + d0_)};
  out.f0[0] = 0.0;
  out.f0[g.ny()] = 0.0;
  return out;
}

DualVariable ThetaModel::riesz_gradient_from(const Vector& astar_xi) const {
  const Grid& g = op_.grid();
  const StatePair ab = op_.apply_A(astar_xi);
  return {solve_dirichlet_laplacian(g, ab.position - d1_), ab.velocity + d0_};
}

DualVariable ThetaModel::riesz_gradient(const DualVariable& xi) const {
  return riesz_gradient_from(op_.apply_Astar(xi));
}

double ThetaModel::metric_norm(const DualVariable& xi) const {
  const Grid& g = op_.grid();
  return std::hypot(norm(g, xi.f0, NormKind::h10_omega), norm(g, xi.f1, NormKind::l2_omega));
}

double theta(const DualVariable& xi, const LeaderProblem& problem, const Background& background) {
  const LeaderOperator op(problem);
  return ThetaModel(op, problem, background, problem.epsilon).value(xi);
}

namespace {

DualVariable axpy(double a, const DualVariable& x, const DualVariable& y) {
  return {a * x.f0 + y.f0, a * x.f1 + y.f1};
}

// Largest eigenvalue of the metric Hessian xi -> Riesz(A A* xi).
double lipschitz_estimate(const ThetaModel& model, int iterations) {
  const Grid& g = model.op().grid();
  double estimate = 0.0;
  // Power iteration on the homogeneous Hessian. The Riesz gradient contains
  // the linear term, so subtract the gradient at zero.
  const DualVariable g0 = model.riesz_gradient(DualVariable::zero(g));
  DualVariable x = DualVariable::zero(g);
  for (int j = 1; j < g.ny(); ++j) x.f0[j] = 1.0 + 0.1 * j;
  for (int j = 0; j <= g.ny(); ++j) x.f1[j] = 1.0 - 0.05 * j;
  for (int it = 0; it < iterations; ++it) {
    const double size = model.metric_norm(x);
    if (size == 0.0) return 0.0;
    x = axpy(1.0 / size, x, DualVariable::zero(g));
    const DualVariable hx = axpy(-1.0, g0, model.riesz_gradient(x));
    estimate = model.metric_norm(hx);
    x = hx;
  }
  return estimate;
}

DualVariable prox(const ThetaModel& model, const DualVariable& x, double step) {
  const Grid& g = model.op().grid();
  const double r = step * model.epsilon();
  DualVariable out = x;
  out.f0[0] = 0.0;
  out.f0[g.ny()] = 0.0;
  out.f0 *= shrink_factor(norm(g, out.f0, NormKind::h10_omega), r);
  out.f1 *= shrink_factor(norm(g, out.f1, NormKind::l2_omega), r);
  return out;
}

}  // namespace

DualVariable minimize_theta(const ThetaModel& model, const LeaderOptions& options,
                            ThetaTrace* trace, DualVariable* last) {
  const Grid& g = model.op().grid();
  ThetaTrace local;
  ThetaTrace& tr = trace != nullptr ? *trace : local;
  tr = ThetaTrace{};

  const double lip = 1.05 * lipschitz_estimate(model, options.power_iterations);
  tr.lipschitz = lip;
  DualVariable x = DualVariable::zero(g);
  Vector astar_x = Vector::Zero(g.levels());
  const DualVariable grad0 = model.riesz_gradient_from(astar_x);
  const double scale = 1.0 + model.metric_norm(grad0);
  double value = 0.0;
  tr.theta.push_back(value);
  if (lip == 0.0) {
    tr.converged = true;
    return x;
  }

  DualVariable x_prev = x;
  Vector astar_prev = astar_x;
  double t = 1.0;
  for (int it = 1; it <= options.max_iterations; ++it) {
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = (t - 1.0) / t_next;
    const DualVariable y = axpy(beta, axpy(-1.0, x_prev, x), x);
    const Vector astar_y = (1.0 + beta) * astar_x - beta * astar_prev;

    DualVariable grad = model.riesz_gradient_from(astar_y);
    DualVariable next = prox(model, axpy(-1.0 / lip, grad, y), 1.0 / lip);
    Vector astar_next = model.op().apply_Astar(next);
    double next_value = model.value(next);
    double residual = lip * model.metric_norm(axpy(-1.0, next, y));

    if (next_value > value) {
      // Restart: a plain proximal step from x cannot increase Theta.
      ++tr.restarts;
      grad = model.riesz_gradient_from(astar_x);
      next = prox(model, axpy(-1.0 / lip, grad, x), 1.0 / lip);
      astar_next = model.op().apply_Astar(next);
      next_value = model.value(next);
      residual = lip * model.metric_norm(axpy(-1.0, next, x));
      t = 1.0;
    } else {
      t = t_next;
    }
    x_prev = std::move(x);
    astar_prev = std::move(astar_x);
    x = std::move(next);
    astar_x = std::move(astar_next);
    value = next_value;
    tr.theta.push_back(value);
    tr.residual.push_back(residual / scale);
    if (residual <= options.tolerance * scale) {
      tr.converged = true;
      return x;
    }
  }
  if (last != nullptr) *last = x;
  throw IterationError("FISTA on the dual functional did not converge in " +
                           std::to_string(options.max_iterations) + " iterations",
                       tr.residual);
}

DualVariable minimize_theta(const LeaderProblem& problem, const LeaderOptions& options) {
  const Background bg = solve_background(problem);
  const LeaderOperator op(problem, options.fixed_point_tolerance);
  const ThetaModel model(op, problem, bg, problem.epsilon * (1.0 - options.epsilon_margin));
  return minimize_theta(model, options);
}

bool threshold_warning(const BoundaryProfile& profile, Side side, double T, double* threshold) {
  const auto [m, M] = profile.bounds();
  if (!(0.0 < m && m < M && M < 1.0)) {
    if (threshold != nullptr) *threshold = std::numeric_limits<double>::infinity();
    return true;
  }
  const ControlTimes times = control_time_thresholds(m, M);
  const double limit = side == Side::gamma0 ? times.gamma0 : times.gamma_alpha;
  if (threshold != nullptr) *threshold = limit;
  return T <= limit;
}

LeaderSolution recover_and_verify(const LeaderProblem& problem, const DualVariable& xi,
                                  const Background& background, const LeaderOptions& options) {
  const LeaderOperator op(problem, options.fixed_point_tolerance);
  const Grid& g = op.grid();
  const ThetaModel model(op, problem, background,
                         problem.epsilon * (1.0 - options.epsilon_margin));

  LeaderSolution out;
  out.dual_optimum = xi;
  out.leader = {op.side(), op.apply_Astar(xi)};

  FollowerProblem fp = problem.follower;
  fp.leader = out.leader;
  const FollowerSolution follower = solve_follower(fp);
  out.follower = follower.follower;

  const StatePair terminal = terminal_state(follower.state, g);
  const Vector v0 = or_zero(problem.v0, g, "v0");
  const Vector v1 = or_zero(problem.v1, g, "v1");
  out.terminal_position_error = norm(g, terminal.position - v0, NormKind::l2_omega);
  out.terminal_velocity_error = norm(g, terminal.velocity - v1, NormKind::hminus1_omega);
  const double alpha_T = op.model().solver().alpha()[g.nt()];
  out.physical_position_error = std::sqrt(alpha_T) * out.terminal_position_error;

  out.leader_cost = 0.5 * trace_inner(g, out.leader.values, out.leader.values);
  out.theta_value = model.value(xi);
  out.duality_gap = out.leader_cost + out.theta_value;
  out.admissible = out.terminal_position_error < problem.epsilon &&
                   out.terminal_velocity_error < problem.epsilon;

  const BoundaryProfile& profile = problem.follower.profile;
  out.threshold_warning = threshold_warning(profile, op.side(), g.final_time(), &out.threshold);
  if (profile.degenerate()) {
    out.warnings.push_back("degenerate profile: control time thresholds are undefined");
  } else if (out.threshold_warning) {
    out.warnings.push_back("T = " + std::to_string(g.final_time()) +
                           " is not above the sufficient control time " +
                           std::to_string(out.threshold) + " for side " + to_string(op.side()));
  }
  if (!out.admissible) out.warnings.push_back("recovered control is not admissible");
  return out;
}

LeaderSolution solve_leader(const LeaderProblem& problem, const LeaderOptions& options) {
  const Background bg = solve_background(problem);
  const LeaderOperator op(problem, options.fixed_point_tolerance);
  const ThetaModel model(op, problem, bg, problem.epsilon * (1.0 - options.epsilon_margin));
  ThetaTrace trace;
  const DualVariable xi = minimize_theta(model, options, &trace);
  LeaderSolution out = recover_and_verify(problem, xi, bg, options);
  out.iterations = static_cast<int>(trace.residual.size());
  out.history = std::move(trace);
  return out;
}

}  // namespace wavestack
