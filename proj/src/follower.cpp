#include "wavestack/follower.hpp"

#include <cmath>
#include <string>

#include "wavestack/errors.hpp"

namespace wavestack {

namespace {

void check_problem(const FollowerProblem& p) {
  if (!(p.penalty > 0.0) || !std::isfinite(p.penalty)) {
    throw DomainError("follower penalty must be positive and finite");
  }
  const Grid& g = p.grid;
  if (p.leader.values.size() != 0) {
    if (p.leader.side != p.actuated_side) {
      throw ShapeError("leader and follower must act on the same side");
    }
    if (p.leader.values.size() != g.levels()) throw ShapeError("leader trace length must be Nt+1");
  }
  if (!p.tracking_target.empty() &&
      (p.tracking_target.levels() != g.levels() || p.tracking_target.nodes() != g.nodes())) {
    throw ShapeError("tracking target does not match grid");
  }
  if (p.z0.size() != 0 && p.z0.size() != g.nodes()) throw ShapeError("z0 length must be Ny+1");
  if (p.z1.size() != 0 && p.z1.size() != g.nodes()) throw ShapeError("z1 length must be Ny+1");
}

void check_trace(const Grid& g, const Vector& v) {
  if (v.size() != g.levels()) throw ShapeError("follower trace length must be Nt+1");
}

}  // namespace

FollowerModel::FollowerModel(FollowerProblem problem)
    : problem_((check_problem(problem), std::move(problem))),
      solver_(problem_.profile, problem_.grid) {
  const Grid& g = grid();
  weights_ = Field(g);
  const Vector wy = g.space_weights();
  const Vector wt = g.time_weights();
  for (int n = 0; n < g.levels(); ++n) {
    weights_.level(n) = (wt[n] * solver_.alpha()[n]) * wy.transpose();
  }
  leader_ = problem_.leader.values.size() != 0 ? problem_.leader.values : Vector::Zero(g.levels());
}

Field FollowerModel::state(const Vector& follower) const {
  check_trace(grid(), follower);
  const Vector control = leader_ + follower;
  return side() == Side::gamma0
             ? solver_.forward(problem_.z0, problem_.z1, control, {})
             : solver_.forward(problem_.z0, problem_.z1, {}, control);
}

Field FollowerModel::misfit(const Field& state) const {
  if (problem_.tracking_target.empty()) return state;
  return Field(RowMajorMatrix(state.values() - problem_.tracking_target.values()));
}

double FollowerModel::cost(const Vector& follower) const {
  const Field r = misfit(state(follower));
  const double tracking =
      0.5 * (weights_.values().array() * r.values().array().square()).sum();
  return tracking + 0.5 * penalty() * trace_inner(grid(), follower, follower);
}

Vector FollowerModel::misfit_gradient(const Field& state) const {
  const Field r = misfit(state);
  const Field cot(RowMajorMatrix(weights_.values().cwiseProduct(r.values())));
  return solver_.forward_transposed(cot).trace(side()).cwiseQuotient(grid().time_weights());
}

Vector FollowerModel::gradient(const Vector& follower) const {
  return penalty() * follower + misfit_gradient(state(follower));
}

Vector FollowerModel::normal(const Vector& u) const {
  check_trace(grid(), u);
  const Field z = solver_.forward_control(side(), u);
  const Field cot(RowMajorMatrix(weights_.values().cwiseProduct(z.values())));
  return solver_.forward_transposed(cot).trace(side()).cwiseQuotient(grid().time_weights());
}

Field FollowerModel::adjoint(const Field& state) const {
  const Field r = misfit(state);
  Field source(grid());
  for (int n = 0; n < grid().levels(); ++n) source.level(n) = solver_.alpha()[n] * r.level(n);
  return solver_.backward(source);
}

Vector FollowerModel::characterization(const Field& adjoint) const {
  const BoundaryTrace py = normal_derivative_trace(adjoint, side(), grid());
  Vector out(grid().levels());
  for (int n = 0; n < grid().levels(); ++n) {
    const double a = solver_.alpha()[n];
    const double s = solver_.speed()[n];
    // Boundary flux coefficient beta/alpha is 1/alpha^2 at y = 0 and
    // (1 - alpha'^2)/alpha^2 at y = 1; the outward normals have opposite signs.
    out[n] = side() == Side::gamma0 ? -py.values[n] / (penalty() * a * a)
                                    : (1.0 - s * s) * py.values[n] / (penalty() * a * a);
  }
  return out;
}

double characterization_residual(const FollowerModel& model, const Vector& follower,
                                 const Field& adjoint) {
  const Grid& g = model.grid();
  const double top = norm(g, follower - model.characterization(adjoint), NormKind::l2_gamma);
  const double bottom = norm(g, follower, NormKind::l2_gamma);
  if (bottom == 0.0) return top == 0.0 ? 0.0 : top;
  return top / bottom;
}

double follower_cost(const FollowerProblem& problem, const BoundaryTrace& candidate) {
  if (candidate.side != problem.actuated_side) throw ShapeError("candidate on the wrong side");
  return FollowerModel(problem).cost(candidate.values);
}

BoundaryTrace follower_gradient(const FollowerProblem& problem, const BoundaryTrace& candidate) {
  if (candidate.side != problem.actuated_side) throw ShapeError("candidate on the wrong side");
  return {problem.actuated_side, FollowerModel(problem).gradient(candidate.values)};
}

FollowerSolution solve_follower(const FollowerProblem& problem, const FollowerOptions& options,
                                const BoundaryTrace* initial_guess) {
  const FollowerModel model(problem);
  const Grid& g = model.grid();
  const double sigma = model.penalty();
  auto inner = [&](const Vector& a, const Vector& b) { return trace_inner(g, a, b); };
  auto apply = [&](const Vector& u) -> Vector { return sigma * u + model.normal(u); };

  const Vector rhs = -model.misfit_gradient(model.state(Vector::Zero(g.levels())));
  const double rhs_norm = std::sqrt(inner(rhs, rhs));

  Vector v = Vector::Zero(g.levels());
  if (initial_guess != nullptr) {
    if (initial_guess->side != problem.actuated_side) throw ShapeError("initial guess side");
    check_trace(g, initial_guess->values);
    v = initial_guess->values;
  }

  FollowerSolution out;
  Vector r = rhs - apply(v);
  double rr = inner(r, r);
  out.residual_history.push_back(rhs_norm > 0.0 ? std::sqrt(rr) / rhs_norm : std::sqrt(rr));
  const double target = options.tolerance * rhs_norm;
  Vector d = r;
  int it = 0;
  while (std::sqrt(rr) > target) {
    if (it == options.max_iterations) {
      throw IterationError("follower CG did not converge in " +
                               std::to_string(options.max_iterations) + " iterations",
                           out.residual_history);
    }
    const Vector ad = apply(d);
    const double step = rr / inner(d, ad);
    v += step * d;
    r -= step * ad;
    const double rr_next = inner(r, r);
    d = r + (rr_next / rr) * d;
    rr = rr_next;
    ++it;
    out.residual_history.push_back(std::sqrt(rr) / rhs_norm);
  }

  out.follower = {problem.actuated_side, v};
  out.state = model.state(v);
  out.adjoint = model.adjoint(out.state);
  out.cost = model.cost(v);
  out.gradient_norm = norm(g, model.gradient(v), NormKind::l2_gamma);
  out.characterization_residual = characterization_residual(model, v, out.adjoint);
  out.iterations = it;
  return out;
}

OptimalitySystem solve_optimality_system(const FollowerProblem& problem,
                                         const FixedPointOptions& options) {
  const FollowerModel model(problem);
  const Grid& g = model.grid();
  const double sigma = model.penalty();

  std::vector<double> history;
  Vector v = Vector::Zero(g.levels());
  Field z = model.state(v);
  for (int it = 1; it <= options.max_iterations; ++it) {
    const Vector next = -model.misfit_gradient(z) / sigma;
    const double change = norm(g, next - v, NormKind::l2_gamma);
    history.push_back(change);
    if (!std::isfinite(change) || (history.size() > 5 && change > 1e3 * history.front() &&
                                   change > history[history.size() - 2])) {
      throw ConvergenceError(
          "optimality system fixed point is not contracting; increase the penalty", history);
    }
    v = next;
    try {
      z = model.state(v);
    } catch (const SolverDivergence&) {
      throw ConvergenceError("optimality system iterates overflowed; increase the penalty", history);
    }
    if (change <= options.tolerance * std::max(1.0, norm(g, v, NormKind::l2_gamma))) {
      return {z, model.adjoint(z), {problem.actuated_side, v}, it};
    }
  }
  throw ConvergenceError("optimality system fixed point did not converge in " +
                             std::to_string(options.max_iterations) +
                             " iterations; increase the penalty",
                         history);
}

}  // namespace wavestack
