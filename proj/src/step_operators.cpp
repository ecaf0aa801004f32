#include "wavestack/step_operators.hpp"

#include <cmath>

#include "wavestack/errors.hpp"

namespace wavestack {

Tridiagonal Tridiagonal::transposed() const {
  const auto m = diag.size();
  Tridiagonal t{Vector::Zero(m), diag, Vector::Zero(m)};
  for (Eigen::Index r = 1; r < m; ++r) t.lower[r] = upper[r - 1];
  for (Eigen::Index r = 0; r + 1 < m; ++r) t.upper[r] = lower[r + 1];
  return t;
}

Vector Tridiagonal::apply(const Vector& x) const {
  const auto m = diag.size();
  Vector y(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    double s = diag[r] * x[r];
    if (r > 0) s += lower[r] * x[r - 1];
    if (r + 1 < m) s += upper[r] * x[r + 1];
    y[r] = s;
  }
  return y;
}

Vector solve_tridiagonal(const Tridiagonal& a, const Vector& rhs) {
  const auto m = a.diag.size();
  Vector c(m);
  Vector d(m);
  double pivot = a.diag[0];
  if (pivot == 0.0) throw SolverDivergence("singular tridiagonal system", 0);
  c[0] = m > 1 ? a.upper[0] / pivot : 0.0;
  d[0] = rhs[0] / pivot;
  for (Eigen::Index r = 1; r < m; ++r) {
    pivot = a.diag[r] - a.lower[r] * c[r - 1];
    if (pivot == 0.0) throw SolverDivergence("singular tridiagonal system", static_cast<int>(r));
    c[r] = r + 1 < m ? a.upper[r] / pivot : 0.0;
    d[r] = (rhs[r] - a.lower[r] * d[r - 1]) / pivot;
  }
  for (Eigen::Index r = m - 2; r >= 0; --r) d[r] -= c[r] * d[r + 1];
  return d;
}

Vector InteriorStencil::apply(const Vector& x) const {
  const auto last = x.size() - 1;
  Vector y = Vector::Zero(x.size());
  for (Eigen::Index j = 1; j < last; ++j) {
    y[j] = lower[j] * x[j - 1] + diag[j] * x[j] + upper[j] * x[j + 1];
  }
  return y;
}

Vector InteriorStencil::apply_transposed(const Vector& x) const {
  const auto last = x.size() - 1;
  Vector y = Vector::Zero(x.size());
  for (Eigen::Index j = 1; j < last; ++j) {
    y[j - 1] += lower[j] * x[j];
    y[j] += diag[j] * x[j];
    y[j + 1] += upper[j] * x[j];
  }
  return y;
}

InteriorStencil InteriorStencil::interior_transpose() const {
  const auto nodes = diag.size();
  const auto last = nodes - 1;
  InteriorStencil t{Vector::Zero(nodes), Vector::Zero(nodes), Vector::Zero(nodes)};
  for (Eigen::Index j = 1; j < last; ++j) {
    t.diag[j] = diag[j];
    if (j > 1) t.lower[j] = upper[j - 1];
    if (j + 1 < last) t.upper[j] = lower[j + 1];
  }
  return t;
}

namespace {

// Interior system I + (dt/2) S for the unknown level, S given as a stencil.
Tridiagonal implicit_matrix(const InteriorStencil& s, double dt) {
  const auto nodes = s.diag.size();
  const auto m = nodes - 2;
  Tridiagonal t{Vector::Zero(m), Vector::Ones(m), Vector::Zero(m)};
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto j = r + 1;
    t.diag[r] += 0.5 * dt * s.diag[j];
    if (r > 0) t.lower[r] = 0.5 * dt * s.lower[j];
    if (r + 1 < m) t.upper[r] = 0.5 * dt * s.upper[j];
  }
  return t;
}

void expect_size(const Vector& v, Eigen::Index n, const char* what) {
  if (v.size() != n) throw ShapeError(std::string("step operator: bad length for ") + what);
}

}  // namespace

Vector StepOperator::apply(const Vector& prev, const Vector& cur, double left, double right,
                           const Vector& source) const {
  const auto nodes = cur.size();
  const auto last = nodes - 1;
  expect_size(prev, nodes, "prev");
  expect_size(source, nodes, "source");
  const double dt2 = dt * dt;
  Vector rhs = 2.0 * cur - prev - dt2 * spatial.apply(cur) + 0.5 * dt * mixed.apply(prev) +
               dt2 * source;
  rhs[1] -= 0.5 * dt * mixed.lower[1] * left;
  rhs[last - 1] -= 0.5 * dt * mixed.upper[last - 1] * right;
  Vector next(nodes);
  next.segment(1, nodes - 2) = solve_tridiagonal(implicit, rhs.segment(1, nodes - 2));
  next[0] = left;
  next[last] = right;
  return next;
}

StepCotangent StepOperator::apply_transposed(const Vector& c) const {
  const auto nodes = c.size();
  const auto last = nodes - 1;
  const double dt2 = dt * dt;
  Vector mu = Vector::Zero(nodes);
  mu.segment(1, nodes - 2) = solve_tridiagonal(implicit.transposed(), c.segment(1, nodes - 2));

  StepCotangent out;
  out.cur = 2.0 * mu - dt2 * spatial.apply_transposed(mu);
  out.prev = -mu + 0.5 * dt * mixed.apply_transposed(mu);
  out.source = dt2 * mu;
  out.left = c[0] - 0.5 * dt * mixed.lower[1] * mu[1];
  out.right = c[last] - 0.5 * dt * mixed.upper[last - 1] * mu[last - 1];
  return out;
}

Vector StepOperator::apply_backward(const Vector& next, const Vector& cur,
                                    const Vector& source) const {
  const auto nodes = cur.size();
  const double dt2 = dt * dt;
  Vector rhs = 2.0 * cur - next - dt2 * spatial.apply(cur) + 0.5 * dt * mixed.apply(next) +
               dt2 * source;
  Vector out = Vector::Zero(nodes);
  out.segment(1, nodes - 2) = solve_tridiagonal(implicit, rhs.segment(1, nodes - 2));
  return out;
}

namespace {

// K_n and G_n of the forward operator at level n.
std::pair<InteriorStencil, InteriorStencil> forward_stencils(const ProfileState& s,
                                                             const Grid& grid) {
  const int nodes = grid.nodes();
  const double dy = grid.dy();
  InteriorStencil k{Vector::Zero(nodes), Vector::Zero(nodes), Vector::Zero(nodes)};
  InteriorStencil g{Vector::Zero(nodes), Vector::Zero(nodes), Vector::Zero(nodes)};
  for (int j = 1; j < grid.ny(); ++j) {
    const double y = grid.y(j);
    const Coefficients c = coefficients(s, y);
    const double flux_left = coefficients(s, y - 0.5 * dy).beta / (s.alpha * dy * dy);
    const double flux_right = coefficients(s, y + 0.5 * dy).beta / (s.alpha * dy * dy);
    const double drift = c.tau / (s.alpha * 2.0 * dy);
    k.lower[j] = -flux_left - drift;
    k.diag[j] = flux_left + flux_right;
    k.upper[j] = -flux_right + drift;
    const double mix = c.gamma / (s.alpha * 2.0 * dy);
    g.lower[j] = -mix;
    g.upper[j] = mix;
  }
  return {k, g};
}

}  // namespace

StepSequence::StepSequence(const BoundaryProfile& profile, const Grid& grid,
                           StepDirection direction)
    : grid_(grid), direction_(direction) {
  const int levels = grid.levels();
  const double dt = grid.dt();
  alpha_.resize(levels);
  speed_.resize(levels);

  std::vector<InteriorStencil> k(levels);
  std::vector<InteriorStencil> g(levels);
  for (int n = 0; n < levels; ++n) {
    const ProfileState s = profile.eval(grid.t(n));
    alpha_[n] = s.alpha;
    speed_[n] = s.speed;
    std::tie(k[n], g[n]) = forward_stencils(s, grid);
  }

  ops_.resize(levels);
  for (int n = 0; n < levels; ++n) {
    StepOperator& op = ops_[n];
    op.level = n;
    op.dt = dt;
    if (direction == StepDirection::forward_L) {
      op.spatial = k[n];
      op.mixed = g[n];
      op.implicit = implicit_matrix(g[n], dt);
    } else {
      op.spatial = k[n].interior_transpose();
      const InteriorStencil zero{Vector::Zero(grid.nodes()), Vector::Zero(grid.nodes()),
                                 Vector::Zero(grid.nodes())};
      op.mixed = n + 1 < levels ? g[n + 1].interior_transpose() : zero;
      op.implicit = implicit_matrix(n > 0 ? g[n - 1].interior_transpose() : zero, dt);
    }
  }
}

StepSequence assemble_step_operators(const BoundaryProfile& profile, const Grid& grid,
                                     StepDirection direction) {
  return StepSequence(profile, grid, direction);
}

}  // namespace wavestack
