#include "wavestack/discretization.hpp"

#include <cmath>
#include <sstream>

#include "wavestack/errors.hpp"
#include "wavestack/step_operators.hpp"

namespace wavestack {

const char* to_string(Side side) { return side == Side::gamma0 ? "gamma0" : "gamma_alpha"; }

Grid::Grid(int ny, int nt, double T) : ny_(ny), nt_(nt), T_(T) {}

Vector Grid::space_weights() const {
  Vector w = Vector::Constant(nodes(), dy());
  w[0] *= 0.5;
  w[ny_] *= 0.5;
  return w;
}

Vector Grid::time_weights() const {
  Vector w = Vector::Constant(levels(), dt());
  w[0] *= 0.5;
  w[nt_] *= 0.5;
  return w;
}

Grid build_grid(int ny, int nt, double T, double cfl_ratio) {
  if (ny < 4 || nt < 4) throw ConfigError("grid needs Ny >= 4 and Nt >= 4");
  if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("grid needs a finite T > 0");
  if (!(cfl_ratio > 0.0)) throw ConfigError("cfl ratio must be positive");
  Grid grid(ny, nt, T);
  const double limit = cfl_ratio * grid.dy();
  if (grid.dt() > limit * (1.0 + 1e-12)) {
    const auto min_nt = static_cast<long>(std::ceil(T / limit * (1.0 - 1e-12)));
    std::ostringstream msg;
    msg << "CFL violated: dt=" << grid.dt() << " > " << cfl_ratio << "*dy=" << limit
        << "; need Nt >= " << min_nt;
    throw ConfigError(msg.str());
  }
  return grid;
}

double omega_inner(const Grid& grid, const Vector& a, const Vector& b) {
  if (a.size() != grid.nodes() || b.size() != grid.nodes()) {
    throw ShapeError("omega_inner: slice length must be Ny+1");
  }
  return (grid.space_weights().array() * a.array() * b.array()).sum();
}

double trace_inner(const Grid& grid, const Vector& a, const Vector& b) {
  if (a.size() != grid.levels() || b.size() != grid.levels()) {
    throw ShapeError("trace_inner: trace length must be Nt+1");
  }
  return (grid.time_weights().array() * a.array() * b.array()).sum();
}

Vector solve_dirichlet_laplacian(const Grid& grid, const Vector& w) {
  const int ny = grid.ny();
  if (w.size() != grid.nodes()) throw ShapeError("solve_dirichlet_laplacian: slice length");
  const double inv = 1.0 / (grid.dy() * grid.dy());
  Tridiagonal m{Vector::Constant(ny - 1, -inv), Vector::Constant(ny - 1, 2.0 * inv),
                Vector::Constant(ny - 1, -inv)};
  m.lower[0] = 0.0;
  m.upper[ny - 2] = 0.0;
  const Vector interior = solve_tridiagonal(m, w.segment(1, ny - 1));
  Vector u = Vector::Zero(grid.nodes());
  u.segment(1, ny - 1) = interior;
  return u;
}

Vector apply_stiffness(const Grid& grid, const Vector& u) {
  const int ny = grid.ny();
  if (u.size() != grid.nodes()) throw ShapeError("apply_stiffness: slice length");
  Vector out = Vector::Zero(grid.nodes());
  const double inv = 1.0 / grid.dy();
  for (int j = 1; j < ny; ++j) out[j] = (2.0 * u[j] - u[j - 1] - u[j + 1]) * inv;
  return out;
}

double norm(const Grid& grid, const Vector& object, NormKind kind) {
  if (kind == NormKind::l2_gamma) {
    if (object.size() != grid.levels()) throw ShapeError("L2_Gamma norm needs a trace of length Nt+1");
    return std::sqrt(trace_inner(grid, object, object));
  }
  if (object.size() != grid.nodes()) throw ShapeError("Omega norm needs a slice of length Ny+1");
  switch (kind) {
    case NormKind::l2_omega:
      return std::sqrt(omega_inner(grid, object, object));
    case NormKind::h10_omega: {
      double s = 0.0;
      for (int j = 0; j < grid.ny(); ++j) {
        const double d = object[j + 1] - object[j];
        s += d * d;
      }
      return std::sqrt(s / grid.dy());
    }
    case NormKind::hminus1_omega: {
      const Vector u = solve_dirichlet_laplacian(grid, object);
      const double pairing = omega_inner(grid, object, u);
      return std::sqrt(std::max(0.0, pairing));
    }
    case NormKind::l2_gamma:
      break;
  }
  return 0.0;
}

double norm(const Grid& grid, const BoundaryTrace& trace) {
  return norm(grid, trace.values, NormKind::l2_gamma);
}

BoundaryTrace normal_derivative_trace(const Field& field, Side side, const Grid& grid) {
  if (field.nodes() < 4) throw ShapeError("normal_derivative_trace: need Ny >= 3");
  if (field.nodes() != grid.nodes() || field.levels() != grid.levels()) {
    throw ShapeError("normal_derivative_trace: field does not match grid");
  }
  const int ny = grid.ny();
  const double h2 = 2.0 * grid.dy();
  BoundaryTrace out{side, Vector(grid.levels())};
  for (int n = 0; n < grid.levels(); ++n) {
    out.values[n] = side == Side::gamma0
                        ? (-3.0 * field(n, 0) + 4.0 * field(n, 1) - field(n, 2)) / h2
                        : (3.0 * field(n, ny) - 4.0 * field(n, ny - 1) + field(n, ny - 2)) / h2;
  }
  return out;
}

StatePair terminal_state(const Field& trajectory, const Grid& grid) {
  const int nt = grid.nt();
  if (trajectory.levels() != grid.levels() || trajectory.nodes() != grid.nodes()) {
    throw ShapeError("terminal_state: trajectory does not match grid");
  }
  StatePair s;
  s.position = trajectory.slice(nt);
  s.velocity = (3.0 * trajectory.slice(nt) - 4.0 * trajectory.slice(nt - 1) +
                trajectory.slice(nt - 2)) /
               (2.0 * grid.dt());
  return s;
}

}  // namespace wavestack
