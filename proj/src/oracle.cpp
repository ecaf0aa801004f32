#include "wavestack/oracle.hpp"

#include <array>
#include <cmath>
#include <string>

#include "wavestack/errors.hpp"

namespace wavestack {

namespace {

// Rows of control_to_trajectory belonging to level n.
auto level_rows(const DenseMatrix& m, const Grid& g, int n) {
  return m.middleRows(static_cast<Eigen::Index>(n) * g.nodes(), g.nodes());
}

DenseMatrix stiffness_matrix(const Grid& g) {
  const int m = g.ny() - 1;
  DenseMatrix k = DenseMatrix::Zero(m, m);
  const double inv = 1.0 / g.dy();
  for (int r = 0; r < m; ++r) {
    k(r, r) = 2.0 * inv;
    if (r > 0) k(r, r - 1) = -inv;
    if (r + 1 < m) k(r, r + 1) = -inv;
  }
  return k;
}

Vector flatten(const Field& f) {
  return Eigen::Map<const Vector>(f.values().data(), f.values().size());
}

}  // namespace

DenseMaps assemble_dense_maps(const Grid& grid, const BoundaryProfile& profile, Side side) {
  const long dofs = static_cast<long>(grid.ny()) * grid.nt();
  if (dofs > kDenseDofLimit) {
    throw ConfigError("dense oracle refused: Ny*Nt = " + std::to_string(dofs) + " exceeds the limit " +
                      std::to_string(kDenseDofLimit));
  }
  const WaveSolver solver(profile, grid);
  const int levels = grid.levels();
  const int nodes = grid.nodes();
  const int ny = grid.ny();
  const int nt = grid.nt();

  DenseMaps maps;
  maps.grid = grid;
  maps.side = side;
  maps.control_to_trajectory = DenseMatrix::Zero(static_cast<Eigen::Index>(levels) * nodes, levels);
  for (int c = 0; c < levels; ++c) {
    Vector impulse = Vector::Zero(levels);
    impulse[c] = 1.0;
    maps.control_to_trajectory.col(c) = flatten(solver.forward_control(side, impulse));
  }

  const DenseMatrix& b = maps.control_to_trajectory;
  const DenseMatrix last = level_rows(b, grid, nt);
  const DenseMatrix velocity =
      (3.0 * last - 4.0 * level_rows(b, grid, nt - 1) + level_rows(b, grid, nt - 2)) /
      (2.0 * grid.dt());
  maps.control_to_terminal.resize(2 * (ny - 1), levels);
  maps.control_to_terminal.topRows(ny - 1) = last.middleRows(1, ny - 1);
  maps.control_to_terminal.bottomRows(ny - 1) = velocity.middleRows(1, ny - 1);

  maps.trace_weights = grid.time_weights();
  maps.space_weights = grid.space_weights();
  maps.tracking_weights.resize(static_cast<Eigen::Index>(levels) * nodes);
  for (int n = 0; n < levels; ++n) {
    for (int j = 0; j < nodes; ++j) {
      maps.tracking_weights[static_cast<Eigen::Index>(n) * nodes + j] =
          solver.alpha()[n] * maps.trace_weights[n] * maps.space_weights[j];
    }
  }
  maps.h10_gram = stiffness_matrix(grid);
  maps.hminus1_gram = grid.dy() * grid.dy() * maps.h10_gram.inverse();
  return maps;
}

BoundaryTrace follower_qp_oracle(const FollowerProblem& problem, const DenseMaps& maps) {
  if (!(problem.grid == maps.grid) || problem.actuated_side != maps.side) {
    throw ShapeError("follower_qp_oracle: maps built for another grid or side");
  }
  const FollowerModel model(problem);
  const Grid& g = maps.grid;
  const Field z_leader = model.state(Vector::Zero(g.levels()));
  Vector residual = -flatten(z_leader);
  if (!problem.tracking_target.empty()) residual += flatten(problem.tracking_target);

  const DenseMatrix& b = maps.control_to_trajectory;
  const DenseMatrix wb = maps.tracking_weights.asDiagonal() * b;
  DenseMatrix system = b.transpose() * wb;
  system.diagonal() += problem.penalty * maps.trace_weights;
  const Vector rhs = wb.transpose() * residual;

  const Eigen::LDLT<DenseMatrix> ldlt(system);
  if (ldlt.info() != Eigen::Success) throw Error("follower_qp_oracle: LDLT failed");
  const Vector v = ldlt.solve(rhs);
  const Vector check = system.fullPivLu().solve(rhs);
  if ((v - check).norm() > 1e-8 * std::max(1.0, v.norm())) {
    throw Error("follower_qp_oracle: LDLT and LU solutions disagree");
  }
  return {problem.actuated_side, v};
}

DenseLeaderMaps dense_A(const LeaderProblem& problem, const DenseMaps& maps) {
  const FollowerProblem& fp = problem.follower;
  if (!(fp.grid == maps.grid) || fp.actuated_side != maps.side) {
    throw ShapeError("dense_A: maps built for another grid or side");
  }
  const Grid& g = maps.grid;
  const int levels = g.levels();
  const int nodes = g.nodes();
  const int nt = g.nt();
  const DenseMatrix& b = maps.control_to_trajectory;
  const Vector& q = maps.trace_weights;

  // S = Q^-1 B^T W B and P = penalty (penalty I + S)^-1.
  const DenseMatrix s =
      q.cwiseInverse().asDiagonal() * (b.transpose() * (maps.tracking_weights.asDiagonal() * b));
  DenseMatrix shifted = s;
  shifted.diagonal().array() += fp.penalty;
  DenseLeaderMaps out;
  out.P = fp.penalty * shifted.partialPivLu().solve(DenseMatrix::Identity(levels, levels));

  const DenseMatrix bp = b * out.P;
  const DenseMatrix last = level_rows(bp, g, nt);
  out.A.resize(2 * nodes, levels);
  out.A.topRows(nodes) =
      (3.0 * last - 4.0 * level_rows(bp, g, nt - 1) + level_rows(bp, g, nt - 2)) / (2.0 * g.dt());
  out.A.bottomRows(nodes) = -last;

  Vector d(2 * nodes);
  d.head(nodes) = maps.space_weights;
  d[0] = 0.0;
  d[nodes - 1] = 0.0;
  d.tail(nodes) = maps.space_weights;
  out.adjoint = q.cwiseInverse().asDiagonal() * out.A.transpose() * d.asDiagonal();
  return out;
}

Vector fd_gradient(const std::function<double(const Vector&)>& functional, const Vector& point,
                   double h) {
  if (!(h > 0.0)) throw DomainError("fd_gradient: step must be positive");
  Vector g(point.size());
  Vector x = point;
  for (Eigen::Index i = 0; i < point.size(); ++i) {
    const double hi = point[i] + h;
    const double lo = point[i] - h;
    x[i] = hi;
    const double up = functional(x);
    x[i] = lo;
    const double down = functional(x);
    x[i] = point[i];
    g[i] = (up - down) / (hi - lo);  // realized step, not 2h
  }
  return g;
}

DenseLeaderSolution dense_leader_oracle(const LeaderProblem& problem, const DenseMaps& maps,
                                        const Background& background, double epsilon) {
  const Grid& g = maps.grid;
  const int ny = g.ny();
  const int nodes = g.nodes();
  const DenseLeaderMaps a = dense_A(problem, maps);
  const Vector v0 = problem.v0.size() ? problem.v0 : Vector::Zero(nodes);
  const Vector v1 = problem.v1.size() ? problem.v1 : Vector::Zero(nodes);
  const Vector d0 = v0 - background.terminal.position;
  const Vector d1 = v1 - background.terminal.velocity;

  // r1 = h(T) - d0 in L2, r2 = h_t(T) - d1 on interior nodes in H^-1.
  const DenseMatrix r1 = -a.A.bottomRows(nodes);
  const DenseMatrix r2 = a.A.topRows(nodes).middleRows(1, ny - 1);
  const Vector c2 = d1.segment(1, ny - 1);
  const DenseMatrix m1 = maps.space_weights.asDiagonal();
  const DenseMatrix& m2 = maps.hminus1_gram;
  const DenseMatrix q = maps.trace_weights.asDiagonal();
  const DenseMatrix k1 = r1.transpose() * m1 * r1;
  const DenseMatrix k2 = r2.transpose() * m2 * r2;
  const Vector b1 = r1.transpose() * m1 * d0;
  const Vector b2 = r2.transpose() * m2 * c2;
  const double eps2 = epsilon * epsilon;

  struct Eval {
    Vector f;
    Eigen::Vector2d grad;
    Eigen::Matrix2d hess;
    double value;
    Vector e1, e2;
  };
  auto evaluate = [&](const Eigen::Vector2d& lam) {
    Eval e;
    const DenseMatrix m = q + lam[0] * k1 + lam[1] * k2;
    const Eigen::LDLT<DenseMatrix> fac(m);
    e.f = fac.solve(lam[0] * b1 + lam[1] * b2);
    e.e1 = r1 * e.f - d0;
    e.e2 = r2 * e.f - c2;
    const double n1 = e.e1.dot(m1 * e.e1);
    const double n2 = e.e2.dot(m2 * e.e2);
    e.grad = {0.5 * (n1 - eps2), 0.5 * (n2 - eps2)};
    e.value = 0.5 * e.f.dot(q * e.f) + lam[0] * e.grad[0] + lam[1] * e.grad[1];
    const Vector u1 = r1.transpose() * (m1 * e.e1);
    const Vector u2 = r2.transpose() * (m2 * e.e2);
    const Vector s1 = fac.solve(u1);
    const Vector s2 = fac.solve(u2);
    e.hess << -u1.dot(s1), -u1.dot(s2), -u2.dot(s1), -u2.dot(s2);
    return e;
  };

  // Maximize the concave dual function over lambda >= 0.
  Eigen::Vector2d lam(0.0, 0.0);
  Eval cur = evaluate(lam);
  int it = 0;
  for (; it < 500; ++it) {
    bool done = true;
    for (int i = 0; i < 2; ++i) {
      const bool pinned = lam[i] == 0.0 && cur.grad[i] <= 0.0;
      if (!pinned && std::abs(cur.grad[i]) > 1e-13 * eps2) done = false;
    }
    if (done) break;
    if (lam.isZero()) {
      // Newton is undefined at the origin when f = 0; seed the free components.
      for (int i = 0; i < 2; ++i) {
        if (cur.grad[i] > 0.0) lam[i] = 1.0;
      }
      cur = evaluate(lam);
      continue;
    }
    Eigen::Vector2d dir = Eigen::Vector2d::Zero();
    std::array<bool, 2> free{};
    for (int i = 0; i < 2; ++i) free[i] = !(lam[i] == 0.0 && cur.grad[i] <= 0.0);
    if (free[0] && free[1]) {
      dir = -cur.hess.ldlt().solve(cur.grad);
    } else {
      for (int i = 0; i < 2; ++i) {
        if (free[i]) dir[i] = -cur.grad[i] / cur.hess(i, i);
      }
    }
    double step = 1.0;
    Eval trial;
    Eigen::Vector2d next;
    for (int ls = 0; ls < 60; ++ls) {
      next = (lam + step * dir).cwiseMax(0.0);
      trial = evaluate(next);
      if (trial.value >= cur.value - 1e-15 * std::abs(cur.value)) break;
      step *= 0.5;
    }
    lam = next;
    cur = std::move(trial);
  }

  DenseLeaderSolution out;
  out.leader = cur.f;
  out.multiplier_position = lam[0];
  out.multiplier_velocity = lam[1];
  out.dual.f1 = lam[0] * cur.e1;
  Vector full = Vector::Zero(nodes);
  full.segment(1, ny - 1) = cur.e2;
  out.dual.f0 = -lam[1] * solve_dirichlet_laplacian(g, full);
  out.position_error = std::sqrt(cur.e1.dot(m1 * cur.e1));
  out.velocity_error = std::sqrt(cur.e2.dot(m2 * cur.e2));
  out.iterations = it;
  return out;
}

}  // namespace wavestack
