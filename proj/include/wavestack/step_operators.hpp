#pragma once

#include <vector>

#include "wavestack/discretization.hpp"
#include "wavestack/geometry.hpp"

namespace wavestack {

/// Square tridiagonal matrix; row r holds lower[r] x[r-1] + diag[r] x[r] + upper[r] x[r+1].
struct Tridiagonal {
  Vector lower;
  Vector diag;
  Vector upper;

  Tridiagonal transposed() const;
  Vector apply(const Vector& x) const;
};

/// Thomas algorithm. Throws SolverDivergence on a zero pivot.
Vector solve_tridiagonal(const Tridiagonal& m, const Vector& rhs);

/// Three-point stencil evaluated at interior nodes j = 1..ny-1 of a full
/// slice. Coefficient arrays are indexed by node (entries 0 and ny unused).
/// Results are full slices with zero boundary entries.
struct InteriorStencil {
  Vector lower;
  Vector diag;
  Vector upper;

  Vector apply(const Vector& full) const;
  /// Exact transpose of `apply` as a map between full slices; boundary
  /// entries of the result collect the couplings to the boundary nodes.
  Vector apply_transposed(const Vector& full) const;
  /// Transpose of the interior-to-interior block (boundary columns dropped).
  InteriorStencil interior_transpose() const;
};

enum class StepDirection { forward_L, backward_Lstar };

/// Cotangents of the inputs of one forward step.
struct StepCotangent {
  Vector prev;
  Vector cur;
  double left = 0.0;
  double right = 0.0;
  Vector source;
};

/// Operators of one time level.
///
/// Forward (level n):
///   (I + dt/2 G_n) z^{n+1} = 2 z^n - z^{n-1} - dt^2 K_n z^n + dt/2 G_n z^{n-1} + dt^2 s^n
/// with K_n the conservative flux plus first-order term and G_n = (gamma/alpha) D_y.
///
/// Backward (level n), realizing L* with transposed stencils:
///   (I + dt/2 G_{n-1}^T) p^{n-1} = 2 p^n - p^{n+1} - dt^2 K_n^T p^n + dt/2 G_{n+1}^T p^{n+1} + dt^2 s^n
struct StepOperator {
  int level = 0;
  double dt = 0.0;
  InteriorStencil spatial;  // K_n, or K_n^T (interior block) backward
  InteriorStencil mixed;    // G_n, or G_{n+1}^T backward
  Tridiagonal implicit;     // interior system matrix for the unknown level

  /// Forward step: returns z^{n+1} as a full slice; boundary entries are left/right.
  Vector apply(const Vector& prev, const Vector& cur, double left, double right,
               const Vector& source) const;
  /// Exact transpose of `apply`.
  StepCotangent apply_transposed(const Vector& next_cotangent) const;

  /// Backward step: returns p^{n-1} with homogeneous Dirichlet entries.
  Vector apply_backward(const Vector& next, const Vector& cur, const Vector& source) const;
};

/// Immutable per-level operator sequence for one (profile, grid) pair.
class StepSequence {
 public:
  StepSequence(const BoundaryProfile& profile, const Grid& grid, StepDirection direction);

  const Grid& grid() const noexcept { return grid_; }
  StepDirection direction() const noexcept { return direction_; }
  const StepOperator& operator[](int level) const { return ops_[level]; }
  int size() const noexcept { return static_cast<int>(ops_.size()); }

  /// alpha(t_n), alpha'(t_n) cached per level.
  const Vector& alpha() const noexcept { return alpha_; }
  const Vector& speed() const noexcept { return speed_; }

 private:
  Grid grid_;
  StepDirection direction_;
  std::vector<StepOperator> ops_;
  Vector alpha_;
  Vector speed_;
};

/// Builds the per-level stencils of L (forward) or L* (backward). The
/// backward stencils are interior transposes of the forward ones.
StepSequence assemble_step_operators(const BoundaryProfile& profile, const Grid& grid,
                                     StepDirection direction);

}  // namespace wavestack
