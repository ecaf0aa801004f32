#pragma once

#include <Eigen/Dense>

namespace wavestack {

/// Which lateral boundary of the cylinder a control acts on: y = 0 or y = 1.
enum class Side { gamma0, gamma_alpha };

inline Side opposite(Side side) { return side == Side::gamma0 ? Side::gamma_alpha : Side::gamma0; }
const char* to_string(Side side);

using Vector = Eigen::VectorXd;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kDefaultCflRatio = 0.4;

/// Uniform lattice on (0,1) x (0,T): nodes y_j = j dy, j = 0..ny and levels
/// t_n = n dt, n = 0..nt.
class Grid {
 public:
  Grid() = default;
  Grid(int ny, int nt, double T);

  int ny() const noexcept { return ny_; }
  int nt() const noexcept { return nt_; }
  double final_time() const noexcept { return T_; }
  double dy() const noexcept { return 1.0 / ny_; }
  double dt() const noexcept { return T_ / nt_; }
  double y(int j) const noexcept { return j * dy(); }
  double t(int n) const noexcept { return n * dt(); }
  int nodes() const noexcept { return ny_ + 1; }
  int levels() const noexcept { return nt_ + 1; }

  /// Trapezoidal weights in space (length ny+1) and time (length nt+1).
  Vector space_weights() const;
  Vector time_weights() const;

  bool operator==(const Grid&) const = default;

 private:
  int ny_ = 0;
  int nt_ = 0;
  double T_ = 0.0;
};

/// Validates sizes and the CFL condition dt <= cfl_ratio * dy. A CFL
/// violation raises ConfigError naming the smallest admissible nt.
Grid build_grid(int ny, int nt, double T, double cfl_ratio = kDefaultCflRatio);

/// Scalar field on the lattice; row n is time level n.
class Field {
 public:
  Field() = default;
  explicit Field(const Grid& grid) : values_(RowMajorMatrix::Zero(grid.levels(), grid.nodes())) {}
  Field(int levels, int nodes) : values_(RowMajorMatrix::Zero(levels, nodes)) {}
  explicit Field(RowMajorMatrix values) : values_(std::move(values)) {}

  int levels() const noexcept { return static_cast<int>(values_.rows()); }
  int nodes() const noexcept { return static_cast<int>(values_.cols()); }

  double& operator()(int n, int j) { return values_(n, j); }
  double operator()(int n, int j) const { return values_(n, j); }

  auto level(int n) { return values_.row(n); }
  auto level(int n) const { return values_.row(n); }
  Vector slice(int n) const { return values_.row(n).transpose(); }

  RowMajorMatrix& values() noexcept { return values_; }
  const RowMajorMatrix& values() const noexcept { return values_; }

  bool empty() const noexcept { return values_.size() == 0; }

 private:
  RowMajorMatrix values_;
};

/// Time signal on one lateral boundary, one value per time level.
struct BoundaryTrace {
  Side side = Side::gamma0;
  Vector values;

  static BoundaryTrace zero(Side side, const Grid& grid) {
    return {side, Vector::Zero(grid.levels())};
  }
};

/// Terminal position z(T) and velocity z_t(T) as full nodal slices.
struct StatePair {
  Vector position;
  Vector velocity;
};

enum class NormKind { l2_omega, h10_omega, hminus1_omega, l2_gamma };

/// Discrete norms. Omega kinds take a slice of length ny+1, L2_Gamma a trace
/// of length nt+1; anything else is a ShapeError.
double norm(const Grid& grid, const Vector& object, NormKind kind);
double norm(const Grid& grid, const BoundaryTrace& trace);

/// Trapezoidal L2(Omega) and L2(Gamma) inner products.
double omega_inner(const Grid& grid, const Vector& a, const Vector& b);
double trace_inner(const Grid& grid, const Vector& a, const Vector& b);

/// Solves the homogeneous Dirichlet problem -u'' = w with the second
/// difference stencil. Returns a full slice with u_0 = u_ny = 0; only the
/// interior entries of w are read.
Vector solve_dirichlet_laplacian(const Grid& grid, const Vector& w);

/// Applies the discrete H1_0 Gram operator: (K u)_j with
/// u^T K u = sum ((u_{j+1}-u_j)/dy)^2 dy. Boundary entries of the result are 0.
Vector apply_stiffness(const Grid& grid, const Vector& u);

/// One-sided second order y-derivative at the chosen boundary, per level.
BoundaryTrace normal_derivative_trace(const Field& field, Side side, const Grid& grid);

/// Terminal pair extracted from a trajectory; the velocity uses the
/// second order backward difference over the last three levels.
StatePair terminal_state(const Field& trajectory, const Grid& grid);

}  // namespace wavestack
