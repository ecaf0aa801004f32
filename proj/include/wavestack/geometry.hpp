#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

#include "wavestack/discretization.hpp"

namespace wavestack {

/// Value, first and second derivative of the moving endpoint alpha(t).
struct ProfileState {
  double alpha;
  double speed;
  double accel;
};

enum class ProfileKind { affine, arctan_drift, constant, custom };
enum class Monotonicity { increasing, decreasing, constant };

/// Declared speed bounds (m, M) with m < alpha'(t) < M.
struct SpeedBounds {
  double lower;
  double upper;
};

/// Right endpoint x = alpha(t) of the physical domain (0, alpha(t)).
///
/// Two closed-form families are built in: `affine` with alpha = 1 + k t and
/// `arctan_drift` with alpha = 1 + (t + atan t)/c. `constant` is the
/// degenerate alpha == 1 (plain wave equation) used for solver verification;
/// it violates the speed hypothesis by construction.
class BoundaryProfile {
 public:
  using Evaluator = std::function<ProfileState(double)>;

  static BoundaryProfile affine(double k, SpeedBounds bounds);
  static BoundaryProfile arctan_drift(double c, SpeedBounds bounds);
  static BoundaryProfile constant();
  static BoundaryProfile custom(Evaluator eval, SpeedBounds bounds, std::string name = "custom");

  /// Throws DomainError for t < 0.
  ProfileState eval(double t) const;

  ProfileKind kind() const noexcept { return kind_; }
  double parameter() const noexcept { return parameter_; }
  SpeedBounds bounds() const noexcept { return bounds_; }
  bool degenerate() const noexcept { return kind_ == ProfileKind::constant; }
  const std::string& name() const noexcept { return name_; }

 private:
  BoundaryProfile(ProfileKind kind, double parameter, SpeedBounds bounds, Evaluator eval,
                  std::string name);

  ProfileKind kind_;
  double parameter_;
  SpeedBounds bounds_;
  Evaluator eval_;
  std::string name_;
};

struct HypothesisReport {
  bool h1_ok = false;  // alpha(0) == 1
  bool h2_ok = false;  // m < alpha' < M on every sample, 0 < m < M < 1
  bool h3_ok = false;  // alpha' monotone on the samples
  double observed_min_speed = 0.0;
  double observed_max_speed = 0.0;
  int samples = 0;
  Monotonicity direction = Monotonicity::constant;

  bool all_ok() const noexcept { return h1_ok && h2_ok && h3_ok; }
};

/// Checks the three standing hypotheses on a uniform sample of [0, T].
/// Never throws for failures; the report carries them.
HypothesisReport validate_hypotheses(const BoundaryProfile& profile, double T, int samples = 10000);

/// Coefficients of the transformed operator
///   L z = -[(beta/alpha) z_y]_y + (gamma/alpha) z_ty + (tau/alpha) z_y.
struct Coefficients {
  double beta;
  double gamma;
  double tau;
};

Coefficients coefficients(const BoundaryProfile& profile, double y, double t);
Coefficients coefficients(const ProfileState& state, double y);

/// Sufficient control horizons for the Gamma_0 (first) and Gamma_alpha
/// (second) actuation. Requires 0 < m < M < 1.
struct ControlTimes {
  double gamma0;
  double gamma_alpha;
};

ControlTimes control_time_thresholds(double m, double M);

/// Samples of the physical data. u0, u1 are uniform samples on [0, 1];
/// uT is a uniform sample on [0, alpha(T)]; u2 holds, for each time level of
/// the target grid, a uniform sample on [0, alpha(T)].
struct PhysicalData {
  Eigen::VectorXd u0;
  Eigen::VectorXd u1;
  Eigen::VectorXd uT;
  Eigen::MatrixXd u2;
};

struct TransformedData {
  Eigen::VectorXd z0;
  Eigen::VectorXd z1;
  Eigen::VectorXd v0;
  Field z2;
};

/// Pulls physical data back to the cylinder (0,1) x (0,T) through
/// y = x / alpha(t). Empty physical arrays produce zero transformed arrays.
TransformedData transform_data(const PhysicalData& data, const BoundaryProfile& profile,
                               const Grid& grid);

/// Linear interpolation of uniform samples on [0, length] at x.
double sample_linear(const Eigen::VectorXd& samples, double length, double x);

}  // namespace wavestack
