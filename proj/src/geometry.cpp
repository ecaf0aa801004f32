#include "wavestack/geometry.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "wavestack/errors.hpp"

namespace wavestack {

BoundaryProfile::BoundaryProfile(ProfileKind kind, double parameter, SpeedBounds bounds,
                                 Evaluator eval, std::string name)
    : kind_(kind),
      parameter_(parameter),
      bounds_(bounds),
      eval_(std::move(eval)),
      name_(std::move(name)) {}

BoundaryProfile BoundaryProfile::affine(double k, SpeedBounds bounds) {
  return BoundaryProfile(
      ProfileKind::affine, k, bounds,
      [k](double t) { return ProfileState{1.0 + k * t, k, 0.0}; }, "affine");
}

BoundaryProfile BoundaryProfile::arctan_drift(double c, SpeedBounds bounds) {
  if (!(c > 0.0)) throw DomainError("arctan_drift: c must be positive");
  return BoundaryProfile(
      ProfileKind::arctan_drift, c, bounds,
      [c](double t) {
        const double s = 1.0 + t * t;
        return ProfileState{1.0 + (t + std::atan(t)) / c, (1.0 + 1.0 / s) / c,
                            -2.0 * t / (c * s * s)};
      },
      "arctan_drift");
}

BoundaryProfile BoundaryProfile::constant() {
  return BoundaryProfile(
      ProfileKind::constant, 0.0, {0.0, 0.0}, [](double) { return ProfileState{1.0, 0.0, 0.0}; },
      "constant");
}

BoundaryProfile BoundaryProfile::custom(Evaluator eval, SpeedBounds bounds, std::string name) {
  if (!eval) throw DomainError("custom profile needs an evaluator");
  return BoundaryProfile(ProfileKind::custom, 0.0, bounds, std::move(eval), std::move(name));
}

ProfileState BoundaryProfile::eval(double t) const {
  if (!(t >= 0.0)) throw DomainError("profile evaluated at negative time " + std::to_string(t));
  return eval_(t);
}

HypothesisReport validate_hypotheses(const BoundaryProfile& profile, double T, int samples) {
  if (!(T > 0.0)) throw DomainError("validate_hypotheses: T must be positive");
  if (samples < 2) throw DomainError("validate_hypotheses: need at least two samples");

  HypothesisReport report;
  report.samples = samples;
  report.h1_ok = profile.eval(0.0).alpha == 1.0;

  const auto [m, M] = profile.bounds();
  bool inside = 0.0 < m && m < M && M < 1.0;
  bool rising = false;
  bool falling = false;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  double previous = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double t = T * static_cast<double>(i) / (samples - 1);
    const double speed = profile.eval(t).speed;
    lo = std::min(lo, speed);
    hi = std::max(hi, speed);
    if (!(m < speed && speed < M)) inside = false;
    if (i > 0) {
      if (speed > previous) rising = true;
      if (speed < previous) falling = true;
    }
    previous = speed;
  }
  report.h2_ok = inside;
  report.h3_ok = !(rising && falling);
  report.direction = rising ? Monotonicity::increasing
                            : (falling ? Monotonicity::decreasing : Monotonicity::constant);
  report.observed_min_speed = lo;
  report.observed_max_speed = hi;
  return report;
}

Coefficients coefficients(const ProfileState& s, double y) {
  return {(1.0 - s.speed * s.speed * y * y) / s.alpha, -2.0 * s.speed * y, -s.accel * y};
}

Coefficients coefficients(const BoundaryProfile& profile, double y, double t) {
  return coefficients(profile.eval(t), y);
}

ControlTimes control_time_thresholds(double m, double M) {
  if (!(0.0 < m && m < M && M < 1.0)) {
    throw DomainError("control_time_thresholds: need 0 < m < M < 1");
  }
  const double a = 2.0 * M * M * (1.0 - m) / (m * std::pow(1.0 - M, 3));
  const double b = 2.0 * M * M * (1.0 - m) * (1.0 + M) / (m * std::pow(1.0 - M, 2));
  return {std::expm1(a) / M, std::expm1(b) / M};
}

double sample_linear(const Eigen::VectorXd& samples, double length, double x) {
  const auto n = samples.size();
  if (n < 2) throw ShapeError("sample_linear: need at least two samples");
  const double h = length / static_cast<double>(n - 1);
  double s = x / h;
  if (s <= 0.0) return samples[0];
  if (s >= static_cast<double>(n - 1)) return samples[n - 1];
  const auto i = static_cast<Eigen::Index>(std::floor(s));
  const double r = s - static_cast<double>(i);
  return (1.0 - r) * samples[i] + r * samples[i + 1];
}

namespace {

// Second order nodal derivative of uniform samples on [0, length].
Eigen::VectorXd sample_derivative(const Eigen::VectorXd& u, double length) {
  const auto n = u.size();
  if (n < 3) throw ShapeError("sample_derivative: need at least three samples");
  const double h = length / static_cast<double>(n - 1);
  Eigen::VectorXd d(n);
  d[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
  d[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h);
  for (Eigen::Index i = 1; i + 1 < n; ++i) d[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
  return d;
}

}  // namespace

TransformedData transform_data(const PhysicalData& data, const BoundaryProfile& profile,
                               const Grid& grid) {
  const int nodes = grid.nodes();
  auto check_nodal = [&](const Eigen::VectorXd& v, const char* what) {
    if (v.size() != 0 && v.size() != nodes) {
      throw ShapeError(std::string("transform_data: ") + what + " has " +
                       std::to_string(v.size()) + " samples, grid has " +
                       std::to_string(nodes) + " nodes");
    }
  };
  check_nodal(data.u0, "u0");
  check_nodal(data.u1, "u1");
  if (data.uT.size() == 1) throw ShapeError("transform_data: uT needs at least two samples");
  if (data.u2.size() != 0 && (data.u2.rows() != grid.levels() || data.u2.cols() < 2)) {
    throw ShapeError("transform_data: u2 must have one row per time level");
  }

  const ProfileState start = profile.eval(0.0);
  const double alpha_T = profile.eval(grid.final_time()).alpha;

  TransformedData out{Vector::Zero(nodes), Vector::Zero(nodes), Vector::Zero(nodes), Field(grid)};
  if (data.u0.size() != 0) out.z0 = data.u0;
  if (data.u1.size() != 0) out.z1 = data.u1;
  if (data.u0.size() != 0 && start.speed != 0.0) {
    const Eigen::VectorXd du0 = sample_derivative(data.u0, 1.0);
    for (int j = 0; j < nodes; ++j) out.z1[j] += start.speed * grid.y(j) * du0[j];
  }
  if (data.uT.size() != 0) {
    for (int j = 0; j < nodes; ++j) out.v0[j] = sample_linear(data.uT, alpha_T, alpha_T * grid.y(j));
  }
  if (data.u2.size() != 0) {
    for (int n = 0; n < grid.levels(); ++n) {
      const Eigen::VectorXd row = data.u2.row(n).transpose();
      const double a = profile.eval(grid.t(n)).alpha;
      for (int j = 0; j < nodes; ++j) out.z2(n, j) = sample_linear(row, alpha_T, a * grid.y(j));
    }
  }
  return out;
}

}  // namespace wavestack
