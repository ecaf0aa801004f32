#include "wavestack/cli.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <random>
#include <thread>

#include "wavestack/errors.hpp"
#include "wavestack/io.hpp"
#include "wavestack/oracle.hpp"

namespace wavestack {

namespace {

namespace fs = std::filesystem;

const double kPi = std::acos(-1.0);

// A CSV table buffered in memory; rows are written in insertion order.
class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  Table& row() {
    rows_.emplace_back();
    return *this;
  }
  Table& operator<<(const std::string& cell) {
    rows_.back().push_back(cell);
    return *this;
  }
  Table& operator<<(const char* cell) { return *this << std::string(cell); }
  Table& operator<<(double x) { return *this << csv_number(x); }
  Table& operator<<(int x) { return *this << std::to_string(x); }
  Table& operator<<(bool x) { return *this << std::string(x ? "true" : "false"); }

  void append(const std::vector<std::string>& cells) { rows_.push_back(cells); }

  std::string text() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
      }
      out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Output directory plus the list of files written into it.
class Artifacts {
 public:
  explicit Artifacts(fs::path dir) : dir_(std::move(dir)) {}

  const fs::path& dir() const { return dir_; }
  const std::vector<std::string>& names() const { return names_; }

  void write(const std::string& name, const std::string& text) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + (dir_ / name).string());
    out << text;
    names_.push_back(name);
  }
  void write(const std::string& name, const Table& table) { write(name, table.text()); }
  template <class Writer>
  void write_with(const std::string& name, Writer&& writer) {
    std::ostringstream s;
    writer(s);
    write(name, s.str());
  }

 private:
  fs::path dir_;
  std::vector<std::string> names_;
};

struct Context {
  ExperimentConfig config;
  std::string config_text;
  std::string instance_hash;
  std::ostream& log;
  int jobs = 1;
};

int status_code(bool ok) { return ok ? exit_ok : exit_verification; }

const char* side_name(Side s) { return to_string(s); }

std::string summary_line(const std::string& key, const std::string& value) {
  return key + ": " + value + "\n";
}

// --- validate ---------------------------------------------------------------

int cmd_validate(Context& ctx, Artifacts& out) {
  const ExperimentConfig& c = ctx.config;
  const BoundaryProfile profile = c.profile();
  const HypothesisReport r = validate_hypotheses(profile, c.T);
  double t0 = std::numeric_limits<double>::infinity();
  double ta = t0;
  const bool bounds_ok =
      0.0 < c.bounds.lower && c.bounds.lower < c.bounds.upper && c.bounds.upper < 1.0;
  if (!profile.degenerate() && bounds_ok) {
    const ControlTimes times = control_time_thresholds(c.bounds.lower, c.bounds.upper);
    t0 = times.gamma0;
    ta = times.gamma_alpha;
  }
  const char* direction = r.direction == Monotonicity::increasing   ? "increasing"
                          : r.direction == Monotonicity::decreasing ? "decreasing"
                                                                    : "constant";
  Table t({"profile", "T", "samples", "h1_ok", "h2_ok", "h3_ok", "observed_min_speed",
           "observed_max_speed", "direction", "threshold_gamma0", "threshold_gamma_alpha"});
  t.row() << profile.name() << c.T << r.samples << r.h1_ok << r.h2_ok << r.h3_ok
          << r.observed_min_speed << r.observed_max_speed << direction << t0 << ta;
  out.write("validate.csv", t);
  std::string s = summary_line("profile", profile.name()) +
                  summary_line("hypotheses", r.all_ok() ? "all satisfied" : "violated");
  out.write("summary.txt", s);
  ctx.log << s;
  if (r.all_ok()) return exit_ok;
  return profile.degenerate() && c.allow_degenerate ? exit_ok : exit_verification;
}

// --- thresholds -------------------------------------------------------------

int cmd_thresholds(Context& ctx, Artifacts& out) {
  Table t({"m", "M", "T1", "T2"});
  for (double m : ctx.config.threshold_m) {
    for (double M : ctx.config.threshold_M) {
      const ControlTimes times = control_time_thresholds(m, M);
      t.row() << m << M << times.gamma0 << times.gamma_alpha;
    }
  }
  out.write("thresholds.csv", t);
  ctx.log << t.text();
  return exit_ok;
}

// --- simulate ---------------------------------------------------------------

struct SimulateResult {
  double position_norm = 0.0;
  double velocity_norm = 0.0;
  double final_error = std::nan("");
};

Vector boundary_samples(const Expression& e, const Grid& g) {
  Vector v(g.levels());
  for (int n = 0; n < g.levels(); ++n) v[n] = e(g.t(n), g.final_time());
  return v;
}

// Separated solution of the plain wave equation with sine initial data, or
// NaN when the run is not of that form.
double eigenmode_error(const ExperimentConfig& c, const Grid& g, const Vector& position) {
  using K = Expression::Kind;
  if (c.profile_kind != "constant" || c.boundary0.kind != K::zero ||
      c.boundary_alpha.kind != K::zero)
    return std::nan("");
  for (const Expression* e : {&c.z0, &c.z1}) {
    if (e->kind != K::zero && e->kind != K::sines) return std::nan("");
  }
  Vector exact = Vector::Zero(g.nodes());
  const double T = g.final_time();
  for (int j = 0; j < g.nodes(); ++j) {
    const double y = g.y(j);
    for (const auto& [a, n] : c.z0.sines) exact[j] += a * std::cos(n * kPi * T) * std::sin(n * kPi * y);
    for (const auto& [a, n] : c.z1.sines)
      exact[j] += a / (n * kPi) * std::sin(n * kPi * T) * std::sin(n * kPi * y);
  }
  return norm(g, position - exact, NormKind::l2_omega);
}

SimulateResult simulate(const ExperimentConfig& c, Artifacts* out) {
  const FollowerProblem fp = c.follower_problem();
  const Grid& g = fp.grid;
  ForwardProblem p;
  p.grid = g;
  p.profile = fp.profile;
  p.z0 = fp.z0;
  p.z1 = fp.z1;
  if (c.boundary0.kind != Expression::Kind::zero) p.gamma0 = {Side::gamma0, boundary_samples(c.boundary0, g)};
  if (c.boundary_alpha.kind != Expression::Kind::zero)
    p.gamma_alpha = {Side::gamma_alpha, boundary_samples(c.boundary_alpha, g)};
  const ForwardSolution s = solve_forward(p);
  SimulateResult r;
  r.position_norm = norm(g, s.terminal.position, NormKind::l2_omega);
  r.velocity_norm = norm(g, s.terminal.velocity, NormKind::hminus1_omega);
  r.final_error = eigenmode_error(c, g, s.terminal.position);
  if (out) {
    out->write_with("trajectory.txt", [&](std::ostream& o) { write_field(o, g, s.trajectory); });
    out->write_with("terminal_position.txt",
                    [&](std::ostream& o) { write_slice(o, g, s.terminal.position); });
    out->write_with("terminal_velocity.txt",
                    [&](std::ostream& o) { write_slice(o, g, s.terminal.velocity); });
  }
  return r;
}

int cmd_simulate(Context& ctx, Artifacts& out) {
  const ExperimentConfig& c = ctx.config;
  const SimulateResult r = simulate(c, &out);
  Table t({"Ny", "Nt", "T", "position_l2", "velocity_hminus1", "final_error"});
  t.row() << c.ny << c.nt << c.T << r.position_norm << r.velocity_norm << r.final_error;
  out.write("simulate.csv", t);
  const std::string s = summary_line("terminal position L2", csv_number(r.position_norm)) +
                        summary_line("terminal velocity H-1", csv_number(r.velocity_norm)) +
                        summary_line("final error", csv_number(r.final_error));
  out.write("summary.txt", s);
  ctx.log << s;
  return exit_ok;
}

// --- oracle reports ---------------------------------------------------------

void write_oracle_report(Artifacts& out, const std::vector<OracleRecord>& records) {
  Table t({"test_id", "instance_hash", "discrepancy", "tolerance", "pass"});
  for (const auto& r : records) t.row() << r.test_id << r.instance_hash << r.discrepancy << r.tolerance << r.pass();
  out.write("oracle_report.csv", t);
}

bool all_pass(const std::vector<OracleRecord>& records) {
  for (const auto& r : records)
    if (!r.pass()) return false;
  return true;
}

// --- follower ---------------------------------------------------------------

int cmd_follower(Context& ctx, Artifacts& out) {
  const ExperimentConfig& c = ctx.config;
  const FollowerProblem p = c.follower_problem();
  const Grid& g = p.grid;
  const FollowerSolution s = solve_follower(p, c.follower);
  out.write_with("follower_trace.txt", [&](std::ostream& o) { write_trace(o, g, s.follower); });
  out.write_with("state.txt", [&](std::ostream& o) { write_field(o, g, s.state); });
  out.write_with("adjoint.txt", [&](std::ostream& o) { write_field(o, g, s.adjoint); });
  Table conv({"iteration", "residual"});
  for (size_t i = 0; i < s.residual_history.size(); ++i)
    conv.row() << static_cast<int>(i) << s.residual_history[i];
  out.write("convergence.csv", conv);
  Table t({"side", "Ny", "Nt", "T", "penalty", "cost", "gradient_norm", "characterization_residual",
           "iterations"});
  t.row() << side_name(c.side) << c.ny << c.nt << c.T << c.penalty() << s.cost << s.gradient_norm
          << s.characterization_residual << s.iterations;
  out.write("follower.csv", t);

  bool ok = true;
  if (c.dense_oracle) {
    const DenseMaps maps = assemble_dense_maps(g, p.profile, c.side);
    const BoundaryTrace oracle = follower_qp_oracle(p, maps);
    const double scale = std::max(norm(g, oracle), 1e-300);
    std::vector<OracleRecord> records{
        {"follower_qp", ctx.instance_hash, norm(g, BoundaryTrace{c.side, s.follower.values - oracle.values}) / scale,
         1e-6}};
    if (oracle.values.norm() == 0.0) records[0].discrepancy = s.follower.values.norm();
    write_oracle_report(out, records);
    ok = all_pass(records);
  }
  const std::string summary = summary_line("follower cost", csv_number(s.cost)) +
                              summary_line("CG iterations", std::to_string(s.iterations)) +
                              summary_line("characterization residual",
                                           csv_number(s.characterization_residual));
  out.write("summary.txt", summary);
  ctx.log << summary;
  return status_code(ok);
}

// --- leader -----------------------------------------------------------------

void check_threshold_policy(const ExperimentConfig& c) {
  if (c.threshold_policy != ThresholdPolicy::error) return;
  double limit = 0.0;
  if (threshold_warning(c.profile(), c.side, c.T, &limit)) {
    throw ConfigError("T = " + csv_number(c.T) + " is not above the sufficient control time " +
                      csv_number(limit) + " (threshold_warning = error)");
  }
}

double metric_norm(const Grid& g, const DualVariable& xi) {
  return std::hypot(norm(g, xi.f0, NormKind::h10_omega), norm(g, xi.f1, NormKind::l2_omega));
}

std::vector<OracleRecord> leader_oracles(const ExperimentConfig& c, const std::string& hash,
                                         const LeaderProblem& p, const LeaderSolution& s) {
  const Grid& g = p.follower.grid;
  const DenseMaps maps = assemble_dense_maps(g, p.follower.profile, c.side);
  const Background bg = solve_background(p);
  const DenseLeaderSolution dense =
      dense_leader_oracle(p, maps, bg, p.epsilon * (1.0 - c.leader.epsilon_margin));
  const DualVariable diff{s.dual_optimum.f0 - dense.dual.f0, s.dual_optimum.f1 - dense.dual.f1};
  const double xi_norm = metric_norm(g, dense.dual);
  return {{"leader_dual", hash, metric_norm(g, diff) / std::max(1.0, xi_norm), 1e-5}};
}

int cmd_leader(Context& ctx, Artifacts& out) {
  const ExperimentConfig& c = ctx.config;
  check_threshold_policy(c);
  const LeaderProblem p = c.leader_problem();
  const Grid& g = p.follower.grid;
  const LeaderSolution s = solve_leader(p, c.leader);
  out.write_with("leader_trace.txt", [&](std::ostream& o) { write_trace(o, g, s.leader); });
  out.write_with("follower_trace.txt", [&](std::ostream& o) { write_trace(o, g, s.follower); });
  out.write_with("dual_f0.txt", [&](std::ostream& o) { write_slice(o, g, s.dual_optimum.f0); });
  out.write_with("dual_f1.txt", [&](std::ostream& o) { write_slice(o, g, s.dual_optimum.f1); });
  Table hist({"iteration", "theta", "residual"});
  for (size_t i = 0; i < s.history.residual.size(); ++i)
    hist.row() << static_cast<int>(i) << s.history.theta[i] << s.history.residual[i];
  out.write("theta_history.csv", hist);

  const double gap_tol = 1e-4 * (1.0 + s.leader_cost);
  Table t({"side", "Ny", "Nt", "T", "penalty", "epsilon", "leader_cost", "theta", "duality_gap",
           "position_error", "velocity_error", "physical_position_error", "iterations",
           "admissible", "threshold_warning", "threshold"});
  t.row() << side_name(c.side) << c.ny << c.nt << c.T << c.penalty() << c.epsilon << s.leader_cost
          << s.theta_value << s.duality_gap << s.terminal_position_error
          << s.terminal_velocity_error << s.physical_position_error << s.iterations << s.admissible
          << s.threshold_warning << s.threshold;
  out.write("leader.csv", t);

  bool ok = s.admissible && std::abs(s.duality_gap) <= gap_tol;
  if (c.dense_oracle) {
    const auto records = leader_oracles(c, ctx.instance_hash, p, s);
    write_oracle_report(out, records);
    ok = ok && all_pass(records);
  }
  std::string summary = summary_line("leader cost", csv_number(s.leader_cost)) +
                        summary_line("duality gap", csv_number(s.duality_gap)) +
                        summary_line("terminal errors", csv_number(s.terminal_position_error) +
                                                            " (L2), " +
                                                            csv_number(s.terminal_velocity_error) +
                                                            " (H-1)") +
                        summary_line("FISTA iterations", std::to_string(s.iterations));
  for (const auto& w : s.warnings) {
    if (c.threshold_policy == ThresholdPolicy::ignore && w.find("control time") != std::string::npos)
      continue;
    summary += summary_line("warning", w);
  }
  out.write("summary.txt", summary);
  ctx.log << summary;
  return status_code(ok);
}

// --- verify -----------------------------------------------------------------

struct Identity {
  std::string name;
  double discrepancy;
  double tolerance;
  bool pass() const { return discrepancy <= tolerance; }
};

Vector seeded(std::mt19937_64& rng, Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
  return v;
}

std::vector<Identity> verify_identities(const ExperimentConfig& c, std::vector<OracleRecord>* oracle,
                                        const std::string& hash) {
  std::vector<Identity> ids;
  const LeaderProblem lp = c.leader_problem();
  const FollowerProblem& fp = lp.follower;
  const Grid& g = fp.grid;
  std::mt19937_64 rng(c.seed);

  // Forward map against its transpose.
  {
    const WaveSolver solver(fp.profile, g);
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) {
      const Vector f = seeded(rng, g.levels());
      StatePair xi{seeded(rng, g.nodes()), seeded(rng, g.nodes())};
      const StatePair z = terminal_state(solver.forward_control(c.side, f), g);
      const double lhs = omega_inner(g, z.position, xi.position) + omega_inner(g, z.velocity, xi.velocity);
      const double rhs = trace_inner(g, f, apply_transposed_forward(c.side, solver, xi).values);
      worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(lhs)));
    }
    ids.push_back({"forward_transpose_pairing", worst, 1e-12});
  }

  // Follower optimality.
  const FollowerSolution fs = solve_follower(fp, c.follower);
  const FollowerModel model(fp);
  {
    const double misfit = norm(g, BoundaryTrace{c.side, model.misfit_gradient(model.state(Vector::Zero(g.levels())))});
    ids.push_back({"follower_stationarity", fs.gradient_norm / (1.0 + misfit), 1e-8});
    Vector diff = fs.follower.values - model.characterization(fs.adjoint);
    Vector v = fs.follower.values;
    if (c.side == Side::gamma_alpha) {
      diff.head(2).setZero();
      v.head(2).setZero();
    }
    const double vn = norm(g, BoundaryTrace{c.side, v});
    const double dn = norm(g, BoundaryTrace{c.side, diff});
    // First order in dy; 0.6 dy is 5e-2 at Ny = 12.
    ids.push_back({"follower_characterization", vn > 0.0 ? dn / vn : dn, 0.6 * g.dy()});
    const OptimalitySystem os = solve_optimality_system(fp, c.fixed_point);
    const double sn = fs.state.values().norm();
    const double d = (os.state.values() - fs.state.values()).norm();
    ids.push_back({"optimality_system_vs_cg", sn > 0.0 ? d / sn : d, 1e-6});
  }

  // Leader duality and recovery.
  const LeaderOperator op(lp, c.leader.fixed_point_tolerance);
  {
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) {
      const Vector f = seeded(rng, g.levels());
      DualVariable xi{seeded(rng, g.nodes()), seeded(rng, g.nodes())};
      xi.f0[0] = xi.f0[g.ny()] = 0.0;
      const double lhs = op.pairing(op.apply_A(f), xi);
      const double rhs = trace_inner(g, f, op.apply_Astar(xi));
      worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(lhs)));
    }
    ids.push_back({"leader_adjoint_pairing", worst, 1e-8});
  }
  const LeaderSolution ls = solve_leader(lp, c.leader);
  ids.push_back({"duality_gap", std::abs(ls.duality_gap) / (1.0 + ls.leader_cost), 1e-4});
  ids.push_back({"terminal_position_error", ls.terminal_position_error, c.epsilon});
  ids.push_back({"terminal_velocity_error", ls.terminal_velocity_error, c.epsilon});

  if (c.dense_oracle) {
    const DenseMaps maps = assemble_dense_maps(g, fp.profile, c.side);
    const BoundaryTrace qp = follower_qp_oracle(fp, maps);
    const double qn = norm(g, qp);
    const double qd = norm(g, BoundaryTrace{c.side, fs.follower.values - qp.values});
    oracle->push_back({"follower_qp", hash, qn > 0.0 ? qd / qn : qd, 1e-6});

    const DenseLeaderMaps dense = dense_A(lp, maps);
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) {
      const Vector f = seeded(rng, g.levels());
      DualVariable xi{seeded(rng, g.nodes()), seeded(rng, g.nodes())};
      xi.f0[0] = xi.f0[g.ny()] = 0.0;
      Vector stacked(2 * g.nodes());
      stacked << xi.f0, xi.f1;
      const Vector af = dense.A * f;
      const StatePair pair{af.head(g.nodes()), af.tail(g.nodes())};
      const double lhs = op.pairing(pair, xi);
      const double rhs = trace_inner(g, f, dense.adjoint * stacked);
      worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(lhs)));
    }
    oracle->push_back({"dense_adjoint_pairing", hash, worst, 1e-12});
    for (auto& r : leader_oracles(c, hash, lp, ls)) oracle->push_back(r);
  }
  return ids;
}

int cmd_verify(Context& ctx, Artifacts& out) {
  std::vector<OracleRecord> oracle;
  const auto ids = verify_identities(ctx.config, &oracle, ctx.instance_hash);
  Table t({"identity", "discrepancy", "tolerance", "pass"});
  bool ok = true;
  for (const auto& id : ids) {
    t.row() << id.name << id.discrepancy << id.tolerance << id.pass();
    ok = ok && id.pass();
  }
  out.write("verify.csv", t);
  if (ctx.config.dense_oracle) {
    write_oracle_report(out, oracle);
    ok = ok && all_pass(oracle);
  }
  std::string summary;
  for (const auto& id : ids)
    summary += summary_line(id.name, std::string(id.pass() ? "pass" : "FAIL") + " (" +
                                         csv_number(id.discrepancy) + " vs " +
                                         csv_number(id.tolerance) + ")");
  out.write("summary.txt", summary);
  ctx.log << summary;
  return status_code(ok);
}

// --- sweep ------------------------------------------------------------------

std::vector<std::string> sweep_metric_names(const std::string& command) {
  if (command == "simulate") return {"position_l2", "velocity_hminus1", "final_error"};
  if (command == "follower") return {"cost", "gradient_norm", "characterization_residual", "iterations"};
  return {"leader_cost", "duality_gap", "position_error", "velocity_error", "iterations",
          "admissible", "threshold_warning"};
}

// One sweep instance: status plus metric cells (empty on failure).
std::pair<int, std::vector<std::string>> sweep_instance(const ExperimentConfig& c) {
  const auto width = sweep_metric_names(c.sweep_command).size();
  std::vector<std::string> cells;
  auto failed = [&](int code, const char* status) {
    cells.assign(1, status);
    cells.resize(width + 1);
    return std::make_pair(code, cells);
  };
  try {
    validate_config(c);
    if (c.sweep_command == "simulate") {
      const SimulateResult r = simulate(c, nullptr);
      cells = {"ok", csv_number(r.position_norm), csv_number(r.velocity_norm), csv_number(r.final_error)};
      return {exit_ok, cells};
    }
    if (c.sweep_command == "follower") {
      const FollowerSolution s = solve_follower(c.follower_problem(), c.follower);
      cells = {"ok", csv_number(s.cost), csv_number(s.gradient_norm),
               csv_number(s.characterization_residual), std::to_string(s.iterations)};
      return {exit_ok, cells};
    }
    check_threshold_policy(c);
    const LeaderSolution s = solve_leader(c.leader_problem(), c.leader);
    const bool ok = s.admissible && std::abs(s.duality_gap) <= 1e-4 * (1.0 + s.leader_cost);
    cells = {ok ? "ok" : "not_admissible",
             csv_number(s.leader_cost),
             csv_number(s.duality_gap),
             csv_number(s.terminal_position_error),
             csv_number(s.terminal_velocity_error),
             std::to_string(s.iterations),
             s.admissible ? "true" : "false",
             s.threshold_warning ? "true" : "false"};
    return {status_code(ok), cells};
  } catch (const ConfigError&) {
    return failed(exit_config, "config_error");
  } catch (const DomainError&) {
    return failed(exit_config, "config_error");
  } catch (const ShapeError&) {
    return failed(exit_config, "config_error");
  } catch (const Error&) {
    return failed(exit_solver, "solver_error");
  }
}

int cmd_sweep(Context& ctx, Artifacts& out) {
  const ExperimentConfig& base = ctx.config;
  if (base.sweep_axes.empty()) throw ConfigError("sweep needs at least one axis in [sweep]");
  // Cartesian product, first axis varying slowest.
  std::vector<std::vector<std::string>> points{{}};
  for (const auto& [key, values] : base.sweep_axes) {
    std::vector<std::vector<std::string>> next;
    for (const auto& p : points)
      for (const auto& v : values) {
        next.push_back(p);
        next.back().push_back(v);
      }
    points = std::move(next);
  }
  std::vector<std::pair<int, std::vector<std::string>>> results(points.size());
  std::atomic<size_t> cursor{0};
  auto worker = [&] {
    for (size_t i; (i = cursor.fetch_add(1)) < points.size();) {
      ExperimentConfig c = base;
      for (size_t a = 0; a < points[i].size(); ++a) apply_override(c, base.sweep_axes[a].first, points[i][a]);
      results[i] = sweep_instance(c);
    }
  };
  const int jobs = std::max(1, std::min<int>(ctx.jobs, static_cast<int>(points.size())));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<std::string> header{"instance"};
  for (const auto& [key, values] : base.sweep_axes) header.push_back(key);
  header.push_back("status");
  for (const auto& m : sweep_metric_names(base.sweep_command)) header.push_back(m);
  Table t(header);
  int code = exit_ok;
  for (size_t i = 0; i < points.size(); ++i) {
    std::vector<std::string> cells{std::to_string(i)};
    cells.insert(cells.end(), points[i].begin(), points[i].end());
    cells.insert(cells.end(), results[i].second.begin(), results[i].second.end());
    t.append(cells);
    if (code == exit_ok) code = results[i].first;
  }
  out.write("sweep.csv", t);
  const std::string summary = summary_line("instances", std::to_string(points.size())) +
                              summary_line("command", base.sweep_command);
  out.write("summary.txt", summary);
  ctx.log << summary;
  return code;
}

void write_manifest(const Context& ctx, const Artifacts& out, Command command, int code) {
  std::ostringstream m;
  m << "tool wavestack " << kToolVersion << '\n'
    << "command " << to_string(command) << '\n'
    << "config_hash " << fnv1a_hex(ctx.config_text) << '\n'
    << "instance_hash " << ctx.instance_hash << '\n'
    << "seed " << ctx.config.seed << '\n'
    << "allow_degenerate " << (ctx.config.allow_degenerate ? "true" : "false") << '\n'
    << "dense_oracle " << (ctx.config.dense_oracle ? "true" : "false") << '\n'
    << "exit_code " << code << '\n';
  for (const auto& a : out.names()) m << "artifact " << a << '\n';
  std::ofstream f(out.dir() / "manifest.txt", std::ios::binary);
  f << m.str();
}

}  // namespace

std::string csv_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

Command parse_command(const std::string& name) {
  for (Command c : {Command::validate, Command::thresholds, Command::simulate, Command::follower,
                    Command::leader, Command::verify, Command::sweep}) {
    if (name == to_string(c)) return c;
  }
  throw ConfigError("unknown command '" + name + "'");
}

const char* to_string(Command command) {
  switch (command) {
    case Command::validate: return "validate";
    case Command::thresholds: return "thresholds";
    case Command::simulate: return "simulate";
    case Command::follower: return "follower";
    case Command::leader: return "leader";
    case Command::verify: return "verify";
    case Command::sweep: return "sweep";
  }
  return "?";
}

int run(Command command, const RunOptions& options, std::ostream& log) {
  std::string text;
  {
    std::ifstream in(options.config_path, std::ios::binary);
    if (!in) {
      log << "error: cannot read config " << options.config_path.string() << '\n';
      return exit_config;
    }
    std::ostringstream s;
    s << in.rdbuf();
    text = s.str();
  }
  Context ctx{ExperimentConfig{}, text, "", log, std::max(1, options.jobs)};
  try {
    ctx.config = parse_config(text, options.config_path.parent_path());
  } catch (const Error& e) {
    log << "config error: " << e.what() << '\n';
    return exit_config;
  }
  ExperimentConfig& c = ctx.config;
  if (options.out) c.output_dir = *options.out;
  if (options.seed) c.seed = *options.seed;
  c.allow_degenerate = c.allow_degenerate || options.allow_degenerate;
  c.dense_oracle = c.dense_oracle || options.dense_oracle;
  ctx.instance_hash = fnv1a_hex(text + "\nseed=" + std::to_string(c.seed) + "\ncommand=" +
                                to_string(command));

  std::error_code ec;
  fs::create_directories(c.output_dir, ec);
  if (ec) {
    log << "config error: cannot create " << c.output_dir.string() << ": " << ec.message() << '\n';
    return exit_config;
  }
  Artifacts out(c.output_dir);

  int code = exit_ok;
  try {
    if (command != Command::thresholds && command != Command::sweep && command != Command::validate) {
      validate_config(c);
    }
    switch (command) {
      case Command::validate: code = cmd_validate(ctx, out); break;
      case Command::thresholds: code = cmd_thresholds(ctx, out); break;
      case Command::simulate: code = cmd_simulate(ctx, out); break;
      case Command::follower: code = cmd_follower(ctx, out); break;
      case Command::leader: code = cmd_leader(ctx, out); break;
      case Command::verify: code = cmd_verify(ctx, out); break;
      case Command::sweep: code = cmd_sweep(ctx, out); break;
    }
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    code = exit_config;
  } catch (const DomainError& e) {
    log << "config error: " << e.what() << '\n';
    code = exit_config;
  } catch (const ShapeError& e) {
    log << "config error: " << e.what() << '\n';
    code = exit_config;
  } catch (const IterationError& e) {
    log << "solver error: " << e.what() << " (" << e.history().size() << " residuals recorded)\n";
    code = exit_solver;
  } catch (const Error& e) {
    log << "solver error: " << e.what() << '\n';
    code = exit_solver;
  }
  if (code == exit_verification) log << "verification failed\n";
  write_manifest(ctx, out, command, code);
  return code;
}

}  // namespace wavestack
