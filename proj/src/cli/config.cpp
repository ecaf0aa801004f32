#include "wavestack/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "wavestack/errors.hpp"
#include "wavestack/io.hpp"

namespace wavestack {

namespace {

const double kPi = std::acos(-1.0);

double to_double(const std::string& key, const std::string& raw) {
  const std::string s = boost::algorithm::trim_copy(raw);
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(x)) {
    throw ConfigError(key + ": '" + raw + "' is not a finite number");
  }
  return x;
}

long long to_integer(const std::string& key, const std::string& raw) {
  const std::string s = boost::algorithm::trim_copy(raw);
  long long x = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError(key + ": '" + raw + "' is not an integer");
  }
  return x;
}

int to_int(const std::string& key, const std::string& raw) {
  const long long x = to_integer(key, raw);
  if (x < 0 || x > 100000000) throw ConfigError(key + ": " + raw + " out of range");
  return static_cast<int>(x);
}

bool to_bool(const std::string& key, const std::string& raw) {
  const std::string s = boost::algorithm::to_lower_copy(boost::algorithm::trim_copy(raw));
  if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
  if (s == "false" || s == "no" || s == "0" || s == "off") return false;
  throw ConfigError(key + ": '" + raw + "' is not a boolean");
}

std::vector<std::string> split_list(const std::string& raw) {
  std::vector<std::string> parts;
  boost::algorithm::split(parts, raw, boost::algorithm::is_any_of(","));
  for (auto& p : parts) boost::algorithm::trim(p);
  if (parts.size() == 1 && parts[0].empty()) parts.clear();
  return parts;
}

std::vector<double> to_double_list(const std::string& key, const std::string& raw) {
  std::vector<double> out;
  for (const auto& p : split_list(raw)) out.push_back(to_double(key, p));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

Side to_side(const std::string& key, const std::string& raw) {
  const std::string s = boost::algorithm::to_lower_copy(boost::algorithm::trim_copy(raw));
  if (s == "gamma0" || s == "0") return Side::gamma0;
  if (s == "gamma_alpha" || s == "alpha") return Side::gamma_alpha;
  throw ConfigError(key + ": '" + raw + "' is not a side (gamma0 or gamma_alpha)");
}

using Setter = void (*)(ExperimentConfig&, const std::string&, const std::string&,
                        const std::filesystem::path&);

// section -> key -> setter. Keys not listed here are rejected.
const std::map<std::string, std::map<std::string, Setter>>& schema() {
  static const std::map<std::string, std::map<std::string, Setter>> table = {
      {"profile",
       {
           {"kind",
            [](ExperimentConfig& c, const std::string& k, const std::string& v, const auto&) {
              const std::string s = boost::algorithm::to_lower_copy(boost::algorithm::trim_copy(v));
              if (s != "affine" && s != "arctan_drift" && s != "constant") {
                throw ConfigError(k + ": unknown profile '" + v + "' (affine, arctan_drift, constant)");
              }
              c.profile_kind = s;
            }},
           {"k", [](ExperimentConfig& c, const std::string& k, const std::string& v,
                    const auto&) { c.profile_parameter = to_double(k, v); }},
           {"c", [](ExperimentConfig& c, const std::string& k, const std::string& v,
                    const auto&) { c.profile_parameter = to_double(k, v); }},
           {"m", [](ExperimentConfig& c, const std::string& k, const std::string& v,
                    const auto&) { c.bounds.lower = to_double(k, v); }},
           {"M", [](ExperimentConfig& c, const std::string& k, const std::string& v,
                    const auto&) { c.bounds.upper = to_double(k, v); }},
       }},
      {"grid",
       {
           {"Ny", [](ExperimentConfig& c, const std::string& k, const std::string& v,
                     const auto&) { c.ny = to_int(k, v); }},
           {"Nt", [](ExperimentConfig& c, const std::string& k, const std::string& v,
                     const auto&) { c.nt = to_int(k, v); }},
           {"T", [](ExperimentConfig& c, const std::string& k, const std::string& v,
                    const auto&) { c.T = to_double(k, v); }},
           {"cfl", [](ExperimentConfig& c, const std::string& k, const std::string& v,
                      const auto&) { c.cfl = to_double(k, v); }},
       }},
      {"problem",
       {
           {"side", [](ExperimentConfig& c, const std::string& k, const std::string& v,
                       const auto&) { c.side = to_side(k, v); }},
           {"sigma", [](ExperimentConfig& c, const std::string& k, const std::string& v,
                        const auto&) { c.sigma = to_double(k, v); }},
           {"mu", [](ExperimentConfig& c, const std::string& k, const std::string& v,
                     const auto&) { c.mu = to_double(k, v); }},
           {"epsilon", [](ExperimentConfig& c, const std::string& k, const std::string& v,
                          const auto&) { c.epsilon = to_double(k, v); }},
       }},
      {"targets",
       {
           {"domain",
            [](ExperimentConfig& c, const std::string& k, const std::string& v, const auto&) {
              const std::string s = boost::algorithm::trim_copy(v);
              if (s == "cylinder") c.domain = DataDomain::cylinder;
              else if (s == "physical") c.domain = DataDomain::physical;
              else throw ConfigError(k + ": '" + v + "' is not cylinder or physical");
            }},
           {"z0", [](ExperimentConfig& c, const std::string&, const std::string& v,
                     const std::filesystem::path& b) { c.z0 = parse_expression(v, b); }},
           {"z1", [](ExperimentConfig& c, const std::string&, const std::string& v,
                     const std::filesystem::path& b) { c.z1 = parse_expression(v, b); }},
           {"v0", [](ExperimentConfig& c, const std::string&, const std::string& v,
                     const std::filesystem::path& b) { c.v0 = parse_expression(v, b); }},
           {"v1", [](ExperimentConfig& c, const std::string&, const std::string& v,
                     const std::filesystem::path& b) { c.v1 = parse_expression(v, b); }},
           {"tracking", [](ExperimentConfig& c, const std::string&, const std::string& v,
                           const std::filesystem::path& b) { c.tracking = parse_expression(v, b); }},
           {"gamma0", [](ExperimentConfig& c, const std::string&, const std::string& v,
                         const std::filesystem::path& b) { c.boundary0 = parse_expression(v, b); }},
           {"gamma_alpha",
            [](ExperimentConfig& c, const std::string&, const std::string& v,
               const std::filesystem::path& b) { c.boundary_alpha = parse_expression(v, b); }},
       }},
      {"solver",
       {
           {"follower_tolerance", [](ExperimentConfig& c, const std::string& k, const std::string& v,
                                     const auto&) { c.follower.tolerance = to_double(k, v); }},
           {"follower_max_iterations",
            [](ExperimentConfig& c, const std::string& k, const std::string& v, const auto&) {
              c.follower.max_iterations = to_int(k, v);
            }},
           {"leader_tolerance", [](ExperimentConfig& c, const std::string& k, const std::string& v,
                                   const auto&) { c.leader.tolerance = to_double(k, v); }},
           {"leader_max_iterations",
            [](ExperimentConfig& c, const std::string& k, const std::string& v, const auto&) {
              c.leader.max_iterations = to_int(k, v);
            }},
           {"fixed_point_tolerance",
            [](ExperimentConfig& c, const std::string& k, const std::string& v, const auto&) {
              c.leader.fixed_point_tolerance = to_double(k, v);
              c.fixed_point.tolerance = to_double(k, v);
            }},
           {"fixed_point_max_iterations",
            [](ExperimentConfig& c, const std::string& k, const std::string& v, const auto&) {
              c.fixed_point.max_iterations = to_int(k, v);
            }},
       }},
      {"flags",
       {
           {"allow_degenerate", [](ExperimentConfig& c, const std::string& k, const std::string& v,
                                   const auto&) { c.allow_degenerate = to_bool(k, v); }},
           {"dense_oracle", [](ExperimentConfig& c, const std::string& k, const std::string& v,
                               const auto&) { c.dense_oracle = to_bool(k, v); }},
           {"threshold_warning",
            [](ExperimentConfig& c, const std::string& k, const std::string& v, const auto&) {
              const std::string s = boost::algorithm::trim_copy(v);
              if (s == "warn") c.threshold_policy = ThresholdPolicy::warn;
              else if (s == "error") c.threshold_policy = ThresholdPolicy::error;
              else if (s == "ignore") c.threshold_policy = ThresholdPolicy::ignore;
              else throw ConfigError(k + ": '" + v + "' is not warn, error or ignore");
            }},
       }},
      {"thresholds",
       {
           {"m", [](ExperimentConfig& c, const std::string& k, const std::string& v,
                    const auto&) { c.threshold_m = to_double_list(k, v); }},
           {"M", [](ExperimentConfig& c, const std::string& k, const std::string& v,
                    const auto&) { c.threshold_M = to_double_list(k, v); }},
       }},
      {"output",
       {
           {"directory", [](ExperimentConfig& c, const std::string&, const std::string& v,
                            const auto&) { c.output_dir = boost::algorithm::trim_copy(v); }},
       }},
      {"run",
       {
           {"seed",
            [](ExperimentConfig& c, const std::string& k, const std::string& v, const auto&) {
              const std::string s = boost::algorithm::trim_copy(v);
              std::uint64_t x = 0;
              const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
              if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
                throw ConfigError(k + ": '" + v + "' is not an unsigned integer");
              }
              c.seed = x;
            }},
       }},
  };
  return table;
}

const std::set<std::string> kSweepable = {"Ny", "Nt", "T", "cfl", "k", "c",
                                          "sigma", "mu", "epsilon", "side"};

}  // namespace

double Expression::operator()(double s, double length) const {
  switch (kind) {
    case Kind::zero:
      return 0.0;
    case Kind::sines: {
      double v = 0.0;
      for (const auto& [a, n] : sines) v += a * std::sin(n * kPi * s / length);
      return v;
    }
    case Kind::poly: {
      double v = 0.0;
      for (auto it = poly.rbegin(); it != poly.rend(); ++it) v = v * s + *it;
      return v;
    }
    case Kind::samples:
      return sample_linear(samples, length, s);
  }
  return 0.0;
}

Vector Expression::sample(const Grid& grid, double length) const {
  Vector v(grid.nodes());
  for (int j = 0; j < grid.nodes(); ++j) v[j] = (*this)(length * grid.y(j), length);
  return v;
}

Expression parse_expression(const std::string& raw, const std::filesystem::path& base_dir) {
  Expression e;
  const std::string text = boost::algorithm::trim_copy(raw);
  e.text = text;
  if (text == "zero" || text == "0") return e;
  if (text.rfind("file:", 0) == 0) {
    std::filesystem::path p = boost::algorithm::trim_copy(text.substr(5));
    if (p.is_relative()) p = base_dir / p;
    e.kind = Expression::Kind::samples;
    try {
      e.samples = read_samples(p);
    } catch (const ShapeError& err) {
      throw ConfigError(p.string() + ": " + err.what());
    }
    if (e.samples.size() < 2) throw ConfigError(p.string() + ": need at least two samples");
    return e;
  }
  static const std::regex poly_re(R"(poly\((.*)\))");
  std::smatch m;
  if (std::regex_match(text, m, poly_re)) {
    e.kind = Expression::Kind::poly;
    e.poly = to_double_list("poly", m[1].str());
    return e;
  }
  // Sum of [a*]sin(n) terms, e.g. "0.1*sin(1) - 0.02*sin(3)".
  static const std::regex term_re(
      R"(\s*([+-])?\s*(?:([0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)\s*\*\s*)?sin\(\s*([0-9]+)\s*\)\s*)");
  std::string rest = text;
  bool first = true;
  while (!rest.empty()) {
    if (!std::regex_search(rest, m, term_re, std::regex_constants::match_continuous) ||
        (!first && !m[1].matched)) {
      throw ConfigError("target '" + text +
                        "' is not zero, file:<path>, poly(c0,...) or a sum of a*sin(n) terms");
    }
    double a = m[2].matched ? to_double("amplitude", m[2].str()) : 1.0;
    if (m[1].matched && m[1].str() == "-") a = -a;
    const int n = to_int("mode", m[3].str());
    if (n < 1) throw ConfigError("target '" + text + "': sine modes start at 1");
    e.sines.emplace_back(a, n);
    rest = m.suffix();
    first = false;
  }
  if (e.sines.empty()) throw ConfigError("empty target");
  e.kind = Expression::Kind::sines;
  return e;
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ExperimentConfig config;
  const auto& table = schema();
  for (const auto& [section, body] : tree) {
    if (section == "sweep") {
      for (const auto& [key, node] : body) {
        const std::string value = node.get_value<std::string>();
        if (key == "command") {
          const std::string c = boost::algorithm::trim_copy(value);
          if (c != "leader" && c != "follower" && c != "simulate") {
            throw ConfigError("sweep.command: '" + value + "' is not leader, follower or simulate");
          }
          config.sweep_command = c;
        } else if (kSweepable.count(key)) {
          auto values = split_list(value);
          if (values.empty()) throw ConfigError("sweep." + key + ": empty list");
          config.sweep_axes.emplace_back(key, std::move(values));
        } else {
          throw ConfigError("unknown key 'sweep." + key + "'");
        }
      }
      continue;
    }
    const auto sec = table.find(section);
    if (sec == table.end()) {
      if (body.empty()) throw ConfigError("key '" + section + "' outside any section");
      throw ConfigError("unknown section '" + section + "'");
    }
    for (const auto& [key, node] : body) {
      const auto it = sec->second.find(key);
      if (it == sec->second.end()) throw ConfigError("unknown key '" + section + "." + key + "'");
      it->second(config, section + "." + key, node.get_value<std::string>(), base_dir);
    }
  }
  // Sweep values are checked by applying them to a scratch copy.
  for (const auto& [key, values] : config.sweep_axes) {
    for (const auto& v : values) {
      ExperimentConfig scratch = config;
      apply_override(scratch, key, v);
    }
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path());
}

void apply_override(ExperimentConfig& c, const std::string& key, const std::string& value) {
  const std::string k = "sweep." + key;
  if (key == "Ny") c.ny = to_int(k, value);
  else if (key == "Nt") c.nt = to_int(k, value);
  else if (key == "T") c.T = to_double(k, value);
  else if (key == "cfl") c.cfl = to_double(k, value);
  else if (key == "k" || key == "c") c.profile_parameter = to_double(k, value);
  else if (key == "sigma") c.sigma = to_double(k, value);
  else if (key == "mu") c.mu = to_double(k, value);
  else if (key == "epsilon") c.epsilon = to_double(k, value);
  else if (key == "side") c.side = to_side(k, value);
  else throw ConfigError("'" + key + "' cannot be swept");
}

BoundaryProfile ExperimentConfig::profile() const {
  if (profile_kind == "constant") return BoundaryProfile::constant();
  if (profile_kind == "arctan_drift") return BoundaryProfile::arctan_drift(profile_parameter, bounds);
  return BoundaryProfile::affine(profile_parameter, bounds);
}

Grid ExperimentConfig::grid() const { return build_grid(ny, nt, T, cfl); }

FollowerProblem ExperimentConfig::follower_problem() const {
  FollowerProblem p;
  p.grid = grid();
  p.profile = profile();
  p.actuated_side = side;
  p.leader = BoundaryTrace::zero(side, p.grid);
  p.penalty = penalty();
  if (domain == DataDomain::physical) {
    PhysicalData data;
    data.u0 = z0.sample(p.grid);
    data.u1 = z1.sample(p.grid);
    const double alpha_T = p.profile.eval(T).alpha;
    if (tracking.kind != Expression::Kind::zero) {
      const int samples = 4 * p.grid.nodes();
      data.u2.resize(p.grid.levels(), samples);
      for (int i = 0; i < samples; ++i) {
        const double x = alpha_T * i / (samples - 1);
        data.u2.col(i).setConstant(tracking(x, alpha_T));
      }
    }
    const TransformedData t = transform_data(data, p.profile, p.grid);
    p.z0 = t.z0;
    p.z1 = t.z1;
    if (tracking.kind != Expression::Kind::zero) p.tracking_target = t.z2;
  } else {
    if (z0.kind != Expression::Kind::zero) p.z0 = z0.sample(p.grid);
    if (z1.kind != Expression::Kind::zero) p.z1 = z1.sample(p.grid);
    if (tracking.kind != Expression::Kind::zero) {
      p.tracking_target = Field(p.grid);
      const Vector s = tracking.sample(p.grid);
      for (int n = 0; n < p.grid.levels(); ++n) p.tracking_target.level(n) = s.transpose();
    }
  }
  return p;
}

LeaderProblem ExperimentConfig::leader_problem() const {
  LeaderProblem p;
  p.follower = follower_problem();
  p.epsilon = epsilon;
  const Grid& g = p.follower.grid;
  if (domain == DataDomain::physical) {
    // v0 is u^T on (0, alpha(T)), pulled back by y = x / alpha(T).
    const double alpha_T = p.follower.profile.eval(T).alpha;
    if (v0.kind != Expression::Kind::zero) p.v0 = v0.sample(g, alpha_T);
  } else if (v0.kind != Expression::Kind::zero) {
    p.v0 = v0.sample(g);
  }
  if (v1.kind != Expression::Kind::zero) p.v1 = v1.sample(g);
  for (Vector* v : {&p.v0, &p.v1}) {
    if (v->size()) (*v)[0] = (*v)[g.ny()] = 0.0;
  }
  return p;
}

void validate_config(const ExperimentConfig& c) {
  const Grid g = c.grid();
  const BoundaryProfile profile = c.profile();
  if (profile.degenerate()) {
    if (!c.allow_degenerate) {
      throw ConfigError("profile 'constant' violates the speed hypothesis; pass --allow-degenerate");
    }
  } else {
    if (!(c.profile_parameter > 0.0)) throw ConfigError("profile parameter must be positive");
    const HypothesisReport r = validate_hypotheses(profile, g.final_time());
    if (!r.all_ok() && !c.allow_degenerate) {
      std::ostringstream msg;
      msg << "profile fails the hypotheses on [0, " << c.T << "]: h1=" << r.h1_ok
          << " h2=" << r.h2_ok << " h3=" << r.h3_ok << " (observed speed in ["
          << r.observed_min_speed << ", " << r.observed_max_speed << "])";
      throw ConfigError(msg.str());
    }
  }
  if (!(c.sigma > 0.0) || !(c.mu > 0.0)) throw ConfigError("penalties sigma and mu must be positive");
  if (!(c.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(c.follower.tolerance > 0.0) || !(c.leader.tolerance > 0.0) ||
      !(c.leader.fixed_point_tolerance > 0.0)) {
    throw ConfigError("solver tolerances must be positive");
  }
  if (c.follower.max_iterations < 1 || c.leader.max_iterations < 1 ||
      c.fixed_point.max_iterations < 1) {
    throw ConfigError("iteration limits must be at least 1");
  }
  // Sampled targets must resolve on this grid.
  c.leader_problem();
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace wavestack
