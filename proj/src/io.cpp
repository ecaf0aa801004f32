#include "wavestack/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "wavestack/errors.hpp"

namespace wavestack {

namespace {

void write_header(std::ostream& out, const Grid& g) {
  out << "# Ny=" << g.ny() << " Nt=" << g.nt() << " T=" << format_double(g.final_time()) << '\n';
}

double parse_double(const std::string& token) {
  double x = 0.0;
  const char* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, x);
  if (ec != std::errc() || ptr != end) throw ShapeError("not a number: '" + token + "'");
  return x;
}

long parse_long(const std::string& token) {
  long x = 0;
  const char* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, x);
  if (ec != std::errc() || ptr != end) throw ShapeError("not an integer: '" + token + "'");
  return x;
}

// Value of `key=` in a header line, or throws.
std::string header_value(const std::string& line, const std::string& key) {
  std::istringstream words(line.substr(1));
  std::string w;
  while (words >> w) {
    if (w.rfind(key + "=", 0) == 0) return w.substr(key.size() + 1);
  }
  throw ShapeError("header '" + line + "' lacks " + key);
}

Grid read_grid_header(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.empty() || line[0] != '#') {
    throw ShapeError("missing '# Ny=.. Nt=.. T=..' header");
  }
  const long ny = parse_long(header_value(line, "Ny"));
  const long nt = parse_long(header_value(line, "Nt"));
  const double T = parse_double(header_value(line, "T"));
  if (ny < 1 || nt < 1 || !(T > 0.0)) throw ShapeError("bad grid header '" + line + "'");
  return Grid(static_cast<int>(ny), static_cast<int>(nt), T);
}

std::vector<double> read_values(std::istream& in) {
  std::vector<double> out;
  std::string token;
  while (in >> token) out.push_back(parse_double(token));
  return out;
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_field(std::ostream& out, const Grid& grid, const Field& field) {
  if (field.levels() != grid.levels() || field.nodes() != grid.nodes()) {
    throw ShapeError("write_field: field does not match grid");
  }
  write_header(out, grid);
  for (int n = 0; n < field.levels(); ++n) {
    for (int j = 0; j < field.nodes(); ++j) {
      if (j) out << ' ';
      out << format_double(field(n, j));
    }
    out << '\n';
  }
}

void write_trace(std::ostream& out, const Grid& grid, const BoundaryTrace& trace) {
  if (trace.values.size() != grid.levels()) throw ShapeError("write_trace: trace does not match grid");
  write_header(out, grid);
  for (double v : trace.values) out << format_double(v) << '\n';
}

void write_slice(std::ostream& out, const Grid& grid, const Vector& slice) {
  if (slice.size() != grid.nodes()) throw ShapeError("write_slice: slice does not match grid");
  write_header(out, grid);
  for (Eigen::Index j = 0; j < slice.size(); ++j) {
    if (j) out << ' ';
    out << format_double(slice[j]);
  }
  out << '\n';
}

Field read_field(std::istream& in, Grid* grid) {
  const Grid g = read_grid_header(in);
  const std::vector<double> v = read_values(in);
  if (v.size() != static_cast<size_t>(g.levels()) * g.nodes()) {
    throw ShapeError("read_field: expected " + std::to_string(g.levels() * g.nodes()) +
                     " values, got " + std::to_string(v.size()));
  }
  Field f(g);
  std::copy(v.begin(), v.end(), f.values().data());
  if (grid) *grid = g;
  return f;
}

BoundaryTrace read_trace(std::istream& in, Side side, Grid* grid) {
  const Grid g = read_grid_header(in);
  const std::vector<double> v = read_values(in);
  if (v.size() != static_cast<size_t>(g.levels())) {
    throw ShapeError("read_trace: expected " + std::to_string(g.levels()) + " values, got " +
                     std::to_string(v.size()));
  }
  if (grid) *grid = g;
  return {side, Eigen::Map<const Vector>(v.data(), g.levels())};
}

Vector read_slice(std::istream& in, Grid* grid) {
  const Grid g = read_grid_header(in);
  const std::vector<double> v = read_values(in);
  if (v.size() != static_cast<size_t>(g.nodes())) {
    throw ShapeError("read_slice: expected " + std::to_string(g.nodes()) + " values, got " +
                     std::to_string(v.size()));
  }
  if (grid) *grid = g;
  return Eigen::Map<const Vector>(v.data(), g.nodes());
}

void write_samples(std::ostream& out, const Vector& samples) {
  out << "# n=" << samples.size() << '\n';
  for (double v : samples) out << format_double(v) << '\n';
}

Vector read_samples(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.empty() || line[0] != '#') {
    throw ShapeError("missing '# n=<count>' header");
  }
  const long n = parse_long(header_value(line, "n"));
  const std::vector<double> v = read_values(in);
  if (n < 0 || v.size() != static_cast<size_t>(n)) {
    throw ShapeError("read_samples: header says " + std::to_string(n) + " values, got " +
                     std::to_string(v.size()));
  }
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Vector read_samples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  return read_samples(in);
}

}  // namespace wavestack
