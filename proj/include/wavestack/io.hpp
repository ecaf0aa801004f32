#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "wavestack/discretization.hpp"

namespace wavestack {

/// Columnar text: a `# Ny=<ny> Nt=<nt> T=<T>` header, then one row per time
/// level with one value per node, 17 significant digits. Traces are written
/// with one value per row, slices as a single row.
void write_field(std::ostream& out, const Grid& grid, const Field& field);
void write_trace(std::ostream& out, const Grid& grid, const BoundaryTrace& trace);
void write_slice(std::ostream& out, const Grid& grid, const Vector& slice);

/// Readers return the grid from the header. Malformed text or sizes that do
/// not match the header raise ShapeError.
Field read_field(std::istream& in, Grid* grid);
BoundaryTrace read_trace(std::istream& in, Side side, Grid* grid);
Vector read_slice(std::istream& in, Grid* grid);

/// One value per line under a `# n=<count>` header.
void write_samples(std::ostream& out, const Vector& samples);
Vector read_samples(std::istream& in);
Vector read_samples(const std::filesystem::path& path);

/// %.17g, the shortest format that round-trips every double.
std::string format_double(double x);

}  // namespace wavestack
