#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "buckle/grid.hpp"
#include "buckle/optimizer.hpp"

namespace buckle {

// Text formats. Reals are written in the shortest form that parses back to
// the same double, so a dump followed by a load is bit-exact.
//
//   BUCKLE-FIELD v1 dim=2 nodes=129,129 extent=-2:2,-2:2
//   <one value per line, axis 0 fastest>
//
//   BUCKLE-MASK v1 dim=2 nodes=129,129 extent=-2:2,-2:2
//   <one row of 0/1 characters per cell row, axis 0 along the row>
//
//   BUCKLE-CKPT v1
//   config-begin / <config text> / config-end
//   state key=value ...
//   schedule <count> <values...>
//   history <count>, then one "iter total rayleigh measure penalty" line each
//   <field dump>

void write_field(std::ostream& os, const ScalarField& v);
/// Throws FormatError on a malformed header or body; with `expected_dim`
/// set, a dimension mismatch names both values.
ScalarField read_field(std::istream& is, std::optional<int> expected_dim = {});

void write_mask(std::ostream& os, const DomainMask& mask);
DomainMask read_mask(std::istream& is);

struct Checkpoint {
  std::string config_text;
  OptimizerState state;
};

void write_checkpoint(std::ostream& os, const OptimizerState& state, const std::string& config_text);
Checkpoint read_checkpoint(std::istream& is);

/// Binary PGM (P5) raster of |v| (2D only), scaled to 0..255; row 0 is the
/// top (largest y).
void write_pgm(std::ostream& os, const ScalarField& v);
void write_pgm(std::ostream& os, const DomainMask& mask);

/// File wrappers; throw FormatError when a file cannot be opened.
void save_field(const std::filesystem::path& path, const ScalarField& v);
ScalarField load_field(const std::filesystem::path& path, std::optional<int> expected_dim = {});
void save_mask(const std::filesystem::path& path, const DomainMask& mask);
DomainMask load_mask(const std::filesystem::path& path);

/// Shortest round-trip decimal form.
std::string format_real(double x);
/// Parses a full-string real; throws FormatError naming `what` otherwise.
double parse_real(const std::string& s, const std::string& what);

}  // namespace buckle
