#pragma once

// Run configuration: a JSON document describing where the mesh comes from,
// the material bindings, the boundary conditions, the load program, solver
// tolerances and the output location. Unknown keys are rejected so that a
// typo never silently falls back to a default.

#include "frc/homogenize.hpp"
#include "frc/rve.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace frc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BoxSource {
  Box box;
  std::array<int, 3> divisions{1, 1, 1};
  int region = 0;
};

/// One generated UD cell: fibres along z, cross-section Lx x Ly.
struct UdSource {
  GenParams gen;
  double Lx = 0.05;
  double Ly = 0.05;
  double Lz = 0.01;
  int layers = 2;
  double edge = 0.0;  ///< target edge length; 0 picks radius / 2
  bool cohesive = true;
};

/// Plies of thickness t stacked along y on an L x L footprint. A 0 degree ply
/// has its fibres along z, a 90 degree ply along x. Plies are bonded by
/// merging the coincident nodes of their shared faces.
struct LaminateSource {
  GenParams gen;
  double L = 0.2;
  double t = 0.1;
  std::vector<int> angles{0, 90};
  double edge = 0.0;
  bool cohesive = true;
};

/// Yarn directions from the potential-flow solve on one region.
struct DirectionSource {
  int region = 0;
  std::string inlet;
  std::string outlet;
};

struct MeshSource {
  enum class Kind { File, Box, Ud, Laminate };
  Kind kind = Kind::File;
  std::filesystem::path file;
  BoxSource box;
  UdSource ud;
  LaminateSource laminate;
  std::vector<DirectionSource> directions;  ///< one potential-flow solve per yarn region
};

struct OutputSpec {
  std::filesystem::path dir = "out";
  bool vtk = true;
  bool mesh = false;  ///< also write the solved mesh in the text format
};

struct RunConfig {
  std::string name = "run";
  unsigned seed = 1;
  int threads = 1;
  MeshSource mesh;
  Materials materials;
  BCKind bc = BCKind::Periodic;
  LoadProgram program;
  SolverOptions solver;
  OutputSpec output;
  nlohmann::json resolved;  ///< the document with overrides applied, paths made absolute
};

/// Relative mesh paths are taken relative to `base_dir`.
RunConfig parse_config(nlohmann::json doc, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

/// Reads a JSON file; syntax errors become ConfigError.
nlohmann::json read_json(const std::filesystem::path& path);

/// Replaces the value at a dotted path ("materials.interface.ft"). Every
/// component but the last must exist.
void set_path(nlohmann::json& doc, const std::string& path, const nlohmann::json& value);

/// "inf" and "-inf" become strings understood by the numeric fields, numbers
/// become numbers, anything else stays a string.
nlohmann::json parse_value(const std::string& text);

}  // namespace frc
