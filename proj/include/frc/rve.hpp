#pragma once

// Random periodic fibre layouts and the built-in UD RVE mesher: a conforming
// 2D triangulation of the cross-section extruded along z, with optional
// zero-thickness interface elements between matrix and fibres.

#include "frc/mesh.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace frc {

inline constexpr int kMatrixRegion = 0;
inline constexpr int kFibreRegion = 1;

struct Fibre {
  double x = 0.0;
  double y = 0.0;
  double r = 0.0;
};

struct FibreLayout {
  double Lx = 0.0;
  double Ly = 0.0;
  bool periodic_y = true;  ///< false: fibres stay clear of the y = 0 and y = Ly walls
  std::vector<Fibre> fibres;  ///< centres wrapped into [0, Lx) x [0, Ly)

  double volume_fraction() const;
};

struct GenParams {
  double radius = 0.0025;
  double target_vf = 0.6;
  double min_gap = 0.0;  ///< smallest surface-to-surface distance between fibres
  unsigned seed = 1;
  int max_attempts = 200000;
  bool periodic_y = true;

  void validate() const;
  /// Keep-out band around the cell edges: a fibre either crosses an edge
  /// (or passes a corner) by at least this much or clears it by this much.
  double edge_clearance() const;
};

class LayoutError : public std::runtime_error {
 public:
  LayoutError(const std::string& what, double achieved_vf)
      : std::runtime_error(what), achieved_vf(achieved_vf) {}
  double achieved_vf;
};

/// Random sequential insertion with periodic wrap; if the insertion jams the
/// remaining fibres are dropped in and separated by stirring passes.
FibreLayout generate_layout(const GenParams& p, double Lx, double Ly);

/// Smallest centre distance over all pairs and periodic images.
double min_centre_distance(const FibreLayout& layout);

void write_layout_csv(const FibreLayout& layout, const std::filesystem::path& path);

struct Mesh2D {
  std::vector<Eigen::Vector2d> nodes;   ///< numbered in lexicographic (y, x) order
  std::vector<std::array<int, 3>> tris;  ///< counter-clockwise
  std::vector<int> region;
};

class MeshingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Conforming cross-section triangulation. Opposite cell edges carry the same
/// node positions; fibre outlines are polygons with vertices on the circles.
Mesh2D triangulate_section(const FibreLayout& layout, double target_edge);

/// Extrudes `section` into nz layers over [0, Lz]; each prism is split into
/// three tets by the vertex-index rule so that all shared quads conform.
Mesh extrude(const Mesh2D& section, double Lz, int nz);

Mesh mesh_ud_rve(const FibreLayout& layout, double Lz, int nz, double target_edge);

/// Duplicates the nodes on the faces shared by `side_a` and `side_b` tets,
/// moves the `side_b` tets onto the copies and emits one interface element per
/// shared face. The bottom triangle sits on side_a with its normal pointing
/// into side_b. Periodic pairs are recomputed by the caller.
Mesh insert_cohesive(const Mesh& mesh, int side_a = kMatrixRegion, int side_b = kFibreRegion);

}  // namespace frc
