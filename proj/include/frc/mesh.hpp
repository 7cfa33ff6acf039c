#pragma once

// Neutral mesh model: linear tetrahedra with region tags, zero-thickness
// cohesive triangle pairs, named boundary face sets, periodic node pairs and
// optional per-element fibre directions.
//
// Text format ('#' starts a comment, ids are arbitrary but unique):
//   NODES <n>            id x y z
//   TETS <n>             id n1 n2 n3 n4 region
//   COHESIVE <n>         id b1 b2 b3 t1 t2 t3
//   FACESET <name> <n>   n1 n2 n3
//   PERIODIC <n>         master slave axis
//   DIRECTIONS <n>       elem dx dy dz
// Units are mm / N / MPa.

#include "frc/tensor.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace frc {

struct Tet {
  std::array<int, 4> n;
  int region = 0;
};

/// Bottom triangle b0 b1 b2 then top triangle t0 t1 t2, with b_i coincident
/// with t_i in the reference configuration.
struct CohesiveTri {
  std::array<int, 6> n;
};

/// slave = master + period along `axis`.
struct PeriodicPair {
  int master;
  int slave;
  int axis;
  bool operator==(const PeriodicPair&) const = default;
};

using Face = std::array<int, 3>;

struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();
  Vec3 extent() const { return hi - lo; }
  double diagonal() const { return extent().norm(); }
  double volume() const { return extent().prod(); }
};

class MeshError : public std::runtime_error {
 public:
  explicit MeshError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line(line) {}
  int line;
};

struct Mesh {
  std::vector<Vec3> nodes;
  std::vector<Tet> tets;
  std::vector<CohesiveTri> cohesive;
  std::map<std::string, std::vector<Face>> face_sets;
  std::vector<PeriodicPair> periodic;
  std::vector<Vec3> directions;  ///< empty, or one unit vector per tet

  Box bbox() const;
  double volume() const;
  std::vector<int> regions() const;
  /// Throws MeshError on the first violated invariant.
  void validate() const;
};

double tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);
double tet_volume(const Mesh& m, int tet);

/// Shape-function gradients of a linear tet, one column per vertex.
using TetGradients = Eigen::Matrix<double, 3, 4>;
TetGradients tet_gradients(const std::array<Vec3, 4>& x);
std::array<Vec3, 4> tet_coords(const Mesh& m, int tet);

Mesh parse_mesh(std::string_view text);
Mesh read_mesh(const std::filesystem::path& path);
std::string serialise(const Mesh& mesh);
void write_mesh(const Mesh& mesh, const std::filesystem::path& path);

/// Opposite-face node matching along each axis. Nodes at the same position
/// (cohesive duplicates) are told apart by the set of regions around them.
std::vector<PeriodicPair> detect_periodic_pairs(const Mesh& mesh, const Box& box,
                                                double tol);

struct BoundaryFace {
  Face n;
  int tet;
  Vec3 normal;  ///< unit, outward
  double area;
};

/// Faces owned by exactly one tet, excluding cohesive interface faces.
std::vector<BoundaryFace> boundary_faces(const Mesh& mesh);

struct QualityReport {
  double min_dihedral_deg = 180.0;
  double max_dihedral_deg = 0.0;
  int below_threshold = 0;
  double min_volume = 0.0;
};
QualityReport mesh_quality(const Mesh& mesh, double threshold_deg = 5.0);

/// Structured tetrahedral mesh of a box: every hexahedral cell is split into
/// six tets along its main diagonal, which conforms across cells and across
/// opposite faces.
Mesh box_mesh(const Box& box, const std::array<int, 3>& divisions, int region = 0);

/// Concatenates meshes and merges nodes closer than `tol` (tied bond).
/// Periodic pairs are dropped; cohesive and face-set ids are remapped.
Mesh merge_meshes(const std::vector<Mesh>& parts, double tol);

}  // namespace frc
