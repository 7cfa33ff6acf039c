#include "frc/vtk.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace frc {

namespace {

void put(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", std::abs(v) < 1e-300 ? 0.0 : v);
  out += buf;
}

double von_mises(const Stress6& s) {
  const double d1 = s[0] - s[1], d2 = s[1] - s[2], d3 = s[2] - s[0];
  return std::sqrt(0.5 * (d1 * d1 + d2 * d2 + d3 * d3) + 3.0 * (s[3] * s[3] + s[4] * s[4] + s[5] * s[5]));
}

}  // namespace

std::string vtk_unstructured(const Mesh& mesh, const FieldSnapshot& f, const std::string& title) {
  const std::size_t nn = mesh.nodes.size(), nt = mesh.tets.size(), nc = mesh.cohesive.size();
  if (f.displacement.size() != static_cast<Eigen::Index>(3 * nn) || f.plastic_strain.size() != nt ||
      f.stress.size() != nt || f.damage.size() != nc) {
    throw std::invalid_argument("vtk: field sizes do not match the mesh");
  }
  std::string out;
  out.reserve(200 * (nn + nt + nc));
  out += "# vtk DataFile Version 3.0\n" + title + "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out += "POINTS " + std::to_string(nn) + " double\n";
  for (const auto& x : mesh.nodes) {
    put(out, x(0)), out += ' ', put(out, x(1)), out += ' ', put(out, x(2)), out += '\n';
  }
  const std::size_t ncell = nt + nc;
  out += "CELLS " + std::to_string(ncell) + ' ' + std::to_string(5 * nt + 7 * nc) + '\n';
  for (const auto& t : mesh.tets) {
    out += '4';
    for (int v : t.n) out += ' ' + std::to_string(v);
    out += '\n';
  }
  for (const auto& c : mesh.cohesive) {
    out += '6';
    for (int v : c.n) out += ' ' + std::to_string(v);
    out += '\n';
  }
  out += "CELL_TYPES " + std::to_string(ncell) + '\n';
  for (std::size_t i = 0; i < nt; ++i) out += std::to_string(kVtkTetra) + '\n';
  for (std::size_t i = 0; i < nc; ++i) out += std::to_string(kVtkWedge) + '\n';

  out += "POINT_DATA " + std::to_string(nn) + "\nVECTORS displacement double\n";
  for (std::size_t i = 0; i < nn; ++i) {
    put(out, f.displacement(3 * i)), out += ' ';
    put(out, f.displacement(3 * i + 1)), out += ' ';
    put(out, f.displacement(3 * i + 2)), out += '\n';
  }

  out += "CELL_DATA " + std::to_string(ncell) + '\n';
  auto scalars = [&](const char* name, const char* type, auto&& value) {
    out += std::string("SCALARS ") + name + ' ' + type + " 1\nLOOKUP_TABLE default\n";
    for (std::size_t i = 0; i < ncell; ++i) put(out, value(i)), out += '\n';
  };
  scalars("region", "int", [&](std::size_t i) { return i < nt ? mesh.tets[i].region : -1.0; });
  scalars("interface", "int", [&](std::size_t i) { return i < nt ? 0.0 : 1.0; });
  scalars("equivalent_plastic_strain", "double",
          [&](std::size_t i) { return i < nt ? f.plastic_strain[i] : 0.0; });
  scalars("von_mises", "double", [&](std::size_t i) { return i < nt ? von_mises(f.stress[i]) : 0.0; });
  scalars("damage", "double", [&](std::size_t i) { return i < nt ? 0.0 : f.damage[i - nt]; });
  out += "TENSORS stress double\n";
  static constexpr int kFull[3][3] = {{0, 3, 5}, {3, 1, 4}, {5, 4, 2}};
  for (std::size_t i = 0; i < ncell; ++i) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        put(out, i < nt ? f.stress[i][kFull[r][c]] : 0.0);
        out += c < 2 ? ' ' : '\n';
      }
    }
  }
  return out;
}

void write_vtk(const Mesh& mesh, const FieldSnapshot& fields, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << vtk_unstructured(mesh, fields);
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace frc
