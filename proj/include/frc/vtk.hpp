#pragma once

// Legacy-VTK (ASCII, UNSTRUCTURED_GRID) field output. Tets become VTK_TETRA
// cells and interface elements VTK_WEDGE cells, so one file carries both.

#include "frc/homogenize.hpp"
#include "frc/mesh.hpp"

#include <filesystem>
#include <string>

namespace frc {

inline constexpr int kVtkTetra = 10;
inline constexpr int kVtkWedge = 13;

/// Point data: displacement. Cell data: region (-1 on interfaces), cell kind,
/// equivalent plastic strain, von Mises stress, stress tensor and interface
/// damage (zero where not applicable).
std::string vtk_unstructured(const Mesh& mesh, const FieldSnapshot& fields,
                             const std::string& title = "frc fields");

void write_vtk(const Mesh& mesh, const FieldSnapshot& fields, const std::filesystem::path& path);

}  // namespace frc
