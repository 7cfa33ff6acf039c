#pragma once

// Transversely isotropic elasticity for yarns and fibres (local axis 3 is the
// fibre axis) and the potential-flow solver that supplies per-element fibre
// directions for woven yarn paths.

#include "frc/mesh.hpp"
#include "frc/tensor.hpp"

#include <functional>
#include <vector>

namespace frc {

struct TransIsoParams {
  double Ep = 0.0;     ///< transverse Young's modulus (MPa)
  double nu_p = 0.0;   ///< transverse Poisson's ratio
  double Ez = 0.0;     ///< axial Young's modulus (MPa)
  double nu_pz = 0.0;  ///< axial Poisson's ratio (transverse contraction under axial load)
  double Gzp = 0.0;    ///< axial shear modulus (MPa)

  double Gp() const { return Ep / (2.0 * (1.0 + nu_p)); }
  /// Throws std::invalid_argument for non-positive moduli or an indefinite
  /// stiffness (the message carries the offending eigenvalue).
  void validate() const;
};

Mat6 local_compliance(const TransIsoParams& p);
Mat6 local_stiffness(const TransIsoParams& p);
TransIsoParams isotropic_from_fibre(double Ef, double nu_f);
/// Local stiffness rotated so that the fibre axis follows `dir`.
Mat6 element_stiffness_global(const TransIsoParams& p, const Vec3& dir);

struct FlowResult {
  std::vector<int> tets;           ///< region tets, in mesh order
  std::vector<Vec3> directions;    ///< unit grad(phi), one per entry of `tets`
  std::vector<int> fallback;       ///< tets whose direction came from neighbours
  std::vector<double> phi;         ///< nodal potential, NaN off the region
  double inlet_flux = 0.0;
  double outlet_flux = 0.0;
};

/// Laplace problem on the tets of `region` with phi = 0 on `inlet`, phi = 1 on
/// `outlet` and zero flux elsewhere. Throws std::invalid_argument for empty or
/// overlapping boundary sets and for a region that is not face-connected.
FlowResult potential_flow_directions(const Mesh& mesh, int region, const std::vector<Face>& inlet,
                                     const std::vector<Face>& outlet);

/// Consistent (reaction-based) flux of grad(phi) across the cut separating the
/// region nodes with upstream(node) == true from the rest.
double section_flux(const Mesh& mesh, const FlowResult& flow,
                    const std::function<bool(int)>& upstream);

}  // namespace frc
