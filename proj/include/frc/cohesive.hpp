#pragma once

// Zero-thickness fibre-matrix interface: linear traction-separation law with
// scalar damage and the 6-node interface element built on it.
//
// E0 = Em / h, delta0 = ft / E0, delta_max = 2 Gf / ft. The traction rises
// linearly to ft at delta0 and decays linearly to zero at delta_max, so the
// area under the curve is Gf. Unloading is secant to the origin.

#include "frc/tensor.hpp"

#include <array>
#include <limits>
#include <vector>

namespace frc {

struct CohesiveParams {
  double ft = 50.0;     ///< strength (MPa); infinity means a tied interface
  double Gf = 0.002;    ///< fracture energy (N/mm)
  double beta = 1.0;    ///< shear weight in the effective jump
  double Em = 3760.0;   ///< matrix Young's modulus (MPa)
  double h = 0.001;     ///< nominal interface thickness (mm)

  double E0() const { return Em / h; }
  double delta0() const { return ft / E0(); }
  double delta_max() const { return 2.0 * Gf / ft; }
  bool tied() const { return ft == std::numeric_limits<double>::infinity(); }
  /// Throws std::invalid_argument, including for snap-back (2 Gf E0 <= ft^2).
  void validate() const;
};

struct CohesiveState {
  double kappa = 0.0;  ///< largest effective jump reached (mm)
};

/// Local jump ordering is (normal, shear 1, shear 2). Interpenetration does not
/// count towards the effective jump.
double effective_jump(double delta_n, double delta_s1, double delta_s2, double beta);
double damage(double kappa, const CohesiveParams& p);

/// Contact and loading status of one point. A fixed mode makes the traction
/// a smooth function of the jump, which an outer active-set iteration needs:
/// the law has kinks at closure and at the loading/unloading switch.
struct CohesiveMode {
  bool fixed = false;    ///< false: status follows from the jump
  bool closed = false;   ///< normal penalty E0, normal jump ignored in damage
  bool loading = false;  ///< kappa follows the effective jump
};

struct CohesivePointResponse {
  Vec3 t = Vec3::Zero();  ///< local traction
  Mat3 D = Mat3::Zero();  ///< d t / d jump
  CohesiveState state;
  double omega = 0.0;
  CohesiveMode mode;            ///< status used (always marked fixed)
  bool mode_consistent = true;  ///< status agrees with the jump
};

/// `consistent` adds the softening term on the loading envelope; otherwise D
/// is the secant (1 - omega) E0 I (normal penalty E0 under closure).
CohesivePointResponse traction(const Vec3& jump, const CohesiveState& state,
                               const CohesiveParams& p, bool consistent = true,
                               CohesiveMode mode = {});

using Mat18 = Eigen::Matrix<double, 18, 18>;
using Vec18 = Eigen::Matrix<double, 18, 1>;

/// Local frame rows (n, s1, s2) of the bottom triangle b0 b1 b2. The normal
/// follows the b0 -> b1 -> b2 winding and points towards the top face.
Mat3 cohesive_frame(const std::array<Vec3, 3>& bottom);

struct CohesiveElementResponse {
  Mat18 K;
  Vec18 f_int;
  std::array<CohesiveState, 3> states;
  std::array<double, 3> omega{};
  std::array<CohesiveMode, 3> modes{};
  bool modes_consistent = true;
};

/// Nodes b0 b1 b2 t0 t1 t2 in the reference configuration, displacements in
/// the same node order (x, y, z per node). Three-point Gauss rule; the frame
/// is taken from the reference geometry (small strain).
CohesiveElementResponse cohesive_element(const std::array<Vec3, 6>& x, const Vec18& u,
                                         const std::array<CohesiveState, 3>& states,
                                         const CohesiveParams& p, bool consistent = true,
                                         const std::array<CohesiveMode, 3>& modes = {});

}  // namespace frc
