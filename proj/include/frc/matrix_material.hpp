#pragma once

// Pressure-dependent elasto-plasticity for the polymer matrix.
//
// Yield surface   f = 6 J2 + 2 I1 (sc - st) - 2 sc st
// Flow potential  g = 6 J2 + 2 a I1 (sc - st) - 2 sc st,  a = (1 - 2 nu_p) / (1 + nu_p)
// Hardening       st = st0 + Ht (1 - exp(-nt alpha0)),  sc likewise with alpha1
//
// alpha0 / alpha1 accumulate the equivalent plastic strain increment
// sqrt(d_eps_p : d_eps_p / (1 + 2 nu_p^2)); alpha0 when I1 >= 0 at the
// converged stress, alpha1 otherwise.

#include "frc/tensor.hpp"

#include <array>
#include <stdexcept>
#include <vector>

namespace frc {

struct MatrixParams {
  double E = 3760.0;        ///< Young's modulus [MPa]
  double nu = 0.39;         ///< Poisson's ratio
  double nu_plas = 0.3;     ///< plastic Poisson's ratio
  double sigma_t0 = 29.0;   ///< initial tensile yield strength [MPa]
  double sigma_c0 = 67.0;   ///< initial compressive yield strength [MPa]
  double Ht = 67.0;         ///< tensile hardening amplitude [MPa]
  double Hc = 58.0;         ///< compressive hardening amplitude [MPa]
  double nt = 170.0;        ///< tensile hardening rate
  double nc = 150.0;        ///< compressive hardening rate
  bool plastic = true;      ///< false: linear-elastic matrix

  /// Epoxy resin calibration set.
  static MatrixParams epoxy() { return {}; }

  /// Throws std::invalid_argument on inadmissible values.
  void validate() const;
  /// Volumetric flow factor of the plastic potential.
  double flow_alpha() const { return (1.0 - 2.0 * nu_plas) / (1.0 + nu_plas); }
  double lame_lambda() const { return E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)); }
  double lame_mu() const { return E / (2.0 * (1.0 + nu)); }
};

struct PlasticState {
  Strain6 eps_p;
  double alpha0 = 0.0;
  double alpha1 = 0.0;

  /// Accumulated equivalent plastic strain.
  double equivalent_plastic_strain() const { return alpha0 + alpha1; }
};

/// Which internal variable a plastic increment hardens. Neutral shares it
/// between alpha0 and alpha1 so that the converged stress sits on I1 = 0.
enum class HardeningBranch { Tension, Compression, Neutral };

/// Auto applies the sign rule directly. The fixed choices skip the sign check
/// so that an outer iteration sees a smooth map; the caller then inspects
/// `sign_consistent` and switches branch (active-set style).
enum class BranchChoice { Auto, Tension, Compression, Neutral };

struct MaterialResponse {
  Stress6 sigma;
  Mat6 tangent;
  PlasticState state;
  bool plastic = false;
  HardeningBranch branch = HardeningBranch::Tension;
  bool sign_consistent = true;
  int iterations = 0;
};

/// Local Newton failure; the caller is expected to cut the strain increment.
class ReturnMapError : public std::runtime_error {
 public:
  ReturnMapError(const std::string& what, double residual)
      : std::runtime_error(what), residual_norm(residual) {}
  double residual_norm;
};

double yield_value(const Stress6& sigma, double sigma_t, double sigma_c);
double potential_value(const Stress6& sigma, double sigma_t, double sigma_c,
                       double nu_plas);

struct Strengths {
  double tension;
  double compression;
};
Strengths hardened_strengths(double alpha0, double alpha1, const MatrixParams& p);

/// Isotropic stiffness; throws for nu outside [0, 0.5) or E <= 0.
Mat6 elastic_stiffness(double E, double nu);
inline Mat6 elastic_stiffness(const MatrixParams& p) {
  return elastic_stiffness(p.E, p.nu);
}

/// Strain-driven stress update with algorithmically consistent tangent.
/// `tol` is relative: the elastic predictor accepts f <= tol * st0^2 and the
/// converged state satisfies |f| <= tol * 2 sc0 st0. With Auto, the tension
/// update wins whenever its converged I1 >= 0, then compression, then neutral.
MaterialResponse return_map(const Strain6& eps_total, const PlasticState& state,
                            const MatrixParams& p, double tol = 1e-8,
                            BranchChoice choice = BranchChoice::Auto);

/// Max |T - T_fd| / max|T_fd| between the returned tangent and central
/// differences of the stress (perturbation `h` on each strain slot).
double consistent_tangent_check(const Strain6& probe, const PlasticState& state,
                                const MatrixParams& p, double h = 1e-7,
                                double tol = 1e-8);

/// Mixed-control material point: the strain slots flagged in `prescribed` are
/// driven, the remaining stress slots are held at zero.
class MaterialPointDriver {
 public:
  MaterialPointDriver(MatrixParams p, std::array<bool, 6> prescribed,
                      double tol = 1e-8);

  /// Uniaxial stress along 11.
  static MaterialPointDriver uniaxial(const MatrixParams& p) {
    return MaterialPointDriver(p, {true, false, false, false, false, false});
  }
  /// Simple shear stress state in 12 with all other stresses free.
  static MaterialPointDriver shear12(const MatrixParams& p) {
    return MaterialPointDriver(p, {false, false, false, true, false, false});
  }

  /// Advance to a new value of the prescribed strain slots (others ignored).
  const MaterialResponse& step(const Strain6& target);

  const Strain6& strain() const { return eps_; }
  const MaterialResponse& last() const { return last_; }
  const PlasticState& state() const { return state_; }

 private:
  MaterialResponse solve(BranchChoice choice);

  MatrixParams p_;
  std::array<bool, 6> prescribed_;
  double tol_;
  Strain6 eps_;
  PlasticState state_;
  MaterialResponse last_;
};

}  // namespace frc
