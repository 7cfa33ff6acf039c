#pragma once

// Scalar backward-Euler integrator for a uniaxial stress path through the
// paraboloidal model. It works on the axial equation alone: on the yield
// surface the uniaxial stress equals the current tensile (or compressive)
// strength, so each step reduces to one monotone scalar equation in the
// active internal variable, solved by bisection. Shares no code with the
// 6x6 return mapping.

#include "frc/matrix_material.hpp"

#include <cmath>

namespace testing_support {

class UniaxialOracle {
 public:
  explicit UniaxialOracle(const frc::MatrixParams& p) : p_(p) {}

  /// Advance to total axial strain `eps11`; returns the axial stress.
  double step(double eps11) {
    const double trial = p_.E * (eps11 - eps_p11_);
    const double st = tension(alpha0_), sc = compression(alpha1_);
    if (trial >= 0.0 ? trial <= st : -trial <= sc) {
      stress_ = trial;
      return stress_;
    }
    const bool tens = trial > 0.0;
    const double a_old = tens ? alpha0_ : alpha1_;
    auto g = [&](double a, double& s_out, double& dep) {
      const double s = tens ? tension(a) : -compression(a);
      const double diff = tens ? (sc - tension(a)) : (compression(a) - st);
      const double af = (1.0 - 2.0 * p_.nu_plas) / (1.0 + p_.nu_plas);
      const double n11 = 4.0 * s + 2.0 * af * diff;
      const double n22 = -2.0 * s + 2.0 * af * diff;
      const double q = std::sqrt((n11 * n11 + 2.0 * n22 * n22) /
                                 (1.0 + 2.0 * p_.nu_plas * p_.nu_plas));
      dep = (a - a_old) * n11 / q;
      s_out = s;
      return s / p_.E + eps_p11_ + dep - eps11;
    };
    double lo = a_old, hi = a_old + 1.0, s = 0.0, dep = 0.0;
    const double sign = tens ? 1.0 : -1.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (sign * g(mid, s, dep) > 0.0) {
        hi = mid;
      } else {
        lo = mid;
      }
      if (hi - lo < 1e-17) break;
    }
    const double a = 0.5 * (lo + hi);
    g(a, s, dep);
    eps_p11_ += dep;
    (tens ? alpha0_ : alpha1_) = a;
    stress_ = s;
    return stress_;
  }

  double alpha0() const { return alpha0_; }
  double alpha1() const { return alpha1_; }

 private:
  double tension(double a) const { return p_.sigma_t0 + p_.Ht * (1.0 - std::exp(-p_.nt * a)); }
  double compression(double a) const { return p_.sigma_c0 + p_.Hc * (1.0 - std::exp(-p_.nc * a)); }

  frc::MatrixParams p_;
  double eps_p11_ = 0.0;
  double alpha0_ = 0.0;
  double alpha1_ = 0.0;
  double stress_ = 0.0;
};

}  // namespace testing_support
