#include "frc/cohesive.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace frc {

void CohesiveParams::validate() const {
  if (!(ft > 0.0)) throw std::invalid_argument("cohesive ft must be positive");
  if (!(Em > 0.0) || !(h > 0.0)) throw std::invalid_argument("cohesive Em and h must be positive");
  if (!(beta >= 0.0)) throw std::invalid_argument("cohesive beta must be non-negative");
  if (tied()) return;
  if (!(Gf > 0.0)) throw std::invalid_argument("cohesive Gf must be positive");
  if (!(2.0 * Gf * E0() > ft * ft)) {
    std::ostringstream msg;
    msg << "cohesive law snaps back: delta0 = " << delta0() << " >= delta_max = " << delta_max()
        << " (need 2 Gf Em / h > ft^2)";
    throw std::invalid_argument(msg.str());
  }
}

double effective_jump(double delta_n, double delta_s1, double delta_s2, double beta) {
  const double n = std::max(delta_n, 0.0);
  return std::sqrt(n * n + beta * (delta_s1 * delta_s1 + delta_s2 * delta_s2));
}

double damage(double kappa, const CohesiveParams& p) {
  if (p.tied()) return 0.0;
  const double d0 = p.delta0(), dm = p.delta_max();
  if (kappa <= d0) return 0.0;
  if (kappa >= dm) return 1.0;
  return std::clamp(dm * (kappa - d0) / (kappa * (dm - d0)), 0.0, 1.0);
}

CohesivePointResponse traction(const Vec3& jump, const CohesiveState& state,
                               const CohesiveParams& p, bool consistent, CohesiveMode mode) {
  const double e0 = p.E0();
  const bool closed = mode.fixed ? mode.closed : jump(0) < 0.0;
  const double dn = closed ? 0.0 : jump(0);
  const double delta = effective_jump(dn, jump(1), jump(2), p.beta);
  const bool loading = mode.fixed ? mode.loading : delta >= state.kappa;
  CohesivePointResponse r;
  r.mode = {true, closed, loading};
  const double tol = 1e-6 * p.delta0();
  r.mode_consistent = (closed ? jump(0) <= tol : jump(0) >= -tol) &&
                      (loading ? delta >= state.kappa - tol : delta <= state.kappa + tol);
  r.state.kappa = loading ? delta : state.kappa;
  r.omega = damage(r.state.kappa, p);
  const double s = (1.0 - r.omega) * e0;
  r.t = s * jump;
  r.D = s * Mat3::Identity();
  if (closed) {
    r.t(0) = e0 * jump(0);
    r.D(0, 0) = e0;
  }
  const bool softening = !p.tied() && loading && delta > p.delta0() && delta < p.delta_max();
  if (consistent && softening) {
    const double d0 = p.delta0(), dm = p.delta_max();
    const double domega = dm * d0 / ((dm - d0) * delta * delta);
    const Vec3 ddelta(dn / delta, p.beta * jump(1) / delta, p.beta * jump(2) / delta);
    Vec3 damaged = jump;
    if (closed) damaged(0) = 0.0;
    r.D -= e0 * domega * damaged * ddelta.transpose();
  }
  return r;
}

Mat3 cohesive_frame(const std::array<Vec3, 3>& b) {
  const Vec3 a = b[1] - b[0];
  const Vec3 n = a.cross(b[2] - b[0]);
  if (n.norm() < 2e-14) throw std::invalid_argument("degenerate cohesive triangle");
  Mat3 r;
  r.row(0) = n.normalized();
  r.row(1) = a.normalized();
  r.row(2) = r.row(0).cross(r.row(1));
  return r;
}

CohesiveElementResponse cohesive_element(const std::array<Vec3, 6>& x, const Vec18& u,
                                         const std::array<CohesiveState, 3>& states,
                                         const CohesiveParams& p, bool consistent,
                                         const std::array<CohesiveMode, 3>& modes) {
  const std::array<Vec3, 3> bottom{x[0], x[1], x[2]};
  const double area = 0.5 * (x[1] - x[0]).cross(x[2] - x[0]).norm();
  if (area < 1e-14) throw std::invalid_argument("degenerate cohesive triangle");
  const Mat3 rot = cohesive_frame(bottom);

  static constexpr double kPts[3][3] = {
      {2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0},
      {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0},
      {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0}};
  CohesiveElementResponse out;
  out.K.setZero();
  out.f_int.setZero();
  for (int g = 0; g < 3; ++g) {
    Eigen::Matrix<double, 3, 18> phi = Eigen::Matrix<double, 3, 18>::Zero();
    for (int a = 0; a < 3; ++a) {
      phi.block<3, 3>(0, 3 * a) = -kPts[g][a] * Mat3::Identity();
      phi.block<3, 3>(0, 9 + 3 * a) = kPts[g][a] * Mat3::Identity();
    }
    const Eigen::Matrix<double, 3, 18> b = rot * phi;
    const auto r = traction(b * u, states[g], p, consistent, modes[g]);
    const double w = area / 3.0;
    out.K += w * b.transpose() * r.D * b;
    out.f_int += w * b.transpose() * r.t;
    out.states[g] = r.state;
    out.omega[g] = r.omega;
    out.modes[g] = r.mode;
    out.modes_consistent = out.modes_consistent && r.mode_consistent;
  }
  return out;
}

}  // namespace frc
