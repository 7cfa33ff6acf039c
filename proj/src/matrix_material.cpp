#include "frc/matrix_material.hpp"

#include <cmath>
#include <optional>
#include <sstream>

namespace frc {

namespace {

using Vec10 = Eigen::Matrix<double, 10, 1>;
using Mat10 = Eigen::Matrix<double, 10, 10>;

const Vec6 kOnes = (Vec6() << 1, 1, 1, 0, 0, 0).finished();

// d J2 / d sigma (Voigt) = P sigma; the shear rows pick up the factor 2 from
// the symmetric off-diagonal pair.
Mat6 deviatoric_projector() {
  Mat6 P = Mat6::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) P(i, j) = (i == j ? 1.0 : 0.0) - 1.0 / 3.0;
  for (int i = 3; i < 6; ++i) P(i, i) = 2.0;
  return P;
}

const Mat6 kP = deviatoric_projector();
const Vec6 kMetric = (Vec6() << 1, 1, 1, 0.5, 0.5, 0.5).finished();

using Branch = HardeningBranch;

struct Hardening {
  double value;
  double slope;
};

Hardening tension_curve(double a, const MatrixParams& p) {
  const double e = std::exp(-p.nt * a);
  return {p.sigma_t0 + p.Ht * (1.0 - e), p.Ht * p.nt * e};
}

Hardening compression_curve(double a, const MatrixParams& p) {
  const double e = std::exp(-p.nc * a);
  return {p.sigma_c0 + p.Hc * (1.0 - e), p.Hc * p.nc * e};
}

// Unknowns: sigma (0-5), dgamma (6), alpha0 (7), alpha1 (8), theta (9).
struct LocalSolve {
  Vec10 x;
  Mat10 jacobian;
  int iterations = 0;
  Vec6 sigma() const { return x.head<6>(); }
  double dgamma() const { return x(6); }
  double I1() const { return x(0) + x(1) + x(2); }
};

class LocalSystem {
 public:
  LocalSystem(const MatrixParams& p, const Vec6& eps_e_trial,
              const PlasticState& old, Branch branch)
      : p_(p),
        S_(elastic_stiffness(p).inverse()),
        eps_trial_(eps_e_trial),
        old_(old),
        branch_(branch),
        alpha_f_(p.flow_alpha()),
        q_den_(1.0 + 2.0 * p.nu_plas * p.nu_plas),
        f_scale_(2.0 * p.sigma_c0 * p.sigma_t0),
        strain_scale_(p.sigma_t0 / p.E) {}

  Vec10 start(const Vec6& sigma_trial) const {
    Vec10 x;
    x.head<6>() = sigma_trial;
    x(6) = 0.0;
    x(7) = old_.alpha0;
    x(8) = old_.alpha1;
    x(9) = branch_ == Branch::Compression ? 0.0 : 1.0;
    if (branch_ == Branch::Neutral) x(9) = 0.5;
    return x;
  }

  void clamp(Vec10& x) const {
    x(7) = std::max(x(7), old_.alpha0);
    x(8) = std::max(x(8), old_.alpha1);
  }

  struct Eval {
    Vec10 r;
    Mat10 J;
  };

  Eval evaluate(const Vec10& x) const {
    const Vec6 s = x.head<6>();
    const double dg = x(6), theta = x(9);
    const auto t = tension_curve(x(7), p_);
    const auto c = compression_curve(x(8), p_);
    const double diff = c.value - t.value;
    const double I1 = s(0) + s(1) + s(2);
    const Vec6 dev = kP * s;
    const Vec6 n = 6.0 * dev + 2.0 * alpha_f_ * diff * kOnes;
    const Vec6 m = 6.0 * dev + 2.0 * diff * kOnes;
    const Vec6 dn_da0 = -2.0 * alpha_f_ * t.slope * kOnes;
    const Vec6 dn_da1 = 2.0 * alpha_f_ * c.slope * kOnes;
    const Vec6 Mn = kMetric.cwiseProduct(n);
    const double q = std::sqrt(std::max(n.dot(Mn), 1e-300) / q_den_);
    const Vec6 dq_dn = Mn / (q * q_den_);
    const Vec6 dq_ds = 6.0 * (kP.transpose() * dq_dn);
    const double dq_da0 = dq_dn.dot(dn_da0), dq_da1 = dq_dn.dot(dn_da1);
    const double J2 = 0.5 * (dev(0) * dev(0) + dev(1) * dev(1) + dev(2) * dev(2)) +
                      0.25 * (dev(3) * dev(3) + dev(4) * dev(4) + dev(5) * dev(5));
    const double f = 6.0 * J2 + 2.0 * I1 * diff - 2.0 * c.value * t.value;
    const double df_da0 = -2.0 * I1 * t.slope - 2.0 * c.value * t.slope;
    const double df_da1 = 2.0 * I1 * c.slope - 2.0 * c.slope * t.value;

    Eval e;
    e.J.setZero();
    e.r.head<6>() = S_ * s - eps_trial_ + dg * n;
    e.J.topLeftCorner<6, 6>() = S_ + 6.0 * dg * kP;
    e.J.block<6, 1>(0, 6) = n;
    e.J.block<6, 1>(0, 7) = dg * dn_da0;
    e.J.block<6, 1>(0, 8) = dg * dn_da1;

    e.r(7) = x(7) - old_.alpha0 - theta * dg * q;
    e.J.block<1, 6>(7, 0) = -theta * dg * dq_ds.transpose();
    e.J(7, 6) = -theta * q;
    e.J(7, 7) = 1.0 - theta * dg * dq_da0;
    e.J(7, 8) = -theta * dg * dq_da1;
    e.J(7, 9) = -dg * q;

    e.r(8) = x(8) - old_.alpha1 - (1.0 - theta) * dg * q;
    e.J.block<1, 6>(8, 0) = -(1.0 - theta) * dg * dq_ds.transpose();
    e.J(8, 6) = -(1.0 - theta) * q;
    e.J(8, 7) = -(1.0 - theta) * dg * dq_da0;
    e.J(8, 8) = 1.0 - (1.0 - theta) * dg * dq_da1;
    e.J(8, 9) = dg * q;

    e.r(6) = f / f_scale_;
    e.J.block<1, 6>(6, 0) = m.transpose() / f_scale_;
    e.J(6, 7) = df_da0 / f_scale_;
    e.J(6, 8) = df_da1 / f_scale_;

    if (branch_ == Branch::Neutral) {
      e.r(9) = I1 / p_.sigma_t0;
      e.J.block<1, 6>(9, 0) = kOnes.transpose() / p_.sigma_t0;
    } else {
      e.r(9) = theta - (branch_ == Branch::Tension ? 1.0 : 0.0);
      e.J(9, 9) = 1.0;
    }
    return e;
  }

  // Merit residual with strains measured in units of the initial yield strain.
  double merit(const Vec10& r) const {
    Vec10 s = r;
    s.head<6>() /= strain_scale_;
    s.segment<2>(7) /= strain_scale_;
    return s.norm();
  }

  double strain_residual(const Vec10& r) const {
    return std::max(r.head<6>().cwiseAbs().maxCoeff(),
                    r.segment<2>(7).cwiseAbs().maxCoeff());
  }

  double strain_scale() const { return strain_scale_; }

 private:
  const MatrixParams& p_;
  Mat6 S_;
  Vec6 eps_trial_;
  const PlasticState& old_;
  Branch branch_;
  double alpha_f_;
  double q_den_;
  double f_scale_;
  double strain_scale_;
};

LocalSolve solve_local(const LocalSystem& sys, const Vec10& x0, double tol) {
  constexpr int kMaxIterations = 50;
  Vec10 x = x0;
  const Vec6 sigma_trial = x0.head<6>();
  auto ev = sys.evaluate(x);
  double merit = sys.merit(ev.r);
  // Strain equations are solved to near machine precision so that the
  // tangent and the stress stay consistent to ~1e-10.
  const double strain_tol = 1e-13 * std::max(1.0, sigma_trial.norm() / 1e3);
  bool extra_done = false;
  for (int it = 1; it <= kMaxIterations; ++it) {
    const Vec10 dx = ev.J.partialPivLu().solve(-ev.r);
    double step = 1.0;
    Vec10 x_new;
    LocalSystem::Eval ev_new;
    double merit_new = 0.0;
    for (int ls = 0; ls < 12; ++ls) {
      x_new = x + step * dx;
      sys.clamp(x_new);
      ev_new = sys.evaluate(x_new);
      merit_new = sys.merit(ev_new.r);
      if (merit_new < merit || merit < 1e-12) break;
      step *= 0.5;
    }
    x = x_new;
    ev = ev_new;
    merit = merit_new;
    const bool converged =
        sys.strain_residual(ev.r) <= strain_tol * sys.strain_scale() &&
        std::abs(ev.r(6)) <= tol && std::abs(ev.r(9)) <= 1e-12;
    if (converged) {
      // One more Newton step lands the strain equations at round-off.
      if (extra_done || merit < 1e-14) return LocalSolve{x, ev.J, it};
      extra_done = true;
    }
  }
  std::ostringstream os;
  os << "return mapping did not converge in " << kMaxIterations
     << " iterations (residual " << merit << ")";
  throw ReturnMapError(os.str(), merit);
}

}  // namespace

void MatrixParams::validate() const {
  auto fail = [](const char* what) { throw std::invalid_argument(what); };
  if (!(E > 0.0)) fail("matrix: E must be positive");
  if (!(nu >= 0.0 && nu < 0.5)) fail("matrix: nu must lie in [0, 0.5)");
  if (!(nu_plas >= 0.0 && nu_plas <= 0.5)) fail("matrix: nu_plas must lie in [0, 0.5]");
  if (!(sigma_t0 > 0.0 && sigma_c0 > 0.0)) fail("matrix: initial yield strengths must be positive");
  if (!(Ht >= 0.0 && Hc >= 0.0)) fail("matrix: hardening amplitudes must be non-negative");
  if (!(nt > 0.0 && nc > 0.0)) fail("matrix: hardening rates must be positive");
}

double yield_value(const Stress6& sigma, double sigma_t, double sigma_c) {
  const auto inv = invariants(sigma);
  return 6.0 * inv.J2 + 2.0 * inv.I1 * (sigma_c - sigma_t) - 2.0 * sigma_c * sigma_t;
}

double potential_value(const Stress6& sigma, double sigma_t, double sigma_c,
                       double nu_plas) {
  const auto inv = invariants(sigma);
  const double alpha = (1.0 - 2.0 * nu_plas) / (1.0 + nu_plas);
  return 6.0 * inv.J2 + 2.0 * alpha * inv.I1 * (sigma_c - sigma_t) -
         2.0 * sigma_c * sigma_t;
}

Strengths hardened_strengths(double alpha0, double alpha1, const MatrixParams& p) {
  return {tension_curve(alpha0, p).value, compression_curve(alpha1, p).value};
}

Mat6 elastic_stiffness(double E, double nu) {
  if (!(E > 0.0)) throw std::invalid_argument("elastic stiffness: E must be positive");
  if (!(nu >= 0.0 && nu < 0.5)) {
    throw std::invalid_argument("elastic stiffness: nu must lie in [0, 0.5)");
  }
  const double lambda = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
  const double mu = E / (2.0 * (1.0 + nu));
  Mat6 C = Mat6::Zero();
  C.topLeftCorner<3, 3>().setConstant(lambda);
  for (int i = 0; i < 3; ++i) C(i, i) += 2.0 * mu;
  for (int i = 3; i < 6; ++i) C(i, i) = mu;
  return C;
}

MaterialResponse return_map(const Strain6& eps_total, const PlasticState& state,
                            const MatrixParams& p, double tol, BranchChoice choice) {
  const Mat6 Ce = elastic_stiffness(p);
  const Vec6 eps_e = eps_total.vec() - state.eps_p.vec();
  const Stress6 trial(Ce * eps_e);

  MaterialResponse out;
  out.state = state;
  out.sigma = trial;
  out.tangent = Ce;
  if (!p.plastic) return out;

  const auto str = hardened_strengths(state.alpha0, state.alpha1, p);
  if (yield_value(trial, str.tension, str.compression) <= tol * p.sigma_t0 * p.sigma_t0) {
    return out;
  }

  // Neutral is the sliding solution on I1 = 0, used when neither one-sided
  // update is consistent with its own sign.
  const double i1_tol = 1e-9 * p.sigma_t0;
  // The neutral system is singular in theta at dgamma = 0, so it starts from
  // the last one-sided solution.
  std::optional<Vec10> seed;
  auto attempt = [&](Branch b) {
    LocalSystem sys(p, eps_e, state, b);
    Vec10 x0 = sys.start(trial.vec());
    if (b == Branch::Neutral && seed) {
      x0 = *seed;
      x0(9) = 0.5;
    }
    LocalSolve out = solve_local(sys, x0, tol);
    if (b != Branch::Neutral) seed = out.x;
    return out;
  };
  auto consistent = [i1_tol](const LocalSolve& ls, Branch b) {
    switch (b) {
      case Branch::Tension: return ls.I1() >= -i1_tol;
      case Branch::Compression: return ls.I1() <= i1_tol;
      case Branch::Neutral: return ls.x(9) >= -1e-12 && ls.x(9) <= 1.0 + 1e-12;
    }
    return false;
  };

  std::optional<LocalSolve> sol;
  Branch branch = Branch::Tension;
  bool sign_ok = true;
  if (choice == BranchChoice::Auto) {
    double last_residual = 0.0;
    for (Branch b : {Branch::Tension, Branch::Compression, Branch::Neutral}) {
      try {
        LocalSolve candidate = attempt(b);
        if (consistent(candidate, b)) {
          sol = candidate;
          branch = b;
          break;
        }
      } catch (const ReturnMapError& e) {
        last_residual = e.residual_norm;
      }
    }
    if (!sol) {
      throw ReturnMapError("return mapping found no update consistent with the sign of I1",
                           last_residual);
    }
  } else {
    branch = choice == BranchChoice::Tension       ? Branch::Tension
             : choice == BranchChoice::Compression ? Branch::Compression
                                                   : Branch::Neutral;
    if (branch == Branch::Neutral) {
      try {
        attempt(Branch::Tension);
      } catch (const ReturnMapError&) {
      }
    }
    sol = attempt(branch);
    sign_ok = consistent(*sol, branch);
  }
  if (sol->dgamma() < 0.0) {
    throw ReturnMapError("return mapping produced a negative plastic multiplier",
                         -sol->dgamma());
  }

  out.plastic = true;
  out.branch = branch;
  out.sign_consistent = sign_ok;
  out.iterations = sol->iterations;
  out.sigma = Stress6(sol->sigma());
  out.state.eps_p = Strain6(eps_total.vec() - Ce.ldlt().solve(sol->sigma()));
  if (branch != Branch::Compression) out.state.alpha0 = sol->x(7);
  if (branch != Branch::Tension) out.state.alpha1 = sol->x(8);
  // d(residual)/d(eps) = [-I; 0], so d(sigma)/d(eps) is the leading 6x6
  // block of the inverse local Jacobian.
  Eigen::Matrix<double, 10, 6> rhs = Eigen::Matrix<double, 10, 6>::Zero();
  rhs.topRows<6>().setIdentity();
  const Eigen::Matrix<double, 10, 6> dx = sol->jacobian.partialPivLu().solve(rhs);
  out.tangent = dx.topRows<6>();
  return out;
}

double consistent_tangent_check(const Strain6& probe, const PlasticState& state,
                                const MatrixParams& p, double h, double tol) {
  const auto base = return_map(probe, state, p, tol);
  Mat6 fd;
  for (int k = 0; k < 6; ++k) {
    Strain6 plus = probe, minus = probe;
    plus[k] += h;
    minus[k] -= h;
    const auto sp = return_map(plus, state, p, tol).sigma.vec();
    const auto sm = return_map(minus, state, p, tol).sigma.vec();
    fd.col(k) = (sp - sm) / (2.0 * h);
  }
  const double scale = fd.cwiseAbs().maxCoeff();
  return (base.tangent - fd).cwiseAbs().maxCoeff() / scale;
}

MaterialPointDriver::MaterialPointDriver(MatrixParams p,
                                         std::array<bool, 6> prescribed,
                                         double tol)
    : p_(p), prescribed_(prescribed), tol_(tol) {
  p_.validate();
  last_.tangent = elastic_stiffness(p_);
}

const MaterialResponse& MaterialPointDriver::step(const Strain6& target) {
  for (int k = 0; k < 6; ++k) {
    if (prescribed_[k]) eps_[k] = target[k];
  }
  // Each branch is solved with the hardening variable held fixed so the
  // iteration sees a smooth map; the first sign-consistent result wins.
  const Strain6 start = eps_;
  std::optional<MaterialResponse> r;
  std::string failure = "no branch consistent with the sign of I1";
  for (BranchChoice c : {BranchChoice::Tension, BranchChoice::Compression,
                         BranchChoice::Neutral}) {
    eps_ = start;
    try {
      MaterialResponse candidate = solve(c);
      if (!candidate.plastic || candidate.sign_consistent) {
        r = candidate;
        break;
      }
    } catch (const ReturnMapError& e) {
      failure = e.what();
    }
  }
  if (!r) {
    eps_ = start;
    throw ReturnMapError("material point driver: " + failure, 0.0);
  }
  state_ = r->state;
  last_ = *r;
  return last_;
}

MaterialResponse MaterialPointDriver::solve(BranchChoice choice) {
  std::vector<int> free;
  for (int k = 0; k < 6; ++k) {
    if (!prescribed_[k]) free.push_back(k);
  }
  const int nf = static_cast<int>(free.size());
  const double stress_tol = 1e-10 * p_.sigma_t0;
  auto free_stress = [&](const MaterialResponse& m) {
    Eigen::VectorXd res(nf);
    for (int i = 0; i < nf; ++i) res(i) = m.sigma[free[i]];
    return res;
  };
  MaterialResponse r = return_map(eps_, state_, p_, tol_, choice);
  Eigen::VectorXd res = free_stress(r);
  int it = 0;
  while (nf > 0 && res.cwiseAbs().maxCoeff() > stress_tol) {
    if (++it > 50) {
      throw ReturnMapError("material point driver: stress-free slots did not converge",
                           res.norm());
    }
    Eigen::MatrixXd jac(nf, nf);
    for (int i = 0; i < nf; ++i)
      for (int j = 0; j < nf; ++j) jac(i, j) = r.tangent(free[i], free[j]);
    const Eigen::VectorXd d = jac.partialPivLu().solve(-res);
    double step = 1.0;
    for (int ls = 0; ls < 20; ++ls) {
      Strain6 trial = eps_;
      for (int i = 0; i < nf; ++i) trial[free[i]] += step * d(i);
      MaterialResponse rt = return_map(trial, state_, p_, tol_, choice);
      Eigen::VectorXd rest = free_stress(rt);
      if (rest.norm() < res.norm() || ls == 19) {
        eps_ = trial;
        r = rt;
        res = rest;
        break;
      }
      step *= 0.5;
    }
  }
  return r;
}

}  // namespace frc
