#pragma once

// Small-strain tensor conventions shared by every module.
//
// Voigt ordering is fixed to [11, 22, 33, 12, 23, 31]. Strain vectors carry
// engineering shears (2*eps_12, ...), stress vectors carry true shear
// components, so that sigma . eps is the full tensor contraction and a
// stiffness matrix maps one onto the other without extra factors.

#include <Eigen/Dense>

#include <array>
#include <utility>

namespace frc {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat36 = Eigen::Matrix<double, 3, 6>;

/// Tensor index pair for each Voigt slot.
inline constexpr std::array<std::pair<int, int>, 6> kVoigtPairs{
    {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {1, 2}, {2, 0}}};

/// Voigt slot for a tensor index pair (symmetric).
constexpr int voigt_index(int i, int j) {
  if (i == j) return i;
  if ((i == 0 && j == 1) || (i == 1 && j == 0)) return 3;
  if ((i == 1 && j == 2) || (i == 2 && j == 1)) return 4;
  return 5;
}

enum class VoigtKind { Stress, Strain };

/// Six-component symmetric tensor in Voigt form. The kind is part of the type
/// so stresses and strains cannot be mixed up silently.
template <VoigtKind Kind>
class Voigt6 {
 public:
  Voigt6() : v_(Vec6::Zero()) {}
  explicit Voigt6(const Vec6& v) : v_(v) {}
  Voigt6(double a11, double a22, double a33, double a12, double a23,
         double a31) {
    v_ << a11, a22, a33, a12, a23, a31;
  }

  static Voigt6 zero() { return Voigt6(); }
  static Voigt6 unit(int k) {
    Voigt6 r;
    r.v_(k) = 1.0;
    return r;
  }

  /// Build from a (symmetric) 3x3 tensor.
  static Voigt6 from_tensor(const Mat3& t) {
    Voigt6 r;
    const double shear = Kind == VoigtKind::Strain ? 2.0 : 1.0;
    for (int k = 0; k < 6; ++k) {
      const auto [i, j] = kVoigtPairs[k];
      r.v_(k) = k < 3 ? t(i, j) : shear * 0.5 * (t(i, j) + t(j, i));
    }
    return r;
  }

  Mat3 to_tensor() const {
    const double shear = Kind == VoigtKind::Strain ? 0.5 : 1.0;
    Mat3 t;
    t(0, 0) = v_(0);
    t(1, 1) = v_(1);
    t(2, 2) = v_(2);
    t(0, 1) = t(1, 0) = shear * v_(3);
    t(1, 2) = t(2, 1) = shear * v_(4);
    t(2, 0) = t(0, 2) = shear * v_(5);
    return t;
  }

  const Vec6& vec() const { return v_; }
  Vec6& vec() { return v_; }
  double operator[](int k) const { return v_(k); }
  double& operator[](int k) { return v_(k); }

  double trace() const { return v_(0) + v_(1) + v_(2); }

  Voigt6& operator+=(const Voigt6& o) {
    v_ += o.v_;
    return *this;
  }
  Voigt6& operator-=(const Voigt6& o) {
    v_ -= o.v_;
    return *this;
  }
  friend Voigt6 operator+(Voigt6 a, const Voigt6& b) { return a += b; }
  friend Voigt6 operator-(Voigt6 a, const Voigt6& b) { return a -= b; }
  friend Voigt6 operator*(double s, Voigt6 a) {
    a.v_ *= s;
    return a;
  }
  friend Voigt6 operator*(Voigt6 a, double s) { return s * a; }
  friend bool operator==(const Voigt6& a, const Voigt6& b) {
    return a.v_ == b.v_;
  }

 private:
  Vec6 v_;
};

using Stress6 = Voigt6<VoigtKind::Stress>;
using Strain6 = Voigt6<VoigtKind::Strain>;

/// Full contraction sigma : eps.
inline double contract(const Stress6& s, const Strain6& e) {
  return s.vec().dot(e.vec());
}

/// Stress-space invariants used by the matrix yield surface.
struct StressInvariants {
  double I1 = 0.0;  ///< tr(sigma)
  double J2 = 0.0;  ///< 0.5 eta:eta
  Stress6 eta;      ///< deviatoric stress
};

StressInvariants invariants(const Stress6& sigma);

/// 3x6 coordinate matrix X(y) with X(y) * eps_bar = eps_bar . y for the
/// Voigt ordering above (shear columns halve the engineering strain).
Mat36 coordinate_matrix(const Vec3& y);

/// Displacement of point y under a homogeneous macro strain.
Vec3 macro_displacement(const Strain6& eps_bar, const Vec3& y);

/// Orthonormal right-handed frame; columns of rotation() are e1, e2, e3
/// expressed in global coordinates.
class Basis3 {
 public:
  /// Throws std::invalid_argument unless orthonormal (1e-12) and
  /// right-handed.
  Basis3(const Vec3& e1, const Vec3& e2, const Vec3& e3);

  static Basis3 global() {
    return Basis3(Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ());
  }
  /// Frame with e3 along `axis`. e1 comes from the global axis least aligned
  /// with `axis` (lowest index on ties), orthogonalised; e2 = e3 x e1.
  static Basis3 from_axis(const Vec3& axis);
  /// Throws like the constructor when `q` is not a proper rotation.
  static Basis3 from_rotation(const Mat3& q);

  const Mat3& rotation() const { return q_; }
  Vec3 e1() const { return q_.col(0); }
  Vec3 e2() const { return q_.col(1); }
  Vec3 e3() const { return q_.col(2); }
  /// Inverse frame (rotation transposed).
  Basis3 transposed() const { return from_rotation(q_.transpose()); }

 private:
  Mat3 q_;
};

/// Re-expresses a stiffness given in the local frame `basis` in global axes,
/// C_ijkl = Q_ia Q_jb Q_kc Q_ld C'_abcd, via the full fourth-order tensor.
Mat6 rotate_stiffness(const Mat6& c_local, const Basis3& basis);

/// Tensor rotation of stress/strain values: returns Q t Q^T.
Stress6 rotate(const Stress6& s, const Mat3& q);
Strain6 rotate(const Strain6& e, const Mat3& q);

/// Proper rotation from axis-angle (radians).
Mat3 axis_angle(const Vec3& axis, double angle);

}  // namespace frc
