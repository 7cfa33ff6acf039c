#include "frc/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace frc {

StressInvariants invariants(const Stress6& sigma) {
  StressInvariants r;
  r.I1 = sigma.trace();
  r.eta = sigma;
  for (int k = 0; k < 3; ++k) r.eta[k] -= r.I1 / 3.0;
  const Vec6& e = r.eta.vec();
  r.J2 = 0.5 * (e(0) * e(0) + e(1) * e(1) + e(2) * e(2)) +
         (e(3) * e(3) + e(4) * e(4) + e(5) * e(5));
  return r;
}

Mat36 coordinate_matrix(const Vec3& y) {
  Mat36 x = Mat36::Zero();
  x(0, 0) = y(0);
  x(1, 1) = y(1);
  x(2, 2) = y(2);
  // 12
  x(0, 3) = 0.5 * y(1);
  x(1, 3) = 0.5 * y(0);
  // 23
  x(1, 4) = 0.5 * y(2);
  x(2, 4) = 0.5 * y(1);
  // 31
  x(0, 5) = 0.5 * y(2);
  x(2, 5) = 0.5 * y(0);
  return x;
}

Vec3 macro_displacement(const Strain6& eps_bar, const Vec3& y) {
  return coordinate_matrix(y) * eps_bar.vec();
}

namespace {

void check_rotation(const Mat3& q) {
  const double orth = (q.transpose() * q - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (!(orth <= 1e-12)) {
    throw std::invalid_argument("basis is not orthonormal (deviation " +
                                std::to_string(orth) + ")");
  }
  if (q.col(0).cross(q.col(1)).dot(q.col(2)) <= 0.0) {
    throw std::invalid_argument("basis is not right-handed");
  }
}

using Tensor4 = std::array<double, 81>;

constexpr int t4(int i, int j, int k, int l) {
  return ((i * 3 + j) * 3 + k) * 3 + l;
}

Tensor4 to_tensor4(const Mat6& c) {
  Tensor4 t{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
          t[t4(i, j, k, l)] = c(voigt_index(i, j), voigt_index(k, l));
  return t;
}

}  // namespace

Basis3::Basis3(const Vec3& e1, const Vec3& e2, const Vec3& e3) {
  q_.col(0) = e1;
  q_.col(1) = e2;
  q_.col(2) = e3;
  check_rotation(q_);
}

Basis3 Basis3::from_axis(const Vec3& axis) {
  const double n = axis.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument("basis axis must be a finite non-zero vector");
  }
  const Vec3 e3 = axis / n;
  int least = 0;
  for (int k = 1; k < 3; ++k) {
    if (std::abs(e3(k)) < std::abs(e3(least))) least = k;
  }
  Vec3 a = Vec3::Unit(least);
  Vec3 e1 = (a - a.dot(e3) * e3).normalized();
  Vec3 e2 = e3.cross(e1);
  return Basis3(e1, e2, e3);
}

Basis3 Basis3::from_rotation(const Mat3& q) {
  return Basis3(q.col(0), q.col(1), q.col(2));
}

Mat6 rotate_stiffness(const Mat6& c_local, const Basis3& basis) {
  const Tensor4 cl = to_tensor4(c_local);
  const Mat3& q = basis.rotation();
  // Contract one index at a time: 4 * 3^5 operations.
  Tensor4 a{}, b{};
  for (int i = 0; i < 3; ++i)
    for (int bb = 0; bb < 3; ++bb)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) {
          double s = 0.0;
          for (int aa = 0; aa < 3; ++aa) s += q(i, aa) * cl[t4(aa, bb, c, d)];
          a[t4(i, bb, c, d)] = s;
        }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) {
          double s = 0.0;
          for (int bb = 0; bb < 3; ++bb) s += q(j, bb) * a[t4(i, bb, c, d)];
          b[t4(i, j, c, d)] = s;
        }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int d = 0; d < 3; ++d) {
          double s = 0.0;
          for (int c = 0; c < 3; ++c) s += q(k, c) * b[t4(i, j, c, d)];
          a[t4(i, j, k, d)] = s;
        }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          double s = 0.0;
          for (int d = 0; d < 3; ++d) s += q(l, d) * a[t4(i, j, k, d)];
          b[t4(i, j, k, l)] = s;
        }
  Mat6 out;
  for (int p = 0; p < 6; ++p) {
    for (int r = 0; r < 6; ++r) {
      const auto [i, j] = kVoigtPairs[p];
      const auto [k, l] = kVoigtPairs[r];
      out(p, r) = b[t4(i, j, k, l)];
    }
  }
  return out;
}

Stress6 rotate(const Stress6& s, const Mat3& q) {
  return Stress6::from_tensor(q * s.to_tensor() * q.transpose());
}

Strain6 rotate(const Strain6& e, const Mat3& q) {
  return Strain6::from_tensor(q * e.to_tensor() * q.transpose());
}

Mat3 axis_angle(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

}  // namespace frc
