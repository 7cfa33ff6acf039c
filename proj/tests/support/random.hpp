#pragma once

// Hand-rolled generators for property-style tests.

#include "frc/tensor.hpp"

#include <random>

namespace testing_support {

class Rng {
 public:
  explicit Rng(unsigned seed) : gen_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(gen_);
  }
  int integer(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(gen_);
  }
  frc::Vec3 vec3(double lo, double hi) {
    return {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)};
  }
  frc::Vec6 vec6(double lo, double hi) {
    frc::Vec6 v;
    for (int i = 0; i < 6; ++i) v(i) = uniform(lo, hi);
    return v;
  }
  frc::Vec3 unit_vector() {
    std::normal_distribution<double> n(0.0, 1.0);
    frc::Vec3 v(n(gen_), n(gen_), n(gen_));
    return v.normalized();
  }
  frc::Mat3 rotation() {
    return frc::axis_angle(unit_vector(), uniform(0.0, 2.0 * M_PI));
  }
  /// Random symmetric positive definite 6x6 with entries of order 1e3.
  frc::Mat6 spd6() {
    frc::Mat6 a;
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) a(i, j) = uniform(-1.0, 1.0);
    return 1e3 * (a * a.transpose() + 0.5 * frc::Mat6::Identity());
  }

 private:
  std::mt19937 gen_;
};

}  // namespace testing_support
