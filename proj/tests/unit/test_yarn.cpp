#include "frc/yarn.hpp"

#include "frc/matrix_material.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "support/random.hpp"
#include "support/tensor_oracle.hpp"

using namespace frc;

namespace {

const TransIsoParams kGlassYarn{18060.0, 0.34, 48470.0, 0.25, 5580.0};

double rel_diff(const Mat6& a, const Mat6& b) {
  return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

// Maps every node of `m` through `f` and restores positive orientation.
Mesh mapped(Mesh m, const std::function<Vec3(const Vec3&)>& f) {
  for (auto& x : m.nodes) x = f(x);
  for (int t = 0; t < static_cast<int>(m.tets.size()); ++t)
    if (tet_volume(m, t) < 0) std::swap(m.tets[t].n[1], m.tets[t].n[2]);
  return m;
}

// Boundary faces of `m` whose nodes all satisfy `pred` on the parameter mesh.
std::vector<Face> faces_where(const Mesh& m, const Mesh& param,
                              const std::function<bool(const Vec3&)>& pred) {
  std::vector<Face> out;
  for (const auto& f : boundary_faces(m)) {
    if (pred(param.nodes[f.n[0]]) && pred(param.nodes[f.n[1]]) && pred(param.nodes[f.n[2]])) {
      out.push_back(f.n);
    }
  }
  return out;
}

}  // namespace

TEST(LocalStiffness, GlassYarnAxialShear) {
  const Mat6 c = local_stiffness(kGlassYarn);
  EXPECT_NEAR(c(5, 5), 5580.0, 1e-9 * 5580.0);
  EXPECT_NEAR(c(4, 4), 5580.0, 1e-9 * 5580.0);
  EXPECT_NEAR(c(3, 3), kGlassYarn.Ep / (2 * (1 + kGlassYarn.nu_p)), 1e-9 * 1e4);
}

TEST(LocalStiffness, TransverseIsotropyRelations) {
  testing_support::Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    TransIsoParams p{rng.uniform(1e3, 1e5), rng.uniform(0.0, 0.45), rng.uniform(1e3, 1e5),
                     rng.uniform(0.0, 0.3), rng.uniform(1e3, 5e4)};
    Mat6 c;
    try {
      c = local_stiffness(p);
    } catch (const std::invalid_argument&) {
      continue;
    }
    const double tol = 1e-9 * c.cwiseAbs().maxCoeff();
    EXPECT_NEAR(c(0, 0), c(1, 1), tol);
    EXPECT_NEAR(c(0, 2), c(1, 2), tol);
    EXPECT_NEAR(c(4, 4), c(5, 5), tol);
    EXPECT_NEAR(c(3, 3), 0.5 * (c(0, 0) - c(0, 1)), tol);
    for (int i = 0; i < 3; ++i)
      for (int j = 3; j < 6; ++j) EXPECT_EQ(c(i, j), 0.0);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Mat6>(c).eigenvalues().minCoeff(), 0.0);
  }
}

TEST(LocalStiffness, IsotropicReductionMatchesMatrixElasticity) {
  for (auto [E, nu] : {std::pair{3760.0, 0.39}, {74000.0, 0.2}, {73000.0, 0.23}, {1.0, 0.0}}) {
    EXPECT_LT(rel_diff(local_stiffness(isotropic_from_fibre(E, nu)), elastic_stiffness(E, nu)),
              1e-9);
  }
}

TEST(LocalStiffness, IsotropicInvariantUnderRotation) {
  testing_support::Rng rng(5);
  const Mat6 c = local_stiffness(isotropic_from_fibre(74000, 0.2));
  for (int trial = 0; trial < 50; ++trial) {
    EXPECT_LT(rel_diff(rotate_stiffness(c, Basis3::from_rotation(rng.rotation())), c), 1e-9);
  }
}

TEST(LocalStiffness, IndefiniteRejectedWithEigenvalue) {
  const TransIsoParams bad{1000, 0.3, 1000, 0.9, 400};
  try {
    local_stiffness(bad);
    FAIL() << "indefinite parameters accepted";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("eigenvalue"), std::string::npos);
  }
  EXPECT_THROW(local_stiffness({-1, 0.3, 1000, 0.2, 400}), std::invalid_argument);
  EXPECT_THROW(local_stiffness({1000, 0.3, 1000, 0.2, 0}), std::invalid_argument);
}

TEST(IsotropicFromFibre, ShearModulus) {
  EXPECT_NEAR(isotropic_from_fibre(74000, 0.2).Gzp, 30833.3, 0.05);
  EXPECT_NEAR(isotropic_from_fibre(73000, 0.23).Gzp, 29674.8, 0.05);
  const auto p = isotropic_from_fibre(50000, 0.0);
  EXPECT_EQ(p.Gzp, 25000.0);
  EXPECT_EQ(p.Ep, p.Ez);
  EXPECT_EQ(p.nu_p, p.nu_pz);
}

TEST(ElementStiffnessGlobal, AxisZIsLocal) {
  EXPECT_LT(rel_diff(element_stiffness_global(kGlassYarn, Vec3::UnitZ()), local_stiffness(kGlassYarn)),
            1e-14);
}

TEST(ElementStiffnessGlobal, AxisXPutsAxialModulusInFirstSlot) {
  const Mat6 local = local_stiffness(kGlassYarn);
  const Mat6 global = element_stiffness_global(kGlassYarn, Vec3::UnitX());
  EXPECT_NEAR(global(0, 0), local(2, 2), 1e-9 * local(2, 2));
  EXPECT_NEAR(global(1, 1), local(0, 0), 1e-9 * local(2, 2));
  // oracle: the same rotation through the naive eight-fold sum
  const Mat3 q = Basis3::from_axis(Vec3::UnitX()).rotation();
  EXPECT_LT(rel_diff(global, testing_support::rotate_stiffness_naive(local, q)), 1e-12);
  // compliance view: axial modulus is 1 / S11
  EXPECT_NEAR(1.0 / global.inverse()(0, 0), kGlassYarn.Ez, 1e-8 * kGlassYarn.Ez);
}

TEST(ElementStiffnessGlobal, SymmetricAboutFibreAxisAndUnderReversal) {
  testing_support::Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec3 d = rng.unit_vector();
    const Mat6 c = element_stiffness_global(kGlassYarn, d);
    const Mat3 spin = axis_angle(d, rng.uniform(0, 2 * std::numbers::pi));
    EXPECT_LT(rel_diff(rotate_stiffness(c, Basis3::from_rotation(spin)), c), 1e-9);
    EXPECT_LT(rel_diff(element_stiffness_global(kGlassYarn, -d), c), 1e-9);
    // axial stiffness along d: 1 / (d d : S : d d) = Ez
    const Stress6 unit = Stress6::from_tensor(d * d.transpose());
    EXPECT_NEAR(unit.vec().dot(c.inverse() * unit.vec()), 1.0 / kGlassYarn.Ez, 1e-9 / kGlassYarn.Ez);
  }
}

TEST(PotentialFlow, StraightPrismGivesAxis) {
  const Mesh m = box_mesh({Vec3::Zero(), Vec3(4, 1, 1)}, {8, 2, 3}, 2);
  const auto inlet = faces_where(m, m, [](const Vec3& x) { return x(0) == 0.0; });
  const auto outlet = faces_where(m, m, [](const Vec3& x) { return x(0) == 4.0; });
  const auto flow = potential_flow_directions(m, 2, inlet, outlet);
  ASSERT_EQ(flow.directions.size(), m.tets.size());
  for (const auto& d : flow.directions) EXPECT_LT((d - Vec3::UnitX()).norm(), 1e-8);
  EXPECT_TRUE(flow.fallback.empty());
  EXPECT_NEAR(flow.inlet_flux, 0.25, 1e-10);  // |grad phi| * area = 1/4 * 1
  EXPECT_NEAR(flow.outlet_flux, flow.inlet_flux, 1e-8 * flow.inlet_flux);
}

TEST(PotentialFlow, OnlyTheRequestedRegionIsSolved) {
  Mesh m = box_mesh({Vec3::Zero(), Vec3(4, 1, 1)}, {8, 2, 2}, 1);
  for (int t = 0; t < static_cast<int>(m.tets.size()); ++t) {
    const auto x = tet_coords(m, t);
    if ((x[0] + x[1] + x[2] + x[3])(1) < 2.0) m.tets[t].region = 0;
  }
  const auto inlet = faces_where(m, m, [](const Vec3& x) { return x(0) == 0.0 && x(1) >= 0.5; });
  const auto outlet = faces_where(m, m, [](const Vec3& x) { return x(0) == 4.0 && x(1) >= 0.5; });
  const auto flow = potential_flow_directions(m, 1, inlet, outlet);
  for (int t : flow.tets) EXPECT_EQ(m.tets[t].region, 1);
  for (const auto& d : flow.directions) EXPECT_LT((d - Vec3::UnitX()).norm(), 1e-8);
}

TEST(PotentialFlow, ElbowConservesSectionFlux) {
  const Mesh param = box_mesh({Vec3::Zero(), Vec3::Ones()}, {24, 4, 3});
  const Mesh m = mapped(param, [](const Vec3& p) {
    const double th = p(0) * std::numbers::pi / 2, r = 1.0 + p(1);
    return Vec3(r * std::cos(th), r * std::sin(th), p(2));
  });
  const auto inlet = faces_where(m, param, [](const Vec3& p) { return p(0) == 0.0; });
  const auto outlet = faces_where(m, param, [](const Vec3& p) { return p(0) == 1.0; });
  const auto flow = potential_flow_directions(m, 0, inlet, outlet);
  EXPECT_NEAR(flow.outlet_flux, flow.inlet_flux, 1e-8 * flow.inlet_flux);
  for (double s : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const double q = section_flux(m, flow, [&](int n) { return param.nodes[n](0) < s; });
    EXPECT_NEAR(q, flow.inlet_flux, 1e-6 * flow.inlet_flux) << "section at s = " << s;
  }
  // directions follow the bend: close to the circumferential tangent
  for (std::size_t e = 0; e < flow.tets.size(); ++e) {
    const auto x = tet_coords(m, flow.tets[e]);
    const Vec3 c = (x[0] + x[1] + x[2] + x[3]) / 4.0;
    const Vec3 tangent = Vec3(-c(1), c(0), 0.0).normalized();
    EXPECT_GT(flow.directions[e].dot(tangent), std::cos(10.0 * std::numbers::pi / 180));
  }
}

TEST(PotentialFlow, UndulatingYarnFollowsCentreline) {
  // phase chosen so the yarn is flat where it meets the inlet and outlet planes
  const double amp = 0.3, wave = 2.0;
  const Mesh param = box_mesh({Vec3::Zero(), Vec3(4, 0.5, 0.3)}, {64, 2, 2});
  const Mesh m = mapped(param, [&](const Vec3& p) {
    return Vec3(p(0), p(1), p(2) + amp * std::cos(2 * std::numbers::pi * p(0) / wave));
  });
  const auto inlet = faces_where(m, param, [](const Vec3& p) { return p(0) == 0.0; });
  const auto outlet = faces_where(m, param, [](const Vec3& p) { return p(0) == 4.0; });
  const auto flow = potential_flow_directions(m, 0, inlet, outlet);
  int checked = 0;
  for (std::size_t e = 0; e < flow.tets.size(); ++e) {
    const auto x = tet_coords(m, flow.tets[e]);
    const double cx = (x[0] + x[1] + x[2] + x[3])(0) / 4.0;
    const double slope = -std::sin(2 * std::numbers::pi * cx / wave);
    if (std::abs(slope) < 0.5) continue;
    EXPECT_EQ(flow.directions[e](2) > 0, slope > 0) << "x = " << cx;
    ++checked;
  }
  EXPECT_GT(checked, static_cast<int>(flow.tets.size()) / 3);
}

TEST(PotentialFlow, RejectsBadInput) {
  Mesh m = box_mesh({Vec3::Zero(), Vec3(4, 1, 1)}, {4, 1, 1});
  const auto inlet = faces_where(m, m, [](const Vec3& x) { return x(0) == 0.0; });
  const auto outlet = faces_where(m, m, [](const Vec3& x) { return x(0) == 4.0; });
  EXPECT_THROW(potential_flow_directions(m, 0, {}, outlet), std::invalid_argument);
  EXPECT_THROW(potential_flow_directions(m, 0, inlet, {}), std::invalid_argument);
  EXPECT_THROW(potential_flow_directions(m, 0, inlet, inlet), std::invalid_argument);
  EXPECT_THROW(potential_flow_directions(m, 7, inlet, outlet), std::invalid_argument);
  // cut the middle column out of the region: two disconnected pieces remain
  for (int t = 0; t < static_cast<int>(m.tets.size()); ++t) {
    const auto x = tet_coords(m, t);
    const double cx = (x[0] + x[1] + x[2] + x[3])(0) / 4.0;
    if (cx > 1.0 && cx < 2.0) m.tets[t].region = 1;
  }
  try {
    potential_flow_directions(m, 0, inlet, outlet);
    FAIL() << "disconnected region accepted";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("face-connected"), std::string::npos);
  }
}
