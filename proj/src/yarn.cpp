#include "frc/yarn.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace frc {

Mat6 local_compliance(const TransIsoParams& p) {
  Mat6 s = Mat6::Zero();
  s(0, 0) = s(1, 1) = 1.0 / p.Ep;
  s(0, 1) = s(1, 0) = -p.nu_p / p.Ep;
  s(0, 2) = s(2, 0) = s(1, 2) = s(2, 1) = -p.nu_pz / p.Ez;
  s(2, 2) = 1.0 / p.Ez;
  s(3, 3) = 1.0 / p.Gp();
  s(4, 4) = s(5, 5) = 1.0 / p.Gzp;
  return s;
}

void TransIsoParams::validate() const {
  if (!(Ep > 0.0) || !(Ez > 0.0) || !(Gzp > 0.0)) {
    throw std::invalid_argument("transversely isotropic moduli must be positive");
  }
  if (!(nu_p > -1.0)) throw std::invalid_argument("nu_p must exceed -1");
  const Eigen::SelfAdjointEigenSolver<Mat6> eig(local_compliance(*this));
  const double lo = eig.eigenvalues().minCoeff();
  if (!(lo > 0.0)) {
    std::ostringstream msg;
    msg << "transversely isotropic stiffness is not positive definite (compliance eigenvalue "
        << lo << ")";
    throw std::invalid_argument(msg.str());
  }
}

Mat6 local_stiffness(const TransIsoParams& p) {
  p.validate();
  const Mat6 c = local_compliance(p).inverse();
  return 0.5 * (c + c.transpose());
}

TransIsoParams isotropic_from_fibre(double Ef, double nu_f) {
  return {Ef, nu_f, Ef, nu_f, Ef / (2.0 * (1.0 + nu_f))};
}

Mat6 element_stiffness_global(const TransIsoParams& p, const Vec3& dir) {
  return rotate_stiffness(local_stiffness(p), Basis3::from_axis(dir));
}

namespace {

int find(std::vector<int>& parent, int i) {
  while (parent[i] != i) i = parent[i] = parent[parent[i]];
  return i;
}

Face sorted(Face f) {
  std::sort(f.begin(), f.end());
  return f;
}

constexpr std::array<std::array<int, 3>, 4> kFaces{{{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}}};

}  // namespace

FlowResult potential_flow_directions(const Mesh& mesh, int region, const std::vector<Face>& inlet,
                                     const std::vector<Face>& outlet) {
  if (inlet.empty() || outlet.empty()) {
    throw std::invalid_argument("potential flow: inlet and outlet face sets must be non-empty");
  }
  FlowResult out;
  for (int t = 0; t < static_cast<int>(mesh.tets.size()); ++t) {
    if (mesh.tets[t].region == region) out.tets.push_back(t);
  }
  if (out.tets.empty()) {
    throw std::invalid_argument("potential flow: region " + std::to_string(region) + " is empty");
  }

  // face adjacency inside the region
  const int ne = static_cast<int>(out.tets.size());
  std::map<Face, int> owner;
  std::vector<int> parent(ne);
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<std::vector<int>> neighbours(ne);
  for (int e = 0; e < ne; ++e) {
    const auto& n = mesh.tets[out.tets[e]].n;
    for (const auto& f : kFaces) {
      const Face key = sorted({n[f[0]], n[f[1]], n[f[2]]});
      auto [it, fresh] = owner.try_emplace(key, e);
      if (fresh) continue;
      neighbours[e].push_back(it->second);
      neighbours[it->second].push_back(e);
      parent[find(parent, e)] = find(parent, it->second);
    }
  }
  for (int e = 1; e < ne; ++e) {
    if (find(parent, e) != find(parent, 0)) {
      throw std::invalid_argument("potential flow: region " + std::to_string(region) +
                                  " is not face-connected (tet " +
                                  std::to_string(out.tets[e]) + ")");
    }
  }

  // compact node numbering
  std::vector<int> local(mesh.nodes.size(), -1);
  std::vector<int> global;
  for (int t : out.tets) {
    for (int id : mesh.tets[t].n) {
      if (local[id] < 0) {
        local[id] = static_cast<int>(global.size());
        global.push_back(id);
      }
    }
  }
  const int nn = static_cast<int>(global.size());
  std::vector<double> fixed(nn, std::numeric_limits<double>::quiet_NaN());
  auto mark = [&](const std::vector<Face>& faces, double value, const char* name) {
    for (const auto& f : faces) {
      for (int id : f) {
        if (id < 0 || id >= static_cast<int>(mesh.nodes.size()) || local[id] < 0) {
          throw std::invalid_argument(std::string("potential flow: ") + name + " node " +
                                      std::to_string(id) + " is not on the region");
        }
        double& v = fixed[local[id]];
        if (!std::isnan(v) && v != value) {
          throw std::invalid_argument("potential flow: inlet and outlet share node " +
                                      std::to_string(id));
        }
        v = value;
      }
    }
  };
  mark(inlet, 0.0, "inlet");
  mark(outlet, 1.0, "outlet");

  std::vector<TetGradients> grads(ne);
  std::vector<double> vols(ne);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(16 * ne);
  for (int e = 0; e < ne; ++e) {
    const auto x = tet_coords(mesh, out.tets[e]);
    grads[e] = tet_gradients(x);
    vols[e] = std::abs(tet_volume(x[0], x[1], x[2], x[3]));
    const Eigen::Matrix4d ke = vols[e] * grads[e].transpose() * grads[e];
    const auto& n = mesh.tets[out.tets[e]].n;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) trip.emplace_back(local[n[a]], local[n[b]], ke(a, b));
  }
  Eigen::SparseMatrix<double> k(nn, nn);
  k.setFromTriplets(trip.begin(), trip.end());

  // reduce onto free nodes
  std::vector<int> free_index(nn, -1);
  int nf = 0;
  for (int i = 0; i < nn; ++i)
    if (std::isnan(fixed[i])) free_index[i] = nf++;
  Eigen::VectorXd phi(nn);
  for (int i = 0; i < nn; ++i) phi(i) = std::isnan(fixed[i]) ? 0.0 : fixed[i];
  if (nf > 0) {
    std::vector<Eigen::Triplet<double>> red;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf);
    for (int c = 0; c < k.outerSize(); ++c) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(k, c); it; ++it) {
        const int r = free_index[it.row()];
        if (r < 0) continue;
        const int cf = free_index[it.col()];
        if (cf >= 0) {
          red.emplace_back(r, cf, it.value());
        } else {
          rhs(r) -= it.value() * fixed[it.col()];
        }
      }
    }
    Eigen::SparseMatrix<double> kr(nf, nf);
    kr.setFromTriplets(red.begin(), red.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(kr);
    if (solver.info() != Eigen::Success) {
      throw std::runtime_error("potential flow: factorisation failed");
    }
    const Eigen::VectorXd sol = solver.solve(rhs);
    for (int i = 0; i < nn; ++i)
      if (free_index[i] >= 0) phi(i) = sol(free_index[i]);
  }

  const Eigen::VectorXd reaction = k * phi;
  for (int i = 0; i < nn; ++i) {
    if (std::isnan(fixed[i])) continue;
    if (fixed[i] == 0.0) {
      out.inlet_flux -= reaction(i);
    } else {
      out.outlet_flux += reaction(i);
    }
  }

  out.phi.assign(mesh.nodes.size(), std::numeric_limits<double>::quiet_NaN());
  for (int i = 0; i < nn; ++i) out.phi[global[i]] = phi(i);

  // gradients; a zero gradient only arises from degenerate boundary data
  const Box b = mesh.bbox();
  const double floor = 1e-12 / std::max(b.diagonal(), 1e-300);
  out.directions.assign(ne, Vec3::Zero());
  std::vector<bool> ok(ne, false);
  for (int e = 0; e < ne; ++e) {
    Eigen::Vector4d pe;
    const auto& n = mesh.tets[out.tets[e]].n;
    for (int a = 0; a < 4; ++a) pe(a) = phi(local[n[a]]);
    const Vec3 g = grads[e] * pe;
    if (g.norm() > floor) {
      out.directions[e] = g.normalized();
      ok[e] = true;
    }
  }
  for (int e = 0; e < ne; ++e) {
    if (ok[e]) continue;
    Vec3 sum = Vec3::Zero();
    for (int nb : neighbours[e])
      if (ok[nb]) sum += out.directions[nb];
    if (sum.norm() == 0.0) {
      throw std::runtime_error("potential flow: tet " + std::to_string(out.tets[e]) +
                               " and its neighbours have zero gradient");
    }
    out.directions[e] = sum.normalized();
    out.fallback.push_back(out.tets[e]);
  }
  return out;
}

double section_flux(const Mesh& mesh, const FlowResult& flow,
                    const std::function<bool(int)>& upstream) {
  double flux = 0.0;
  for (int t : flow.tets) {
    const auto& n = mesh.tets[t].n;
    const auto x = tet_coords(mesh, t);
    const TetGradients g = tet_gradients(x);
    const double vol = std::abs(tet_volume(x[0], x[1], x[2], x[3]));
    Eigen::Vector4d pe, w;
    for (int a = 0; a < 4; ++a) {
      pe(a) = flow.phi[n[a]];
      w(a) = upstream(n[a]) ? 1.0 : 0.0;
    }
    flux -= vol * (g * w).dot(g * pe);
  }
  return flux;
}

}  // namespace frc
