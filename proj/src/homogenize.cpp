#include "frc/homogenize.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

namespace frc {

const char* to_string(BCKind kind) {
  switch (kind) {
    case BCKind::LinearDisplacement: return "linear_displacement";
    case BCKind::Periodic: return "periodic";
    case BCKind::UniformTraction: return "uniform_traction";
  }
  return "?";
}

BCKind bc_kind_from_string(const std::string& name) {
  if (name == "linear_displacement" || name == "linear") return BCKind::LinearDisplacement;
  if (name == "periodic") return BCKind::Periodic;
  if (name == "uniform_traction" || name == "traction") return BCKind::UniformTraction;
  throw std::invalid_argument("unknown boundary condition '" + name +
                              "' (linear_displacement, periodic, uniform_traction)");
}

RegionMaterial RegionMaterial::plastic_matrix(const MatrixParams& p) {
  RegionMaterial m;
  m.kind = Kind::Matrix;
  m.matrix = p;
  return m;
}

RegionMaterial RegionMaterial::isotropic(double E, double nu) {
  RegionMaterial m;
  m.kind = Kind::Isotropic;
  m.E = E;
  m.nu = nu;
  return m;
}

RegionMaterial RegionMaterial::transverse(const TransIsoParams& p) {
  RegionMaterial m;
  m.kind = Kind::Yarn;
  m.yarn = p;
  return m;
}

void Materials::validate(const Mesh& mesh) const {
  for (const auto& [id, m] : regions) {
    switch (m.kind) {
      case RegionMaterial::Kind::Matrix: m.matrix.validate(); break;
      case RegionMaterial::Kind::Isotropic: elastic_stiffness(m.E, m.nu); break;
      case RegionMaterial::Kind::Yarn: m.yarn.validate(); break;
    }
  }
  for (int r : mesh.regions()) {
    auto it = regions.find(r);
    if (it == regions.end()) {
      throw std::invalid_argument("no material bound to region " + std::to_string(r));
    }
    if (it->second.kind == RegionMaterial::Kind::Yarn && mesh.directions.empty()) {
      throw std::invalid_argument("region " + std::to_string(r) +
                                  " is a yarn but the mesh carries no directions");
    }
  }
  if (!mesh.cohesive.empty()) cohesive.validate();
}

// ---------------------------------------------------------------- dofs

namespace {

struct UnionFind {
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  // keeps the smaller index as root
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent[b] = a;
  }
  std::vector<int> parent;
};

}  // namespace

DofMap DofMap::build(const Mesh& mesh, bool tie_cohesive) {
  const int n = static_cast<int>(mesh.nodes.size());
  UnionFind uf(n);
  if (tie_cohesive) {
    for (const auto& c : mesh.cohesive)
      for (int k = 0; k < 3; ++k) uf.unite(c.n[k], c.n[k + 3]);
  }
  DofMap d;
  d.node_to_slot.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    if (uf.find(i) == i) {
      d.node_to_slot[i] = d.slots++;
      d.slot_node.push_back(i);
    }
  }
  for (int i = 0; i < n; ++i) d.node_to_slot[i] = d.node_to_slot[uf.find(i)];
  return d;
}

// ---------------------------------------------------------------- constraints

namespace {

double mesh_volume(const Mesh& mesh) {
  double v = 0.0;
  for (int t = 0; t < static_cast<int>(mesh.tets.size()); ++t) v += tet_volume(mesh, t);
  return v;
}

struct RowBuilder {
  std::vector<Eigen::Triplet<double>> c;
  std::vector<Vec6> d;
  int add(const Vec6& drow) {
    d.push_back(drow);
    return static_cast<int>(d.size()) - 1;
  }
  ConstraintSystem finish(BCKind kind, int ndof, double volume) {
    ConstraintSystem s;
    s.kind = kind;
    s.volume = volume;
    s.C.resize(static_cast<int>(d.size()), ndof);
    s.C.setFromTriplets(c.begin(), c.end());
    s.D.resize(static_cast<int>(d.size()), 6);
    for (std::size_t i = 0; i < d.size(); ++i) s.D.row(i) = d[i].transpose();
    return s;
  }
};

}  // namespace

ConstraintSystem build_constraints(const Mesh& mesh, BCKind kind, const DofMap& dofs) {
  const double volume = mesh_volume(mesh);
  RowBuilder rb;
  auto coords = [&](int slot) -> const Vec3& { return mesh.nodes[dofs.slot_node[slot]]; };
  int kinematic = 0, rigid = 0;

  if (kind == BCKind::LinearDisplacement) {
    std::set<int> slots;
    for (const auto& f : boundary_faces(mesh))
      for (int v : f.n) slots.insert(dofs.node_to_slot[v]);
    for (int s : slots) {
      const Mat36 x = coordinate_matrix(coords(s));
      for (int i = 0; i < 3; ++i) {
        const int r = rb.add(x.row(i).transpose());
        rb.c.emplace_back(r, 3 * s + i, 1.0);
      }
    }
    kinematic = static_cast<int>(rb.d.size());
  } else if (kind == BCKind::Periodic) {
    std::vector<PeriodicPair> pairs = mesh.periodic;
    if (pairs.empty()) {
      const Box box = mesh.bbox();
      pairs = detect_periodic_pairs(mesh, box, 1e-8 * box.diagonal());
    }
    if (pairs.empty()) throw SolveError("periodic conditions need node pairs on opposite faces");
    UnionFind uf(dofs.slots);
    for (const auto& p : pairs) uf.unite(dofs.node_to_slot[p.master], dofs.node_to_slot[p.slave]);
    for (int s = 0; s < dofs.slots; ++s) {
      const int root = uf.find(s);
      if (root == s) continue;
      const Mat36 x = coordinate_matrix(coords(s) - coords(root));
      for (int i = 0; i < 3; ++i) {
        const int r = rb.add(x.row(i).transpose());
        rb.c.emplace_back(r, 3 * s + i, 1.0);
        rb.c.emplace_back(r, 3 * root + i, -1.0);
      }
    }
    kinematic = static_cast<int>(rb.d.size());
    for (int i = 0; i < 3; ++i) rb.c.emplace_back(rb.add(Vec6::Zero()), i, 1.0);
    rigid = 3;
  } else {
    // Rows are scaled by V^(-2/3) so that both blocks are O(1); D follows.
    const double a = std::pow(volume, 2.0 / 3.0);
    const auto faces = boundary_faces(mesh);
    // strain rows: int sym(u (x) n) dA = V eps_bar
    static constexpr int kDir[6][2] = {{0, 0}, {1, 1}, {2, 2}, {0, 1}, {1, 2}, {2, 0}};
    for (int k = 0; k < 6; ++k) rb.add(volume / a * Vec6::Unit(k));
    for (int k = 6; k < 12; ++k) rb.add(Vec6::Zero());
    for (const auto& f : faces) {
      const double w = f.area / 3.0 / a;
      const Vec3& n = f.normal;
      for (int v : f.n) {
        const int s = dofs.node_to_slot[v];
        for (int k = 0; k < 6; ++k) {
          const auto [i, j] = kDir[k];
          if (i == j) {
            rb.c.emplace_back(k, 3 * s + i, w * n(i));
          } else {
            rb.c.emplace_back(k, 3 * s + i, w * n(j));
            rb.c.emplace_back(k, 3 * s + j, w * n(i));
          }
        }
        // rigid translation: mean boundary displacement vanishes
        for (int i = 0; i < 3; ++i) rb.c.emplace_back(6 + i, 3 * s + i, w);
        // rigid rotation: skew part of int u (x) n vanishes
        for (int k = 0; k < 3; ++k) {
          const int i = kDir[3 + k][0], j = kDir[3 + k][1];
          rb.c.emplace_back(9 + k, 3 * s + i, w * n(j));
          rb.c.emplace_back(9 + k, 3 * s + j, -w * n(i));
        }
      }
    }
    kinematic = 6;
    rigid = 6;
  }
  ConstraintSystem sys = rb.finish(kind, dofs.ndof(), volume);
  sys.kinematic_rows = kinematic;
  sys.rigid_rows = rigid;
  return sys;
}

ConstraintSystem build_constraints(const Mesh& mesh, BCKind kind) {
  return build_constraints(mesh, kind, DofMap::build(mesh, false));
}

// ---------------------------------------------------------------- assembly

PointStates PointStates::initial(const Mesh& mesh) {
  PointStates s;
  s.tets.assign(mesh.tets.size(), PlasticState{});
  s.cohesive.assign(mesh.cohesive.size(), {});
  return s;
}

std::vector<Mat6> elastic_moduli(const Mesh& mesh, const Materials& mats) {
  std::vector<Mat6> out(mesh.tets.size());
  std::map<int, Mat6> iso;
  for (const auto& [id, m] : mats.regions) {
    if (m.kind == RegionMaterial::Kind::Matrix) iso[id] = elastic_stiffness(m.matrix);
    if (m.kind == RegionMaterial::Kind::Isotropic) iso[id] = elastic_stiffness(m.E, m.nu);
  }
  for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
    const int r = mesh.tets[t].region;
    const auto& m = mats.regions.at(r);
    out[t] = m.kind == RegionMaterial::Kind::Yarn ? element_stiffness_global(m.yarn, mesh.directions[t])
                                                  : iso.at(r);
  }
  return out;
}

namespace {

using Mat612 = Eigen::Matrix<double, 6, 12>;
using Mat12 = Eigen::Matrix<double, 12, 12>;
using Vec12 = Eigen::Matrix<double, 12, 1>;

Mat612 strain_matrix(const TetGradients& g) {
  Mat612 b = Mat612::Zero();
  for (int a = 0; a < 4; ++a) {
    const double gx = g(0, a), gy = g(1, a), gz = g(2, a);
    const int c = 3 * a;
    b(0, c) = gx;
    b(1, c + 1) = gy;
    b(2, c + 2) = gz;
    b(3, c) = gy;
    b(3, c + 1) = gx;
    b(4, c + 1) = gz;
    b(4, c + 2) = gy;
    b(5, c) = gz;
    b(5, c + 2) = gx;
  }
  return b;
}

// Runs f(i) for i in [0, n) on `threads` workers. The exception of the lowest
// failing index is rethrown so failures are reported deterministically.
template <class F>
void parallel_for(int n, int threads, F&& f) {
  threads = std::max(1, std::min(threads, n));
  int failed = n;
  std::exception_ptr error;
  std::mutex mu;
  auto work = [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      try {
        f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < failed) {
          failed = i;
          error = std::current_exception();
        }
        return;
      }
    }
  };
  if (threads == 1) {
    work(0, n);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n + threads - 1) / threads;
    for (int k = 0; k < threads; ++k) pool.emplace_back(work, k * chunk, std::min(n, (k + 1) * chunk));
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace

Assembly assemble(const Mesh& mesh, const Materials& mats, const DofMap& dofs,
                  const PointStates& states, const Eigen::VectorXd& u,
                  const ActiveSet& active, int threads, const std::vector<Mat6>& moduli) {
  const std::vector<Mat6> own = moduli.empty() ? elastic_moduli(mesh, mats) : std::vector<Mat6>{};
  const std::vector<Mat6>& cel = moduli.empty() ? own : moduli;
  const int nt = static_cast<int>(mesh.tets.size());
  const bool tied = mats.cohesive.tied();
  const int nc = tied ? 0 : static_cast<int>(mesh.cohesive.size());

  Assembly a;
  a.states = states;
  a.tet_stress.assign(nt, Stress6{});
  a.tet_volume.assign(nt, 0.0);
  a.branch.assign(nt, HardeningBranch::Tension);
  a.sign_consistent.assign(nt, 1);
  a.omega.assign(mesh.cohesive.size(), {0.0, 0.0, 0.0});
  a.modes.assign(mesh.cohesive.size(), {});
  a.modes_consistent.assign(mesh.cohesive.size(), 1);

  std::vector<Mat12> ke(nt);
  std::vector<Vec12> fe(nt);
  std::vector<std::array<int, 12>> te(nt);
  parallel_for(nt, threads, [&](int t) {
    const auto x = tet_coords(mesh, t);
    const Mat612 b = strain_matrix(tet_gradients(x));
    const double vol = tet_volume(x[0], x[1], x[2], x[3]);
    Vec12 ue;
    for (int k = 0; k < 4; ++k)
      for (int i = 0; i < 3; ++i) {
        te[t][3 * k + i] = dofs.dof(mesh.tets[t].n[k], i);
        ue(3 * k + i) = u(te[t][3 * k + i]);
      }
    const Strain6 eps(b * ue);
    const auto& mat = mats.regions.at(mesh.tets[t].region);
    Stress6 sigma;
    Mat6 tangent;
    if (mat.kind == RegionMaterial::Kind::Matrix && mat.matrix.plastic) {
      const BranchChoice choice = active.branches.empty() ? BranchChoice::Auto : active.branches[t];
      MaterialResponse r;
      try {
        r = return_map(eps, states.tets[t], mat.matrix, 1e-8, choice);
      } catch (const ReturnMapError& e) {
        throw SolveError("tet " + std::to_string(t) + ": " + e.what());
      }
      sigma = r.sigma;
      tangent = r.tangent;
      a.states.tets[t] = r.state;
      a.branch[t] = r.branch;
      a.sign_consistent[t] = r.sign_consistent;
    } else {
      tangent = cel[t];
      sigma = Stress6(tangent * eps.vec());
    }
    a.tet_stress[t] = sigma;
    a.tet_volume[t] = vol;
    ke[t] = vol * b.transpose() * tangent * b;
    fe[t] = vol * b.transpose() * sigma.vec();
  });

  std::vector<Mat18> kc(nc);
  std::vector<Vec18> fc(nc);
  std::vector<std::array<int, 18>> ce(nc);
  parallel_for(nc, threads, [&](int c) {
    std::array<Vec3, 6> x;
    Vec18 ue;
    for (int k = 0; k < 6; ++k) {
      const int node = mesh.cohesive[c].n[k];
      x[k] = mesh.nodes[node];
      for (int i = 0; i < 3; ++i) {
        ce[c][3 * k + i] = dofs.dof(node, i);
        ue(3 * k + i) = u(ce[c][3 * k + i]);
      }
    }
    CohesiveElementResponse r;
    try {
      r = cohesive_element(x, ue, states.cohesive[c], mats.cohesive, mats.consistent_cohesive,
                           active.cohesive.empty() ? std::array<CohesiveMode, 3>{} : active.cohesive[c]);
    } catch (const std::exception& e) {
      throw SolveError("interface element " + std::to_string(c) + ": " + e.what());
    }
    kc[c] = r.K;
    fc[c] = r.f_int;
    a.states.cohesive[c] = r.states;
    a.omega[c] = r.omega;
    a.modes[c] = r.modes;
    a.modes_consistent[c] = r.modes_consistent;
  });

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(144 * static_cast<std::size_t>(nt) + 324 * static_cast<std::size_t>(nc));
  a.f_int = Eigen::VectorXd::Zero(dofs.ndof());
  for (int t = 0; t < nt; ++t) {
    for (int i = 0; i < 12; ++i) {
      a.f_int(te[t][i]) += fe[t](i);
      for (int j = 0; j < 12; ++j) trip.emplace_back(te[t][i], te[t][j], ke[t](i, j));
    }
  }
  for (int c = 0; c < nc; ++c) {
    for (int i = 0; i < 18; ++i) {
      a.f_int(ce[c][i]) += fc[c](i);
      for (int j = 0; j < 18; ++j) trip.emplace_back(ce[c][i], ce[c][j], kc[c](i, j));
    }
  }
  a.K.resize(dofs.ndof(), dofs.ndof());
  a.K.setFromTriplets(trip.begin(), trip.end());
  return a;
}

Stress6 volume_average(const Assembly& a) {
  Vec6 s = Vec6::Zero();
  double v = 0.0;
  for (std::size_t t = 0; t < a.tet_stress.size(); ++t) {
    s += a.tet_volume[t] * a.tet_stress[t].vec();
    v += a.tet_volume[t];
  }
  return Stress6(s / v);
}

Stress6 homogenized_stress(const ConstraintSystem& sys, const Eigen::VectorXd& lambda) {
  return Stress6(sys.D.transpose() * lambda / sys.volume);
}

// ---------------------------------------------------------------- saddle solve

namespace {

// [K  C~^T  0 ; C~  0  -G ; 0  -G^T  0] with C~ = S C and G the scaled free
// strain columns of S D. Row and column scales bring every block to the size
// of the stiffness diagonal before the LU factorisation.
class Saddle {
 public:
  Saddle(const Eigen::SparseMatrix<double>& K, const ConstraintSystem& sys,
         const std::vector<int>& free)
      : sys_(sys), free_(free), n_(static_cast<int>(K.rows())), m_(sys.rows()) {
    double kscale = 0.0;
    for (int i = 0; i < n_; ++i) kscale += std::abs(K.coeff(i, i));
    kscale = n_ > 0 ? kscale / n_ : 1.0;
    if (!(kscale > 0.0)) kscale = 1.0;
    Eigen::VectorXd cmax = Eigen::VectorXd::Zero(m_);
    for (int k = 0; k < sys.C.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(sys.C, k); it; ++it)
        cmax(it.row()) = std::max(cmax(it.row()), std::abs(it.value()));
    s_.resize(m_);
    for (int i = 0; i < m_; ++i) {
      if (cmax(i) == 0.0) throw SolveError("constraint row " + std::to_string(i) + " is empty");
      s_(i) = kscale / cmax(i);
    }
    const int nf = static_cast<int>(free.size());
    c_.resize(nf);
    for (int j = 0; j < nf; ++j) {
      const double g = (s_.asDiagonal() * sys.D.col(free[j])).cwiseAbs().maxCoeff();
      if (g == 0.0) throw SolveError("free macro strain slot does not enter the constraints");
      c_(j) = kscale / g;
    }

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(K.nonZeros() + 2 * sys.C.nonZeros() + 2 * static_cast<std::size_t>(m_) * nf);
    for (int k = 0; k < K.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(K, k); it; ++it)
        trip.emplace_back(it.row(), it.col(), it.value());
    for (int k = 0; k < sys.C.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(sys.C, k); it; ++it) {
        const double v = s_(it.row()) * it.value();
        trip.emplace_back(n_ + it.row(), it.col(), v);
        trip.emplace_back(it.col(), n_ + it.row(), v);
      }
    for (int j = 0; j < nf; ++j)
      for (int i = 0; i < m_; ++i) {
        const double v = -s_(i) * sys.D(i, free[j]) * c_(j);
        if (v == 0.0) continue;
        trip.emplace_back(n_ + i, n_ + m_ + j, v);
        trip.emplace_back(n_ + m_ + j, n_ + i, v);
      }
    const int size = n_ + m_ + nf;
    Eigen::SparseMatrix<double> A(size, size);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    lu_.compute(A);
    if (lu_.info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "saddle system of size " << size << " (" << n_ << " displacement, " << m_
          << " multiplier unknowns) is singular: " << lu_.lastErrorMessage()
          << "; check for floating parts or redundant constraints";
      throw SolveError(msg.str());
    }
  }

  struct Step {
    Eigen::VectorXd du;
    Eigen::VectorXd dlambda;
    Eigen::VectorXd deps_free;
  };

  // r_u: force residual, r_c: constraint residual, r_s: D_f^T lambda
  Step solve(const Eigen::VectorXd& r_u, const Eigen::VectorXd& r_c, const Eigen::VectorXd& r_s) {
    const int nf = static_cast<int>(free_.size());
    Eigen::VectorXd rhs(n_ + m_ + nf);
    rhs.head(n_) = r_u;
    rhs.segment(n_, m_) = s_.cwiseProduct(r_c);
    if (nf) rhs.tail(nf) = -c_.cwiseProduct(r_s);
    const Eigen::VectorXd z = lu_.solve(rhs);
    if (!z.allFinite()) throw SolveError("saddle solve produced non-finite values");
    Step st;
    st.du = z.head(n_);
    st.dlambda = -s_.cwiseProduct(z.segment(n_, m_));
    st.deps_free = nf ? Eigen::VectorXd(c_.cwiseProduct(z.tail(nf))) : Eigen::VectorXd();
    return st;
  }

 private:
  const ConstraintSystem& sys_;
  std::vector<int> free_;
  int n_, m_;
  Eigen::VectorXd s_, c_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
};

}  // namespace

Mat6 homogenized_stiffness(const ConstraintSystem& sys, const Eigen::SparseMatrix<double>& K) {
  Saddle saddle(K, sys, {});
  Mat6 out;
  const Eigen::VectorXd zero_u = Eigen::VectorXd::Zero(K.rows());
  for (int k = 0; k < 6; ++k) {
    const auto st = saddle.solve(zero_u, sys.D.col(k), Eigen::VectorXd());
    out.col(k) = sys.D.transpose() * st.dlambda / sys.volume;
  }
  return out;
}

// ---------------------------------------------------------------- problem

RveProblem::RveProblem(Mesh mesh, Materials mats, BCKind kind, SolverOptions opt)
    : mesh_(std::move(mesh)), mats_(std::move(mats)), opt_(opt) {
  mesh_.validate();
  mats_.validate(mesh_);
  dofs_ = DofMap::build(mesh_, mats_.cohesive.tied());
  std::vector<char> used(dofs_.slots, 0);
  for (const auto& t : mesh_.tets)
    for (int v : t.n) used[dofs_.node_to_slot[v]] = 1;
  for (int s = 0; s < dofs_.slots; ++s) {
    if (!used[s]) {
      throw SolveError("node " + std::to_string(dofs_.slot_node[s]) + " belongs to no tet");
    }
  }
  sys_ = build_constraints(mesh_, kind, dofs_);
  moduli_ = elastic_moduli(mesh_, mats_);
  double sigma_ref = 1.0;
  for (const auto& [id, m] : mats_.regions) {
    if (m.kind == RegionMaterial::Kind::Matrix) {
      sigma_ref = m.matrix.sigma_t0;
      break;
    }
  }
  atol_ = opt_.atol >= 0.0 ? opt_.atol : 1e-10 * sigma_ref * std::pow(sys_.volume, 2.0 / 3.0);
  u_ = Eigen::VectorXd::Zero(dofs_.ndof());
  lambda_ = Eigen::VectorXd::Zero(sys_.rows());
  states_ = PointStates::initial(mesh_);
  asm_ = assemble(mesh_, mats_, dofs_, states_, u_, {}, opt_.threads, moduli_);
}

Stress6 RveProblem::macro_stress() const { return homogenized_stress(sys_, lambda_); }

Stress6 RveProblem::volume_average_stress() const { return volume_average(asm_); }

NewtonReport RveProblem::newton_solve(const Strain6& target, const ControlMask& mask) {
  std::vector<int> free;
  for (int k = 0; k < 6; ++k)
    if (!mask[k]) free.push_back(k);
  const int nf = static_cast<int>(free.size());

  Eigen::VectorXd u = u_, lambda = lambda_;
  Strain6 eps = eps_;
  for (int k = 0; k < 6; ++k)
    if (mask[k]) eps[k] = target[k];

  const double length = std::cbrt(sys_.volume);
  ActiveSet active;
  active.branches.assign(mesh_.tets.size(), BranchChoice::Auto);
  active.cohesive.assign(mesh_.cohesive.size(), {});
  auto& branches = active.branches;

  struct Eval {
    Assembly a;
    Eigen::VectorXd r_u, r_c, r_s;
    double force = 0.0, f_ref = 0.0, cons = 0.0;
  };
  auto evaluate = [&](const Eigen::VectorXd& uu, const Eigen::VectorXd& ll, const Strain6& ee) {
    Eval ev;
    ev.a = assemble(mesh_, mats_, dofs_, states_, uu, active, opt_.threads, moduli_);
    for (std::size_t c = 0; c < active.cohesive.size(); ++c)
      for (int k = 0; k < 3; ++k)
        if (!active.cohesive[c][k].fixed) active.cohesive[c][k] = ev.a.modes[c][k];
    for (std::size_t t = 0; t < branches.size(); ++t) {
      if (branches[t] != BranchChoice::Auto) continue;
      switch (ev.a.branch[t]) {
        case HardeningBranch::Tension: branches[t] = BranchChoice::Tension; break;
        case HardeningBranch::Compression: branches[t] = BranchChoice::Compression; break;
        case HardeningBranch::Neutral: branches[t] = BranchChoice::Neutral; break;
      }
    }
    const Eigen::VectorXd reaction = sys_.C.transpose() * ll;
    ev.r_u = reaction - ev.a.f_int;
    ev.r_c = sys_.D * ee.vec() - sys_.C * uu;
    ev.r_s.resize(nf);
    for (int j = 0; j < nf; ++j) ev.r_s(j) = sys_.D.col(free[j]).dot(ll);
    ev.f_ref = std::max(ev.a.f_int.norm(), reaction.norm());
    ev.force = std::sqrt(ev.r_u.squaredNorm() + ev.r_s.squaredNorm() / (length * length));
    for (int i = 0; i < sys_.rows(); ++i) {
      ev.cons = std::max(ev.cons, std::abs(ev.r_c(i)) / sys_.C.row(i).cwiseAbs().sum());
    }
    if (!std::isfinite(ev.force) || !std::isfinite(ev.cons)) throw SolveError("non-finite residual");
    return ev;
  };
  const double cons_tol = 1e-10 * length;

  NewtonReport report;
  Eval ev;
  for (int pass = 0;; ++pass) {
    bool converged = false;
    ev = evaluate(u, lambda, eps);
    for (int it = 0;; ++it) {
      report.residuals.push_back(ev.f_ref > 0.0 ? ev.force / ev.f_ref : ev.force);
      if (ev.force <= opt_.rtol * ev.f_ref + atol_ && ev.cons <= cons_tol) {
        converged = true;
        break;
      }
      if (it >= opt_.max_iterations) break;
      Saddle saddle(ev.a.K, sys_, free);
      const auto st = saddle.solve(ev.r_u, ev.r_c, ev.r_s);
      ++report.iterations;
      // Backtracking on the force residual once the constraints hold; the
      // last trial is kept when no step length reduces it.
      const bool search = ev.cons <= cons_tol;
      double alpha = 1.0;
      std::optional<Eval> next;
      for (int ls = 0; ls < 6; ++ls) {
        const double trial = std::ldexp(1.0, -ls);
        Strain6 e2 = eps;
        for (int j = 0; j < nf; ++j) e2[free[j]] += trial * st.deps_free(j);
        try {
          next = evaluate(u + trial * st.du, lambda + trial * st.dlambda, e2);
        } catch (const SolveError&) {
          if (!search) throw;
          next.reset();
          continue;
        }
        alpha = trial;
        if (!search || next->force <= (1.0 - 1e-4 * alpha) * ev.force) break;
      }
      if (!next) throw SolveError("no admissible Newton step length");
      u += alpha * st.du;
      lambda += alpha * st.dlambda;
      for (int j = 0; j < nf; ++j) eps[free[j]] += alpha * st.deps_free(j);
      ev = std::move(*next);
    }
    if (!converged) {
      std::ostringstream msg;
      msg << "Newton did not converge in " << opt_.max_iterations << " iterations (residual "
          << report.residuals.back() << ")";
      throw SolveError(msg.str());
    }
    bool consistent = true;
    for (std::size_t t = 0; t < branches.size(); ++t) {
      if (!ev.a.sign_consistent[t]) {
        branches[t] = BranchChoice::Auto;
        consistent = false;
      }
    }
    for (std::size_t c = 0; c < active.cohesive.size(); ++c) {
      if (!ev.a.modes_consistent[c]) {
        active.cohesive[c] = {};
        consistent = false;
      }
    }
    if (consistent) break;
    if (pass + 1 >= opt_.max_branch_passes) {
      throw SolveError("point status (hardening branch, interface contact) did not settle");
    }
  }
  u_ = u;
  lambda_ = lambda;
  eps_ = eps;
  states_ = ev.a.states;
  asm_ = std::move(ev.a);
  return report;
}

RveProblem::StepReport RveProblem::advance(const Strain6& target, const ControlMask& mask) {
  const Strain6 start = eps_;
  StepReport rep;
  double done = 0.0, size = 1.0;
  int level = 0;
  std::string last_error;
  while (done < 1.0) {
    const double next = std::min(1.0, done + size);
    Strain6 trial = start;
    for (int k = 0; k < 6; ++k)
      if (mask[k]) trial[k] = start[k] + next * (target[k] - start[k]);
    try {
      const NewtonReport nr = newton_solve(trial, mask);
      rep.iterations += nr.iterations;
      rep.residuals = nr.residuals;
      ++rep.substeps;
      done = next;
      if (level > 0 && nr.iterations <= 4) {
        size *= 2.0;
        --level;
      }
    } catch (const SolveError& e) {
      last_error = e.what();
      if (++level > opt_.max_bisections) {
        std::ostringstream msg;
        msg << "step failed after " << opt_.max_bisections << " bisections: " << last_error;
        throw SolveError(msg.str());
      }
      size *= 0.5;
    }
  }
  return rep;
}

Mat6 RveProblem::tangent_stiffness() const { return homogenized_stiffness(sys_, asm_.K); }

Eigen::VectorXd RveProblem::nodal_displacements() const {
  Eigen::VectorXd out(3 * mesh_.nodes.size());
  for (std::size_t n = 0; n < mesh_.nodes.size(); ++n)
    for (int i = 0; i < 3; ++i) out(3 * n + i) = u_(dofs_.dof(static_cast<int>(n), i));
  return out;
}

FieldSnapshot snapshot(const RveProblem& p) {
  FieldSnapshot f;
  f.displacement = p.nodal_displacements();
  const auto& a = p.last_assembly();
  f.stress = a.tet_stress;
  f.plastic_strain.reserve(p.states().tets.size());
  for (const auto& s : p.states().tets) f.plastic_strain.push_back(s.equivalent_plastic_strain());
  for (const auto& w : a.omega) f.damage.push_back((w[0] + w[1] + w[2]) / 3.0);
  return f;
}

// ---------------------------------------------------------------- program

void LoadProgram::validate() const {
  if (segments.empty()) throw std::invalid_argument("load program is empty");
  for (const auto& s : segments) {
    if (s.steps < 1) throw std::invalid_argument("load program: steps must be >= 1");
    if (!s.target.vec().allFinite()) throw std::invalid_argument("load program: non-finite strain");
  }
}

int LoadProgram::total_steps() const {
  int n = 0;
  for (const auto& s : segments) n += s.steps;
  return n;
}

HomogenizedResult run_program(const Mesh& mesh, const Materials& mats, const LoadProgram& program,
                              BCKind kind, const SolverOptions& opt,
                              const std::function<void(const StepRecord&)>& on_step) {
  program.validate();
  RveProblem p(mesh, mats, kind, opt);
  HomogenizedResult res;
  Strain6 start;
  int step = 0;
  try {
    for (const auto& seg : program.segments) {
      for (int k = 1; k <= seg.steps; ++k) {
        const Strain6 target(start.vec() + (seg.target.vec() - start.vec()) * (double(k) / seg.steps));
        const auto rep = p.advance(target, program.mask);
        StepRecord r;
        r.step = ++step;
        r.strain = p.macro_strain();
        r.stress = p.macro_stress();
        r.volume_average = p.volume_average_stress();
        r.iterations = rep.iterations;
        r.substeps = rep.substeps;
        if (program.record_tangent) r.tangent = p.tangent_stiffness();
        res.steps.push_back(r);
        if (on_step) on_step(res.steps.back());
      }
      start = seg.target;
    }
    res.completed = true;
  } catch (const SolveError& e) {
    std::ostringstream msg;
    msg << "step " << step + 1 << ": " << e.what();
    res.failure = msg.str();
  }
  res.final_fields = snapshot(p);
  return res;
}

}  // namespace frc
