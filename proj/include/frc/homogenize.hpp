#pragma once

// RVE boundary-value problem under a prescribed macro strain. Boundary
// conditions enter as Lagrange-multiplier rows C u = D eps_bar; the saddle
// system [K C^T; C 0] is solved by Newton iteration and the macro stress is
// recovered as D^T lambda / V.

#include "frc/cohesive.hpp"
#include "frc/matrix_material.hpp"
#include "frc/mesh.hpp"
#include "frc/yarn.hpp"

#include <Eigen/Sparse>

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace frc {

enum class BCKind { LinearDisplacement, Periodic, UniformTraction };

const char* to_string(BCKind kind);
BCKind bc_kind_from_string(const std::string& name);

struct RegionMaterial {
  enum class Kind { Matrix, Isotropic, Yarn };
  Kind kind = Kind::Matrix;
  MatrixParams matrix;
  double E = 0.0;  ///< isotropic solids
  double nu = 0.0;
  TransIsoParams yarn;  ///< axis taken from the mesh directions

  static RegionMaterial plastic_matrix(const MatrixParams& p);
  static RegionMaterial isotropic(double E, double nu);
  static RegionMaterial transverse(const TransIsoParams& p);
};

struct Materials {
  std::map<int, RegionMaterial> regions;
  CohesiveParams cohesive;
  bool consistent_cohesive = true;  ///< false: secant interface tangent

  /// Every tet region bound exactly once, directions present for yarns.
  void validate(const Mesh& mesh) const;
};

/// Maps mesh nodes to displacement unknowns. Tied interfaces (ft = infinity)
/// share the unknowns of their two faces, so the split mesh behaves exactly
/// like the unsplit one.
struct DofMap {
  std::vector<int> node_to_slot;  ///< slot index per node, 3 dofs per slot
  std::vector<int> slot_node;     ///< representative node per slot
  int slots = 0;

  static DofMap build(const Mesh& mesh, bool tie_cohesive);
  int ndof() const { return 3 * slots; }
  int dof(int node, int dir) const { return 3 * node_to_slot[node] + dir; }
};

struct ConstraintSystem {
  BCKind kind = BCKind::Periodic;
  Eigen::SparseMatrix<double> C;                 ///< rows x ndof
  Eigen::Matrix<double, Eigen::Dynamic, 6> D;    ///< rows x 6
  int kinematic_rows = 0;  ///< rows tied to the macro strain
  int rigid_rows = 0;      ///< rigid-body pinning rows (zero D)
  double volume = 0.0;

  int rows() const { return static_cast<int>(C.rows()); }
};

ConstraintSystem build_constraints(const Mesh& mesh, BCKind kind, const DofMap& dofs);
ConstraintSystem build_constraints(const Mesh& mesh, BCKind kind);

/// History at every integration point: one per tet (centroid rule) and three
/// per interface element.
struct PointStates {
  std::vector<PlasticState> tets;
  std::vector<std::array<CohesiveState, 3>> cohesive;

  static PointStates initial(const Mesh& mesh);
};

struct Assembly {
  Eigen::SparseMatrix<double> K;
  Eigen::VectorXd f_int;
  PointStates states;
  std::vector<Stress6> tet_stress;
  std::vector<double> tet_volume;
  std::vector<HardeningBranch> branch;      ///< per tet (matrix points only)
  std::vector<char> sign_consistent;        ///< per tet
  std::vector<std::array<double, 3>> omega;  ///< per interface element
  std::vector<std::array<CohesiveMode, 3>> modes;  ///< per interface element
  std::vector<char> modes_consistent;              ///< per interface element
};

/// Per-point status held fixed during one Newton solve so that the residual
/// is smooth; empty vectors leave every point free.
struct ActiveSet {
  std::vector<BranchChoice> branches;                 ///< per tet
  std::vector<std::array<CohesiveMode, 3>> cohesive;  ///< per interface element
};

class SolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Elastic stiffness of every tet in global axes (yarns rotated onto the
/// mesh direction).
std::vector<Mat6> elastic_moduli(const Mesh& mesh, const Materials& mats);

/// Element loop over tets and interface elements. `moduli` may be empty,
/// then it is computed. Element failures are rethrown as SolveError naming
/// the element.
Assembly assemble(const Mesh& mesh, const Materials& mats, const DofMap& dofs,
                  const PointStates& states, const Eigen::VectorXd& u,
                  const ActiveSet& active = {}, int threads = 1,
                  const std::vector<Mat6>& moduli = {});

struct SolverOptions {
  double rtol = 1e-6;
  double atol = -1.0;  ///< < 0: 1e-10 * sigma_ref * V^(2/3)
  int max_iterations = 25;
  int max_bisections = 10;  ///< smallest substep 1/2^10 of a program step
  int max_branch_passes = 8;
  int threads = 1;
};

/// Strain slots flagged true are driven, the others hold zero macro stress.
using ControlMask = std::array<bool, 6>;
inline constexpr ControlMask kAllPrescribed{true, true, true, true, true, true};

struct NewtonReport {
  int iterations = 0;
  std::vector<double> residuals;  ///< relative force residual per iteration
};

/// Converged state of the RVE and the machinery to advance it.
class RveProblem {
 public:
  RveProblem(Mesh mesh, Materials mats, BCKind kind, SolverOptions opt = {});

  const Mesh& mesh() const { return mesh_; }
  const Materials& materials() const { return mats_; }
  const DofMap& dofs() const { return dofs_; }
  const ConstraintSystem& constraints() const { return sys_; }
  const SolverOptions& options() const { return opt_; }
  double volume() const { return sys_.volume; }

  const Eigen::VectorXd& u() const { return u_; }
  const Eigen::VectorXd& lambda() const { return lambda_; }
  const PointStates& states() const { return states_; }
  const Assembly& last_assembly() const { return asm_; }
  const Strain6& macro_strain() const { return eps_; }
  Stress6 macro_stress() const;
  Stress6 volume_average_stress() const;

  /// One Newton solve to the target (free slots of `mask` are solved for).
  /// Throws SolveError without touching the converged state on failure.
  NewtonReport newton_solve(const Strain6& target, const ControlMask& mask = kAllPrescribed);

  /// Newton solve with bisection of the increment on failure.
  struct StepReport {
    int iterations = 0;
    int substeps = 0;
    std::vector<double> residuals;  ///< of the last substep
  };
  StepReport advance(const Strain6& target, const ControlMask& mask = kAllPrescribed);

  /// Homogenised tangent from the converged tangent: one factorisation, six
  /// unit macro-strain solves.
  Mat6 tangent_stiffness() const;

  /// Displacement of every mesh node (3 per node).
  Eigen::VectorXd nodal_displacements() const;

 private:
  Mesh mesh_;
  Materials mats_;
  SolverOptions opt_;
  DofMap dofs_;
  ConstraintSystem sys_;
  std::vector<Mat6> moduli_;
  double atol_ = 0.0;

  Eigen::VectorXd u_, lambda_;
  Strain6 eps_;
  PointStates states_;
  Assembly asm_;
};

Stress6 homogenized_stress(const ConstraintSystem& sys, const Eigen::VectorXd& lambda);

/// Six unit-strain solves of the saddle system built on `K`.
Mat6 homogenized_stiffness(const ConstraintSystem& sys, const Eigen::SparseMatrix<double>& K);

/// Volume-weighted mean of the element stresses.
Stress6 volume_average(const Assembly& a);

struct ProgramSegment {
  Strain6 target;
  int steps = 1;
};

struct LoadProgram {
  std::vector<ProgramSegment> segments;
  ControlMask mask = kAllPrescribed;
  bool record_tangent = false;

  void validate() const;
  int total_steps() const;
};

struct StepRecord {
  int step = 0;
  Strain6 strain;
  Stress6 stress;
  Stress6 volume_average;
  int iterations = 0;
  int substeps = 0;
  std::optional<Mat6> tangent;
};

struct FieldSnapshot {
  Eigen::VectorXd displacement;            ///< 3 per mesh node
  std::vector<double> plastic_strain;      ///< per tet
  std::vector<Stress6> stress;             ///< per tet
  std::vector<double> damage;              ///< per interface element (mean)
};

struct HomogenizedResult {
  std::vector<StepRecord> steps;
  FieldSnapshot final_fields;
  bool completed = false;
  std::string failure;  ///< set when a step could not be converged
};

FieldSnapshot snapshot(const RveProblem& problem);

/// Runs the program from the unloaded state. Solver failures stop the run;
/// the converged steps and the failure message are returned. `on_step` sees
/// every converged step as it is recorded.
HomogenizedResult run_program(const Mesh& mesh, const Materials& mats, const LoadProgram& program,
                              BCKind kind, const SolverOptions& opt = {},
                              const std::function<void(const StepRecord&)>& on_step = {});

}  // namespace frc
