#pragma once

// Generate -> mesh -> solve -> write, for single runs and parameter sweeps.

#include "frc/config.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace frc {

struct Model {
  Mesh mesh;
  std::vector<FibreLayout> layouts;  ///< generated sources only
};

/// Builds (or reads) the mesh, inserts interfaces, computes yarn directions
/// and periodic pairs when needed, and validates the bindings. Mesh-side
/// failures surface as MeshError, MeshingError or LayoutError.
Model build_model(const RunConfig& cfg);

/// Laminate of UD plies; see LaminateSource.
Mesh laminate_mesh(const LaminateSource& src, std::vector<FibreLayout>* layouts = nullptr);

/// Step, six strains (engineering shear) and six stresses at full precision,
/// preceded by a units comment row.
std::string curve_csv(const HomogenizedResult& res);
std::string tangent_csv(const HomogenizedResult& res);

struct RunOutcome {
  HomogenizedResult result;
  std::vector<std::filesystem::path> files;
  double mesh_seconds = 0.0;
  double solve_seconds = 0.0;
  int tets = 0;
  int interfaces = 0;
};

using StepLog = std::function<void(const StepRecord&, int total_steps)>;

/// Runs the configuration and writes the curve, optional fields and the
/// manifest into `out_dir`. Solver failures are reported in the outcome
/// (converged steps are still written); mesh failures throw.
RunOutcome run_case(const RunConfig& cfg, const std::filesystem::path& out_dir,
                    const StepLog& log = {});

nlohmann::json manifest(const RunConfig& cfg, const RunOutcome& outcome);

struct SweepVariant {
  std::string label;
  nlohmann::json value;
  RunOutcome outcome;
  std::string error;  ///< config or mesh failure of this variant
};

/// Runs one variant per value, `jobs` at a time, each in its own
/// subdirectory, then writes the merged curve file and a sweep manifest.
std::vector<SweepVariant> run_sweep(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                                    const std::string& axis, const std::vector<nlohmann::json>& values,
                                    const std::filesystem::path& out_dir, int jobs);

std::string sweep_csv(const std::vector<SweepVariant>& variants, const std::string& axis);

}  // namespace frc
