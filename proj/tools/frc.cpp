// frc: batch driver for RVE homogenisation runs.
//
//   frc run <config> [--threads N] [--seed S] [--out DIR] [--quiet]
//   frc sweep <config> --axis <path> --values v1,v2,... [--jobs J]
//   frc gen <config> [--seed S] [--out DIR]
//   frc --check-mesh <file>
//
// Exit codes: 0 success, 1 usage or I/O error, 2 bad configuration,
// 3 mesh or layout failure, 4 solver failure.

#include "frc/pipeline.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <iostream>
#include <thread>

namespace {

enum Exit { kOk = 0, kUsage = 1, kConfig = 2, kMesh = 3, kSolve = 4 };

struct Overrides {
  int threads = 0;
  long long seed = -1;
  std::string out;
};

nlohmann::json load_doc(const std::string& path, const Overrides& o) {
  nlohmann::json doc = frc::read_json(path);
  if (!doc.is_object()) throw frc::ConfigError(path + ": top level must be an object");
  if (o.threads > 0) doc["threads"] = o.threads;
  if (o.seed >= 0) doc["seed"] = o.seed;
  return doc;
}

std::filesystem::path out_dir(const frc::RunConfig& cfg, const Overrides& o) {
  return o.out.empty() ? cfg.output.dir : std::filesystem::path(o.out);
}

// Runs `body` and maps the error families onto exit codes.
template <class F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const frc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const frc::LayoutError& e) {
    std::cerr << "layout error: " << e.what() << " (achieved vf " << e.achieved_vf << ")\n";
    return kMesh;
  } catch (const frc::MeshingError& e) {
    std::cerr << "mesh error: " << e.what() << '\n';
    return kMesh;
  } catch (const frc::MeshError& e) {
    std::cerr << "mesh error: " << e.what() << '\n';
    return kMesh;
  } catch (const frc::SolveError& e) {
    std::cerr << "solve error: " << e.what() << '\n';
    return kSolve;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
}

int cmd_run(const std::string& path, const Overrides& o, bool quiet) {
  const frc::RunConfig cfg = frc::parse_config(load_doc(path, o), std::filesystem::path(path).parent_path());
  const auto dir = out_dir(cfg, o);
  frc::StepLog log;
  if (!quiet) {
    log = [](const frc::StepRecord& r, int total) {
      std::fprintf(stderr, "step %d/%d  exx %.4e  sxx %.4e MPa  it %d  sub %d\n", r.step, total,
                   r.strain[0], r.stress[0], r.iterations, r.substeps);
    };
  }
  const auto o_ = frc::run_case(cfg, dir, log);
  std::printf("%s: %d tets, %d interfaces, %zu/%d steps, mesh %.2f s, solve %.2f s -> %s\n",
              cfg.name.c_str(), o_.tets, o_.interfaces, o_.result.steps.size(),
              cfg.program.total_steps(), o_.mesh_seconds, o_.solve_seconds, dir.string().c_str());
  if (!o_.result.completed) {
    std::cerr << "solve error: " << o_.result.failure << '\n';
    return kSolve;
  }
  return kOk;
}

int cmd_sweep(const std::string& path, const Overrides& o, const std::string& axis,
              const std::vector<std::string>& raw, int jobs) {
  const nlohmann::json doc = load_doc(path, o);
  const auto base = std::filesystem::path(path).parent_path();
  const frc::RunConfig cfg = frc::parse_config(doc, base);
  std::vector<nlohmann::json> values;
  for (const auto& v : raw) values.push_back(frc::parse_value(v));
  if (jobs <= 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  const auto dir = out_dir(cfg, o);
  const auto variants = frc::run_sweep(doc, base, axis, values, dir, jobs);
  int failed = 0;
  for (const auto& v : variants) {
    if (!v.error.empty()) {
      std::printf("%-24s error: %s\n", v.label.c_str(), v.error.c_str());
      ++failed;
    } else if (!v.outcome.result.completed) {
      std::printf("%-24s %zu steps, failed: %s\n", v.label.c_str(), v.outcome.result.steps.size(),
                  v.outcome.result.failure.c_str());
      ++failed;
    } else {
      std::printf("%-24s %zu steps, solve %.2f s\n", v.label.c_str(), v.outcome.result.steps.size(),
                  v.outcome.solve_seconds);
    }
  }
  std::printf("sweep over %s: %zu runs, %d failed -> %s\n", axis.c_str(), variants.size(), failed,
              (dir / "sweep.csv").string().c_str());
  return failed ? kSolve : kOk;
}

int cmd_gen(const std::string& path, const Overrides& o) {
  const frc::RunConfig cfg = frc::parse_config(load_doc(path, o), std::filesystem::path(path).parent_path());
  const frc::Model model = frc::build_model(cfg);
  const auto dir = out_dir(cfg, o);
  std::filesystem::create_directories(dir);
  frc::write_mesh(model.mesh, dir / "mesh.txt");
  for (std::size_t i = 0; i < model.layouts.size(); ++i) {
    frc::write_layout_csv(model.layouts[i],
                          dir / (model.layouts.size() == 1 ? std::string("layout.csv")
                                                           : "layout_ply" + std::to_string(i + 1) + ".csv"));
    std::printf("layout %zu: %zu fibres, vf %.4f\n", i + 1, model.layouts[i].fibres.size(),
                model.layouts[i].volume_fraction());
  }
  std::printf("mesh: %zu nodes, %zu tets, %zu interfaces -> %s\n", model.mesh.nodes.size(),
              model.mesh.tets.size(), model.mesh.cohesive.size(), (dir / "mesh.txt").string().c_str());
  return kOk;
}

int cmd_check_mesh(const std::string& path) {
  const frc::Mesh m = frc::read_mesh(path);
  m.validate();
  const frc::Box box = m.bbox();
  std::printf("nodes %zu\ntets %zu\ninterfaces %zu\n", m.nodes.size(), m.tets.size(), m.cohesive.size());
  std::printf("regions");
  for (int r : m.regions()) std::printf(" %d", r);
  std::printf("\nface sets %zu", m.face_sets.size());
  for (const auto& [name, faces] : m.face_sets) std::printf(" %s(%zu)", name.c_str(), faces.size());
  std::printf("\ndirections %s\n", m.directions.empty() ? "no" : "yes");
  std::printf("bbox [%g %g %g] - [%g %g %g]\nvolume %.9g\n", box.lo(0), box.lo(1), box.lo(2), box.hi(0),
              box.hi(1), box.hi(2), m.volume());
  const auto q = frc::mesh_quality(m);
  std::printf("dihedral min %.2f max %.2f deg, %d tets below 5 deg\n", q.min_dihedral_deg,
              q.max_dihedral_deg, q.below_threshold);
  if (!m.periodic.empty()) {
    std::printf("periodic pairs %zu (from file)\n", m.periodic.size());
  } else {
    try {
      const auto pairs = frc::detect_periodic_pairs(m, box, 1e-8 * box.diagonal());
      std::printf("periodic pairs %zu (detected)\n", pairs.size());
    } catch (const frc::MeshError& e) {
      std::printf("periodic pairs: not periodic (%s)\n", e.what());
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Small-strain FE homogenisation of fibre-composite RVEs"};
  app.require_subcommand(0, 1);
  std::string check_mesh;
  app.add_option("--check-mesh", check_mesh, "Validate a mesh file, print counts and exit");

  Overrides o;
  std::string config;
  bool quiet = false;
  auto common = [&](CLI::App* sub, bool solver) {
    sub->add_option("config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Layout seed (overrides the config)")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", o.out, "Output directory (overrides the config)");
    if (solver) sub->add_option("--threads", o.threads, "Assembly threads per run")->check(CLI::PositiveNumber);
  };

  auto* run = app.add_subcommand("run", "Generate or read the mesh, solve the load program, write outputs");
  common(run, true);
  run->add_flag("--quiet", quiet, "No per-step progress");

  auto* sweep = app.add_subcommand("sweep", "Run one variant per value of a config parameter");
  common(sweep, true);
  std::string axis;
  std::vector<std::string> values;
  int jobs = 0;
  sweep->add_option("--axis", axis, "Dotted config path, e.g. materials.interface.Gf")->required();
  sweep->add_option("--values", values, "Comma-separated values (inf allowed)")->required()->delimiter(',');
  sweep->add_option("--jobs", jobs, "Variants run at once (default: hardware threads)");

  auto* gen = app.add_subcommand("gen", "Generate the layout and mesh only");
  common(gen, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (!check_mesh.empty()) return guarded([&] { return cmd_check_mesh(check_mesh); });
  if (run->parsed()) return guarded([&] { return cmd_run(config, o, quiet); });
  if (sweep->parsed()) return guarded([&] { return cmd_sweep(config, o, axis, values, jobs); });
  if (gen->parsed()) return guarded([&] { return cmd_gen(config, o); });
  std::cerr << app.help();
  return kUsage;
}
