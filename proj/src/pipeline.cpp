#include "frc/pipeline.hpp"

#include "frc/vtk.hpp"
#include "frc/yarn.hpp"

#include <Eigen/Core>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

namespace frc {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void write_text(const std::filesystem::path& path, const std::string& text,
                std::vector<std::filesystem::path>& files) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path.string());
  files.push_back(path);
}

void put(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

const std::vector<Face>& face_set(const Mesh& mesh, const std::string& name) {
  auto it = mesh.face_sets.find(name);
  if (it == mesh.face_sets.end()) throw MeshError("mesh has no face set '" + name + "'");
  return it->second;
}

void assign_directions(Mesh& mesh, const DirectionSource& d) {
  FlowResult flow;
  try {
    flow = potential_flow_directions(mesh, d.region, face_set(mesh, d.inlet), face_set(mesh, d.outlet));
  } catch (const std::invalid_argument& e) {
    throw MeshError(std::string("yarn directions: ") + e.what());
  }
  if (mesh.directions.empty()) mesh.directions.assign(mesh.tets.size(), Vec3::UnitZ());
  for (std::size_t i = 0; i < flow.tets.size(); ++i) mesh.directions[flow.tets[i]] = flow.directions[i];
}

bool has_region(const Mesh& m, int region) {
  for (const auto& t : m.tets)
    if (t.region == region) return true;
  return false;
}

Mesh with_interfaces(Mesh m) {
  if (!has_region(m, kFibreRegion) || !has_region(m, kMatrixRegion)) return m;
  return insert_cohesive(m);
}

}  // namespace

Mesh laminate_mesh(const LaminateSource& src, std::vector<FibreLayout>* layouts) {
  std::vector<Mesh> plies;
  const int nz = std::max(1, static_cast<int>(std::ceil(src.L / src.edge - 1e-9)));
  for (std::size_t i = 0; i < src.angles.size(); ++i) {
    GenParams g = src.gen;
    g.seed = src.gen.seed + static_cast<unsigned>(i);
    g.periodic_y = false;
    FibreLayout layout = generate_layout(g, src.L, src.t);
    // Non-periodic walls are split uniformly at the same count as the
    // extrusion, so a rotated ply meets its neighbour node for node.
    Mesh m = extrude(triangulate_section(layout, src.edge), src.L, nz);
    // Wall nodes come off the section mesher's integer grid; put them exactly
    // on the extrusion grid so coincident and periodic nodes agree bitwise.
    const double pitch = src.L / nz, snap = 1e-6 * src.edge;
    for (auto& x : m.nodes) {
      for (double wall : {0.0, src.t}) {
        if (std::abs(x.y() - wall) > snap) continue;
        x.y() = wall;
        const double k = std::round(x.x() / pitch);
        if (std::abs(x.x() - k * pitch) <= snap) x.x() = k == nz ? src.L : src.L * k / nz;
      }
    }
    for (auto& x : m.nodes) {
      x.y() += static_cast<double>(i) * src.t;
      if (src.angles[i] == 90) std::swap(x.x(), x.z());
    }
    if (src.angles[i] == 90)
      for (auto& t : m.tets) std::swap(t.n[1], t.n[2]);
    plies.push_back(src.cohesive ? with_interfaces(std::move(m)) : std::move(m));
    if (layouts) layouts->push_back(std::move(layout));
  }
  Mesh out = merge_meshes(plies, 1e-6 * src.edge);
  const Box box = out.bbox();
  out.periodic = detect_periodic_pairs(out, box, 1e-6 * src.edge);
  return out;
}

Model build_model(const RunConfig& cfg) {
  Model model;
  const MeshSource& src = cfg.mesh;
  switch (src.kind) {
    case MeshSource::Kind::File:
      model.mesh = read_mesh(src.file);
      break;
    case MeshSource::Kind::Box:
      model.mesh = box_mesh(src.box.box, src.box.divisions, src.box.region);
      break;
    case MeshSource::Kind::Ud: {
      const auto& u = src.ud;
      model.layouts.push_back(generate_layout(u.gen, u.Lx, u.Ly));
      Mesh m = mesh_ud_rve(model.layouts.back(), u.Lz, u.layers, u.edge);
      model.mesh = u.cohesive ? with_interfaces(std::move(m)) : std::move(m);
      break;
    }
    case MeshSource::Kind::Laminate:
      model.mesh = laminate_mesh(src.laminate, &model.layouts);
      break;
  }
  for (const auto& d : src.directions) assign_directions(model.mesh, d);
  model.mesh.validate();
  try {
    cfg.materials.validate(model.mesh);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("materials: ") + e.what());
  }
  return model;
}

std::string curve_csv(const HomogenizedResult& res) {
  std::string out =
      "# units: strain [-] (shear as engineering strain), stress [MPa]\n"
      "step,exx,eyy,ezz,gxy,gyz,gzx,sxx,syy,szz,sxy,syz,szx\n";
  for (const auto& s : res.steps) {
    out += std::to_string(s.step);
    for (int k = 0; k < 6; ++k) out += ',', put(out, s.strain[k]);
    for (int k = 0; k < 6; ++k) out += ',', put(out, s.stress[k]);
    out += '\n';
  }
  return out;
}

std::string tangent_csv(const HomogenizedResult& res) {
  std::string out = "# units: MPa; row-major 6x6 homogenised tangent, Voigt order xx yy zz xy yz zx\nstep";
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c) out += ",c" + std::to_string(r + 1) + std::to_string(c + 1);
  out += '\n';
  for (const auto& s : res.steps) {
    if (!s.tangent) continue;
    out += std::to_string(s.step);
    for (int r = 0; r < 6; ++r)
      for (int c = 0; c < 6; ++c) out += ',', put(out, (*s.tangent)(r, c));
    out += '\n';
  }
  return out;
}

RunOutcome run_case(const RunConfig& cfg, const std::filesystem::path& out_dir, const StepLog& log) {
  RunOutcome o;
  auto t0 = std::chrono::steady_clock::now();
  Model model = build_model(cfg);
  o.mesh_seconds = seconds_since(t0);
  o.tets = static_cast<int>(model.mesh.tets.size());
  o.interfaces = static_cast<int>(model.mesh.cohesive.size());

  std::filesystem::create_directories(out_dir);
  for (std::size_t i = 0; i < model.layouts.size(); ++i) {
    const auto path = out_dir / (model.layouts.size() == 1 ? std::string("layout.csv")
                                                           : "layout_ply" + std::to_string(i + 1) + ".csv");
    write_layout_csv(model.layouts[i], path);
    o.files.push_back(path);
  }
  if (cfg.output.mesh) write_text(out_dir / "mesh.txt", serialise(model.mesh), o.files);

  t0 = std::chrono::steady_clock::now();
  const int total = cfg.program.total_steps();
  o.result = run_program(model.mesh, cfg.materials, cfg.program, cfg.bc, cfg.solver,
                         [&](const StepRecord& r) {
                           if (log) log(r, total);
                         });
  o.solve_seconds = seconds_since(t0);

  write_text(out_dir / "curve.csv", curve_csv(o.result), o.files);
  if (cfg.program.record_tangent) write_text(out_dir / "tangent.csv", tangent_csv(o.result), o.files);
  if (cfg.output.vtk) {
    write_vtk(model.mesh, o.result.final_fields, out_dir / "fields.vtk");
    o.files.push_back(out_dir / "fields.vtk");
  }
  const auto mpath = out_dir / "manifest.json";
  o.files.push_back(mpath);
  std::ofstream(mpath) << manifest(cfg, o).dump(2) << '\n';
  return o;
}

json manifest(const RunConfig& cfg, const RunOutcome& o) {
  json m;
  m["program"] = "frc";
  m["version"] = kVersion;
  m["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
#ifdef __VERSION__
  m["compiler"] = __VERSION__;
#endif
  m["name"] = cfg.name;
  m["seed"] = cfg.seed;
  m["threads"] = cfg.threads;
  m["config"] = cfg.resolved;
  m["mesh"] = {{"tets", o.tets}, {"interfaces", o.interfaces}};
  m["timings_s"] = {{"mesh", o.mesh_seconds}, {"solve", o.solve_seconds}};
  m["status"] = o.result.completed ? "completed" : "failed";
  if (!o.result.completed) m["failure"] = o.result.failure;
  m["steps"] = {{"requested", cfg.program.total_steps()}, {"converged", o.result.steps.size()}};
  json files = json::array();
  for (const auto& f : o.files) files.push_back(f.filename().string());
  m["files"] = files;
  return m;
}

namespace {

std::string label_for(const std::string& axis, const json& value) {
  const std::string leaf = axis.substr(axis.rfind('.') + 1);
  std::string v = value.is_string() ? value.get<std::string>() : value.dump();
  for (char& c : v)
    if (c == '/' || c == '\\' || c == ' ') c = '_';
  return leaf + "=" + v;
}

}  // namespace

std::vector<SweepVariant> run_sweep(const json& doc, const std::filesystem::path& base_dir,
                                    const std::string& axis, const std::vector<json>& values,
                                    const std::filesystem::path& out_dir, int jobs) {
  if (values.empty()) throw ConfigError("sweep: empty value list");
  std::vector<SweepVariant> variants(values.size());
  std::vector<RunConfig> configs(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    variants[i].label = label_for(axis, values[i]);
    variants[i].value = values[i];
    json d = doc;
    set_path(d, axis, values[i]);
    configs[i] = parse_config(d, base_dir);
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < variants.size();) {
      try {
        variants[i].outcome = run_case(configs[i], out_dir / variants[i].label);
      } catch (const std::exception& e) {
        variants[i].error = e.what();
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(values.size())));
  std::vector<std::thread> pool;
  for (int k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::filesystem::create_directories(out_dir);
  std::ofstream(out_dir / "sweep.csv", std::ios::binary) << sweep_csv(variants, axis);
  json m;
  m["program"] = "frc";
  m["version"] = kVersion;
  m["axis"] = axis;
  m["config"] = doc;
  json runs = json::array();
  for (const auto& v : variants) {
    json r{{"label", v.label}, {"value", v.value}, {"dir", v.label}};
    if (!v.error.empty()) {
      r["status"] = "error";
      r["failure"] = v.error;
    } else {
      r["status"] = v.outcome.result.completed ? "completed" : "failed";
      if (!v.outcome.result.completed) r["failure"] = v.outcome.result.failure;
      r["converged_steps"] = v.outcome.result.steps.size();
    }
    runs.push_back(r);
  }
  m["runs"] = runs;
  std::ofstream(out_dir / "sweep_manifest.json") << m.dump(2) << '\n';
  return variants;
}

std::string sweep_csv(const std::vector<SweepVariant>& variants, const std::string& axis) {
  std::string out =
      "# units: strain [-] (shear as engineering strain), stress [MPa]; axis " + axis + "\n"
      "variant,step,exx,eyy,ezz,gxy,gyz,gzx,sxx,syy,szz,sxy,syz,szx\n";
  for (const auto& v : variants) {
    for (const auto& s : v.outcome.result.steps) {
      out += v.label + ',' + std::to_string(s.step);
      for (int k = 0; k < 6; ++k) out += ',', put(out, s.strain[k]);
      for (int k = 0; k < 6; ++k) out += ',', put(out, s.stress[k]);
      out += '\n';
    }
  }
  return out;
}

}  // namespace frc
