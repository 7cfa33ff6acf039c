#include "frc/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace frc {

using nlohmann::json;

namespace {

constexpr const char* kStrainNames[6] = {"xx", "yy", "zz", "xy", "yz", "zx"};

// Typed access to one JSON object; finish() rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(where_.empty() ? what : where_ + ": " + what);
  }
  std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& raw(const std::string& key) {
    if (!has(key)) fail("missing key '" + key + "'");
    return j_.at(key);
  }
  Section sub(const std::string& key) { return Section(raw(key), path(key)); }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    if (!has(key)) {
      if (!fallback) fail("missing key '" + key + "'");
      return *fallback;
    }
    const json& v = j_.at(key);
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "inf") return std::numeric_limits<double>::infinity();
      if (s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    fail("'" + key + "' must be a number or \"inf\"");
  }
  double finite(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const double v = number(key, fallback);
    if (!std::isfinite(v)) fail("'" + key + "' must be finite");
    return v;
  }
  int integer(const std::string& key, std::optional<int> fallback = std::nullopt) {
    if (!has(key)) {
      if (!fallback) fail("missing key '" + key + "'");
      return *fallback;
    }
    const json& v = j_.at(key);
    if (!v.is_number_integer()) fail("'" + key + "' must be an integer");
    return v.get<int>();
  }
  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) fail("'" + key + "' must be true or false");
    return v.get<bool>();
  }
  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    if (!has(key)) {
      if (!fallback) fail("missing key '" + key + "'");
      return *fallback;
    }
    const json& v = j_.at(key);
    if (!v.is_string()) fail("'" + key + "' must be a string");
    return v.get<std::string>();
  }
  std::vector<double> numbers(const std::string& key, std::size_t n) {
    const json& v = raw(key);
    if (!v.is_array() || v.size() != n) fail("'" + key + "' must be an array of " + std::to_string(n));
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) fail("'" + key + "' must hold numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) fail("unknown key '" + key + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

template <class F>
auto checked(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

int strain_slot(const std::string& name, const Section& s) {
  for (int k = 0; k < 6; ++k)
    if (name == kStrainNames[k]) return k;
  s.fail("unknown strain component '" + name + "' (use xx yy zz xy yz zx)");
}

GenParams gen_params(Section& s, unsigned seed) {
  GenParams g;
  g.radius = s.finite("radius");
  g.target_vf = s.finite("vf");
  g.min_gap = s.finite("min_gap", 0.0);
  g.max_attempts = s.integer("max_attempts", g.max_attempts);
  g.seed = seed;
  checked(s.path("radius"), [&] { g.validate(); return 0; });
  return g;
}

double edge_or_default(Section& s, const GenParams& g) {
  const double h = s.finite("edge", 0.5 * g.radius);
  if (!(h > 0.0)) s.fail("'edge' must be positive");
  return h;
}

MeshSource parse_mesh_source(Section s, unsigned seed, const std::filesystem::path& base,
                             json& resolved) {
  MeshSource m;
  int kinds = 0;
  if (s.has("file")) {
    ++kinds;
    m.kind = MeshSource::Kind::File;
    m.file = s.text("file");
    if (m.file.is_relative()) m.file = base / m.file;
    m.file = std::filesystem::absolute(m.file).lexically_normal();
    resolved["file"] = m.file.string();
  }
  if (s.has("box")) {
    ++kinds;
    m.kind = MeshSource::Kind::Box;
    Section b = s.sub("box");
    const auto size = b.numbers("size", 3);
    for (int k = 0; k < 3; ++k) {
      if (!(size[k] > 0.0)) b.fail("'size' entries must be positive");
      m.box.box.hi(k) = size[k];
    }
    if (b.has("divisions")) {
      const auto d = b.numbers("divisions", 3);
      for (int k = 0; k < 3; ++k) {
        if (d[k] < 1 || d[k] != std::floor(d[k])) b.fail("'divisions' must be positive integers");
        m.box.divisions[k] = static_cast<int>(d[k]);
      }
    }
    m.box.region = b.integer("region", 0);
    b.finish();
  }
  if (s.has("ud")) {
    ++kinds;
    m.kind = MeshSource::Kind::Ud;
    Section u = s.sub("ud");
    const auto cell = u.numbers("cell", 2);
    m.ud.Lx = cell[0];
    m.ud.Ly = cell[1];
    if (!(m.ud.Lx > 0.0 && m.ud.Ly > 0.0)) u.fail("'cell' entries must be positive");
    m.ud.Lz = u.finite("depth");
    if (!(m.ud.Lz > 0.0)) u.fail("'depth' must be positive");
    m.ud.layers = u.integer("layers", 2);
    if (m.ud.layers < 1) u.fail("'layers' must be >= 1");
    m.ud.gen = gen_params(u, seed);
    m.ud.edge = edge_or_default(u, m.ud.gen);
    m.ud.cohesive = u.boolean("cohesive", true);
    u.finish();
  }
  if (s.has("laminate")) {
    ++kinds;
    m.kind = MeshSource::Kind::Laminate;
    Section l = s.sub("laminate");
    m.laminate.L = l.finite("size");
    m.laminate.t = l.finite("ply_thickness");
    if (!(m.laminate.L > 0.0 && m.laminate.t > 0.0)) l.fail("'size' and 'ply_thickness' must be positive");
    m.laminate.angles.clear();
    const json& a = l.raw("angles");
    if (!a.is_array() || a.empty()) l.fail("'angles' must be a non-empty array");
    for (const auto& v : a) {
      if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 90)) {
        l.fail("ply angles must be 0 or 90");
      }
      m.laminate.angles.push_back(v.get<int>());
    }
    m.laminate.gen = gen_params(l, seed);
    m.laminate.gen.periodic_y = false;
    m.laminate.edge = edge_or_default(l, m.laminate.gen);
    m.laminate.cohesive = l.boolean("cohesive", true);
    l.finish();
  }
  if (kinds != 1) s.fail("exactly one of 'file', 'box', 'ud', 'laminate' is required");
  if (s.has("directions")) {
    const json& d = s.raw("directions");
    if (!d.is_array() || d.empty()) s.fail("'directions' must be a non-empty array");
    for (std::size_t i = 0; i < d.size(); ++i) {
      Section e(d[i], s.path("directions[" + std::to_string(i) + "]"));
      m.directions.push_back({e.integer("region"), e.text("inlet"), e.text("outlet")});
      e.finish();
    }
  }
  s.finish();
  return m;
}

RegionMaterial parse_region(Section r) {
  const std::string type = r.text("type");
  if (type == "matrix") {
    MatrixParams p = MatrixParams::epoxy();
    p.E = r.finite("E", p.E);
    p.nu = r.finite("nu", p.nu);
    p.nu_plas = r.finite("nu_plas", p.nu_plas);
    p.sigma_t0 = r.finite("sigma_t0", p.sigma_t0);
    p.sigma_c0 = r.finite("sigma_c0", p.sigma_c0);
    p.Ht = r.finite("Ht", p.Ht);
    p.Hc = r.finite("Hc", p.Hc);
    p.nt = r.finite("nt", p.nt);
    p.nc = r.finite("nc", p.nc);
    p.plastic = r.boolean("plastic", true);
    r.finish();
    checked(r.path("type"), [&] { p.validate(); return 0; });
    return RegionMaterial::plastic_matrix(p);
  }
  if (type == "isotropic") {
    const double E = r.finite("E"), nu = r.finite("nu");
    r.finish();
    if (!(E > 0.0) || !(nu > -1.0 && nu < 0.5)) r.fail("need E > 0 and -1 < nu < 0.5");
    return RegionMaterial::isotropic(E, nu);
  }
  if (type == "yarn") {
    TransIsoParams p;
    p.Ep = r.finite("Ep");
    p.nu_p = r.finite("nu_p");
    p.Ez = r.finite("Ez");
    p.nu_pz = r.finite("nu_pz");
    p.Gzp = r.finite("Gzp");
    r.finish();
    checked(r.path("type"), [&] { p.validate(); return 0; });
    return RegionMaterial::transverse(p);
  }
  r.fail("'type' must be matrix, isotropic or yarn");
}

Materials parse_materials(Section s) {
  Materials m;
  Section regions = s.sub("regions");
  const json& rj = s.raw("regions");
  for (const auto& [key, value] : rj.items()) {
    int id = 0;
    std::size_t used = 0;
    try {
      id = std::stoi(key, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != key.size()) regions.fail("region keys must be integers, got '" + key + "'");
    regions.has(key);
    m.regions[id] = parse_region(regions.sub(key));
  }
  regions.finish();
  if (m.regions.empty()) s.fail("'regions' is empty");

  double Em = m.cohesive.Em;
  for (const auto& [id, r] : m.regions) {
    if (r.kind == RegionMaterial::Kind::Matrix) {
      Em = r.matrix.E;
      break;
    }
  }
  m.cohesive.Em = Em;
  if (s.has("interface")) {
    Section c = s.sub("interface");
    m.cohesive.ft = c.number("ft", m.cohesive.ft);
    m.cohesive.Gf = c.finite("Gf", m.cohesive.Gf);
    m.cohesive.beta = c.finite("beta", m.cohesive.beta);
    m.cohesive.h = c.finite("h", m.cohesive.h);
    m.cohesive.Em = c.finite("Em", Em);
    const std::string tangent = c.text("tangent", "consistent");
    if (tangent != "consistent" && tangent != "secant") c.fail("'tangent' must be consistent or secant");
    m.consistent_cohesive = tangent == "consistent";
    c.finish();
    checked(c.path("ft"), [&] { m.cohesive.validate(); return 0; });
  }
  s.finish();
  return m;
}

LoadProgram parse_program(Section s) {
  LoadProgram p;
  if (s.has("control")) {
    const json& c = s.raw("control");
    if (!c.is_array() || c.empty()) s.fail("'control' must be a non-empty array of strain components");
    p.mask.fill(false);
    for (const auto& v : c) {
      if (!v.is_string()) s.fail("'control' must hold strain component names");
      p.mask[strain_slot(v.get<std::string>(), s)] = true;
    }
  }
  const json& segs = s.raw("segments");
  if (!segs.is_array() || segs.empty()) s.fail("'segments' must be a non-empty array");
  for (std::size_t i = 0; i < segs.size(); ++i) {
    Section g(segs[i], s.path("segments[" + std::to_string(i) + "]"));
    ProgramSegment seg;
    seg.steps = g.integer("steps");
    if (seg.steps < 1) g.fail("'steps' must be >= 1");
    Section st = g.sub("strain");
    for (int k = 0; k < 6; ++k) seg.target[k] = st.finite(kStrainNames[k], 0.0);
    st.finish();
    g.finish();
    p.segments.push_back(seg);
  }
  p.record_tangent = s.boolean("tangent", false);
  s.finish();
  return p;
}

SolverOptions parse_solver(Section s, int threads) {
  SolverOptions o;
  o.rtol = s.finite("rtol", o.rtol);
  o.atol = s.finite("atol", o.atol);
  o.max_iterations = s.integer("max_iterations", o.max_iterations);
  o.max_bisections = s.integer("max_bisections", o.max_bisections);
  o.max_branch_passes = s.integer("max_branch_passes", o.max_branch_passes);
  o.threads = threads;
  if (!(o.rtol > 0.0) || o.max_iterations < 1 || o.max_bisections < 0 || o.max_branch_passes < 1) {
    s.fail("need rtol > 0, max_iterations >= 1, max_bisections >= 0, max_branch_passes >= 1");
  }
  s.finish();
  return o;
}

}  // namespace

RunConfig parse_config(json doc, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  Section top(doc, "");
  cfg.name = top.text("name", "run");
  const int seed = top.integer("seed", 1);
  if (seed < 0) top.fail("'seed' must be non-negative");
  cfg.seed = static_cast<unsigned>(seed);
  cfg.threads = top.integer("threads", 1);
  if (cfg.threads < 1) top.fail("'threads' must be >= 1");
  cfg.resolved = doc;
  cfg.mesh = parse_mesh_source(top.sub("mesh"), cfg.seed, base_dir, cfg.resolved["mesh"]);
  cfg.materials = parse_materials(top.sub("materials"));
  cfg.bc = checked("bc", [&] { return bc_kind_from_string(top.text("bc")); });
  cfg.program = parse_program(top.sub("program"));
  cfg.solver = top.has("solver") ? parse_solver(top.sub("solver"), cfg.threads) : SolverOptions{};
  cfg.solver.threads = cfg.threads;
  if (top.has("output")) {
    Section o = top.sub("output");
    cfg.output.dir = o.text("dir", "out");
    cfg.output.vtk = o.boolean("vtk", true);
    cfg.output.mesh = o.boolean("mesh", false);
    o.finish();
  }
  top.finish();
  cfg.resolved["seed"] = cfg.seed;
  cfg.resolved["threads"] = cfg.threads;
  return cfg;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read " + path.string());
  try {
    return json::parse(is, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_json(path), path.parent_path());
}

void set_path(json& doc, const std::string& path, const json& value) {
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty()) throw ConfigError("bad parameter path '" + path + "'");
    if (!node->is_object()) throw ConfigError("parameter path '" + path + "' runs through a non-object");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    if (!node->contains(key)) throw ConfigError("parameter path '" + path + "': no key '" + key + "'");
    node = &(*node)[key];
    start = dot + 1;
  }
}

json parse_value(const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  if (text == "inf" || text == "-inf") return text;
  try {
    std::size_t used = 0;
    const long long i = std::stoll(text, &used);
    if (used == text.size()) return i;
    const double d = std::stod(text, &used);
    if (used == text.size()) return d;
  } catch (const std::exception&) {
  }
  return text;
}

}  // namespace frc
