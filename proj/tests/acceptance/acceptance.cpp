// Acceptance run: one PASS/FAIL line per criterion. The fixture runs go
// through the same config -> mesh -> solve -> CSV pipeline as the CLI.
//
//   frc_acceptance [fixtures-dir]   (default: $FRC_FIXTURES)
//
// Exit status is nonzero when a criterion fails that is not listed in
// kKnownFailures (see the README for the analysis of those).

#include "frc/pipeline.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "support/plasticity_oracle.hpp"
#include "support/random.hpp"

using namespace frc;
namespace fs = std::filesystem;

namespace {

const std::set<int> kKnownFailures = {2};

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::map<int, Verdict> g_verdicts;

void report(int id, bool pass, const std::string& detail) {
  g_verdicts[id] = {pass, detail};
  std::printf("criterion %2d  %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

template <class... A>
std::string fmt(const char* f, A... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path g_fixtures;
fs::path g_out;

struct FixtureRun {
  std::string label;
  RunConfig cfg;
  RunOutcome outcome;
  fs::path dir;
  double seconds = 0.0;
};

std::deque<FixtureRun> g_runs;  // deque: returned references stay valid

// Loads fixtures/configs/<name>.json, applies dotted-path overrides, runs it
// into its own output directory.
const FixtureRun& run_fixture(const std::string& name, const std::string& label,
                              const std::vector<std::pair<std::string, nlohmann::json>>& overrides = {}) {
  const fs::path path = g_fixtures / "configs" / (name + ".json");
  nlohmann::json doc = read_json(path);
  for (const auto& [k, v] : overrides) set_path(doc, k, v);
  FixtureRun r;
  r.label = label;
  r.cfg = parse_config(doc, path.parent_path());
  r.dir = g_out / label;
  std::fprintf(stderr, "  running %s ...\n", label.c_str());
  const auto t0 = std::chrono::steady_clock::now();
  r.outcome = run_case(r.cfg, r.dir);
  r.seconds = seconds_since(t0);
  std::fprintf(stderr, "  %s: %d tets, %d interfaces, %zu steps, %.1f s%s\n", label.c_str(),
               r.outcome.tets, r.outcome.interfaces, r.outcome.result.steps.size(), r.seconds,
               r.outcome.result.completed ? "" : " (incomplete)");
  g_runs.push_back(std::move(r));
  return g_runs.back();
}

std::vector<double> column(const HomogenizedResult& res, int slot, bool stress) {
  std::vector<double> out;
  for (const auto& s : res.steps) out.push_back(stress ? s.stress[slot] : s.strain[slot]);
  return out;
}

// Piecewise-linear interpolation of y(x) through the origin, x increasing.
double interp(const std::vector<double>& x, const std::vector<double>& y, double at) {
  double x0 = 0.0, y0 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (at <= x[i]) return y0 + (y[i] - y0) * (at - x0) / (x[i] - x0);
    x0 = x[i];
    y0 = y[i];
  }
  return y.back();
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Eigen::VectorXd sorted_eigenvalues(const Mat6& c) {
  Eigen::SelfAdjointEigenSolver<Mat6> es(0.5 * (c + c.transpose()));
  return es.eigenvalues();
}

// ---------------------------------------------------------------- material

void criterion_1() {
  const MatrixParams p = MatrixParams::epoxy();
  const auto t0 = std::chrono::steady_clock::now();
  double onset[2] = {0, 0}, plateau[2] = {0, 0};
  // tension plateau read at 5 %, compression at 10 % (see README)
  const double end[2] = {0.05, -0.10};
  for (int k = 0; k < 2; ++k) {
    auto d = MaterialPointDriver::uniaxial(p);
    const int n = static_cast<int>(std::abs(end[k]) / 1e-5);
    for (int i = 1; i <= n; ++i) {
      const auto& r = d.step(Strain6(end[k] * i / n, 0, 0, 0, 0, 0));
      if (r.plastic && onset[k] == 0.0) onset[k] = std::abs(r.sigma[0]);
      plateau[k] = std::abs(r.sigma[0]);
    }
  }
  const double t = seconds_since(t0);
  const bool ok = std::abs(onset[0] - 29.0) <= 0.5 && std::abs(plateau[0] - 96.0) <= 1.0 &&
                  std::abs(onset[1] - 67.0) <= 0.5 && std::abs(plateau[1] - 125.0) <= 1.5 && t < 1.0;
  report(1, ok,
         fmt("tension onset %.3f plateau(5%%) %.3f, compression onset %.3f plateau(10%%) %.3f MPa, %.3f s",
             onset[0], plateau[0], onset[1], plateau[1], t));
}

void criterion_3() {
  const MatrixParams p = MatrixParams::epoxy();
  double worst = 0.0;
  for (double end : {0.05, -0.10}) {
    auto d = MaterialPointDriver::uniaxial(p);
    testing_support::UniaxialOracle oracle(p);
    for (int i = 1; i <= 1000; ++i) {
      const double e = end * i / 1000;
      const double s = d.step(Strain6(e, 0, 0, 0, 0, 0)).sigma[0];
      const double so = oracle.step(e);
      worst = std::max(worst, std::abs(s - so) / std::abs(so));
    }
  }
  report(3, worst <= 1e-6, fmt("max relative stress difference %.2e over 2 x 1000 steps", worst));
}

void criterion_4() {
  const MatrixParams p = MatrixParams::epoxy();
  testing_support::Rng rng(2024);
  double worst = 0.0;
  int states = 0, draws = 0;
  while (states < 20 && draws < 1000) {
    ++draws;
    const Strain6 pre(rng.vec6(-0.03, 0.03));
    const PlasticState st = return_map(pre, PlasticState{}, p).state;
    const Strain6 probe(pre.vec() + rng.vec6(-0.01, 0.01));
    if (!return_map(probe, st, p).plastic) continue;
    worst = std::max(worst, consistent_tangent_check(probe, st, p));
    ++states;
  }
  report(4, states == 20 && worst < 1e-4,
         fmt("%d random plastic states, max relative error %.2e", states, worst));
}

double dissipated(const CohesiveParams& p, int steps) {
  CohesiveState s;
  double work = 0.0, t_prev = 0.0, d_prev = 0.0;
  const double end = p.delta_max() * 1.01;
  for (int i = 1; i <= steps; ++i) {
    const double d = end * i / steps;
    const auto r = traction(Vec3(d, 0, 0), s, p);
    work += 0.5 * (r.t(0) + t_prev) * (d - d_prev);
    t_prev = r.t(0);
    d_prev = d;
    s = r.state;
  }
  return work;
}

void criterion_5() {
  double worst = 0.0;
  for (double gf : {0.002, 0.003, 0.004, 0.1}) {
    CohesiveParams p;
    p.Gf = gf;
    worst = std::max(worst, std::abs(dissipated(p, 4000) - gf) / gf);
  }
  report(5, worst <= 0.005, fmt("max relative energy error %.2e over Gf in {0.002, 0.003, 0.004, 0.1}", worst));
}

// -------------------------------------------------------------- yarn, mesh

void criterion_10() {
  const auto faces_where = [](const Mesh& m, const Mesh& param, const std::function<bool(const Vec3&)>& pred) {
    std::vector<Face> out;
    for (const auto& f : boundary_faces(m))
      if (pred(param.nodes[f.n[0]]) && pred(param.nodes[f.n[1]]) && pred(param.nodes[f.n[2]])) out.push_back(f.n);
    return out;
  };
  const Mesh prism = box_mesh({Vec3::Zero(), Vec3(4, 1, 1)}, {8, 2, 3}, 2);
  const auto straight = potential_flow_directions(
      prism, 2, faces_where(prism, prism, [](const Vec3& x) { return x(0) == 0.0; }),
      faces_where(prism, prism, [](const Vec3& x) { return x(0) == 4.0; }));
  double axis_err = 0.0;
  for (const auto& d : straight.directions) axis_err = std::max(axis_err, (d - Vec3::UnitX()).norm());

  const Mesh param = box_mesh({Vec3::Zero(), Vec3::Ones()}, {24, 4, 3});
  Mesh elbow = param;
  for (auto& x : elbow.nodes) {
    const double th = x(0) * std::numbers::pi / 2, r = 1.0 + x(1);
    x = Vec3(r * std::cos(th), r * std::sin(th), x(2));
  }
  for (int t = 0; t < static_cast<int>(elbow.tets.size()); ++t)
    if (tet_volume(elbow, t) < 0) std::swap(elbow.tets[t].n[1], elbow.tets[t].n[2]);
  const auto flow = potential_flow_directions(
      elbow, 0, faces_where(elbow, param, [](const Vec3& p) { return p(0) == 0.0; }),
      faces_where(elbow, param, [](const Vec3& p) { return p(0) == 1.0; }));
  double flux_err = std::abs(flow.outlet_flux - flow.inlet_flux) / flow.inlet_flux;
  for (double s : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const double q = section_flux(elbow, flow, [&](int n) { return param.nodes[n](0) < s; });
    flux_err = std::max(flux_err, std::abs(q - flow.inlet_flux) / flow.inlet_flux);
  }
  report(10, axis_err <= 1e-8 && flux_err <= 1e-6,
         fmt("prism max |d - axis| %.2e, elbow max section flux error %.2e", axis_err, flux_err));
}

void criterion_11() {
  const fs::path path = g_fixtures / "configs" / "ud_damage.json";
  const nlohmann::json base = read_json(path);
  int unmatched = 0, meshes = 0;
  std::size_t pairs_total = 0;
  std::string note;
  for (unsigned seed = 1; seed <= 10; ++seed) {
    nlohmann::json doc = base;
    doc["seed"] = seed;
    const Model model = build_model(parse_config(doc, path.parent_path()));
    const Mesh& m = model.mesh;
    const Box box = m.bbox();
    const double tol = 1e-8 * box.diagonal();
    ++meshes;
    try {
      const auto pairs = detect_periodic_pairs(m, box, tol);
      pairs_total += pairs.size();
      // every node on a low or high face, per axis, takes part in exactly one pair
      for (int axis = 0; axis < 3; ++axis) {
        std::set<int> face, paired;
        for (int i = 0; i < static_cast<int>(m.nodes.size()); ++i) {
          const double x = m.nodes[i](axis);
          if (std::abs(x - box.lo(axis)) <= tol || std::abs(x - box.hi(axis)) <= tol) face.insert(i);
        }
        for (const auto& p : pairs)
          if (p.axis == axis) paired.insert({p.master, p.slave});
        for (int i : face) unmatched += paired.count(i) ? 0 : 1;
      }
    } catch (const MeshError& e) {
      ++unmatched;
      note = e.what();
    }
  }

  // tied interfaces against the un-split mesh, same layout
  const fs::path tied_path = g_fixtures / "configs" / "ud_damage_tied.json";
  nlohmann::json tied_doc = read_json(tied_path);
  nlohmann::json plain_doc = tied_doc;
  plain_doc["mesh"]["ud"]["cohesive"] = false;
  const RunConfig tied_cfg = parse_config(tied_doc, tied_path.parent_path());
  const Mesh split = build_model(tied_cfg).mesh;
  const Mesh plain = build_model(parse_config(plain_doc, tied_path.parent_path())).mesh;
  double tie_err = 0.0;
  for (BCKind kind : {BCKind::LinearDisplacement, BCKind::Periodic, BCKind::UniformTraction}) {
    RveProblem a(plain, tied_cfg.materials, kind), b(split, tied_cfg.materials, kind);
    for (double e : {0.003, 0.006}) {
      const Strain6 eps(e, 0, 0, 0.5 * e, 0, 0);
      a.advance(eps);
      b.advance(eps);
      tie_err = std::max(tie_err, (a.macro_stress().vec() - b.macro_stress().vec()).norm() /
                                      a.macro_stress().vec().norm());
    }
  }
  report(11, unmatched == 0 && tie_err <= 1e-8,
         fmt("%d seeds, %zu pairs, %d unmatched nodes%s%s; tied vs un-split (%zu interfaces, 3 BCs) %.2e",
             meshes, pairs_total, unmatched, note.empty() ? "" : ": ", note.c_str(), split.cohesive.size(),
             tie_err));
}

// ------------------------------------------------------------ homogenise

double g_identity_err = 0.0;

void criterion_6_elastic() {
  Mesh m = box_mesh({Vec3::Zero(), Vec3::Ones()}, {3, 3, 3});
  testing_support::Rng rng(6);
  for (auto& x : m.nodes) {
    bool inside = true;
    for (int i = 0; i < 3; ++i) inside = inside && x(i) > 1e-12 && x(i) < 1 - 1e-12;
    if (inside) x += rng.vec3(-0.06, 0.06);
  }
  Materials mats;
  MatrixParams p = MatrixParams::epoxy();
  p.plastic = false;
  mats.regions[0] = RegionMaterial::plastic_matrix(p);
  const Mat6 c = elastic_stiffness(p);
  for (BCKind kind : {BCKind::LinearDisplacement, BCKind::Periodic, BCKind::UniformTraction}) {
    RveProblem prob(m, mats, kind);
    prob.newton_solve(Strain6(1e-3, -2e-4, 3e-4, 5e-4, -1e-4, 2e-4));
    g_identity_err = std::max(g_identity_err, (prob.tangent_stiffness() - c).cwiseAbs().maxCoeff() /
                                                  c.cwiseAbs().maxCoeff());
  }
}

void criterion_6(double elastic_err) {
  double worst = 0.0;
  std::string worst_run;
  std::size_t steps = 0;
  bool complete = true;
  for (const auto& r : g_runs) {
    complete = complete && r.outcome.result.completed;
    for (const auto& s : r.outcome.result.steps) {
      const double e = (s.stress.vec() - s.volume_average.vec()).norm() / s.stress.vec().norm();
      if (e > worst) {
        worst = e;
        worst_run = fmt("%s step %d", r.label.c_str(), s.step);
      }
      ++steps;
    }
  }
  report(6, elastic_err <= 1e-8 && worst <= 1e-7 && complete,
         fmt("homogeneous C_bar error %.2e (3 BCs); stress vs volume average max %.2e (%s) over %zu steps of "
             "%zu runs%s",
             elastic_err, worst, worst_run.c_str(), steps, g_runs.size(), complete ? "" : ", some runs incomplete"));
}

void criterion_2() {
  const auto& t = run_fixture("calibration_tension", "calibration_tension");
  const auto& c = run_fixture("calibration_compression", "calibration_compression");
  const auto& s = run_fixture("calibration_shear", "calibration_shear");
  const auto te = column(t.outcome.result, 0, false), ts = column(t.outcome.result, 0, true);
  auto ce = column(c.outcome.result, 0, false), cs = column(c.outcome.result, 0, true);
  for (auto& v : ce) v = -v;
  for (auto& v : cs) v = -v;
  const auto ge = column(s.outcome.result, 3, false), gs = column(s.outcome.result, 3, true);

  // von Mises scaling: sqrt(3) tau against sigma at gamma / sqrt(3)
  const double first_yield = 29.0 / MatrixParams::epoxy().E;
  const double top = std::min(te.back(), ce.back());
  int checked = 0, inside = 0;
  double lo_viol = -1.0, hi_viol = -1.0;
  for (std::size_t i = 0; i < ge.size(); ++i) {
    const double e = ge[i] / std::sqrt(3.0), q = std::sqrt(3.0) * gs[i];
    if (e <= first_yield || e > top) continue;
    ++checked;
    const double st = interp(te, ts, e), sc = interp(ce, cs, e);
    if (q > std::min(st, sc) && q < std::max(st, sc)) {
      ++inside;
    } else {
      if (lo_viol < 0) lo_viol = e;
      hi_viol = e;
    }
  }
  const bool nonlinear = ts.back() > 1.5 * 29.0 && cs.back() > 1.5 * 67.0 && gs.back() > 29.0 / std::sqrt(3.0);
  const bool complete = t.outcome.result.completed && c.outcome.result.completed && s.outcome.result.completed;
  std::string detail = fmt("end stresses: tension %.1f, compression %.1f, shear %.1f MPa; scaled shear strictly "
                           "between at %d/%d strains",
                           ts.back(), cs.back(), gs.back(), inside, checked);
  if (inside < checked) detail += fmt(" (outside for eps_eq in [%.4f, %.4f])", lo_viol, hi_viol);
  report(2, complete && nonlinear && checked > 0 && inside == checked, detail);
}

void criterion_7() {
  std::map<BCKind, Mat6> cbar;
  double seconds = 0.0;
  int tets = 0;
  bool ok = true;
  for (const char* bc : {"uniform_traction", "periodic", "linear_displacement"}) {
    const auto& r = run_fixture("ud_elastic", std::string("ud_elastic_") + bc, {{"bc", bc}});
    seconds += r.seconds;
    tets = r.outcome.tets;
    ok = ok && r.outcome.result.completed && r.outcome.result.steps.back().tangent.has_value();
    if (ok) cbar[r.cfg.bc] = *r.outcome.result.steps.back().tangent;
  }
  if (!ok) {
    report(7, false, "elastic UD run failed");
    return;
  }
  // phase fractions from the solved mesh
  const Model model = build_model(g_runs.back().cfg);
  double vf = 0.0, v = 0.0;
  for (int t = 0; t < static_cast<int>(model.mesh.tets.size()); ++t) {
    v += tet_volume(model.mesh, t);
    if (model.mesh.tets[t].region == 1) vf += tet_volume(model.mesh, t);
  }
  vf /= v;
  const auto& mats = g_runs.back().cfg.materials;
  const Mat6 cm = elastic_stiffness(mats.regions.at(0).matrix);
  const Mat6 cf = elastic_stiffness(mats.regions.at(1).E, mats.regions.at(1).nu);
  const Mat6 voigt = (1 - vf) * cm + vf * cf;
  const Mat6 reuss = ((1 - vf) * cm.inverse() + vf * cf.inverse()).inverse();
  const Eigen::VectorXd chain[] = {sorted_eigenvalues(reuss), sorted_eigenvalues(cbar[BCKind::UniformTraction]),
                                   sorted_eigenvalues(cbar[BCKind::Periodic]),
                                   sorted_eigenvalues(cbar[BCKind::LinearDisplacement]),
                                   sorted_eigenvalues(voigt)};
  int violations = 0;
  for (int k = 0; k + 1 < 5; ++k)
    for (int i = 0; i < 6; ++i) violations += chain[k](i) <= chain[k + 1](i) * (1 + 1e-9) ? 0 : 1;
  report(7, violations == 0 && seconds < 60.0,
         fmt("vf %.3f, %d tets; largest eigenvalues R %.0f <= T %.0f <= P %.0f <= L %.0f <= V %.0f MPa; "
             "%d ordering violations; %.1f s for 3 runs",
             vf, tets, chain[0](5), chain[1](5), chain[2](5), chain[3](5), chain[4](5), violations, seconds));
}

struct Peak {
  double stress = -1e300;
  double strain = 0.0;
  std::size_t index = 0;
};

Peak peak_of(const HomogenizedResult& res) {
  Peak p;
  for (std::size_t i = 0; i < res.steps.size(); ++i) {
    if (res.steps[i].stress[0] > p.stress) p = {res.steps[i].stress[0], res.steps[i].strain[0], i};
  }
  return p;
}

const FixtureRun* g_ud_base = nullptr;

void criterion_8() {
  const auto& d = run_fixture("ud_damage", "ud_damage");
  g_ud_base = &d;
  const auto& tied = run_fixture("ud_damage_tied", "ud_damage_tied");
  const auto& res = d.outcome.result;
  const Peak p = peak_of(res);
  bool rises = true;
  for (std::size_t i = 1; i <= p.index && i < res.steps.size(); ++i)
    rises = rises && res.steps[i].stress[0] > res.steps[i - 1].stress[0];
  double post_min = p.stress;
  for (std::size_t i = p.index; i < res.steps.size(); ++i) post_min = std::min(post_min, res.steps[i].stress[0]);
  const bool softens = p.index + 1 < res.steps.size() && post_min < 0.95 * p.stress;
  bool tied_monotone = tied.outcome.result.completed;
  const auto& ts = tied.outcome.result.steps;
  for (std::size_t i = 1; i < ts.size(); ++i) tied_monotone = tied_monotone && ts[i].stress[0] >= ts[i - 1].stress[0];
  const bool ok = res.completed && rises && p.stress >= 40.0 && p.stress <= 80.0 && p.strain < 0.008 && softens &&
                  tied_monotone && d.seconds < 600.0 && tied.seconds < 600.0;
  report(8, ok,
         fmt("%d tets; peak %.2f MPa at exx %.4f, min after peak %.2f MPa; ft = inf %s to %.2f MPa; %.1f s + %.1f s",
             d.outcome.tets, p.stress, p.strain, post_min, tied_monotone ? "rises monotonically" : "does not rise monotonically",
             ts.empty() ? 0.0 : ts.back().stress[0], d.seconds, tied.seconds));
}

void criterion_9() {
  const auto& base = g_ud_base->outcome.result;
  // Gf sweep, base run is Gf = 0.002
  double gf_dev = 0.0;
  bool complete = base.completed;
  for (double gf : {0.003, 0.004, 0.1}) {
    const auto& r = run_fixture("ud_damage", fmt("ud_damage_Gf=%g", gf), {{"materials.interface.Gf", gf}});
    const auto& steps = r.outcome.result.steps;
    complete = complete && r.outcome.result.completed;
    for (std::size_t i = 0; i < steps.size() && i < base.steps.size(); ++i) {
      if (base.steps[i].strain[0] > 0.005 + 1e-12) break;
      gf_dev = std::max(gf_dev, std::abs(steps[i].stress[0] - base.steps[i].stress[0]) /
                                    std::abs(base.steps[i].stress[0]));
    }
  }
  // ft sweep, base run is ft = 50
  std::vector<double> peaks;
  for (double ft : {20.0, 35.0}) {
    const auto& r = run_fixture("ud_damage", fmt("ud_damage_ft=%g", ft), {{"materials.interface.ft", ft}});
    complete = complete && r.outcome.result.completed;
    peaks.push_back(peak_of(r.outcome.result).stress);
  }
  peaks.push_back(peak_of(base).stress);
  const bool ft_monotone = peaks[0] <= peaks[1] && peaks[1] <= peaks[2];
  // elastic matrix against the plastic base, after the plastic peak
  const auto& el = run_fixture("ud_damage", "ud_damage_elastic_matrix", {{"materials.regions.0.plastic", false}});
  complete = complete && el.outcome.result.completed;
  const auto& es = el.outcome.result.steps;
  int below = 0;
  double min_margin = 1e300;
  for (std::size_t i = peak_of(base).index; i < base.steps.size() && i < es.size(); ++i) {
    const double margin = es[i].stress[0] - base.steps[i].stress[0];
    min_margin = std::min(min_margin, margin);
    below += margin >= 0.0 ? 0 : 1;
  }
  report(9, complete && gf_dev <= 0.01 && ft_monotone && below == 0,
         fmt("Gf curves max deviation %.3f%% up to exx 0.5%%; peaks %.2f, %.2f, %.2f MPa for ft 20, 35, 50; "
             "elastic - plastic post-peak min %.3f MPa",
             100 * gf_dev, peaks[0], peaks[1], peaks[2], min_margin));
}

void criterion_12() {
  const auto& again = run_fixture("ud_damage", "ud_damage_rerun");
  const std::string a = read_file(g_ud_base->dir / "curve.csv");
  const std::string b = read_file(again.dir / "curve.csv");
  report(12, !a.empty() && a == b,
         fmt("curve.csv %zu bytes, rerun %s (seed %u, %d thread)", a.size(), a == b ? "identical" : "differs",
             g_ud_base->cfg.seed, g_ud_base->cfg.threads));
}

void other_fixtures() {
  run_fixture("m2rve", "m2rve");
  for (const char* d : {"xx", "yy", "yz", "zx"}) run_fixture(std::string("plain_weave_") + d, std::string("plain_weave_") + d);
}

}  // namespace

int main(int argc, char** argv) {
  const char* env = std::getenv("FRC_FIXTURES");
  if (argc > 1) {
    g_fixtures = argv[1];
  } else if (env) {
    g_fixtures = env;
  } else {
    std::fprintf(stderr, "usage: frc_acceptance <fixtures-dir> (or set FRC_FIXTURES)\n");
    return 2;
  }
  g_out = fs::temp_directory_path() / "frc_acceptance";
  fs::remove_all(g_out);
  fs::create_directories(g_out);

  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::pair<int, std::function<void()>>> plan = {
      {1, criterion_1},  {3, criterion_3},  {4, criterion_4}, {5, criterion_5},  {10, criterion_10},
      {11, criterion_11}, {2, criterion_2}, {7, criterion_7}, {8, criterion_8},  {9, criterion_9},
      {12, criterion_12}, {0, criterion_6_elastic}, {0, other_fixtures}};
  for (const auto& [id, fn] : plan) {
    try {
      fn();
    } catch (const std::exception& e) {
      if (id > 0) {
        report(id, false, std::string("exception: ") + e.what());
      } else {
        // a failed identity check or fixture run is charged to criterion 6
        std::printf("error: %s\n", e.what());
        g_identity_err = std::numeric_limits<double>::infinity();
      }
    }
  }
  criterion_6(g_identity_err);

  int unexpected = 0, known = 0;
  std::printf("\nsummary (%.0f s):\n", seconds_since(t0));
  for (const auto& [id, v] : g_verdicts) {
    const bool expected_fail = kKnownFailures.count(id) > 0;
    if (!v.pass && expected_fail) ++known;
    if (!v.pass && !expected_fail) ++unexpected;
    std::printf("  %2d %s%s\n", id, v.pass ? "PASS" : "FAIL",
                v.pass && expected_fail ? " (listed as a known failure, now passing)"
                : !v.pass && expected_fail ? " (known failure, see README)" : "");
  }
  std::printf("%zu criteria, %zu pass, %d known failure(s), %d unexpected failure(s)\n", g_verdicts.size(),
              g_verdicts.size() - known - unexpected, known, unexpected);
  return unexpected == 0 ? 0 : 1;
}
