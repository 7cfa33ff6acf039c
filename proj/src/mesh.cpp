#include "frc/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <unordered_map>

namespace frc {

namespace {

constexpr std::array<std::array<int, 3>, 4> kTetFaces{{{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}}};

Face sorted(Face f) {
  std::sort(f.begin(), f.end());
  return f;
}

std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
T number(std::string_view tok, int line) {
  T v{};
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw MeshError("malformed number '" + std::string(tok) + "'", line);
  }
  return v;
}

std::string fmt(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct Parser {
  struct Line {
    int no;
    std::vector<std::string_view> tok;
  };
  std::vector<Line> lines;
  std::size_t pos = 0;

  explicit Parser(std::string_view text) {
    int no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      ++no;
      std::string_view l = text.substr(start, end - start);
      if (auto hash = l.find('#'); hash != std::string_view::npos) l = l.substr(0, hash);
      auto tok = tokenize(l);
      if (!tok.empty()) lines.push_back({no, std::move(tok)});
      start = end + 1;
    }
  }

  bool done() const { return pos >= lines.size(); }
  const Line& next(int section_line) {
    if (done()) throw MeshError("section truncated", section_line);
    return lines[pos++];
  }
};

void expect_tokens(const Parser::Line& l, std::size_t n) {
  if (l.tok.size() != n) {
    throw MeshError("expected " + std::to_string(n) + " fields, got " +
                        std::to_string(l.tok.size()),
                    l.no);
  }
}

}  // namespace

double tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return (b - a).cross(c - a).dot(d - a) / 6.0;
}

double tet_volume(const Mesh& m, int t) {
  const auto& n = m.tets[t].n;
  return tet_volume(m.nodes[n[0]], m.nodes[n[1]], m.nodes[n[2]], m.nodes[n[3]]);
}

std::array<Vec3, 4> tet_coords(const Mesh& m, int t) {
  const auto& n = m.tets[t].n;
  return {m.nodes[n[0]], m.nodes[n[1]], m.nodes[n[2]], m.nodes[n[3]]};
}

TetGradients tet_gradients(const std::array<Vec3, 4>& x) {
  Mat3 j;
  j << x[1] - x[0], x[2] - x[0], x[3] - x[0];
  const Mat3 g = j.inverse().transpose();
  TetGradients out;
  out.rightCols<3>() = g;
  out.col(0) = -g.rowwise().sum();
  return out;
}

Box Mesh::bbox() const {
  Box b;
  if (nodes.empty()) return b;
  b.lo = b.hi = nodes.front();
  for (const auto& x : nodes) {
    b.lo = b.lo.cwiseMin(x);
    b.hi = b.hi.cwiseMax(x);
  }
  return b;
}

double Mesh::volume() const {
  double v = 0.0;
  for (int t = 0; t < static_cast<int>(tets.size()); ++t) v += tet_volume(*this, t);
  return v;
}

std::vector<int> Mesh::regions() const {
  std::set<int> r;
  for (const auto& t : tets) r.insert(t.region);
  return {r.begin(), r.end()};
}

void Mesh::validate() const {
  const int nn = static_cast<int>(nodes.size());
  auto in_range = [nn](int id) { return id >= 0 && id < nn; };
  for (int i = 0; i < nn; ++i) {
    if (!nodes[i].allFinite()) throw MeshError("node " + std::to_string(i) + " is not finite");
  }
  const double diag = bbox().diagonal();
  for (int t = 0; t < static_cast<int>(tets.size()); ++t) {
    for (int id : tets[t].n) {
      if (!in_range(id)) throw MeshError("tet " + std::to_string(t) + " references missing node");
    }
    if (!(tet_volume(*this, t) > 0.0)) {
      throw MeshError("tet " + std::to_string(t) + " is inverted or degenerate");
    }
  }
  for (int c = 0; c < static_cast<int>(cohesive.size()); ++c) {
    for (int id : cohesive[c].n) {
      if (!in_range(id)) throw MeshError("cohesive " + std::to_string(c) + " references missing node");
    }
    for (int k = 0; k < 3; ++k) {
      if ((nodes[cohesive[c].n[k]] - nodes[cohesive[c].n[k + 3]]).norm() >= 1e-9 * diag) {
        throw MeshError("cohesive " + std::to_string(c) + " faces are not coincident");
      }
    }
  }
  for (const auto& [name, faces] : face_sets) {
    for (const auto& f : faces) {
      for (int id : f) {
        if (!in_range(id)) throw MeshError("face set '" + name + "' references missing node");
      }
    }
  }
  const Vec3 ext = bbox().extent();
  for (const auto& p : periodic) {
    if (!in_range(p.master) || !in_range(p.slave) || p.axis < 0 || p.axis > 2) {
      throw MeshError("periodic pair out of range");
    }
    const Vec3 shift = ext(p.axis) * Vec3::Unit(p.axis);
    if ((nodes[p.slave] - nodes[p.master] - shift).norm() > 1e-8 * diag) {
      throw MeshError("periodic pair " + std::to_string(p.master) + "/" +
                      std::to_string(p.slave) + " is not one period apart");
    }
  }
  if (!directions.empty()) {
    if (directions.size() != tets.size()) throw MeshError("direction count differs from tet count");
    for (std::size_t t = 0; t < directions.size(); ++t) {
      if (std::abs(directions[t].norm() - 1.0) > 1e-10) {
        throw MeshError("direction of tet " + std::to_string(t) + " is not unit");
      }
    }
  }
}

Mesh parse_mesh(std::string_view text) {
  Parser ps(text);
  Mesh m;
  std::unordered_map<long long, int> node_id, tet_id;
  std::set<long long> cohesive_ids;
  auto node_ref = [&](std::string_view tok, int line) {
    const auto id = number<long long>(tok, line);
    auto it = node_id.find(id);
    if (it == node_id.end()) throw MeshError("dangling node id " + std::to_string(id), line);
    return it->second;
  };
  std::vector<int> periodic_lines;
  bool diag_known = false;
  double diag = 0.0;
  auto ensure_diag = [&] {
    if (!diag_known) {
      diag = m.bbox().diagonal();
      diag_known = true;
    }
  };
  while (!ps.done()) {
    const auto& head = ps.next(0);
    const std::string_view key = head.tok[0];
    if (key == "NODES") {
      expect_tokens(head, 2);
      const auto n = number<long long>(head.tok[1], head.no);
      for (long long i = 0; i < n; ++i) {
        const auto& l = ps.next(head.no);
        expect_tokens(l, 4);
        const auto id = number<long long>(l.tok[0], l.no);
        if (!node_id.emplace(id, static_cast<int>(m.nodes.size())).second) {
          throw MeshError("duplicate node id " + std::to_string(id), l.no);
        }
        m.nodes.emplace_back(number<double>(l.tok[1], l.no), number<double>(l.tok[2], l.no),
                             number<double>(l.tok[3], l.no));
      }
      diag_known = false;
    } else if (key == "TETS") {
      expect_tokens(head, 2);
      const auto n = number<long long>(head.tok[1], head.no);
      for (long long i = 0; i < n; ++i) {
        const auto& l = ps.next(head.no);
        expect_tokens(l, 6);
        const auto id = number<long long>(l.tok[0], l.no);
        if (!tet_id.emplace(id, static_cast<int>(m.tets.size())).second) {
          throw MeshError("duplicate tet id " + std::to_string(id), l.no);
        }
        Tet t;
        for (int k = 0; k < 4; ++k) t.n[k] = node_ref(l.tok[1 + k], l.no);
        t.region = number<int>(l.tok[5], l.no);
        m.tets.push_back(t);
        if (!(tet_volume(m, static_cast<int>(m.tets.size()) - 1) > 0.0)) {
          throw MeshError("inverted tet " + std::to_string(id), l.no);
        }
      }
    } else if (key == "COHESIVE") {
      expect_tokens(head, 2);
      const auto n = number<long long>(head.tok[1], head.no);
      for (long long i = 0; i < n; ++i) {
        const auto& l = ps.next(head.no);
        expect_tokens(l, 7);
        const auto id = number<long long>(l.tok[0], l.no);
        if (!cohesive_ids.insert(id).second) {
          throw MeshError("duplicate cohesive id " + std::to_string(id), l.no);
        }
        CohesiveTri c;
        for (int k = 0; k < 6; ++k) c.n[k] = node_ref(l.tok[1 + k], l.no);
        ensure_diag();
        for (int k = 0; k < 3; ++k) {
          if ((m.nodes[c.n[k]] - m.nodes[c.n[k + 3]]).norm() >= 1e-9 * diag) {
            throw MeshError("non-coincident cohesive pair " + std::to_string(id), l.no);
          }
        }
        m.cohesive.push_back(c);
      }
    } else if (key == "FACESET") {
      expect_tokens(head, 3);
      const std::string name(head.tok[1]);
      const auto n = number<long long>(head.tok[2], head.no);
      auto& faces = m.face_sets[name];
      if (!faces.empty()) throw MeshError("duplicate face set '" + name + "'", head.no);
      for (long long i = 0; i < n; ++i) {
        const auto& l = ps.next(head.no);
        expect_tokens(l, 3);
        faces.push_back({node_ref(l.tok[0], l.no), node_ref(l.tok[1], l.no),
                         node_ref(l.tok[2], l.no)});
      }
    } else if (key == "PERIODIC") {
      expect_tokens(head, 2);
      const auto n = number<long long>(head.tok[1], head.no);
      for (long long i = 0; i < n; ++i) {
        const auto& l = ps.next(head.no);
        expect_tokens(l, 3);
        PeriodicPair p{node_ref(l.tok[0], l.no), node_ref(l.tok[1], l.no),
                       number<int>(l.tok[2], l.no)};
        if (p.axis < 0 || p.axis > 2) throw MeshError("periodic axis must be 0, 1 or 2", l.no);
        m.periodic.push_back(p);
        periodic_lines.push_back(l.no);
      }
    } else if (key == "DIRECTIONS") {
      expect_tokens(head, 2);
      const auto n = number<long long>(head.tok[1], head.no);
      m.directions.assign(m.tets.size(), Vec3::Constant(std::nan("")));
      for (long long i = 0; i < n; ++i) {
        const auto& l = ps.next(head.no);
        expect_tokens(l, 4);
        const auto id = number<long long>(l.tok[0], l.no);
        auto it = tet_id.find(id);
        if (it == tet_id.end()) throw MeshError("dangling tet id " + std::to_string(id), l.no);
        const Vec3 d(number<double>(l.tok[1], l.no), number<double>(l.tok[2], l.no),
                     number<double>(l.tok[3], l.no));
        if (std::abs(d.norm() - 1.0) > 1e-10) throw MeshError("direction is not unit", l.no);
        m.directions[it->second] = d;
      }
      for (std::size_t t = 0; t < m.directions.size(); ++t) {
        if (!m.directions[t].allFinite()) {
          throw MeshError("DIRECTIONS does not cover every tet", head.no);
        }
      }
    } else {
      throw MeshError("unknown section '" + std::string(key) + "'", head.no);
    }
  }
  const Vec3 ext = m.bbox().extent();
  ensure_diag();
  for (std::size_t i = 0; i < m.periodic.size(); ++i) {
    const auto& p = m.periodic[i];
    const Vec3 shift = ext(p.axis) * Vec3::Unit(p.axis);
    if ((m.nodes[p.slave] - m.nodes[p.master] - shift).norm() > 1e-8 * diag) {
      throw MeshError("periodic pair is not one period apart", periodic_lines[i]);
    }
  }
  m.validate();
  return m;
}

Mesh read_mesh(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MeshError("cannot open mesh file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_mesh(ss.str());
}

std::string serialise(const Mesh& m) {
  std::string out;
  out.reserve(64 * (m.nodes.size() + m.tets.size()));
  out += "NODES " + std::to_string(m.nodes.size()) + "\n";
  for (std::size_t i = 0; i < m.nodes.size(); ++i) {
    out += std::to_string(i);
    for (int k = 0; k < 3; ++k) out += " " + fmt(m.nodes[i](k));
    out += "\n";
  }
  out += "TETS " + std::to_string(m.tets.size()) + "\n";
  for (std::size_t i = 0; i < m.tets.size(); ++i) {
    out += std::to_string(i);
    for (int id : m.tets[i].n) out += " " + std::to_string(id);
    out += " " + std::to_string(m.tets[i].region) + "\n";
  }
  if (!m.cohesive.empty()) {
    out += "COHESIVE " + std::to_string(m.cohesive.size()) + "\n";
    for (std::size_t i = 0; i < m.cohesive.size(); ++i) {
      out += std::to_string(i);
      for (int id : m.cohesive[i].n) out += " " + std::to_string(id);
      out += "\n";
    }
  }
  for (const auto& [name, faces] : m.face_sets) {
    out += "FACESET " + name + " " + std::to_string(faces.size()) + "\n";
    for (const auto& f : faces) {
      out += std::to_string(f[0]) + " " + std::to_string(f[1]) + " " + std::to_string(f[2]) + "\n";
    }
  }
  if (!m.periodic.empty()) {
    out += "PERIODIC " + std::to_string(m.periodic.size()) + "\n";
    for (const auto& p : m.periodic) {
      out += std::to_string(p.master) + " " + std::to_string(p.slave) + " " +
             std::to_string(p.axis) + "\n";
    }
  }
  if (!m.directions.empty()) {
    out += "DIRECTIONS " + std::to_string(m.directions.size()) + "\n";
    for (std::size_t i = 0; i < m.directions.size(); ++i) {
      out += std::to_string(i);
      for (int k = 0; k < 3; ++k) out += " " + fmt(m.directions[i](k));
      out += "\n";
    }
  }
  return out;
}

void write_mesh(const Mesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MeshError("cannot write mesh file " + path.string());
  out << serialise(mesh);
}

std::vector<PeriodicPair> detect_periodic_pairs(const Mesh& mesh, const Box& box, double tol) {
  const int nn = static_cast<int>(mesh.nodes.size());
  std::vector<std::vector<int>> signature(nn);
  for (const auto& t : mesh.tets) {
    for (int id : t.n) signature[id].push_back(t.region);
  }
  for (auto& s : signature) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
  }

  auto on_box = [&](const Vec3& x) {
    for (int a = 0; a < 3; ++a) {
      if (std::abs(x(a) - box.lo(a)) <= tol || std::abs(x(a) - box.hi(a)) <= tol) return true;
    }
    return false;
  };
  for (const auto& f : boundary_faces(mesh)) {
    for (int id : f.n) {
      if (!on_box(mesh.nodes[id])) {
        throw MeshError("boundary node " + std::to_string(id) + " is not on the RVE box");
      }
    }
  }

  std::vector<PeriodicPair> pairs;
  const double cell = 2.0 * tol;
  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3, v = (axis + 2) % 3;
    std::vector<int> lo, hi;
    for (int i = 0; i < nn; ++i) {
      if (signature[i].empty()) continue;
      const double x = mesh.nodes[i](axis);
      if (std::abs(x - box.lo(axis)) <= tol) lo.push_back(i);
      if (std::abs(x - box.hi(axis)) <= tol) hi.push_back(i);
    }
    auto key = [&](int i) {
      return std::pair{static_cast<long long>(std::floor(mesh.nodes[i](u) / cell)),
                       static_cast<long long>(std::floor(mesh.nodes[i](v) / cell))};
    };
    std::map<std::pair<long long, long long>, std::vector<int>> grid;
    for (int i : hi) grid[key(i)].push_back(i);
    std::vector<char> used(nn, 0);
    for (int i : lo) {
      const auto [ku, kv] = key(i);
      std::vector<int> near;
      for (long long du = -1; du <= 1; ++du) {
        for (long long dv = -1; dv <= 1; ++dv) {
          auto it = grid.find({ku + du, kv + dv});
          if (it == grid.end()) continue;
          for (int j : it->second) {
            if (std::abs(mesh.nodes[j](u) - mesh.nodes[i](u)) <= tol &&
                std::abs(mesh.nodes[j](v) - mesh.nodes[i](v)) <= tol) {
              near.push_back(j);
            }
          }
        }
      }
      // Coincident candidates (interface duplicates) are told apart by the
      // regions around them; a lone candidate matches whatever its regions.
      int match = near.size() == 1 ? near.front() : -1;
      int count = near.size() == 1 ? 1 : 0;
      if (near.size() > 1) {
        for (int j : near) {
          if (signature[j] == signature[i]) {
            match = j;
            ++count;
          }
        }
      }
      if (count == 0) {
        throw MeshError("periodic matching: node " + std::to_string(i) + " on the low " +
                        "xyz"[axis] + " face has no partner");
      }
      if (count > 1 || used[match]) {
        throw MeshError("periodic matching: node " + std::to_string(i) + " is ambiguous");
      }
      used[match] = 1;
      pairs.push_back({i, match, axis});
    }
    for (int j : hi) {
      if (!used[j]) {
        throw MeshError("periodic matching: node " + std::to_string(j) + " on the high " +
                        "xyz"[axis] + " face has no partner");
      }
    }
  }
  return pairs;
}

std::vector<BoundaryFace> boundary_faces(const Mesh& mesh) {
  struct Entry {
    Face key;
    int tet;
    int local;
  };
  std::vector<Entry> all;
  all.reserve(4 * mesh.tets.size());
  for (int t = 0; t < static_cast<int>(mesh.tets.size()); ++t) {
    for (int f = 0; f < 4; ++f) {
      const auto& lf = kTetFaces[f];
      all.push_back({sorted({mesh.tets[t].n[lf[0]], mesh.tets[t].n[lf[1]], mesh.tets[t].n[lf[2]]}),
                     t, f});
    }
  }
  std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) {
    return a.key != b.key ? a.key < b.key : a.tet < b.tet;
  });
  std::set<Face> interface;
  for (const auto& c : mesh.cohesive) {
    interface.insert(sorted({c.n[0], c.n[1], c.n[2]}));
    interface.insert(sorted({c.n[3], c.n[4], c.n[5]}));
  }
  std::vector<BoundaryFace> out;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].key == all[i].key) ++j;
    if (j - i > 2) {
      throw MeshError("non-manifold face shared by " + std::to_string(j - i) + " tets");
    }
    if (j - i == 1 && !interface.count(all[i].key)) {
      const auto& t = mesh.tets[all[i].tet];
      const auto& lf = kTetFaces[all[i].local];
      Face f{t.n[lf[0]], t.n[lf[1]], t.n[lf[2]]};
      const Vec3& a = mesh.nodes[f[0]];
      Vec3 cr = (mesh.nodes[f[1]] - a).cross(mesh.nodes[f[2]] - a);
      const int opposite = t.n[all[i].local];
      if (cr.dot(a - mesh.nodes[opposite]) < 0.0) {
        std::swap(f[1], f[2]);
        cr = -cr;
      }
      const double twice = cr.norm();
      out.push_back({f, all[i].tet, cr / twice, 0.5 * twice});
    }
    i = j;
  }
  return out;
}

QualityReport mesh_quality(const Mesh& mesh, double threshold_deg) {
  QualityReport q;
  q.min_volume = std::numeric_limits<double>::infinity();
  constexpr double kDeg = 180.0 / std::numbers::pi;
  for (int t = 0; t < static_cast<int>(mesh.tets.size()); ++t) {
    const auto& n = mesh.tets[t].n;
    std::array<Vec3, 4> normal;
    for (int f = 0; f < 4; ++f) {
      const auto& lf = kTetFaces[f];
      const Vec3& a = mesh.nodes[n[lf[0]]];
      Vec3 cr = (mesh.nodes[n[lf[1]]] - a).cross(mesh.nodes[n[lf[2]]] - a);
      if (cr.dot(a - mesh.nodes[n[f]]) < 0.0) cr = -cr;
      normal[f] = cr.normalized();
    }
    bool bad = false;
    for (int i = 0; i < 4; ++i) {
      for (int j = i + 1; j < 4; ++j) {
        const double c = std::clamp(normal[i].dot(normal[j]), -1.0, 1.0);
        const double angle = 180.0 - std::acos(c) * kDeg;
        q.min_dihedral_deg = std::min(q.min_dihedral_deg, angle);
        q.max_dihedral_deg = std::max(q.max_dihedral_deg, angle);
        bad = bad || angle < threshold_deg;
      }
    }
    q.below_threshold += bad;
    q.min_volume = std::min(q.min_volume, tet_volume(mesh, t));
  }
  if (mesh.tets.empty()) q.min_volume = 0.0;
  return q;
}

Mesh box_mesh(const Box& box, const std::array<int, 3>& div, int region) {
  for (int d : div) {
    if (d < 1) throw MeshError("box mesh: divisions must be positive");
  }
  Mesh m;
  auto id = [&](int i, int j, int k) { return (k * (div[1] + 1) + j) * (div[0] + 1) + i; };
  for (int k = 0; k <= div[2]; ++k)
    for (int j = 0; j <= div[1]; ++j)
      for (int i = 0; i <= div[0]; ++i) {
        // exact end coordinates keep opposite faces bit-identical
        auto coord = [](double lo, double hi, int a, int n) {
          return a == n ? hi : lo + (hi - lo) * a / n;
        };
        m.nodes.emplace_back(coord(box.lo(0), box.hi(0), i, div[0]),
                             coord(box.lo(1), box.hi(1), j, div[1]),
                             coord(box.lo(2), box.hi(2), k, div[2]));
      }
  static constexpr std::array<std::array<int, 3>, 6> kPerm{
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  for (int k = 0; k < div[2]; ++k)
    for (int j = 0; j < div[1]; ++j)
      for (int i = 0; i < div[0]; ++i)
        for (const auto& perm : kPerm) {
          std::array<int, 3> c{i, j, k};
          Tet t;
          t.region = region;
          t.n[0] = id(c[0], c[1], c[2]);
          for (int s = 0; s < 3; ++s) {
            ++c[perm[s]];
            t.n[s + 1] = id(c[0], c[1], c[2]);
          }
          m.tets.push_back(t);
          if (tet_volume(m, static_cast<int>(m.tets.size()) - 1) < 0.0) {
            std::swap(m.tets.back().n[1], m.tets.back().n[2]);
          }
        }
  return m;
}

Mesh merge_meshes(const std::vector<Mesh>& parts, double tol) {
  Mesh out;
  const double cell = 2.0 * tol;
  using Key = std::array<long long, 3>;
  std::map<Key, std::vector<int>> grid;
  auto key = [&](const Vec3& x) {
    return Key{static_cast<long long>(std::floor(x(0) / cell)),
               static_cast<long long>(std::floor(x(1) / cell)),
               static_cast<long long>(std::floor(x(2) / cell))};
  };
  const bool with_dirs = !parts.empty() && !parts.front().directions.empty();
  for (const auto& part : parts) {
    if (part.directions.empty() == with_dirs) {
      throw MeshError("merge: either all or none of the parts must carry directions");
    }
    std::vector<int> map(part.nodes.size());
    const std::size_t existing = out.nodes.size();
    for (std::size_t i = 0; i < part.nodes.size(); ++i) {
      const Vec3& x = part.nodes[i];
      const Key k = key(x);
      int match = -1, count = 0;
      for (long long a = -1; a <= 1; ++a)
        for (long long b = -1; b <= 1; ++b)
          for (long long c = -1; c <= 1; ++c) {
            auto it = grid.find({k[0] + a, k[1] + b, k[2] + c});
            if (it == grid.end()) continue;
            for (int j : it->second) {
              if (static_cast<std::size_t>(j) < existing && (out.nodes[j] - x).norm() <= tol) {
                match = j;
                ++count;
              }
            }
          }
      if (count > 1) {
        throw MeshError("merge: node at (" + fmt(x(0)) + ", " + fmt(x(1)) + ", " + fmt(x(2)) +
                        ") matches several existing nodes");
      }
      if (match < 0) {
        match = static_cast<int>(out.nodes.size());
        out.nodes.push_back(x);
        grid[k].push_back(match);
      }
      map[i] = match;
    }
    for (auto t : part.tets) {
      for (int& id : t.n) id = map[id];
      out.tets.push_back(t);
    }
    for (auto c : part.cohesive) {
      for (int& id : c.n) id = map[id];
      out.cohesive.push_back(c);
    }
    for (const auto& [name, faces] : part.face_sets) {
      auto& dst = out.face_sets[name];
      for (auto f : faces) {
        for (int& id : f) id = map[id];
        dst.push_back(f);
      }
    }
    out.directions.insert(out.directions.end(), part.directions.begin(), part.directions.end());
  }
  out.validate();
  return out;
}

}  // namespace frc
