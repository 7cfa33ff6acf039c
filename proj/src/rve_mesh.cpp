#include "frc/rve.hpp"

#include "frc/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace frc {

namespace {

using i64 = std::int64_t;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct IPointHash {
  std::size_t operator()(const IPoint& p) const {
    return std::hash<i64>()(p.x * 0x9E3779B97F4A7C15ull ^ p.y);
  }
};

struct Image {
  int fibre;
  double cx, cy, r;
  int ix, iy;  // periodic shift of the image in cells
};

// Circle arc inside the cell. Open arcs run counter-clockwise from p0 to p1
// (both on the cell boundary); closed arcs are whole circles.
struct Arc {
  int image;
  bool closed = false;
  double a0 = 0.0, a1 = kTwoPi;
  IPoint p0, p1;
  std::vector<double> inner;  // sorted interior angles
};

struct Segment {
  IPoint a, b;
  int kind;   // 0: edge family x, 1: edge family y, 2: arc
  int index;  // arc id, or position in the family
};

class SectionMesher {
 public:
  SectionMesher(const FibreLayout& layout, double h) : lay_(layout), h_(h) {
    if (!(h > 0.0)) throw MeshingError("mesher: target edge must be positive");
    q_ = std::max(layout.Lx, layout.Ly) / double(i64{1} << 25);
    xmax_ = std::llround(layout.Lx / q_);
    ymax_ = std::llround(layout.Ly / q_);
    min_len_ = std::max<double>(64.0, 1e-3 * h / q_);
    build_images();
    check_clearance();
    build_boundary();
    build_arcs();
    build_free_points();
  }

  Mesh2D run() {
    for (int round = 0; round < 200; ++round) {
      assemble();
      tris_ = delaunay(pts_);
      std::unordered_set<std::uint64_t> edges;
      for (const auto& t : tris_)
        for (int k = 0; k < 3; ++k) edges.insert(edge_key(t[k], t[(k + 1) % 3]));
      std::vector<Segment> missing;
      for (const auto& s : segments())
        if (!edges.count(edge_key(id_.at(s.a), id_.at(s.b)))) missing.push_back(s);
      if (missing.empty()) return finish();
      for (const auto& s : missing) recover(s);
    }
    throw MeshingError("mesher: boundary recovery did not converge");
  }

 private:
  static std::uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
  }

  IPoint quant(double x, double y) const { return {std::llround(x / q_), std::llround(y / q_)}; }
  double coord_x(i64 v) const { return v == xmax_ ? lay_.Lx : v * q_; }
  double coord_y(i64 v) const { return v == ymax_ ? lay_.Ly : v * q_; }

  void build_images() {
    const int jr = lay_.periodic_y ? 1 : 0;
    for (int f = 0; f < static_cast<int>(lay_.fibres.size()); ++f) {
      const Fibre& fb = lay_.fibres[f];
      for (int i = -1; i <= 1; ++i) {
        for (int j = -jr; j <= jr; ++j) {
          const double cx = fb.x + i * lay_.Lx, cy = fb.y + j * lay_.Ly;
          const double dx = std::max({0.0, -cx, cx - lay_.Lx});
          const double dy = std::max({0.0, -cy, cy - lay_.Ly});
          if (std::hypot(dx, dy) < fb.r) images_.push_back({f, cx, cy, fb.r, i, j});
        }
      }
    }
    bucket_ = 2.0 * (lay_.fibres.empty() ? 1.0 : lay_.fibres.front().r) + h_;
    for (int k = 0; k < static_cast<int>(images_.size()); ++k) {
      const auto& im = images_[k];
      for (int bx = cell(im.cx - im.r); bx <= cell(im.cx + im.r); ++bx)
        for (int by = cell(im.cy - im.r); by <= cell(im.cy + im.r); ++by)
          grid_[key(bx, by)].push_back(k);
    }
  }

  // Fibres must be disjoint with a gap the quantised boundary can resolve.
  void check_clearance() const {
    const double gap = min_len_ * q_;
    for (std::size_t a = 0; a < images_.size(); ++a) {
      for (std::size_t b = a + 1; b < images_.size(); ++b) {
        const auto& p = images_[a];
        const auto& o = images_[b];
        if (p.fibre == o.fibre) continue;
        if (std::hypot(p.cx - o.cx, p.cy - o.cy) - p.r - o.r < gap) {
          std::ostringstream msg;
          msg << "mesher: fibres " << std::min(p.fibre, o.fibre) << " and "
              << std::max(p.fibre, o.fibre) << " overlap or are too close (near-tangent)";
          throw MeshingError(msg.str());
        }
      }
    }
  }

  int cell(double v) const { return static_cast<int>(std::floor(v / bucket_)); }
  static std::int64_t key(int bx, int by) { return (std::int64_t{bx} << 32) ^ std::uint32_t(by); }
  const std::vector<int>& near(double x, double y) const {
    static const std::vector<int> none;
    auto it = grid_.find(key(cell(x), cell(y)));
    return it == grid_.end() ? none : it->second;
  }

  struct Crossing {
    double angle;
    IPoint p;
  };

  // Crossings of every image with the cell edges, computed once per fibre in
  // its own frame so both copies of a periodic edge get the same point.
  void build_boundary() {
    std::set<i64> fx{0, xmax_}, fy{0, ymax_};
    crossings_.assign(images_.size(), {});
    for (int k = 0; k < static_cast<int>(images_.size()); ++k) {
      const Image& im = images_[k];
      const Fibre& fb = lay_.fibres[im.fibre];
      // vertical lines x = 0 and x = Lx
      for (int side = 0; side < 2; ++side) {
        const int line = fb.x < 0.5 * lay_.Lx ? 0 : 1;
        if (side - im.ix != line) continue;
        const double s = line * lay_.Lx;
        const double ux = s - fb.x;
        if (std::abs(ux) >= fb.r) continue;
        const double sq = std::sqrt(fb.r * fb.r - ux * ux);
        for (double sgn : {-1.0, 1.0}) {
          const double raw = im.cy + sgn * sq;
          if (raw <= 0.0 || raw >= lay_.Ly) continue;
          double canon = fb.y + sgn * sq;
          if (lay_.periodic_y) canon -= lay_.Ly * std::floor(canon / lay_.Ly);
          const i64 v = std::llround(canon / q_);
          fy.insert(v);
          crossings_[k].push_back({std::atan2(sgn * sq, ux), {side ? xmax_ : 0, v}});
        }
      }
      if (!lay_.periodic_y) continue;
      for (int side = 0; side < 2; ++side) {
        const int line = fb.y < 0.5 * lay_.Ly ? 0 : 1;
        if (side - im.iy != line) continue;
        const double s = line * lay_.Ly;
        const double uy = s - fb.y;
        if (std::abs(uy) >= fb.r) continue;
        const double sq = std::sqrt(fb.r * fb.r - uy * uy);
        for (double sgn : {-1.0, 1.0}) {
          const double raw = im.cx + sgn * sq;
          if (raw <= 0.0 || raw >= lay_.Lx) continue;
          double canon = fb.x + sgn * sq;
          canon -= lay_.Lx * std::floor(canon / lay_.Lx);
          const i64 v = std::llround(canon / q_);
          fx.insert(v);
          crossings_[k].push_back({std::atan2(uy, sgn * sq), {v, side ? ymax_ : 0}});
        }
      }
    }
    // fill each family between fixed points at the target spacing
    auto fill = [&](const std::set<i64>& base) {
      std::vector<i64> out;
      const std::vector<i64> b(base.begin(), base.end());
      for (std::size_t i = 0; i + 1 < b.size(); ++i) {
        const double len = double(b[i + 1] - b[i]) * q_;
        const int k = std::max(1, static_cast<int>(std::ceil(len / h_ - 1e-9)));
        for (int j = 0; j < k; ++j) out.push_back(b[i] + (b[i + 1] - b[i]) * j / k);
      }
      out.push_back(b.back());
      return out;
    };
    fam_[0] = fill(fx);
    fam_[1] = fill(fy);
  }

  void build_arcs() {
    for (int k = 0; k < static_cast<int>(images_.size()); ++k) {
      const Image& im = images_[k];
      auto& cr = crossings_[k];
      const double r = im.r;
      if (cr.empty()) {
        Arc a;
        a.image = k;
        a.closed = true;
        const int n = std::max(8, static_cast<int>(std::ceil(kTwoPi * r / h_)));
        for (int j = 0; j < n; ++j) a.inner.push_back(kTwoPi * j / n);
        arcs_.push_back(a);
        continue;
      }
      std::sort(cr.begin(), cr.end(), [](auto& a, auto& b) { return a.angle < b.angle; });
      for (std::size_t i = 0; i < cr.size(); ++i) {
        const Crossing& c0 = cr[i];
        const Crossing& c1 = cr[(i + 1) % cr.size()];
        double a1 = c1.angle;
        if (a1 <= c0.angle) a1 += kTwoPi;
        const double mid = 0.5 * (c0.angle + a1);
        const double mx = im.cx + r * std::cos(mid), my = im.cy + r * std::sin(mid);
        if (mx <= 0.0 || mx >= lay_.Lx || my <= 0.0 || my >= lay_.Ly) continue;
        Arc a;
        a.image = k;
        a.a0 = c0.angle;
        a.a1 = a1;
        a.p0 = c0.p;
        a.p1 = c1.p;
        const double span = a1 - c0.angle;
        const int n = std::max({1, static_cast<int>(std::ceil(span * r / h_ - 1e-9)),
                                static_cast<int>(std::ceil(8 * span / kTwoPi))});
        for (int j = 1; j < n; ++j) a.inner.push_back(c0.angle + span * j / n);
        arcs_.push_back(a);
      }
    }
  }

  bool near_circle(double x, double y, double band) const {
    for (int k : near(x, y)) {
      const auto& im = images_[k];
      if (std::abs(std::hypot(x - im.cx, y - im.cy) - im.r) < band) return true;
    }
    return false;
  }

  void build_free_points() {
    const double dy = h_ * std::sqrt(3.0) / 2.0;
    const int rows = static_cast<int>(std::floor(lay_.Ly / dy));
    const int cols = static_cast<int>(std::floor(lay_.Lx / h_));
    for (int j = 0; j <= rows; ++j) {
      const double y = (j + 0.5) * dy + 0.5 * (lay_.Ly - (rows + 1) * dy);
      for (int i = 0; i <= cols; ++i) {
        const double x = (i + 0.25 + 0.5 * (j % 2)) * h_ + 0.5 * (lay_.Lx - (cols + 1) * h_);
        if (x < 0.5 * h_ || x > lay_.Lx - 0.5 * h_ || y < 0.5 * h_ || y > lay_.Ly - 0.5 * h_) {
          continue;
        }
        if (near_circle(x, y, 0.5 * h_)) continue;
        free_.push_back(quant(x, y));
      }
    }
    free_alive_.assign(free_.size(), true);
  }

  IPoint arc_point(const Arc& a, double angle) const {
    const auto& im = images_[a.image];
    return quant(im.cx + im.r * std::cos(angle), im.cy + im.r * std::sin(angle));
  }

  std::vector<IPoint> arc_chain(const Arc& a) const {
    std::vector<IPoint> out;
    if (!a.closed) out.push_back(a.p0);
    for (double t : a.inner) out.push_back(arc_point(a, t));
    if (!a.closed) out.push_back(a.p1);
    return out;
  }

  std::vector<Segment> segments() const {
    std::vector<Segment> out;
    for (std::size_t i = 0; i + 1 < fam_[0].size(); ++i) {
      for (i64 y : {i64{0}, ymax_}) {
        out.push_back({{fam_[0][i], y}, {fam_[0][i + 1], y}, 0, static_cast<int>(i)});
      }
    }
    for (std::size_t i = 0; i + 1 < fam_[1].size(); ++i) {
      for (i64 x : {i64{0}, xmax_}) {
        out.push_back({{x, fam_[1][i]}, {x, fam_[1][i + 1]}, 1, static_cast<int>(i)});
      }
    }
    for (int k = 0; k < static_cast<int>(arcs_.size()); ++k) {
      const auto chain = arc_chain(arcs_[k]);
      const std::size_t n = chain.size();
      const std::size_t m = arcs_[k].closed ? n : n - 1;
      for (std::size_t i = 0; i < m; ++i) out.push_back({chain[i], chain[(i + 1) % n], 2, k});
    }
    return out;
  }

  void add_point(const IPoint& p, bool constrained) {
    auto [it, fresh] = id_.try_emplace(p, static_cast<int>(pts_.size()));
    if (fresh) {
      pts_.push_back(p);
      return;
    }
    if (constrained && !boundary_point(p)) {
      throw MeshingError("mesher: coincident constraint points near (" +
                         std::to_string(p.x * q_) + ", " + std::to_string(p.y * q_) + ")");
    }
  }

  bool boundary_point(const IPoint& p) const {
    return p.x == 0 || p.y == 0 || p.x == xmax_ || p.y == ymax_;
  }

  void assemble() {
    pts_.clear();
    id_.clear();
    for (i64 x : fam_[0]) {
      add_point({x, 0}, false);
      add_point({x, ymax_}, false);
    }
    for (i64 y : fam_[1]) {
      add_point({0, y}, false);
      add_point({xmax_, y}, false);
    }
    for (const auto& a : arcs_)
      for (double t : a.inner) add_point(arc_point(a, t), true);
    for (std::size_t i = 0; i < free_.size(); ++i) {
      if (!free_alive_[i]) continue;
      if (id_.count(free_[i])) {
        free_alive_[i] = false;
        continue;
      }
      add_point(free_[i], false);
    }
  }

  static bool in_diametral(const IPoint& a, const IPoint& b, const IPoint& p) {
    const __int128 d = static_cast<__int128>(p.x - a.x) * (p.x - b.x) +
                       static_cast<__int128>(p.y - a.y) * (p.y - b.y);
    return d <= 0;
  }

  void recover(const Segment& s) {
    bool removed = false;
    for (std::size_t i = 0; i < free_.size(); ++i) {
      if (free_alive_[i] && in_diametral(s.a, s.b, free_[i])) {
        free_alive_[i] = false;
        removed = true;
      }
    }
    if (removed) return;
    const double len = std::hypot(double(s.b.x - s.a.x), double(s.b.y - s.a.y));
    if (s.kind < 2) {
      auto& fam = fam_[s.kind];
      const i64 lo = s.kind == 0 ? s.a.x : s.a.y, hi = s.kind == 0 ? s.b.x : s.b.y;
      if (len < min_len_) throw too_close(s);
      const i64 mid = (lo + hi) / 2;
      if (std::find(fam.begin(), fam.end(), mid) == fam.end()) {
        fam.insert(std::upper_bound(fam.begin(), fam.end(), mid), mid);
      }
      return;
    }
    if (len < min_len_) throw too_close(s);
    Arc& a = arcs_[s.index];
    // locate the chain position of the segment and insert the mid angle
    std::vector<double> angles;
    if (!a.closed) angles.push_back(a.a0);
    angles.insert(angles.end(), a.inner.begin(), a.inner.end());
    if (!a.closed) angles.push_back(a.a1);
    const auto chain = arc_chain(a);
    for (std::size_t i = 0; i < chain.size(); ++i) {
      const std::size_t j = (i + 1) % chain.size();
      if (!(chain[i] == s.a && chain[j] == s.b)) continue;
      double t0 = angles[i], t1 = angles[j];
      if (t1 <= t0) t1 += kTwoPi;
      double mid = 0.5 * (t0 + t1);
      if (a.closed && mid >= kTwoPi) mid -= kTwoPi;
      a.inner.insert(std::upper_bound(a.inner.begin(), a.inner.end(), mid), mid);
      return;
    }
  }

  MeshingError too_close(const Segment& s) const {
    const double mx = 0.5 * (s.a.x + s.b.x) * q_, my = 0.5 * (s.a.y + s.b.y) * q_;
    std::vector<std::pair<double, int>> d;
    for (const auto& im : images_) {
      d.push_back({std::abs(std::hypot(mx - im.cx, my - im.cy) - im.r), im.fibre});
    }
    std::sort(d.begin(), d.end());
    std::ostringstream msg;
    msg << "mesher: cannot resolve the gap near (" << mx << ", " << my << ")";
    if (d.size() >= 2) {
      int other = -1;
      for (const auto& [dist, f] : d)
        if (f != d.front().second) {
          other = f;
          break;
        }
      msg << "; fibres " << d.front().second;
      if (other >= 0) msg << " and " << other;
      msg << " are too close (near-tangent)";
    } else {
      msg << "; a fibre nearly touches the cell edge";
    }
    return MeshingError(msg.str());
  }

  Mesh2D finish() const {
    __int128 area = 0;
    for (const auto& t : tris_) area += orient2d(pts_[t[0]], pts_[t[1]], pts_[t[2]]);
    if (area != static_cast<__int128>(2) * xmax_ * ymax_) {
      throw MeshingError("mesher: triangulation does not cover the cell");
    }
    std::vector<int> order(pts_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return std::tie(pts_[a].y, pts_[a].x) < std::tie(pts_[b].y, pts_[b].x);
    });
    std::vector<int> rank(pts_.size());
    Mesh2D out;
    for (std::size_t i = 0; i < order.size(); ++i) {
      rank[order[i]] = static_cast<int>(i);
      const IPoint& p = pts_[order[i]];
      out.nodes.emplace_back(coord_x(p.x), coord_y(p.y));
    }
    const double tol_abs = 4.0 * q_;
    for (const auto& t : tris_) {
      out.tris.push_back({rank[t[0]], rank[t[1]], rank[t[2]]});
      const Eigen::Vector2d c = (out.nodes[out.tris.back()[0]] + out.nodes[out.tris.back()[1]] +
                                 out.nodes[out.tris.back()[2]]) / 3.0;
      int region = kMatrixRegion;
      for (int k : near(c.x(), c.y())) {
        const auto& im = images_[k];
        bool inside = true;
        for (int v : t) {
          const double d = std::hypot(pts_[v].x * q_ - im.cx, pts_[v].y * q_ - im.cy);
          if (d > im.r * (1.0 + 1e-6) + tol_abs) inside = false;
        }
        if (inside) region = kFibreRegion;
      }
      out.region.push_back(region);
    }
    return out;
  }

  const FibreLayout& lay_;
  double h_, q_;
  i64 xmax_, ymax_;
  double min_len_;
  std::vector<Image> images_;
  double bucket_ = 1.0;
  std::unordered_map<std::int64_t, std::vector<int>> grid_;
  std::vector<std::vector<Crossing>> crossings_;
  std::array<std::vector<i64>, 2> fam_;
  std::vector<Arc> arcs_;
  std::vector<IPoint> free_;
  std::vector<bool> free_alive_;
  std::vector<IPoint> pts_;
  std::unordered_map<IPoint, int, IPointHash> id_;
  std::vector<std::array<int, 3>> tris_;
};

}  // namespace

Mesh2D triangulate_section(const FibreLayout& layout, double target_edge) {
  return SectionMesher(layout, target_edge).run();
}

Mesh extrude(const Mesh2D& s, double Lz, int nz) {
  if (nz < 1) throw MeshingError("extrude: need at least one layer");
  const int n2 = static_cast<int>(s.nodes.size());
  Mesh m;
  m.nodes.reserve(static_cast<std::size_t>(n2) * (nz + 1));
  for (int k = 0; k <= nz; ++k) {
    const double z = k == nz ? Lz : Lz * k / nz;
    for (const auto& p : s.nodes) m.nodes.emplace_back(p.x(), p.y(), z);
  }
  for (std::size_t t = 0; t < s.tris.size(); ++t) {
    std::array<int, 3> v = s.tris[t];
    std::sort(v.begin(), v.end());
    for (int k = 0; k < nz; ++k) {
      const int b = k * n2, u = (k + 1) * n2;
      const std::array<std::array<int, 4>, 3> split{{{v[0] + b, v[1] + b, v[2] + b, v[0] + u},
                                                     {v[1] + b, v[2] + b, v[0] + u, v[1] + u},
                                                     {v[2] + b, v[0] + u, v[1] + u, v[2] + u}}};
      for (const auto& tet : split) {
        Tet e{tet, s.region[t]};
        if (tet_volume(m.nodes[tet[0]], m.nodes[tet[1]], m.nodes[tet[2]], m.nodes[tet[3]]) < 0) {
          std::swap(e.n[1], e.n[2]);
        }
        m.tets.push_back(e);
      }
    }
  }
  return m;
}

Mesh mesh_ud_rve(const FibreLayout& layout, double Lz, int nz, double target_edge) {
  return extrude(triangulate_section(layout, target_edge), Lz, nz);
}

Mesh insert_cohesive(const Mesh& mesh, int side_a, int side_b) {
  static constexpr std::array<std::array<int, 3>, 4> kFaces{
      {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}}};
  std::map<Face, std::pair<int, Face>> faces;  // sorted key -> (tet, oriented face)
  std::vector<Face> interface;
  for (int t = 0; t < static_cast<int>(mesh.tets.size()); ++t) {
    const auto& n = mesh.tets[t].n;
    for (const auto& f : kFaces) {
      const Face oriented{n[f[0]], n[f[1]], n[f[2]]};
      Face key = oriented;
      std::sort(key.begin(), key.end());
      auto [it, fresh] = faces.try_emplace(key, t, oriented);
      if (fresh) continue;
      const int other = it->second.first;
      const int ra = mesh.tets[other].region, rb = mesh.tets[t].region;
      if (ra == side_a && rb == side_b) interface.push_back(it->second.second);
      if (ra == side_b && rb == side_a) interface.push_back(oriented);
    }
  }
  if (interface.empty()) {
    throw MeshError("insert_cohesive: no faces shared by regions " + std::to_string(side_a) +
                    " and " + std::to_string(side_b));
  }
  Mesh out = mesh;
  out.periodic.clear();
  std::map<int, int> copy;
  for (const auto& f : interface) {
    for (int id : f) {
      if (copy.try_emplace(id, static_cast<int>(out.nodes.size())).second) {
        out.nodes.push_back(mesh.nodes[id]);
      }
    }
  }
  auto moved = [&](int id) {
    auto it = copy.find(id);
    return it == copy.end() ? id : it->second;
  };
  for (auto& t : out.tets)
    if (t.region == side_b)
      for (int& id : t.n) id = moved(id);
  for (auto& [name, set] : out.face_sets) {
    for (auto& f : set) {
      Face key = f;
      std::sort(key.begin(), key.end());
      auto it = faces.find(key);
      if (it != faces.end() && mesh.tets[it->second.first].region == side_b) {
        for (int& id : f) id = moved(id);
      }
    }
  }
  for (const auto& f : interface) {
    out.cohesive.push_back({{f[0], f[1], f[2], copy.at(f[0]), copy.at(f[1]), copy.at(f[2])}});
  }
  return out;
}

}  // namespace frc
