#include "frc/delaunay.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace frc {

__int128 orient2d(const IPoint& a, const IPoint& b, const IPoint& c) {
  return static_cast<__int128>(b.x - a.x) * (c.y - a.y) -
         static_cast<__int128>(b.y - a.y) * (c.x - a.x);
}

__int128 incircle(const IPoint& a, const IPoint& b, const IPoint& c, const IPoint& d) {
  const __int128 adx = a.x - d.x, ady = a.y - d.y;
  const __int128 bdx = b.x - d.x, bdy = b.y - d.y;
  const __int128 cdx = c.x - d.x, cdy = c.y - d.y;
  const __int128 alift = adx * adx + ady * ady;
  const __int128 blift = bdx * bdx + bdy * bdy;
  const __int128 clift = cdx * cdx + cdy * cdy;
  return alift * (bdx * cdy - cdx * bdy) + blift * (cdx * ady - adx * cdy) +
         clift * (adx * bdy - bdx * ady);
}

namespace {

struct Tri {
  std::array<int, 3> v;
  std::array<int, 3> n;  // neighbour across the edge opposite v[i]
  bool dead = false;
};

std::uint64_t hilbert_index(std::uint32_t x, std::uint32_t y) {
  std::uint64_t d = 0;
  for (std::uint32_t s = 1u << 15; s > 0; s >>= 1) {
    const std::uint32_t rx = (x & s) ? 1 : 0, ry = (y & s) ? 1 : 0;
    d += static_cast<std::uint64_t>(s) * s * ((3 * rx) ^ ry);
    if (ry == 0) {
      if (rx == 1) {
        x = s - 1 - x;
        y = s - 1 - y;
      }
      std::swap(x, y);
    }
  }
  return d;
}

class Triangulator {
 public:
  explicit Triangulator(std::vector<IPoint> pts) : p_(std::move(pts)) {
    n_ = static_cast<int>(p_.size());
    const std::int64_t r = kDelaunayRange;
    p_.push_back({-4 * r, -4 * r});
    p_.push_back({8 * r, -4 * r});
    p_.push_back({-4 * r, 8 * r});
    t_.push_back({{n_, n_ + 1, n_ + 2}, {-1, -1, -1}});
  }

  void insert(int ip) {
    const IPoint& p = p_[ip];
    const int start = locate(p);
    for (int v : t_[start].v) {
      if (p_[v] == p) {
        throw std::invalid_argument("delaunay: duplicate point " + std::to_string(ip));
      }
    }
    cavity_.assign(1, start);
    t_[start].dead = true;
    for (std::size_t k = 0; k < cavity_.size(); ++k) {
      const Tri& c = t_[cavity_[k]];
      for (int nb : c.n) {
        if (nb < 0 || t_[nb].dead) continue;
        const auto& v = t_[nb].v;
        if (incircle(p_[v[0]], p_[v[1]], p_[v[2]], p) > 0) {
          t_[nb].dead = true;
          cavity_.push_back(nb);
        }
      }
    }
    fresh_.clear();
    for (int ci : cavity_) {
      for (int i = 0; i < 3; ++i) {
        const int nb = t_[ci].n[i];
        if (nb >= 0 && t_[nb].dead) continue;
        const int a = t_[ci].v[(i + 1) % 3], b = t_[ci].v[(i + 2) % 3];
        const int id = static_cast<int>(t_.size());
        t_.push_back({{a, b, ip}, {-1, -1, nb}});
        if (nb >= 0) {
          for (int& back : t_[nb].n)
            if (back == ci) back = id;
        }
        fresh_.push_back(id);
      }
    }
    // link the fan around p: edge (b, p) of (a, b, p) is edge (p, b) of (b, c, p)
    for (int id : fresh_) {
      const int a = t_[id].v[0], b = t_[id].v[1];
      for (int other : fresh_) {
        if (t_[other].v[0] == b) t_[id].n[0] = other;
        if (t_[other].v[1] == a) t_[id].n[1] = other;
      }
    }
    last_ = fresh_.front();
  }

  std::vector<std::array<int, 3>> result() const {
    std::vector<std::array<int, 3>> out;
    for (const auto& t : t_) {
      if (t.dead) continue;
      if (t.v[0] >= n_ || t.v[1] >= n_ || t.v[2] >= n_) continue;
      out.push_back(t.v);
    }
    return out;
  }

 private:
  int locate(const IPoint& p) {
    int t = last_;
    for (std::size_t step = 0; step < 4 * t_.size() + 16; ++step) {
      bool moved = false;
      for (int k = 0; k < 3; ++k) {
        const int i = (k + static_cast<int>(step)) % 3;
        const auto& v = t_[t].v;
        if (orient2d(p_[v[(i + 1) % 3]], p_[v[(i + 2) % 3]], p) < 0) {
          t = t_[t].n[i];
          moved = true;
          break;
        }
      }
      if (!moved) return t;
      if (t < 0) break;
    }
    // walking failed (cannot happen for a valid triangulation); scan instead
    for (int i = 0; i < static_cast<int>(t_.size()); ++i) {
      if (t_[i].dead) continue;
      const auto& v = t_[i].v;
      if (orient2d(p_[v[0]], p_[v[1]], p) >= 0 && orient2d(p_[v[1]], p_[v[2]], p) >= 0 &&
          orient2d(p_[v[2]], p_[v[0]], p) >= 0) {
        return i;
      }
    }
    throw std::runtime_error("delaunay: point outside the enclosing triangle");
  }

  std::vector<IPoint> p_;
  int n_ = 0;
  std::vector<Tri> t_;
  int last_ = 0;
  std::vector<int> cavity_, fresh_;
};

}  // namespace

std::vector<std::array<int, 3>> delaunay(const std::vector<IPoint>& pts) {
  for (const auto& p : pts) {
    if (p.x <= -kDelaunayRange || p.x >= kDelaunayRange || p.y <= -kDelaunayRange ||
        p.y >= kDelaunayRange) {
      throw std::invalid_argument("delaunay: coordinate out of range");
    }
  }
  std::vector<int> order(pts.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::uint64_t> key(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    key[i] = hilbert_index(static_cast<std::uint32_t>((pts[i].x + kDelaunayRange) >> 11),
                           static_cast<std::uint32_t>((pts[i].y + kDelaunayRange) >> 11));
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key[a] < key[b]; });
  Triangulator tri(pts);
  for (int i : order) tri.insert(i);
  return tri.result();
}

}  // namespace frc
