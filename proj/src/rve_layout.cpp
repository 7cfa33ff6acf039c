#include "frc/rve.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace frc {

double FibreLayout::volume_fraction() const {
  double a = 0.0;
  for (const auto& f : fibres) a += std::numbers::pi * f.r * f.r;
  return a / (Lx * Ly);
}

void GenParams::validate() const {
  if (!(radius > 0.0)) throw std::invalid_argument("layout: radius must be positive");
  if (!(target_vf > 0.0) || !(target_vf < 0.82)) {
    throw std::invalid_argument("layout: target_vf must lie in (0, 0.82)");
  }
  if (!(min_gap >= 0.0)) throw std::invalid_argument("layout: min_gap must be non-negative");
  if (max_attempts < 1) throw std::invalid_argument("layout: max_attempts must be positive");
}

double GenParams::edge_clearance() const { return std::max(0.5 * min_gap, 0.1 * radius); }

namespace {

class Packing {
 public:
  Packing(const GenParams& p, double Lx, double Ly)
      : p_(p), lx_(Lx), ly_(Ly), d_(2 * p.radius + p.min_gap), m_(p.edge_clearance()) {}

  double wrap_x(double x) const { return x - lx_ * std::floor(x / lx_); }
  double wrap_y(double y) const {
    if (!p_.periodic_y) return std::clamp(y, y_lo(), y_hi());
    return y - ly_ * std::floor(y / ly_);
  }
  double y_lo() const { return p_.radius + m_; }
  double y_hi() const { return ly_ - p_.radius - m_; }

  Eigen::Vector2d separation(const Fibre& a, const Fibre& b) const {
    double dx = a.x - b.x, dy = a.y - b.y;
    dx -= lx_ * std::round(dx / lx_);
    if (p_.periodic_y) dy -= ly_ * std::round(dy / ly_);
    return {dx, dy};
  }

  bool overlaps(const Fibre& a, const Fibre& b) const {
    return separation(a, b).squaredNorm() < d_ * d_;
  }

  // Signed offset from the centre to the nearest periodic line, and whether
  // the distance sits inside the keep-out band around r.
  bool band(double d) const { return std::abs(d - p_.radius) < m_; }

  bool edges_ok(const Fibre& f) const {
    const double dx = std::min(f.x, lx_ - f.x);
    if (band(dx)) return false;
    if (!p_.periodic_y) return f.y >= y_lo() && f.y <= y_hi();
    const double dy = std::min(f.y, ly_ - f.y);
    return !band(dy) && !band(std::hypot(dx, dy));
  }

  // Moves f out of the edge keep-out bands. Returns true when it moved.
  bool fix_edges(Fibre& f, double extra) const {
    bool moved = false;
    auto push = [&](double& c, double l) {
      const bool low = c < l - c;
      const double d = low ? c : l - c;
      if (!band(d)) return;
      const double target = d < p_.radius ? p_.radius - m_ - extra : p_.radius + m_ + extra;
      c = low ? std::max(target, 0.0) : l - std::max(target, 0.0);
      moved = true;
    };
    push(f.x, lx_);
    f.x = wrap_x(f.x);
    if (!p_.periodic_y) {
      const double y = std::clamp(f.y, y_lo(), y_hi());
      moved = moved || y != f.y;
      f.y = y;
      return moved;
    }
    push(f.y, ly_);
    f.y = wrap_y(f.y);
    const double cx = f.x < lx_ - f.x ? 0.0 : lx_, cy = f.y < ly_ - f.y ? 0.0 : ly_;
    const Eigen::Vector2d off(f.x - cx, f.y - cy);
    const double dc = off.norm();
    if (band(dc) && dc > 0.0) {
      const double target = dc < p_.radius ? p_.radius - m_ - extra : p_.radius + m_ + extra;
      const Eigen::Vector2d np = Eigen::Vector2d(cx, cy) + off * (std::max(target, 0.0) / dc);
      f.x = wrap_x(np.x());
      f.y = wrap_y(np.y());
      moved = true;
    }
    return moved;
  }

  double dist() const { return d_; }

 private:
  GenParams p_;
  double lx_, ly_, d_, m_;
};

}  // namespace

FibreLayout generate_layout(const GenParams& p, double Lx, double Ly) {
  p.validate();
  const double area = std::numbers::pi * p.radius * p.radius;
  const int n = static_cast<int>(std::llround(p.target_vf * Lx * Ly / area));
  const double reach = n * area / (Lx * Ly);
  if (n < 0 || std::abs(reach - p.target_vf) > 0.01) {
    std::ostringstream msg;
    msg << "layout: cell " << Lx << " x " << Ly << " cannot reach vf " << p.target_vf
        << " within 0.01 with whole fibres (nearest " << reach << ")";
    throw LayoutError(msg.str(), reach);
  }
  const double d = 2 * p.radius + p.min_gap;
  if (Lx <= d + 2 * p.edge_clearance() || Ly <= d + 2 * p.edge_clearance()) {
    throw LayoutError("layout: cell smaller than one fibre plus gap", 0.0);
  }

  Packing pack(p, Lx, Ly);
  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> ux(0.0, Lx);
  std::uniform_real_distribution<double> uy(p.periodic_y ? 0.0 : pack.y_lo(),
                                            p.periodic_y ? Ly : pack.y_hi());
  FibreLayout out{Lx, Ly, p.periodic_y, {}};
  out.fibres.reserve(n);

  // random sequential insertion until it jams
  int attempts = 0, misses = 0;
  while (static_cast<int>(out.fibres.size()) < n && attempts < p.max_attempts && misses < 5000) {
    ++attempts;
    const Fibre f{ux(rng), uy(rng), p.radius};
    bool ok = pack.edges_ok(f);
    for (std::size_t j = 0; ok && j < out.fibres.size(); ++j) ok = !pack.overlaps(f, out.fibres[j]);
    if (ok) {
      out.fibres.push_back(f);
      misses = 0;
    } else {
      ++misses;
    }
  }

  // stirring: drop the rest in and push overlapping pairs apart
  const int placed = static_cast<int>(out.fibres.size());
  while (static_cast<int>(out.fibres.size()) < n) out.fibres.push_back({ux(rng), uy(rng), p.radius});
  auto& fs = out.fibres;
  const double extra = 1e-3 * d;
  std::normal_distribution<double> jitter(0.0, 0.02 * d);
  bool clean = placed == n;
  for (int sweep = 0; !clean && attempts < p.max_attempts; ++sweep, ++attempts) {
    clean = true;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        Eigen::Vector2d s = pack.separation(fs[i], fs[j]);
        const double dist = s.norm();
        if (dist >= d) continue;
        clean = false;
        if (dist == 0.0) s = Eigen::Vector2d(1.0, 0.0);
        const Eigen::Vector2d shift = s.normalized() * (0.5 * (d - dist) + extra);
        fs[i].x = pack.wrap_x(fs[i].x + shift.x());
        fs[i].y = pack.wrap_y(fs[i].y + shift.y());
        fs[j].x = pack.wrap_x(fs[j].x - shift.x());
        fs[j].y = pack.wrap_y(fs[j].y - shift.y());
      }
    }
    for (auto& f : fs)
      if (pack.fix_edges(f, extra)) clean = false;
    if (!clean && sweep % 50 == 49) {
      for (auto& f : fs) {
        f.x = pack.wrap_x(f.x + jitter(rng));
        f.y = pack.wrap_y(f.y + jitter(rng));
      }
    }
  }

  // exact acceptance: hard core and edge bands
  int good = 0;
  for (int i = 0; i < n; ++i) {
    bool ok = pack.edges_ok(fs[i]);
    for (int j = 0; ok && j < n; ++j) ok = j == i || !pack.overlaps(fs[i], fs[j]);
    good += ok;
  }
  if (good < n) {
    std::ostringstream msg;
    msg << "layout: target vf " << p.target_vf << " not reached within " << p.max_attempts
        << " attempts (achieved " << good * area / (Lx * Ly) << ")";
    throw LayoutError(msg.str(), good * area / (Lx * Ly));
  }
  return out;
}

double min_centre_distance(const FibreLayout& layout) {
  double best = std::numeric_limits<double>::infinity();
  const auto& fs = layout.fibres;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    for (std::size_t j = i + 1; j < fs.size(); ++j) {
      double dx = fs[i].x - fs[j].x, dy = fs[i].y - fs[j].y;
      dx -= layout.Lx * std::round(dx / layout.Lx);
      if (layout.periodic_y) dy -= layout.Ly * std::round(dy / layout.Ly);
      best = std::min(best, std::hypot(dx, dy));
    }
  }
  return best;
}

void write_layout_csv(const FibreLayout& layout, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "x,y,r\n";
  for (const auto& f : layout.fibres) out << f.x << ',' << f.y << ',' << f.r << '\n';
}

}  // namespace frc
