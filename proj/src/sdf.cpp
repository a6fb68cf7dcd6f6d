#include "gbpplan/sdf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gbpplan {

namespace {

double point_segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                              const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

// Even-odd rule; points exactly on an edge resolve by the crossing count and
// end up negative-or-positive consistently at distance ~0 either way.
bool point_in_polygon(const Eigen::Vector2d& p, const Polygon& poly) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const auto& a = poly[i];
    const auto& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x_cross = a.x() + (p.y() - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
      if (p.x() < x_cross) inside = !inside;
    }
  }
  return inside;
}

}  // namespace

double signed_distance(const Eigen::Vector2d& p, const std::vector<Polygon>& polygons) {
  if (polygons.empty()) return kNoObstacleDistance;
  double best = std::numeric_limits<double>::infinity();
  bool inside = false;
  for (const auto& poly : polygons) {
    if (poly.size() < 3) throw std::invalid_argument("signed_distance: polygon needs >= 3 vertices");
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++)
      best = std::min(best, point_segment_distance(p, poly[j], poly[i]));
    inside = inside || point_in_polygon(p, poly);
  }
  return inside ? -best : best;
}

SdfGrid::SdfGrid(Eigen::Vector2d origin, double cell, int width, int height,
                 std::vector<double> values)
    : origin_(std::move(origin)), cell_(cell), width_(width), height_(height),
      values_(std::move(values)) {
  if (width_ < 2 || height_ < 2 || cell_ <= 0.0)
    throw std::invalid_argument("SdfGrid: need at least a 2x2 grid with positive cell size");
  if (values_.size() != static_cast<std::size_t>(width_) * height_)
    throw std::invalid_argument("SdfGrid: value count does not match grid shape");
  compute_gradients();
}

SdfGrid::SdfGrid(SdfGrid&& other) noexcept
    : origin_(other.origin_), cell_(other.cell_), width_(other.width_), height_(other.height_),
      values_(std::move(other.values_)), gradients_(std::move(other.gradients_)),
      oob_(other.oob_.load(std::memory_order_relaxed)) {}

void SdfGrid::compute_gradients() {
  gradients_.resize(values_.size());
  for (int iy = 0; iy < height_; ++iy) {
    for (int ix = 0; ix < width_; ++ix) {
      // Central differences inside, one-sided at the borders.
      const int xl = std::max(ix - 1, 0), xr = std::min(ix + 1, width_ - 1);
      const int yl = std::max(iy - 1, 0), yr = std::min(iy + 1, height_ - 1);
      const double gx = (value_at(xr, iy) - value_at(xl, iy)) / (cell_ * (xr - xl));
      const double gy = (value_at(ix, yr) - value_at(ix, yl)) / (cell_ * (yr - yl));
      gradients_[index(ix, iy)] = Eigen::Vector2d(gx, gy);
    }
  }
}

SdfGrid::Sample SdfGrid::sample(const Eigen::Vector2d& p) const {
  Eigen::Vector2d g = (p - origin_) / cell_;
  if (g.x() < 0.0 || g.y() < 0.0 || g.x() > width_ - 1 || g.y() > height_ - 1) {
    oob_.fetch_add(1, std::memory_order_relaxed);
    g.x() = std::clamp(g.x(), 0.0, static_cast<double>(width_ - 1));
    g.y() = std::clamp(g.y(), 0.0, static_cast<double>(height_ - 1));
  }
  const int ix = std::min(static_cast<int>(g.x()), width_ - 2);
  const int iy = std::min(static_cast<int>(g.y()), height_ - 2);
  const double fx = g.x() - ix;
  const double fy = g.y() - iy;

  const double w00 = (1 - fx) * (1 - fy), w10 = fx * (1 - fy);
  const double w01 = (1 - fx) * fy, w11 = fx * fy;

  Sample s;
  s.distance = w00 * value_at(ix, iy) + w10 * value_at(ix + 1, iy) + w01 * value_at(ix, iy + 1) +
               w11 * value_at(ix + 1, iy + 1);
  s.gradient = w00 * gradient_at(ix, iy) + w10 * gradient_at(ix + 1, iy) +
               w01 * gradient_at(ix, iy + 1) + w11 * gradient_at(ix + 1, iy + 1);

  // A true distance field has |grad| <= 1; interpolation can only shrink it,
  // so renormalize only when numeric overshoot pushes it above 1.
  const double norm = s.gradient.norm();
  if (norm > 1.0) s.gradient /= norm;
  return s;
}

SdfGrid build_sdf(const std::vector<Polygon>& polygons, const Eigen::Vector2d& lo,
                  const Eigen::Vector2d& hi, double cell) {
  if (!(hi.x() > lo.x()) || !(hi.y() > lo.y()) || cell <= 0.0)
    throw std::invalid_argument("build_sdf: degenerate bounds or cell size");
  const int width = static_cast<int>(std::ceil((hi.x() - lo.x()) / cell)) + 1;
  const int height = static_cast<int>(std::ceil((hi.y() - lo.y()) / cell)) + 1;

  std::vector<double> values(static_cast<std::size_t>(width) * height, kNoObstacleDistance);
  if (!polygons.empty()) {
    for (int iy = 0; iy < height; ++iy) {
      for (int ix = 0; ix < width; ++ix) {
        const Eigen::Vector2d p = lo + cell * Eigen::Vector2d(ix, iy);
        values[static_cast<std::size_t>(iy) * width + ix] = signed_distance(p, polygons);
      }
    }
  }
  return SdfGrid(lo, cell, width, height, std::move(values));
}

}  // namespace gbpplan
