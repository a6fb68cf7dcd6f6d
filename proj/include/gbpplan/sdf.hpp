#pragma once

#include <Eigen/Core>

#include <atomic>
#include <cstdint>
#include <vector>

namespace gbpplan {

using Polygon = std::vector<Eigen::Vector2d>;

/// Regular grid of signed distances to a polygon set (negative inside) with
/// precomputed central-difference gradients. Values and gradients are both
/// bilinearly interpolated at query time; queries outside the grid clamp to
/// the boundary and bump a diagnostic counter. Read-only after construction.
class SdfGrid {
 public:
  struct Sample {
    double distance;
    Eigen::Vector2d gradient;
  };

  // `origin` is the metric position of cell (0, 0)'s center; values are
  // row-major with index iy * width + ix.
  SdfGrid(Eigen::Vector2d origin, double cell, int width, int height, std::vector<double> values);

  SdfGrid(SdfGrid&& other) noexcept;
  SdfGrid(const SdfGrid&) = delete;
  SdfGrid& operator=(const SdfGrid&) = delete;

  Sample sample(const Eigen::Vector2d& p) const;

  double value_at(int ix, int iy) const { return values_[index(ix, iy)]; }
  Eigen::Vector2d gradient_at(int ix, int iy) const { return gradients_[index(ix, iy)]; }
  Eigen::Vector2d cell_center(int ix, int iy) const {
    return origin_ + cell_ * Eigen::Vector2d(ix, iy);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  double cell() const { return cell_; }
  const Eigen::Vector2d& origin() const { return origin_; }
  std::uint64_t out_of_bounds_queries() const { return oob_.load(std::memory_order_relaxed); }

 private:
  std::size_t index(int ix, int iy) const { return static_cast<std::size_t>(iy) * width_ + ix; }
  void compute_gradients();

  Eigen::Vector2d origin_;
  double cell_;
  int width_;
  int height_;
  std::vector<double> values_;
  std::vector<Eigen::Vector2d> gradients_;
  mutable std::atomic<std::uint64_t> oob_{0};
};

// Distance sentinel for a world with no obstacles: everything is "far away".
inline constexpr double kNoObstacleDistance = 1e6;

/// Rasterizes exact point-to-polygon-set signed distance at every cell center
/// over the axis-aligned box [lo, hi]. An empty polygon list yields a uniform
/// all-positive field at the sentinel distance.
SdfGrid build_sdf(const std::vector<Polygon>& polygons, const Eigen::Vector2d& lo,
                  const Eigen::Vector2d& hi, double cell);

/// Exact signed distance from a point to a polygon set (negative inside any
/// polygon). This is the per-cell primitive behind build_sdf.
double signed_distance(const Eigen::Vector2d& p, const std::vector<Polygon>& polygons);

}  // namespace gbpplan
