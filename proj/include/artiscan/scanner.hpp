#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "artiscan/geometry.hpp"
#include "artiscan/model.hpp"

namespace artiscan {

/// Pinhole camera. Pixel (u, v) looks through its centre; v grows downward.
struct Camera {
  Vec3 position = Vec3::Zero();
  Vec3 look_at = Vec3::UnitX();
  Vec3 up = Vec3::UnitZ();
  double fov_y = kPi / 3.0;
  int width = 320;
  int height = 240;

  void validate() const;
  double focal() const;
  /// Orthonormal basis: right, down, forward.
  std::array<Vec3, 3> basis() const;
  Vec3 ray(double u, double v) const;
  /// Continuous pixel coordinates and ray distance of a world point; nullopt
  /// when the point is behind the camera.
  struct Projection {
    double u, v, range;
  };
  std::optional<Projection> project(const Vec3& p) const;
};

struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<double> range;  // distance along the pixel ray, +inf = miss, NaN = invalid return

  double at(int u, int v) const { return range[static_cast<std::size_t>(v) * width + u]; }
  double& at(int u, int v) { return range[static_cast<std::size_t>(v) * width + u]; }
  bool hit(int u, int v) const { return std::isfinite(at(u, v)); }
  std::size_t hit_count() const;
};

/// Bounding-volume hierarchy over a triangle soup for closest-hit queries.
class RayCaster {
 public:
  explicit RayCaster(const TriMesh& mesh);
  std::optional<double> cast(const Vec3& origin, const Vec3& dir) const;

 private:
  struct Node {
    Aabb box;
    int left = -1, right = -1;
    int begin = 0, end = 0;
  };
  int build(int begin, int end);

  TriMesh mesh_;
  std::vector<int> order_;
  std::vector<Aabb> tri_boxes_;
  std::vector<Node> nodes_;
};

struct ScannerConfig {
  int width = 320;
  int height = 240;
  double fov_y = kPi / 3.0;
  double standoff = 1.5;
  double side_angle = kPi / 6.0;  // azimuth of the two side views
  Vec3 center{0.5, 0.5, 0.5};
  Vec3 front_dir = Vec3::UnitX();  // direction from the object toward the front camera
  Vec3 up = Vec3::UnitZ();
  double depth_noise = 0.0;  // sigma of Gaussian range noise
  std::uint64_t seed = 0;
  std::size_t budget = 4096;
};

DepthImage raycast_depth(const ArticulatedObject& obj, const Camera& cam);
DepthImage raycast_depth(const RayCaster& caster, const Camera& cam);

/// Gaussian range noise on hit pixels (sigma = 0 leaves the image untouched).
void add_depth_noise(DepthImage& depth, double sigma, std::uint64_t seed);

/// Invalidates (NaN) depth spikes: hit pixels whose two neighbours along an
/// image axis are both nearer or both farther by more than the continuity
/// threshold, e.g. slivers seen through narrow gaps.
void drop_unreliable_pixels(DepthImage& depth);

PointCloud depth_to_cloud(const DepthImage& depth, const Camera& cam);

/// Front, front-left and front-right cameras around the vertical axis
/// through the object centre.
std::array<Camera, 3> mobile_cameras(const ScannerConfig& cfg);

struct MobileScan {
  PointCloud cloud;  // fused, resampled to the budget
  std::array<Camera, 3> cameras;
  std::array<DepthImage, 3> depths;
  std::size_t raw_points = 0;
  PointCloud dense;  // all observed points before resampling
};

MobileScan mobile_scan(const ArticulatedObject& obj, const ScannerConfig& cfg);
PointCloud mobile_scan(const ArticulatedObject& obj, double standoff);

/// Greedy farthest-point sampling starting at index 0. Returns selected
/// indices in selection order.
std::vector<std::size_t> farthest_point_indices(std::span<const Vec3> pts, std::size_t k);

/// Fuses clouds and resamples to exactly `budget` points (FPS, or cyclic
/// duplication when there are too few points; sets `padded`).
PointCloud resample_to_budget(const PointCloud& fused, std::size_t budget);

Aabb estimate_bbox(const PointCloud& cloud);

/// True when some camera saw through `p`: the observed range along the
/// pixel ray exceeds the point's range by more than `margin` over the whole
/// 3x3 neighbourhood.
bool observed_free(const Vec3& p, std::span<const Camera> cams, std::span<const DepthImage> depths,
                   double margin);

/// True when some camera observed a surface within `tol` of `p` in range.
bool observed_surface(const Vec3& p, std::span<const Camera> cams,
                      std::span<const DepthImage> depths, double tol);

}  // namespace artiscan
