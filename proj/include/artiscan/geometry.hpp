#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace artiscan {

using Vec3 = Eigen::Vector3d;
using Rigid = Eigen::Isometry3d;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.14159265358979323846;

struct Aabb {
  Vec3 min = Vec3::Constant(kInf);
  Vec3 max = Vec3::Constant(-kInf);

  bool empty() const { return (min.array() > max.array()).any(); }
  void extend(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  void extend(const Aabb& o) {
    min = min.cwiseMin(o.min);
    max = max.cwiseMax(o.max);
  }
  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extent() const { return max - min; }
  bool contains(const Vec3& p, double tol = 0.0) const {
    return (p.array() >= min.array() - tol).all() && (p.array() <= max.array() + tol).all();
  }
  double distance(const Vec3& p) const {
    return (min - p).cwiseMax(p - max).cwiseMax(0.0).norm();
  }
};

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;

  bool empty() const { return triangles.empty(); }
  Aabb bounds() const;
  double area() const;
  double triangle_area(std::size_t t) const;
  Vec3 triangle_normal(std::size_t t) const;

  /// Drops out-of-range and zero-area triangles, then unreferenced vertices.
  void cleanup(double min_area = 1e-14);
  void append(const TriMesh& other);
  TriMesh transformed(const Rigid& tf) const;
};

/// Axis-aligned box as a closed triangle mesh with outward winding.
TriMesh make_box(const Vec3& lo, const Vec3& hi);

enum class CloudSource { Initial, State, Fused };

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  std::vector<int> labels;  // empty when unlabeled
  CloudSource source = CloudSource::Initial;
  bool padded = false;  // upsampled by duplication to reach a point budget

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_labels() const { return !labels.empty(); }
  void push_back(const Vec3& p, const Vec3& n) {
    points.push_back(p);
    normals.push_back(n);
  }
  PointCloud subset(std::span<const std::size_t> idx) const;
  PointCloud transformed(const Rigid& tf) const;
  void append(const PointCloud& other);
};

Aabb bounds_of(std::span<const Vec3> pts);

/// Closest point on triangle (a,b,c) to p (Ericson, RTCD 5.1.5).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Ray/triangle hit distance (Moller-Trumbore), nullopt on miss or t <= t_min.
std::optional<double> ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                   const Vec3& b, const Vec3& c, double t_min = 1e-12);

/// Distance from p to the infinite line through `point` with unit `dir`.
double point_line_distance(const Vec3& p, const Vec3& point, const Vec3& dir);

/// Rotation about an arbitrary axis line, or translation along it.
Rigid rotation_about(const Vec3& axis_point, const Vec3& axis_dir, double angle);
Rigid translation_along(const Vec3& axis_dir, double distance);

/// Portable uniform double in [0,1) from a 64-bit engine.
inline double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Box-Muller standard normal, portable across standard libraries.
double standard_normal(std::mt19937_64& rng);

/// Uniform direction on the unit sphere.
Vec3 random_unit_vector(std::mt19937_64& rng);

/// Area-weighted uniform surface samples with face normals.
PointCloud sample_surface(const TriMesh& mesh, std::size_t n, std::uint64_t seed);

}  // namespace artiscan
