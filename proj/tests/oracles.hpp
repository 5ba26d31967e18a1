// Independent brute-force references used by the unit and acceptance tests.
// Nothing here calls into the library's own geometric kernels.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "artiscan/geometry.hpp"
#include "artiscan/model.hpp"

namespace oracle {

using artiscan::Vec3;

inline double nn_dist(const Vec3& p, const std::vector<Vec3>& pts) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& q : pts) best = std::min(best, (p - q).norm());
  return best;
}

inline double chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  double sa = 0.0, sb = 0.0;
  for (const auto& p : a) sa += std::pow(nn_dist(p, b), 2);
  for (const auto& q : b) sb += std::pow(nn_dist(q, a), 2);
  return sa / a.size() + sb / b.size();
}

// Exhaustive minimum-cost matching; only for tiny n.
inline double emd_permutations(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  std::vector<int> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) c += (a[i] - b[perm[i]]).norm();
    best = std::min(best, c / a.size());
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline double segment_dist(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (a + t * ab - p).norm();
}

// Point-triangle distance by plane projection plus edge fallback.
inline double triangle_dist(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 n = (b - a).cross(c - a);
  const double nn = n.squaredNorm();
  if (nn > 0.0) {
    const Vec3 q = p - n * ((p - a).dot(n) / nn);
    const double u = (b - q).cross(c - q).dot(n) / nn;
    const double v = (c - q).cross(a - q).dot(n) / nn;
    const double w = 1.0 - u - v;
    if (u >= 0 && v >= 0 && w >= 0) return (p - q).norm();
  }
  return std::min({segment_dist(p, a, b), segment_dist(p, b, c), segment_dist(p, c, a)});
}

inline double mesh_dist(const Vec3& p, const artiscan::TriMesh& m) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& t : m.triangles)
    best = std::min(best, triangle_dist(p, m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]));
  return best;
}

// Plain Moller-Trumbore, written independently of the library.
inline std::optional<double> ray_hit(const Vec3& o, const Vec3& d, const Vec3& a, const Vec3& b,
                                     const Vec3& c) {
  const Vec3 e1 = b - a, e2 = c - a, pv = d.cross(e2);
  const double det = e1.dot(pv);
  if (std::abs(det) < 1e-15) return std::nullopt;
  const Vec3 tv = o - a;
  const double u = tv.dot(pv) / det;
  if (u < 0 || u > 1) return std::nullopt;
  const Vec3 qv = tv.cross(e1);
  const double v = d.dot(qv) / det;
  if (v < 0 || u + v > 1) return std::nullopt;
  const double t = e2.dot(qv) / det;
  if (t <= 1e-12) return std::nullopt;
  return t;
}

inline double ray_mesh(const Vec3& o, const Vec3& d, const artiscan::TriMesh& m) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& t : m.triangles)
    if (auto h = ray_hit(o, d, m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]])) best = std::min(best, *h);
  return best;
}

// Rodrigues rotation of p about the line (c, u) by angle a.
inline Vec3 rotate_about(const Vec3& p, const Vec3& c, const Vec3& u, double a) {
  const Vec3 v = p - c;
  return c + v * std::cos(a) + u.cross(v) * std::sin(a) + u * u.dot(v) * (1 - std::cos(a));
}

inline std::vector<Vec3> random_cloud(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::uniform_real_distribution<double> U(0.0, scale);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = Vec3(U(rng), U(rng), U(rng));
  return pts;
}

}  // namespace oracle

namespace fixtures {

using namespace artiscan;

inline Part make_part(const std::string& id, TriMesh mesh, Joint joint = {}, int parent = kRootParent) {
  Part p;
  p.id = id;
  p.mesh = std::make_shared<const TriMesh>(std::move(mesh));
  p.joint = joint;
  p.parent = parent;
  return p;
}

inline Joint prismatic(const Vec3& origin, const Vec3& dir, double hi) {
  Joint j;
  j.kind = JointKind::Prismatic;
  j.origin = origin;
  j.direction = dir.normalized();
  j.lo = 0.0;
  j.hi = hi;
  return j;
}

inline Joint revolute(const Vec3& origin, const Vec3& dir, double hi) {
  Joint j = prismatic(origin, dir, hi);
  j.kind = JointKind::Revolute;
  return j;
}

// Body box plus a drawer slab on its +x face, not normalized.
inline ArticulatedObject box_with_drawer(double travel = 0.4) {
  std::vector<Part> parts;
  parts.push_back(make_part("body", make_box({0.2, 0.2, 0.2}, {0.7, 0.8, 0.8})));
  parts.push_back(make_part("drawer", make_box({0.7, 0.3, 0.4}, {0.75, 0.7, 0.6}),
                            prismatic({0.75, 0.5, 0.5}, Vec3::UnitX(), travel), 0));
  return ArticulatedObject("box-drawer", std::move(parts));
}

// Body box plus a door panel hinged at y = 0.2 on the +x face.
inline ArticulatedObject box_with_door(double angle = kPi / 2) {
  std::vector<Part> parts;
  parts.push_back(make_part("body", make_box({0.2, 0.2, 0.2}, {0.7, 0.8, 0.8})));
  parts.push_back(make_part("door", make_box({0.7, 0.2, 0.2}, {0.72, 0.8, 0.8}),
                            revolute({0.72, 0.2, 0.5}, -Vec3::UnitZ(), angle), 0));
  return ArticulatedObject("box-door", std::move(parts));
}

}  // namespace fixtures
