#include "artiscan/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "artiscan/error.hpp"

namespace artiscan {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Parse: return "parse error";
    case ErrorCode::Structure: return "structure error";
    case ErrorCode::Range: return "range error";
    case ErrorCode::Lookup: return "lookup error";
    case ErrorCode::Immovable: return "immovable";
    case ErrorCode::Degenerate: return "degenerate";
    case ErrorCode::EmptyInput: return "empty input";
    case ErrorCode::EmptyScan: return "empty scan";
    case ErrorCode::SizeMismatch: return "size mismatch";
    case ErrorCode::NoFeasibleDirection: return "no feasible direction";
    case ErrorCode::Exhausted: return "exhausted";
    case ErrorCode::Unfittable: return "unfittable";
    case ErrorCode::EmptySurface: return "empty surface";
    case ErrorCode::UnknownTemplate: return "unknown template";
    case ErrorCode::Undefined: return "undefined";
    case ErrorCode::Io: return "io error";
  }
  return "error";
}

Aabb bounds_of(std::span<const Vec3> pts) {
  Aabb box;
  for (const auto& p : pts) box.extend(p);
  return box;
}

Aabb TriMesh::bounds() const { return bounds_of(vertices); }

double TriMesh::triangle_area(std::size_t t) const {
  const auto& tri = triangles[t];
  return 0.5 * (vertices[tri[1]] - vertices[tri[0]]).cross(vertices[tri[2]] - vertices[tri[0]]).norm();
}

Vec3 TriMesh::triangle_normal(std::size_t t) const {
  const auto& tri = triangles[t];
  return (vertices[tri[1]] - vertices[tri[0]]).cross(vertices[tri[2]] - vertices[tri[0]]).normalized();
}

double TriMesh::area() const {
  double a = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t) a += triangle_area(t);
  return a;
}

void TriMesh::cleanup(double min_area) {
  const int n = static_cast<int>(vertices.size());
  std::vector<std::array<int, 3>> kept;
  kept.reserve(triangles.size());
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    const auto& tri = triangles[t];
    if (tri[0] < 0 || tri[1] < 0 || tri[2] < 0 || tri[0] >= n || tri[1] >= n || tri[2] >= n) continue;
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) continue;
    if (triangle_area(t) <= min_area) continue;
    kept.push_back(tri);
  }
  std::vector<int> remap(vertices.size(), -1);
  std::vector<Vec3> verts;
  for (auto& tri : kept) {
    for (int& i : tri) {
      if (remap[i] < 0) {
        remap[i] = static_cast<int>(verts.size());
        verts.push_back(vertices[i]);
      }
      i = remap[i];
    }
  }
  vertices = std::move(verts);
  triangles = std::move(kept);
}

void TriMesh::append(const TriMesh& other) {
  const int base = static_cast<int>(vertices.size());
  vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
  for (auto tri : other.triangles) {
    for (int& i : tri) i += base;
    triangles.push_back(tri);
  }
}

TriMesh TriMesh::transformed(const Rigid& tf) const {
  TriMesh out;
  out.triangles = triangles;
  out.vertices.reserve(vertices.size());
  for (const auto& v : vertices) out.vertices.push_back(tf * v);
  return out;
}

TriMesh make_box(const Vec3& lo, const Vec3& hi) {
  TriMesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.emplace_back((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(),
                            (i & 4) ? hi.z() : lo.z());
  }
  // Two triangles per face, counter-clockwise seen from outside.
  m.triangles = {{0, 2, 1}, {1, 2, 3},   // z-
                 {4, 5, 6}, {5, 7, 6},   // z+
                 {0, 1, 4}, {1, 5, 4},   // y-
                 {2, 6, 3}, {3, 6, 7},   // y+
                 {0, 4, 2}, {2, 4, 6},   // x-
                 {1, 3, 5}, {3, 7, 5}};  // x+
  return m;
}

PointCloud PointCloud::subset(std::span<const std::size_t> idx) const {
  PointCloud out;
  out.source = source;
  out.padded = padded;
  out.points.reserve(idx.size());
  out.normals.reserve(idx.size());
  for (std::size_t i : idx) {
    out.points.push_back(points[i]);
    out.normals.push_back(normals[i]);
    if (has_labels()) out.labels.push_back(labels[i]);
  }
  return out;
}

PointCloud PointCloud::transformed(const Rigid& tf) const {
  PointCloud out = *this;
  for (auto& p : out.points) p = tf * p;
  for (auto& n : out.normals) n = tf.linear() * n;
  return out;
}

void PointCloud::append(const PointCloud& other) {
  const bool keep_labels = (has_labels() || empty()) && other.has_labels();
  if (!keep_labels) labels.clear();
  points.insert(points.end(), other.points.begin(), other.points.end());
  normals.insert(normals.end(), other.normals.begin(), other.normals.end());
  if (keep_labels) labels.insert(labels.end(), other.labels.begin(), other.labels.end());
  padded = padded || other.padded;
}

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + (d1 / (d1 - d3)) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

std::optional<double> ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                   const Vec3& b, const Vec3& c, double t_min) {
  const Vec3 e1 = b - a, e2 = c - a;
  const Vec3 pv = dir.cross(e2);
  const double det = e1.dot(pv);
  if (std::abs(det) < 1e-15) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 tv = origin - a;
  const double u = tv.dot(pv) * inv;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 qv = tv.cross(e1);
  const double v = dir.dot(qv) * inv;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = e2.dot(qv) * inv;
  if (t <= t_min) return std::nullopt;
  return t;
}

double point_line_distance(const Vec3& p, const Vec3& point, const Vec3& dir) {
  const Vec3 r = p - point;
  return (r - r.dot(dir) * dir).norm();
}

Rigid rotation_about(const Vec3& axis_point, const Vec3& axis_dir, double angle) {
  Rigid tf = Rigid::Identity();
  tf.linear() = Eigen::AngleAxisd(angle, axis_dir.normalized()).toRotationMatrix();
  tf.translation() = axis_point - tf.linear() * axis_point;
  return tf;
}

Rigid translation_along(const Vec3& axis_dir, double distance) {
  Rigid tf = Rigid::Identity();
  tf.translation() = distance * axis_dir;
  return tf;
}

double standard_normal(std::mt19937_64& rng) {
  double u1 = unit_double(rng);
  while (u1 <= 0.0) u1 = unit_double(rng);
  const double u2 = unit_double(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

Vec3 random_unit_vector(std::mt19937_64& rng) {
  const double z = 2.0 * unit_double(rng) - 1.0;
  const double phi = 2.0 * kPi * unit_double(rng);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

PointCloud sample_surface(const TriMesh& mesh, std::size_t n, std::uint64_t seed) {
  if (mesh.empty()) throw Error(ErrorCode::EmptyInput, "cannot sample an empty mesh");
  std::vector<double> cdf(mesh.triangles.size());
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    total += mesh.triangle_area(t);
    cdf[t] = total;
  }
  if (total <= 0.0) throw Error(ErrorCode::Degenerate, "mesh has zero surface area");
  std::mt19937_64 rng(seed);
  PointCloud out;
  out.source = CloudSource::Fused;
  out.points.reserve(n);
  out.normals.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = unit_double(rng) * total;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), r);
    const std::size_t t = std::min<std::size_t>(it - cdf.begin(), cdf.size() - 1);
    double u = unit_double(rng), v = unit_double(rng);
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    const auto& tri = mesh.triangles[t];
    const Vec3& a = mesh.vertices[tri[0]];
    out.points.push_back(a + u * (mesh.vertices[tri[1]] - a) + v * (mesh.vertices[tri[2]] - a));
    out.normals.push_back(mesh.triangle_normal(t));
  }
  return out;
}

}  // namespace artiscan
