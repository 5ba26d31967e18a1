#include "artiscan/scanner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "artiscan/error.hpp"

namespace artiscan {

void Camera::validate() const {
  if (!(fov_y > 0.0 && fov_y < kPi)) throw Error(ErrorCode::Range, "camera fov_y must lie in (0, pi)");
  if (width < 16 || height < 16) throw Error(ErrorCode::Range, "camera must be at least 16x16 pixels");
  if ((look_at - position).norm() < 1e-12) throw Error(ErrorCode::Degenerate, "camera look_at equals position");
  if ((look_at - position).normalized().cross(up).norm() < 1e-9)
    throw Error(ErrorCode::Degenerate, "camera up vector is parallel to the view direction");
}

double Camera::focal() const { return 0.5 * height / std::tan(0.5 * fov_y); }

std::array<Vec3, 3> Camera::basis() const {
  const Vec3 f = (look_at - position).normalized();
  const Vec3 r = f.cross(up).normalized();
  const Vec3 d = f.cross(r);
  return {r, d, f};
}

Vec3 Camera::ray(double u, double v) const {
  const auto [r, d, f] = basis();
  return (focal() * f + (u - 0.5 * width) * r + (v - 0.5 * height) * d).normalized();
}

std::optional<Camera::Projection> Camera::project(const Vec3& p) const {
  const auto [r, d, f] = basis();
  const Vec3 q = p - position;
  const double z = q.dot(f);
  if (z <= 1e-12) return std::nullopt;
  const double fl = focal();
  return Projection{0.5 * width + fl * q.dot(r) / z, 0.5 * height + fl * q.dot(d) / z, q.norm()};
}

std::size_t DepthImage::hit_count() const {
  return static_cast<std::size_t>(
      std::count_if(range.begin(), range.end(), [](double r) { return std::isfinite(r); }));
}

RayCaster::RayCaster(const TriMesh& mesh) : mesh_(mesh) {
  const int n = static_cast<int>(mesh_.triangles.size());
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0);
  tri_boxes_.resize(n);
  for (int t = 0; t < n; ++t)
    for (int k : mesh_.triangles[t]) tri_boxes_[t].extend(mesh_.vertices[k]);
  if (n > 0) build(0, n);
}

int RayCaster::build(int begin, int end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{});
  Aabb box, centroids;
  for (int i = begin; i < end; ++i) {
    box.extend(tri_boxes_[order_[i]]);
    centroids.extend(tri_boxes_[order_[i]].center());
  }
  nodes_[id].box = box;
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  if (end - begin <= 4) return id;
  int axis = 0;
  centroids.extent().maxCoeff(&axis);
  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, [&](int a, int b) {
    const double ca = tri_boxes_[a].center()[axis], cb = tri_boxes_[b].center()[axis];
    return ca < cb || (ca == cb && a < b);
  });
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

namespace {
bool slab(const Aabb& box, const Vec3& o, const Vec3& inv, double t_max) {
  double t0 = 0.0, t1 = t_max;
  for (int k = 0; k < 3; ++k) {
    double a = (box.min[k] - o[k]) * inv[k];
    double b = (box.max[k] - o[k]) * inv[k];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
    if (t0 > t1) return false;
  }
  return true;
}
}  // namespace

std::optional<double> RayCaster::cast(const Vec3& origin, const Vec3& dir) const {
  if (nodes_.empty()) return std::nullopt;
  const Vec3 inv(1.0 / dir.x(), 1.0 / dir.y(), 1.0 / dir.z());
  double best = kInf;
  int stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& n = nodes_[stack[--top]];
    if (!slab(n.box, origin, inv, best)) continue;
    if (n.left < 0) {
      for (int i = n.begin; i < n.end; ++i) {
        const auto& t = mesh_.triangles[order_[i]];
        if (auto hit = ray_triangle(origin, dir, mesh_.vertices[t[0]], mesh_.vertices[t[1]],
                                    mesh_.vertices[t[2]]))
          best = std::min(best, *hit);
      }
    } else {
      stack[top++] = n.left;
      stack[top++] = n.right;
    }
  }
  if (!std::isfinite(best)) return std::nullopt;
  return best;
}

DepthImage raycast_depth(const RayCaster& caster, const Camera& cam) {
  cam.validate();
  DepthImage img;
  img.width = cam.width;
  img.height = cam.height;
  img.range.assign(static_cast<std::size_t>(cam.width) * cam.height, kInf);
  for (int v = 0; v < cam.height; ++v)
    for (int u = 0; u < cam.width; ++u)
      if (auto t = caster.cast(cam.position, cam.ray(u + 0.5, v + 0.5))) img.at(u, v) = *t;
  return img;
}

DepthImage raycast_depth(const ArticulatedObject& obj, const Camera& cam) {
  return raycast_depth(RayCaster(obj.posed_mesh()), cam);
}

void add_depth_noise(DepthImage& depth, double sigma, std::uint64_t seed) {
  if (sigma <= 0.0) return;
  std::mt19937_64 rng(seed);
  for (auto& r : depth.range)
    if (std::isfinite(r)) r = std::max(1e-6, r + sigma * standard_normal(rng));
}

namespace {
constexpr double kJump = 0.03;  // range discontinuity treated as a boundary

bool continuous(const DepthImage& depth, int u, int v, double r) {
  return u >= 0 && v >= 0 && u < depth.width && v < depth.height && depth.hit(u, v) &&
         std::abs(depth.at(u, v) - r) < kJump;
}
}  // namespace

void drop_unreliable_pixels(DepthImage& depth) {
  // -1 nearer, +1 farther or no return, 0 continuous or unknown.
  auto side = [&](int u, int v, double r) {
    if (u < 0 || v < 0 || u >= depth.width || v >= depth.height) return 0;
    const double x = depth.at(u, v);
    if (std::isnan(x)) return 0;
    if (std::abs(x - r) < kJump) return 0;
    return x > r ? 1 : -1;
  };
  std::vector<std::size_t> drop;
  for (int v = 0; v < depth.height; ++v)
    for (int u = 0; u < depth.width; ++u) {
      if (!depth.hit(u, v)) continue;
      const double r = depth.at(u, v);
      const int l = side(u - 1, v, r), rt = side(u + 1, v, r);
      const int up = side(u, v - 1, r), dn = side(u, v + 1, r);
      if ((l != 0 && l == rt) || (up != 0 && up == dn)) drop.push_back(static_cast<std::size_t>(v) * depth.width + u);
    }
  for (std::size_t i : drop) depth.range[i] = std::numeric_limits<double>::quiet_NaN();
}

PointCloud depth_to_cloud(const DepthImage& depth, const Camera& cam) {
  PointCloud cloud;
  cloud.source = CloudSource::State;
  const int w = depth.width, h = depth.height;
  auto point = [&](int u, int v) { return Vec3(cam.position + depth.at(u, v) * cam.ray(u + 0.5, v + 0.5)); };
  auto usable = [&](int u, int v, double r) { return continuous(depth, u, v, r); };
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (!depth.hit(u, v)) continue;
      const double r = depth.at(u, v);
      const Vec3 p = point(u, v);
      const Vec3 ray = cam.ray(u + 0.5, v + 0.5);
      // Central differences, one-sided next to a boundary.
      auto diff = [&](int du, int dv) -> std::optional<Vec3> {
        const bool fwd = usable(u + du, v + dv, r), back = usable(u - du, v - dv, r);
        if (fwd && back) return point(u + du, v + dv) - point(u - du, v - dv);
        if (fwd) return point(u + du, v + dv) - p;
        if (back) return p - point(u - du, v - dv);
        return std::nullopt;
      };
      Vec3 n = -ray;
      const auto gu = diff(1, 0), gv = diff(0, 1);
      if (gu && gv) {
        const Vec3 c = gu->cross(*gv);
        if (c.norm() > 1e-15) n = c.normalized();
      }
      if (n.dot(cam.position - p) <= 0.0) n = -n;
      cloud.push_back(p, n);
    }
  }
  return cloud;
}

std::array<Camera, 3> mobile_cameras(const ScannerConfig& cfg) {
  std::array<Camera, 3> cams;
  const double az[3] = {0.0, cfg.side_angle, -cfg.side_angle};
  for (int i = 0; i < 3; ++i) {
    const Vec3 dir = Eigen::AngleAxisd(az[i], cfg.up.normalized()) * cfg.front_dir.normalized();
    cams[i].position = cfg.center + cfg.standoff * dir;
    cams[i].look_at = cfg.center;
    cams[i].up = cfg.up;
    cams[i].fov_y = cfg.fov_y;
    cams[i].width = cfg.width;
    cams[i].height = cfg.height;
  }
  return cams;
}

std::vector<std::size_t> farthest_point_indices(std::span<const Vec3> pts, std::size_t k) {
  std::vector<std::size_t> out;
  if (pts.empty() || k == 0) return out;
  k = std::min(k, pts.size());
  out.reserve(k);
  std::vector<double> dist(pts.size(), kInf);
  std::size_t cur = 0;
  for (std::size_t s = 0; s < k; ++s) {
    out.push_back(cur);
    const Vec3 c = pts[cur];
    std::size_t next = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double d = (pts[i] - c).squaredNorm();
      if (d < dist[i]) dist[i] = d;
      if (dist[i] > best) {
        best = dist[i];
        next = i;
      }
    }
    cur = next;
  }
  return out;
}

PointCloud resample_to_budget(const PointCloud& fused, std::size_t budget) {
  if (fused.empty()) throw Error(ErrorCode::EmptyScan, "scan produced no points");
  std::vector<std::size_t> idx;
  bool padded = false;
  if (fused.size() >= budget) {
    idx = farthest_point_indices(fused.points, budget);
    // Raster order keeps index-based tie breaking stable across views.
    std::sort(idx.begin(), idx.end());
  } else {
    padded = true;
    idx.resize(budget);
    for (std::size_t i = 0; i < budget; ++i) idx[i] = i % fused.size();
  }
  PointCloud out = fused.subset(idx);
  out.padded = padded;
  return out;
}

MobileScan mobile_scan(const ArticulatedObject& obj, const ScannerConfig& cfg) {
  const TriMesh mesh = obj.posed_mesh();
  if (mesh.empty()) throw Error(ErrorCode::EmptyScan, "object has no geometry");
  const RayCaster caster(mesh);
  MobileScan scan;
  scan.cameras = mobile_cameras(cfg);
  PointCloud fused;
  for (int i = 0; i < 3; ++i) {
    scan.depths[i] = raycast_depth(caster, scan.cameras[i]);
    add_depth_noise(scan.depths[i], cfg.depth_noise, cfg.seed * 3 + static_cast<std::uint64_t>(i));
    drop_unreliable_pixels(scan.depths[i]);
    fused.append(depth_to_cloud(scan.depths[i], scan.cameras[i]));
  }
  scan.raw_points = fused.size();
  if (fused.empty()) throw Error(ErrorCode::EmptyScan, "no camera observed the object");
  scan.cloud = resample_to_budget(fused, cfg.budget);
  scan.cloud.source = CloudSource::Fused;
  scan.dense = std::move(fused);
  return scan;
}

PointCloud mobile_scan(const ArticulatedObject& obj, double standoff) {
  ScannerConfig cfg;
  cfg.standoff = standoff;
  return mobile_scan(obj, cfg).cloud;
}

Aabb estimate_bbox(const PointCloud& cloud) {
  if (cloud.empty()) throw Error(ErrorCode::EmptyInput, "cannot bound an empty cloud");
  return bounds_of(cloud.points);
}

namespace {
template <typename Pred>
bool any_camera(const Vec3& p, std::span<const Camera> cams, std::span<const DepthImage> depths, Pred pred) {
  for (std::size_t c = 0; c < cams.size() && c < depths.size(); ++c) {
    const auto proj = cams[c].project(p);
    if (!proj) continue;
    const int u = static_cast<int>(std::floor(proj->u)), v = static_cast<int>(std::floor(proj->v));
    if (u < 0 || v < 0 || u >= depths[c].width || v >= depths[c].height) continue;
    if (pred(depths[c], u, v, proj->range)) return true;
  }
  return false;
}
}  // namespace

bool observed_free(const Vec3& p, std::span<const Camera> cams, std::span<const DepthImage> depths,
                   double margin) {
  return any_camera(p, cams, depths, [&](const DepthImage& d, int u, int v, double range) {
    for (int dv = -1; dv <= 1; ++dv)
      for (int du = -1; du <= 1; ++du) {
        const int uu = u + du, vv = v + dv;
        if (uu < 0 || vv < 0 || uu >= d.width || vv >= d.height) return false;
        if (std::isnan(d.at(uu, vv)) || d.at(uu, vv) <= range + margin) return false;
      }
    return true;
  });
}

bool observed_surface(const Vec3& p, std::span<const Camera> cams, std::span<const DepthImage> depths,
                      double tol) {
  return any_camera(p, cams, depths, [&](const DepthImage& d, int u, int v, double range) {
    for (int dv = -1; dv <= 1; ++dv)
      for (int du = -1; du <= 1; ++du) {
        const int uu = u + du, vv = v + dv;
        if (uu < 0 || vv < 0 || uu >= d.width || vv >= d.height) continue;
        if (std::abs(d.at(uu, vv) - range) <= tol) return true;
      }
    return false;
  });
}

}  // namespace artiscan
