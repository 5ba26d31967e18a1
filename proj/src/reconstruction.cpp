#include "artiscan/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <json.hpp>
#include <unordered_map>

#include "artiscan/error.hpp"
#include "artiscan/io.hpp"
#include "artiscan/kdtree.hpp"

namespace artiscan {

namespace {
#include "mc_tables.inc"

constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
// Edge -> (corner a, corner b); the edge runs along one grid axis.
constexpr int kEdge[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                              {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

struct VoxelKey {
  long long x, y, z;
  bool operator==(const VoxelKey&) const = default;
};
struct VoxelHash {
  std::size_t operator()(const VoxelKey& k) const {
    return static_cast<std::size_t>(k.x * 73856093LL ^ k.y * 19349663LL ^ k.z * 83492791LL);
  }
};
}  // namespace

SdfGrid SdfGrid::from_function(const Vec3& origin, double cell, int res,
                               const std::function<double(const Vec3&)>& fn) {
  SdfGrid g;
  g.res = res;
  g.origin = origin;
  g.cell = cell;
  const std::size_t n = static_cast<std::size_t>(res) * res * res;
  g.values.resize(n);
  g.known.assign(n, 1);
  for (int k = 0; k < res; ++k)
    for (int j = 0; j < res; ++j)
      for (int i = 0; i < res; ++i) g.values[g.index(i, j, k)] = fn(g.node(i, j, k));
  return g;
}

PointCloud fuse_part_observations(const std::vector<std::pair<PointCloud, double>>& segments,
                                  const MotionParams& motion, const FuseConfig& cfg) {
  if (segments.empty()) throw Error(ErrorCode::EmptyInput, "no part observations to fuse");
  PointCloud merged;
  merged.source = CloudSource::Fused;
  std::unordered_map<VoxelKey, std::size_t, VoxelHash> seen;
  for (const auto& [cloud, value] : segments) {
    const Rigid to_rest = motion.transform(value).inverse();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const Vec3 p = to_rest * cloud.points[i];
      const VoxelKey key{static_cast<long long>(std::floor(p.x() / cfg.voxel)),
                         static_cast<long long>(std::floor(p.y() / cfg.voxel)),
                         static_cast<long long>(std::floor(p.z() / cfg.voxel))};
      if (!seen.emplace(key, merged.size()).second) continue;
      merged.push_back(p, to_rest.linear() * cloud.normals[i]);
    }
  }
  if (merged.empty()) throw Error(ErrorCode::EmptyInput, "fused part cloud is empty");

  // Orientation vote among neighbours on the same tangent plane; points on
  // the opposite side of a thin wall are not neighbours in this sense.
  const KdTree tree(merged.points);
  std::vector<Vec3> normals = merged.normals;
  for (std::size_t i = 0; i < merged.size(); ++i) {
    const Vec3& p = merged.points[i];
    const Vec3& n = merged.normals[i];
    int agree = 0, disagree = 0;
    for (std::size_t j : tree.radius(p, cfg.orient_radius)) {
      if (j == i) continue;
      const Vec3 d = merged.points[j] - p;
      const double len = d.norm();
      if (len < 1e-12 || std::abs(d.dot(n)) > 0.25 * len) continue;
      const double c = n.dot(merged.normals[j]);
      if (c > 0.7) ++agree;
      if (c < -0.7) ++disagree;
    }
    if (disagree > agree) normals[i] = -n;
  }
  merged.normals = std::move(normals);
  return merged;
}

PointCloud remove_small_clusters(const PointCloud& cloud, double link_radius, double min_fraction) {
  const std::size_t n = cloud.size();
  if (n == 0) return cloud;
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  const KdTree tree(cloud.points);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j : tree.radius(cloud.points[i], link_radius)) {
      const std::size_t a = find(i), b = find(j);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  std::vector<std::size_t> size(n, 0);
  for (std::size_t i = 0; i < n; ++i) ++size[find(i)];
  const double keep = min_fraction * static_cast<double>(n);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < n; ++i)
    if (static_cast<double>(size[find(i)]) >= keep) idx.push_back(i);
  return cloud.subset(idx);
}

SdfGrid estimate_sdf(const PointCloud& cloud, int res, double truncation) {
  if (cloud.empty()) throw Error(ErrorCode::EmptyInput, "cannot estimate an SDF from an empty cloud");
  if (res < 16 || res > 256) throw Error(ErrorCode::Range, "grid resolution must lie in [16, 256]");
  if (!(truncation > 0.0)) throw Error(ErrorCode::Range, "truncation must be positive");
  constexpr int kPad = 3;
  const Aabb box = bounds_of(cloud.points);
  const double extent = std::max(box.extent().maxCoeff(), 1e-3);
  SdfGrid g;
  g.res = res;
  g.cell = extent / (res - 1 - 2 * kPad);
  g.origin = box.center() - Vec3::Constant(0.5 * g.cell * (res - 1));
  const std::size_t n = static_cast<std::size_t>(res) * res * res;
  g.values.assign(n, 0.0);
  g.known.assign(n, 0);
  const double clamp = truncation * g.cell;
  const KdTree tree(cloud.points);
  for (int k = 0; k < res; ++k)
    for (int j = 0; j < res; ++j)
      for (int i = 0; i < res; ++i) {
        const Vec3 v = g.node(i, j, k);
        const auto hit = tree.nearest(v);
        const double s = (v - cloud.points[hit.index]).dot(cloud.normals[hit.index]);
        const std::size_t idx = g.index(i, j, k);
        g.values[idx] = std::clamp(s, -clamp, clamp);
        g.known[idx] = std::sqrt(hit.dist2) <= clamp ? 1 : 0;
      }
  return g;
}

TriMesh extract_mesh(const SdfGrid& g) {
  const int r = g.res;
  if (r < 2 || g.values.size() != static_cast<std::size_t>(r) * r * r)
    throw Error(ErrorCode::Degenerate, "grid has inconsistent dimensions");
  TriMesh mesh;
  std::unordered_map<std::size_t, int> edge_vertex;
  auto corner_known = [&](int i, int j, int k) { return g.known.empty() || g.known[g.index(i, j, k)]; };
  bool any_crossing = false;

  for (int k = 0; k + 1 < r; ++k)
    for (int j = 0; j + 1 < r; ++j)
      for (int i = 0; i + 1 < r; ++i) {
        double val[8];
        int cube = 0;
        bool ok = true;
        for (int c = 0; c < 8; ++c) {
          const int ci = i + kCorner[c][0], cj = j + kCorner[c][1], ck = k + kCorner[c][2];
          if (!corner_known(ci, cj, ck)) {
            ok = false;
            break;
          }
          val[c] = g.at(ci, cj, ck);
          if (val[c] < 0.0) cube |= 1 << c;
        }
        if (!ok || kEdgeTable[cube] == 0) continue;
        any_crossing = true;
        int vid[12];
        for (int e = 0; e < 12; ++e) {
          if (!(kEdgeTable[cube] & (1 << e))) continue;
          const int a = kEdge[e][0], b = kEdge[e][1];
          const int ai = i + kCorner[a][0], aj = j + kCorner[a][1], ak = k + kCorner[a][2];
          const int bi = i + kCorner[b][0], bj = j + kCorner[b][1], bk = k + kCorner[b][2];
          // Key the shared edge by its lower endpoint and axis.
          const int li = std::min(ai, bi), lj = std::min(aj, bj), lk = std::min(ak, bk);
          const int axis = ai != bi ? 0 : (aj != bj ? 1 : 2);
          const std::size_t key = g.index(li, lj, lk) * 3 + axis;
          auto it = edge_vertex.find(key);
          if (it == edge_vertex.end()) {
            const double t = val[a] / (val[a] - val[b]);
            const Vec3 p = g.node(ai, aj, ak) + t * (g.node(bi, bj, bk) - g.node(ai, aj, ak));
            it = edge_vertex.emplace(key, static_cast<int>(mesh.vertices.size())).first;
            mesh.vertices.push_back(p);
          }
          vid[e] = it->second;
        }
        for (int t = 0; kTriTable[cube][t] != -1; t += 3) {
          // Table winding faces the negative side; flip toward positive values.
          mesh.triangles.push_back({vid[kTriTable[cube][t]], vid[kTriTable[cube][t + 2]],
                                    vid[kTriTable[cube][t + 1]]});
        }
      }
  if (!any_crossing) throw Error(ErrorCode::EmptySurface, "grid contains no sign change");
  mesh.cleanup();
  if (mesh.empty()) throw Error(ErrorCode::EmptySurface, "isosurface degenerated to nothing");
  return mesh;
}

ReconstructionResult assemble(std::vector<ReconstructedPart> parts, const PointCloud& remainder_cloud,
                              int res) {
  ReconstructionResult result;
  result.parts = std::move(parts);
  if (!remainder_cloud.empty()) {
    try {
      result.remainder = extract_mesh(estimate_sdf(remainder_cloud, res));
      result.has_remainder = true;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptySurface) throw;
    }
  }
  return result;
}

std::string motion_to_json_text(const MotionParams& m) {
  nlohmann::json j = {{"kind", to_string(m.kind)},
                      {"axis_point", {m.axis_point.x(), m.axis_point.y(), m.axis_point.z()}},
                      {"axis_dir", {m.axis_dir.x(), m.axis_dir.y(), m.axis_dir.z()}},
                      {"range", m.range}};
  return j.dump();
}

void write_result(const std::filesystem::path& dir, const ReconstructionResult& result) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["parts"] = nlohmann::json::array();
  for (std::size_t k = 0; k < result.parts.size(); ++k) {
    const std::string name = "part_" + std::to_string(k) + ".obj";
    write_obj(dir / name, result.parts[k].mesh);
    nlohmann::json pj;
    pj["mesh"] = name;
    pj["part_id"] = result.parts[k].part_id;
    pj["motion"] = nlohmann::json::parse(motion_to_json_text(result.parts[k].motion));
    manifest["parts"].push_back(pj);
  }
  if (result.has_remainder) {
    write_obj(dir / "remainder.obj", result.remainder);
    manifest["remainder"] = "remainder.obj";
  } else {
    manifest["remainder"] = nullptr;
  }
  manifest["open_surfaces"] = result.open_surfaces;
  manifest["provenance"] = result.provenance;
  write_text(dir / "result.json", manifest.dump(2) + "\n");
}

}  // namespace artiscan
