#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "artiscan/geometry.hpp"
#include "artiscan/model.hpp"

namespace artiscan {

/// Regular grid of signed distances. Nodes far from any observation are
/// marked unknown and never produce surface.
struct SdfGrid {
  int res = 0;  // nodes per axis
  Vec3 origin = Vec3::Zero();
  double cell = 0.0;
  std::vector<double> values;
  std::vector<unsigned char> known;

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * res + j) * res + i;
  }
  Vec3 node(int i, int j, int k) const { return origin + cell * Vec3(i, j, k); }
  double at(int i, int j, int k) const { return values[index(i, j, k)]; }

  static SdfGrid from_function(const Vec3& origin, double cell, int res,
                               const std::function<double(const Vec3&)>& fn);
};

struct FuseConfig {
  double voxel = 0.005;
  double orient_radius = 0.02;
};

/// Maps each segment back to the rest pose (inverse of `motion` at the
/// segment's joint displacement), merges and deduplicates them.
PointCloud fuse_part_observations(const std::vector<std::pair<PointCloud, double>>& segments,
                                  const MotionParams& motion, const FuseConfig& cfg = {});

/// Drops connected clusters (points linked within `link_radius`) holding
/// less than `min_fraction` of the cloud; stray mislabeled points would
/// otherwise become isolated surface patches.
PointCloud remove_small_clusters(const PointCloud& cloud, double link_radius = 0.03, double min_fraction = 0.05);

/// Signed tangent-plane distance to the nearest oriented point, clamped to
/// +-`truncation` cells, on a res^3 grid around the cloud. Nodes farther
/// than the truncation band from every point are unknown; an infinite band
/// keeps the plain signed distance everywhere.
SdfGrid estimate_sdf(const PointCloud& cloud, int res = 64, double truncation = 3.0);

/// Marching cubes on the zero level set, welded and oriented toward
/// positive values.
TriMesh extract_mesh(const SdfGrid& grid);

struct ReconstructedPart {
  std::string part_id;  // id of the manipulated part, when known
  TriMesh mesh;         // rest pose
  MotionParams motion;
};

struct ReconstructionResult {
  std::vector<ReconstructedPart> parts;
  TriMesh remainder;
  bool has_remainder = false;
  bool open_surfaces = true;  // unseen backs are not completed
  std::string provenance;
};

ReconstructionResult assemble(std::vector<ReconstructedPart> parts, const PointCloud& remainder_cloud,
                              int res = 64);

/// Writes part_<k>.obj, remainder.obj and result.json into `dir`.
void write_result(const std::filesystem::path& dir, const ReconstructionResult& result);

std::string motion_to_json_text(const MotionParams& m);

}  // namespace artiscan
