#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "artiscan/geometry.hpp"
#include "artiscan/model.hpp"

namespace artiscan {

/// Mean squared nearest-neighbour distance A->B plus B->A.
double chamfer(std::span<const Vec3> a, std::span<const Vec3> b);
double chamfer(const PointCloud& a, const PointCloud& b);

/// Same as chamfer() with plain (unsquared) distances.
double chamfer_unsquared(std::span<const Vec3> a, std::span<const Vec3> b);

/// Minimum mean Euclidean matching cost between equal-size sets. Exact up to
/// `kEmdExactLimit` points, auction-approximate (mean gap <= 1e-3) above.
inline constexpr std::size_t kEmdExactLimit = 512;
double emd(std::span<const Vec3> a, std::span<const Vec3> b);
double emd(const PointCloud& a, const PointCloud& b);
double emd_exact(std::span<const Vec3> a, std::span<const Vec3> b);
/// Epsilon-scaling auction; the returned mean cost exceeds the optimum by at
/// most `eps`.
double emd_auction(std::span<const Vec3> a, std::span<const Vec3> b, double eps = 1e-3);

/// Symmetric Hausdorff distance between point sets.
double hausdorff(std::span<const Vec3> a, std::span<const Vec3> b);

struct HausdorffResult {
  std::vector<double> per_vertex;  // one per GT vertex
  double max = 0.0;
  double mean = 0.0;
};

HausdorffResult hausdorff_map(const TriMesh& pred, const TriMesh& gt, std::size_t n = 2048,
                              std::uint64_t seed = 0);
/// CSV rows x,y,z,distance over the GT vertices.
std::string hausdorff_to_csv(const TriMesh& gt, const HausdorffResult& h);

struct SegScores {
  double accuracy = 0.0;
  double miou = 0.0;
};
SegScores seg_metrics(std::span<const int> pred, std::span<const int> gt);

double action_accuracy(int moved, int attempts);

struct MotionErrors {
  double dir = 0.0;
  std::optional<double> pos;  // rotations only
};
MotionErrors motion_errors(const MotionParams& pred, const MotionParams& gt);

/// Shortest distance between two infinite lines.
double line_distance(const Vec3& p1, const Vec3& d1, const Vec3& p2, const Vec3& d2);

struct EpisodeMetrics {
  std::optional<double> a_action;
  std::optional<double> miou_start, miou_end;
  std::optional<double> a_seg_start, a_seg_end;
  std::optional<double> recon_cd, recon_emd;
  std::optional<double> mo_dir, mo_pos;
};

std::string metrics_to_json(const EpisodeMetrics& m);

inline constexpr const char* kMetricsCsvHeader =
    "category,A_action,mIoU_start,mIoU_end,A_seg_start,A_seg_end,E_recon_cd,E_recon_emd,E_mo_dir,E_mo_pos";

/// Mean of each metric over the episodes that define it.
EpisodeMetrics average(std::span<const EpisodeMetrics> rows);
std::string metrics_csv_row(const std::string& category, const EpisodeMetrics& m);

}  // namespace artiscan
