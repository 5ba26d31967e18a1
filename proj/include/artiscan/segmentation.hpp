#pragma once

#include <span>
#include <vector>

#include "artiscan/geometry.hpp"
#include "artiscan/model.hpp"
#include "artiscan/scanner.hpp"

namespace artiscan {

enum class SegLabel : int { Static = 0, Moving = 1, Interior = 2 };

struct SegmentationResult {
  std::vector<SegLabel> labels_before;  // static | moving
  std::vector<SegLabel> labels_after;   // static | moving | interior
};

struct SegmentationConfig {
  double tau_static = 0.01;
  double tau_moving = 0.01;
  /// Ambiguous points (both hypotheses within tolerance) go to the closer
  /// hypothesis instead of static.
  bool nearest_hypothesis = true;
  /// Margin used by the free-space test when views are supplied.
  double free_margin = 0.01;
  /// A hypothesis match also needs agreeing normals (cosine above this);
  /// values <= -1 disable the check.
  double normal_agreement = 0.5;
  /// Interior points on the same smooth surface as a moving point (within
  /// this radius, coplanar, same facing) become moving; 0 disables.
  double grow_radius = 0.03;
  double grow_plane_tol = 0.003;
  double grow_cos = 0.95;
  /// Growth may also turn a concave corner between perpendicular faces
  /// closer than this.
  double grow_corner_radius = 0.02;
};

/// Extra information about one capture. `cameras`/`depths` enable
/// free-space reasoning; `dense` (the capture before resampling) replaces the
/// sparse cloud as the nearest-neighbour reference. All optional.
struct ViewSet {
  std::span<const Camera> cameras;
  std::span<const DepthImage> depths;
  std::span<const Vec3> dense;
  std::span<const Vec3> dense_normals;
  bool empty() const { return cameras.empty() || depths.empty(); }
};

ViewSet views_of(const MobileScan& scan);

/// Labels the moving part in both captures and the newly exposed interior
/// in the after-capture, from nearest-neighbour motion consistency.
SegmentationResult segment_pair(const PointCloud& before, const PointCloud& after,
                                const MotionParams& motion, double range,
                                const SegmentationConfig& cfg = {}, const ViewSet& before_views = {},
                                const ViewSet& after_views = {});

/// (before minus moving) + (after points labeled interior).
PointCloud update_base_cloud(const PointCloud& base, const SegmentationResult& seg,
                             const PointCloud& after);

/// Copy of the cloud with the segmentation label as its integer label.
PointCloud labeled_cloud(const PointCloud& cloud, std::span<const SegLabel> labels);

std::vector<int> to_ints(std::span<const SegLabel> labels);

}  // namespace artiscan
