#include "artiscan/segmentation.hpp"

#include <algorithm>
#include <cmath>

#include "artiscan/error.hpp"
#include "artiscan/kdtree.hpp"

namespace artiscan {

namespace {

// Static unless the moved hypothesis also matches and is closer.
bool is_static(double s, double m, const SegmentationConfig& cfg) {
  if (s > cfg.tau_static) return false;
  return !(cfg.nearest_hypothesis && m <= cfg.tau_moving && m < s);
}

// Nearest-neighbour reference of one capture: the dense points when
// available, the sparse cloud otherwise.
class Reference {
 public:
  Reference(const PointCloud& sparse, const ViewSet& views, const SegmentationConfig& cfg)
      : points_(views.dense.empty() ? std::span<const Vec3>(sparse.points) : views.dense),
        normals_(views.dense.empty() ? std::span<const Vec3>(sparse.normals) : views.dense_normals),
        tree_(points_),
        cfg_(cfg) {
    if (normals_.size() != points_.size()) normals_ = {};
  }

  // Distance to the closest point with an agreeing normal (normals are
  // ignored when unavailable or disabled).
  double match(const Vec3& p, const Vec3& n) const {
    const bool check = !normals_.empty() && cfg_.normal_agreement > -1.0 && n.squaredNorm() > 0.0;
    if (!check) return tree_.nearest_distance(p);
    double best = kInf;
    for (std::size_t j : tree_.radius(p, std::max(cfg_.tau_static, cfg_.tau_moving)))
      if (normals_[j].dot(n) > cfg_.normal_agreement) best = std::min(best, (points_[j] - p).norm());
    return best;
  }

 private:
  std::span<const Vec3> points_;
  std::span<const Vec3> normals_;
  KdTree tree_;
  const SegmentationConfig& cfg_;
};

// Flood moving labels into interior points lying on the same smooth surface.
void grow_moving(const PointCloud& cloud, std::vector<SegLabel>& labels, const SegmentationConfig& cfg) {
  const KdTree tree(cloud.points);
  std::vector<std::size_t> queue;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == SegLabel::Moving) queue.push_back(i);
  while (!queue.empty()) {
    const std::size_t i = queue.back();
    queue.pop_back();
    const Vec3& p = cloud.points[i];
    const Vec3& n = cloud.normals[i];
    for (std::size_t j : tree.radius(p, cfg.grow_radius)) {
      if (labels[j] != SegLabel::Interior) continue;
      const Vec3 d = cloud.points[j] - p;
      const Vec3& m = cloud.normals[j];
      const bool smooth = n.dot(m) >= cfg.grow_cos && std::abs(d.dot(n)) <= cfg.grow_plane_tol;
      // Concave corner: perpendicular faces, each in front of the other.
      const bool corner = d.norm() <= cfg.grow_corner_radius && std::abs(n.dot(m)) < 0.3 &&
                          d.dot(n) > cfg.grow_plane_tol && -d.dot(m) > cfg.grow_plane_tol;
      if (!smooth && !corner) continue;
      labels[j] = SegLabel::Moving;
      queue.push_back(j);
    }
  }
}

}  // namespace

SegmentationResult segment_pair(const PointCloud& before, const PointCloud& after,
                                const MotionParams& motion, double range,
                                const SegmentationConfig& cfg, const ViewSet& before_views,
                                const ViewSet& after_views) {
  if (before.empty() || after.empty())
    throw Error(ErrorCode::EmptyInput, "segmentation needs two non-empty clouds");
  if (!(std::abs(motion.axis_dir.norm() - 1.0) < 1e-6) || !std::isfinite(range) ||
      !motion.axis_point.allFinite())
    throw Error(ErrorCode::Degenerate, "motion parameters are degenerate");

  const Rigid fwd = motion.transform(range);
  const Rigid back = fwd.inverse();
  const Reference before_ref(before, before_views, cfg);
  const Reference after_ref(after, after_views, cfg);
  const bool normals = before.normals.size() == before.size() && after.normals.size() == after.size();
  auto normal_of = [&](const PointCloud& c, std::size_t i) { return normals ? c.normals[i] : Vec3::Zero().eval(); };

  SegmentationResult seg;
  seg.labels_after.resize(after.size());
  for (std::size_t i = 0; i < after.size(); ++i) {
    const Vec3& p = after.points[i];
    const Vec3 n = normal_of(after, i);
    const double ms = before_ref.match(p, n);
    const double mm = before_ref.match(back * p, back.linear() * n);
    if (is_static(ms, mm, cfg)) {
      seg.labels_after[i] = SegLabel::Static;
    } else if (mm <= cfg.tau_moving ||
               (!before_views.empty() &&
                observed_free(p, before_views.cameras, before_views.depths, cfg.free_margin))) {
      // Either it maps back onto the old surface, or it now occupies space
      // the before-capture saw through.
      seg.labels_after[i] = SegLabel::Moving;
    } else {
      seg.labels_after[i] = SegLabel::Interior;
    }
  }

  if (cfg.grow_radius > 0.0 && normals) grow_moving(after, seg.labels_after, cfg);

  seg.labels_before.resize(before.size());
  for (std::size_t i = 0; i < before.size(); ++i) {
    const Vec3& p = before.points[i];
    const Vec3 n = normal_of(before, i);
    const double ms = after_ref.match(p, n);
    const double mm = after_ref.match(fwd * p, fwd.linear() * n);
    if (is_static(ms, mm, cfg)) {
      seg.labels_before[i] = SegLabel::Static;
    } else if (mm <= cfg.tau_moving ||
               (!after_views.empty() &&
                observed_free(p, after_views.cameras, after_views.depths, cfg.free_margin))) {
      seg.labels_before[i] = SegLabel::Moving;
    } else {
      seg.labels_before[i] = SegLabel::Static;
    }
  }
  return seg;
}

ViewSet views_of(const MobileScan& scan) {
  return ViewSet{scan.cameras, scan.depths, scan.dense.points, scan.dense.normals};
}

PointCloud update_base_cloud(const PointCloud& base, const SegmentationResult& seg,
                             const PointCloud& after) {
  if (seg.labels_before.size() != base.size() || seg.labels_after.size() != after.size())
    throw Error(ErrorCode::SizeMismatch, "segmentation labels do not match the clouds");
  PointCloud out;
  out.source = CloudSource::Fused;
  const bool labels = base.has_labels() && after.has_labels();
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (seg.labels_before[i] == SegLabel::Moving) continue;
    out.push_back(base.points[i], base.normals[i]);
    if (labels) out.labels.push_back(base.labels[i]);
  }
  for (std::size_t i = 0; i < after.size(); ++i) {
    if (seg.labels_after[i] != SegLabel::Interior) continue;
    out.push_back(after.points[i], after.normals[i]);
    if (labels) out.labels.push_back(after.labels[i]);
  }
  return out;
}

std::vector<int> to_ints(std::span<const SegLabel> labels) {
  std::vector<int> out;
  out.reserve(labels.size());
  for (auto l : labels) out.push_back(static_cast<int>(l));
  return out;
}

PointCloud labeled_cloud(const PointCloud& cloud, std::span<const SegLabel> labels) {
  if (labels.size() != cloud.size()) throw Error(ErrorCode::SizeMismatch, "label count differs from cloud size");
  PointCloud out = cloud;
  out.labels = to_ints(labels);
  return out;
}

}  // namespace artiscan
