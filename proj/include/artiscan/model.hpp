#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "artiscan/geometry.hpp"

namespace artiscan {

enum class JointKind { Revolute, Prismatic, Fixed };

const char* to_string(JointKind kind);

struct Joint {
  JointKind kind = JointKind::Fixed;
  Vec3 origin = Vec3::Zero();        // axis anchor, rest-pose world frame
  Vec3 direction = Vec3::UnitZ();    // unit axis
  double lo = 0.0, hi = 0.0;         // radians or normalized length
  double rest = 0.0;

  bool movable() const { return kind != JointKind::Fixed; }
  /// Sign of the motion that leads away from rest toward the farther limit.
  double opening_sign() const { return (hi - rest) >= (rest - lo) ? 1.0 : -1.0; }
  /// Joint value at the opening limit.
  double open_limit() const { return opening_sign() > 0 ? hi : lo; }
  /// Rigid motion for a joint displacement `delta` measured from rest.
  Rigid motion(double delta) const;
};

enum class MotionKind { Rotation, Translation };

const char* to_string(MotionKind kind);

/// Axis (x, y, z, u, v, w), motion type and swept range.
struct MotionParams {
  Vec3 axis_point = Vec3::Zero();
  Vec3 axis_dir = Vec3::UnitZ();
  MotionKind kind = MotionKind::Translation;
  double range = 0.0;

  /// Rigid transform that moves a point by `amount` of this motion.
  Rigid transform(double amount) const;
  Rigid transform() const { return transform(range); }
};

inline constexpr int kRootParent = -1;

struct Part {
  std::string id;
  std::shared_ptr<const TriMesh> mesh;  // rest pose, world frame
  Joint joint;
  int parent = kRootParent;
};

/// Kinematic tree of rigid parts with 1-DoF joints. Immutable apart from the
/// per-part joint values; copies share mesh storage.
class ArticulatedObject {
 public:
  ArticulatedObject() = default;
  ArticulatedObject(std::string name, std::vector<Part> parts);

  const std::string& name() const { return name_; }
  const std::vector<Part>& parts() const { return parts_; }
  std::size_t part_count() const { return parts_.size(); }
  const Part& part(std::size_t i) const { return parts_.at(i); }

  /// Index of a part id; throws a lookup error when unknown.
  std::size_t index_of(const std::string& id) const;
  std::optional<std::size_t> find(const std::string& id) const;

  double value(std::size_t part) const { return values_.at(part); }
  std::map<std::string, double> state() const;

  /// Returns a copy with one joint moved; range and lookup errors throw.
  ArticulatedObject with_state(const std::string& id, double value) const;
  ArticulatedObject with_state(std::size_t part, double value) const;
  ArticulatedObject at_rest() const;

  /// World transform of a part relative to its rest pose.
  Rigid part_transform(std::size_t part) const;
  TriMesh posed_mesh(std::size_t part) const;
  /// All parts merged, in the current state.
  TriMesh posed_mesh() const;
  Aabb bounds() const;

  /// Joint axis of a part in the current state as motion parameters
  /// (range = full opening span).
  MotionParams joint_motion(std::size_t part) const;

  std::vector<std::size_t> movable_parts() const;

 private:
  std::string name_;
  std::vector<Part> parts_;
  std::vector<double> values_;
  std::vector<int> order_;  // parents before children
};

/// Loads a URDF-lite JSON description and normalizes it into the unit box
/// centred at (0.5, 0.5, 0.5).
ArticulatedObject load_object(const std::filesystem::path& path);
ArticulatedObject parse_object(const std::string& json_text,
                               const std::filesystem::path& base_dir = {});
std::string object_to_json(const ArticulatedObject& obj);

/// Uniform scale + translation that maps the rest geometry into the unit box.
ArticulatedObject normalize(const ArticulatedObject& obj);

ArticulatedObject set_state(const ArticulatedObject& obj, const std::string& part, double value);

/// Instantaneous direction of motion of a surface point under its joint.
Vec3 surface_velocity(const ArticulatedObject& obj, const std::string& part, const Vec3& point);
Vec3 surface_velocity(const ArticulatedObject& obj, std::size_t part, const Vec3& point);

inline constexpr int kUnlabeled = -1;

/// Nearest-part label per point (part index), kUnlabeled when no part
/// surface lies within `tolerance`.
std::vector<int> gt_labels(const ArticulatedObject& obj, const PointCloud& cloud,
                           double tolerance = 1e-3);

struct LabelDetails {
  std::vector<int> labels;
  std::vector<bool> ambiguous;  // within tolerance of more than one part
};
LabelDetails gt_label_details(const ArticulatedObject& obj, const PointCloud& cloud,
                              double tolerance = 1e-3);

/// Unsigned distance from p to the part's surface in the current state.
double distance_to_part(const ArticulatedObject& obj, std::size_t part, const Vec3& p);

}  // namespace artiscan
