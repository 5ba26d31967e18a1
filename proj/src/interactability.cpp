#include "artiscan/interactability.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "artiscan/error.hpp"
#include "artiscan/io.hpp"

namespace artiscan {

double raw_score(const Action& action, const Vec3& normal, const MotionParams& motion, double mu,
                 RotationReading reading) {
  const Vec3& f = action.dir;
  if (motion.kind == MotionKind::Translation) {
    const double along = f.dot(motion.axis_dir);
    const double par = std::abs(along);
    const double perp = (f - along * motion.axis_dir).norm();
    return par - mu * perp;
  }
  const double d = point_line_distance(action.pos, motion.axis_point, motion.axis_dir);
  const double fn_signed = f.dot(normal);
  const double fn = std::abs(fn_signed);
  const double ft = (f - fn_signed * normal).norm();
  if (reading == RotationReading::TangentialDrives) return d * ft - mu * fn;
  return d * fn - mu * ft;
}

std::vector<Vec3> sample_directions(int count, std::uint64_t seed) {
  // Spherical Fibonacci lattice under a uniformly random rotation: every
  // direction is marginally uniform, with far less spread between normals
  // than i.i.d. draws.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  Eigen::Quaterniond q;
  do q.coeffs() << N(rng), N(rng), N(rng), N(rng);
  while (q.norm() < 1e-12);
  const Eigen::Matrix3d R = q.normalized().toRotationMatrix();
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  std::vector<Vec3> dirs;
  dirs.reserve(std::max(count, 0));
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / count, rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    dirs.push_back((R * Vec3(rho * std::cos(golden * i), rho * std::sin(golden * i), z)).normalized());
  }
  return dirs;
}

double point_score(const MotionParams& motion, const Vec3& point, const Vec3& normal,
                   std::span<const Vec3> directions, double mu, RotationReading reading) {
  if (directions.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& dir : directions)
    sum += std::max(raw_score(Action{point, dir}, normal, motion, mu, reading), 0.0);
  return sum / static_cast<double>(directions.size());
}

double point_score(const ArticulatedObject& obj, const Vec3& point, const Vec3& normal,
                   std::size_t part, const ScoreConfig& cfg) {
  if (cfg.directions < 1) throw Error(ErrorCode::Range, "direction count must be at least 1");
  if (!obj.part(part).joint.movable()) return 0.0;
  const auto dirs = sample_directions(cfg.directions, cfg.seed);
  return point_score(obj.joint_motion(part), point, normal, dirs, cfg.mu, cfg.reading);
}

std::size_t InteractabilityMap::active_count() const {
  return static_cast<std::size_t>(std::count(active.begin(), active.end(), true));
}

InteractabilityMap build_map(const ArticulatedObject& obj, const PointCloud& cloud,
                             const ScoreConfig& cfg) {
  if (cfg.directions < 1) throw Error(ErrorCode::Range, "direction count must be at least 1");
  if (!cloud.has_labels() && !cloud.empty())
    throw Error(ErrorCode::EmptyInput, "build_map needs a labeled cloud");
  InteractabilityMap map;
  map.cloud = cloud;
  map.score.assign(cloud.size(), 0.0);
  map.active.assign(cloud.size(), true);

  // One direction set shared by all points.
  const auto dirs = sample_directions(cfg.directions, cfg.seed);
  for (std::size_t part : obj.movable_parts()) {
    const MotionParams motion = obj.joint_motion(part);
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < cloud.size(); ++i)
      if (cloud.labels[i] == static_cast<int>(part)) members.push_back(i);
    if (members.empty()) continue;
    double lo = kInf, hi = -kInf;
    for (std::size_t i : members) {
      const double s = point_score(motion, cloud.points[i], cloud.normals[i], dirs, cfg.mu, cfg.reading);
      map.score[i] = s;
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    for (std::size_t i : members) {
      if (hi > lo)
        map.score[i] = (map.score[i] - lo) / (hi - lo);
      else
        map.score[i] = hi > 0.0 ? 1.0 : 0.0;
    }
  }
  return map;
}

Action propose_direction(const ArticulatedObject& obj, const Vec3& point, const Vec3& normal,
                         std::size_t part, const ScoreConfig& cfg) {
  const Part& p = obj.part(part);
  if (!p.joint.movable()) throw Error(ErrorCode::Immovable, "part '" + p.id + "' is fixed");
  const MotionParams motion = obj.joint_motion(part);
  const auto dirs = sample_directions(cfg.directions, cfg.seed);
  double best = 0.0;
  std::optional<Vec3> best_dir;
  for (const auto& dir : dirs) {
    const double s = raw_score(Action{point, dir}, normal, motion, cfg.mu, cfg.reading);
    if (s > best) {
      best = s;
      best_dir = dir;
    }
  }
  if (!best_dir) throw Error(ErrorCode::NoFeasibleDirection, "no sampled direction scores above zero");
  // Raw scores ignore the force sign; suction can only pull.
  Vec3 dir = *best_dir;
  if (dir.dot(normal) < 0.0) dir = -dir;
  return Action{point, dir};
}

InteractabilityMap mask_region(const InteractabilityMap& map, const std::vector<bool>& member) {
  if (member.size() != map.size())
    throw Error(ErrorCode::SizeMismatch, "mask has " + std::to_string(member.size()) +
                                             " entries, map has " + std::to_string(map.size()));
  InteractabilityMap out = map;
  for (std::size_t i = 0; i < member.size(); ++i)
    if (member[i]) out.active[i] = false;
  return out;
}

std::string map_to_csv(const InteractabilityMap& map) {
  std::ostringstream out;
  out << "x,y,z,score,active\n";
  for (std::size_t i = 0; i < map.size(); ++i) {
    const auto& p = map.cloud.points[i];
    out << format_double(p.x()) << ',' << format_double(p.y()) << ',' << format_double(p.z()) << ','
        << format_double(map.score[i]) << ',' << (map.active[i] ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace artiscan
