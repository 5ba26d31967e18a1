#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "artiscan/geometry.hpp"
#include "artiscan/model.hpp"

namespace artiscan {

/// Suction action: attach point and pull direction.
struct Action {
  Vec3 pos = Vec3::Zero();
  Vec3 dir = Vec3::UnitX();
};

/// How the unit force splits into a driving and a resisting component for
/// rotational parts.
enum class RotationReading {
  NormalDrives,      // d * F_normal - mu * F_tangential
  TangentialDrives,  // d * F_tangential - mu * F_normal
};

struct ScoreConfig {
  double mu = 0.3;
  int directions = 100;
  std::uint64_t seed = 0;
  RotationReading reading = RotationReading::NormalDrives;
};

/// Rule score of a unit force. May be negative.
double raw_score(const Action& action, const Vec3& normal, const MotionParams& motion, double mu,
                 RotationReading reading = RotationReading::NormalDrives);

/// K directions uniform on the sphere from a seeded generator (a randomly
/// rotated spherical Fibonacci lattice).
std::vector<Vec3> sample_directions(int count, std::uint64_t seed);

/// Mean of max(raw_score, 0) over the sampled directions; 0 on fixed parts.
double point_score(const ArticulatedObject& obj, const Vec3& point, const Vec3& normal,
                   std::size_t part, const ScoreConfig& cfg);
double point_score(const MotionParams& motion, const Vec3& point, const Vec3& normal,
                   std::span<const Vec3> directions, double mu, RotationReading reading);

struct InteractabilityMap {
  PointCloud cloud;
  std::vector<double> score;  // [0, 1]
  std::vector<bool> active;

  std::size_t size() const { return score.size(); }
  std::size_t active_count() const;
};

/// Scores every point of a labeled cloud (labels = part indices) and
/// normalizes per movable part to [0, 1]. All points start active.
InteractabilityMap build_map(const ArticulatedObject& obj, const PointCloud& cloud,
                             const ScoreConfig& cfg);

/// Best direction among the sampled set by raw score, oriented to pull away
/// from the surface.
Action propose_direction(const ArticulatedObject& obj, const Vec3& point, const Vec3& normal,
                         std::size_t part, const ScoreConfig& cfg);

InteractabilityMap mask_region(const InteractabilityMap& map, const std::vector<bool>& member);

/// CSV rows: x,y,z,score,active.
std::string map_to_csv(const InteractabilityMap& map);

}  // namespace artiscan
