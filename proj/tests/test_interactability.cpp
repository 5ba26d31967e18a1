#include <doctest.h>

#include <cmath>
#include <random>

#include "artiscan/error.hpp"
#include "artiscan/harness.hpp"
#include "artiscan/interactability.hpp"
#include "artiscan/scanner.hpp"
#include "oracles.hpp"

using namespace artiscan;

namespace {

MotionParams translation(const Vec3& dir) {
  MotionParams m;
  m.kind = MotionKind::Translation;
  m.axis_dir = dir;
  return m;
}

MotionParams hinge_z() {
  MotionParams m;
  m.kind = MotionKind::Rotation;
  m.axis_point = Vec3::Zero();
  m.axis_dir = Vec3::UnitZ();
  return m;
}

double angle_deg(const Vec3& a, const Vec3& b) {
  return std::acos(std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0)) * 180.0 / kPi;
}

// Door panel in the x-z plane hinged on the z axis, scaled by s.
ArticulatedObject hinged_panel(double s) {
  using namespace fixtures;
  std::vector<Part> parts{make_part("base", make_box(s * Vec3(-0.1, -0.1, 0), s * Vec3(0, 0, 0.1))),
                          make_part("door", make_box(s * Vec3(0, 0, 0), s * Vec3(1, 0.02, 1)),
                                    revolute(Vec3::Zero(), Vec3::UnitZ(), kPi / 2), 0)};
  return ArticulatedObject("panel", std::move(parts));
}

}  // namespace

TEST_CASE("raw_score: hand-evaluated cases") {
  CHECK(raw_score({Vec3::Zero(), Vec3::UnitX()}, Vec3::UnitX(), translation(Vec3::UnitX()), 0.3) == doctest::Approx(1.0));
  CHECK(raw_score({Vec3::Zero(), Vec3::UnitX()}, Vec3::UnitX(), translation(Vec3::UnitX()), 0.9) == doctest::Approx(1.0));
  CHECK(raw_score({Vec3::Zero(), Vec3::UnitY()}, Vec3::UnitX(), translation(Vec3::UnitX()), 0.3) == doctest::Approx(-0.3));
  CHECK(raw_score({Vec3(0, 0, 0.4), Vec3::UnitY()}, Vec3::UnitY(), hinge_z(), 0.3) == doctest::Approx(0.0));
  CHECK(raw_score({Vec3(0.9, 0, 0), Vec3::UnitY()}, Vec3::UnitY(), hinge_z(), 0.3) == doctest::Approx(0.9));
  // Alternate reading swaps the roles of the two components.
  CHECK(raw_score({Vec3(0.9, 0, 0), Vec3::UnitX()}, Vec3::UnitY(), hinge_z(), 0.3, RotationReading::TangentialDrives) ==
        doctest::Approx(0.9));
}

TEST_CASE("raw_score: monotone in lever arm and friction") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 dir = random_unit_vector(rng), normal = random_unit_vector(rng);
    const double d1 = U(rng), d2 = d1 + 0.01 + U(rng);
    if (std::abs(dir.dot(normal)) < 1e-3) continue;
    const Action a1{Vec3(d1, 0, 0), dir}, a2{Vec3(d2, 0, 0), dir};
    CHECK(raw_score(a2, normal, hinge_z(), 0.3) > raw_score(a1, normal, hinge_z(), 0.3));

    const double mu1 = U(rng), mu2 = mu1 + U(rng);
    CHECK(raw_score(a1, normal, hinge_z(), mu2) <= raw_score(a1, normal, hinge_z(), mu1));
    const MotionParams t = translation(random_unit_vector(rng));
    CHECK(raw_score(a1, normal, t, mu2) <= raw_score(a1, normal, t, mu1));
  }
}

TEST_CASE("sample_directions: unit, seeded, roughly uniform") {
  const auto a = sample_directions(10000, 7), b = sample_directions(10000, 7);
  CHECK(a == b);
  CHECK(a != sample_directions(10000, 8));
  Vec3 mean = Vec3::Zero();
  for (const Vec3& d : a) {
    CHECK(std::abs(d.norm() - 1.0) < 1e-9);
    mean += d;
  }
  CHECK((mean / a.size()).norm() < 0.03);
}

TEST_CASE("point_score: fixed part, Monte-Carlo expectation, lever monotonicity") {
  const ArticulatedObject drawer = fixtures::box_with_drawer();
  ScoreConfig cfg;
  CHECK(point_score(drawer, {0.5, 0.2, 0.5}, -Vec3::UnitY(), 0, cfg) == 0.0);

  // E|cos| over the sphere is one half.
  cfg.mu = 0.0;
  cfg.directions = 10000;
  cfg.seed = 3;
  CHECK(point_score(drawer, {0.75, 0.5, 0.5}, Vec3::UnitX(), 1, cfg) == doctest::Approx(0.5).epsilon(0.02));

  const ArticulatedObject door = hinged_panel(1.0);
  cfg.mu = 0.3;
  cfg.directions = 100;
  CHECK(point_score(door, {0.9, 0.02, 0.5}, Vec3::UnitY(), 1, cfg) >
        point_score(door, {0.2, 0.02, 0.5}, Vec3::UnitY(), 1, cfg));
}

TEST_CASE("point_score: nearly independent of the normal's orientation") {
  // With isotropic directions the expected score depends on d alone.
  const MotionParams m = hinge_z();
  const auto dirs = sample_directions(100, 0);
  std::mt19937_64 rng(5);
  double lo = kInf, hi = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const double s = point_score(m, Vec3(0.4, 0, 0), random_unit_vector(rng), dirs, 0.3, RotationReading::NormalDrives);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  CHECK(hi > 0.0);
  CHECK((hi - lo) / hi < 0.05);
}

TEST_CASE("build_map: per-part normalization") {
  ScoreConfig cfg;
  {
    const ArticulatedObject obj = make_template("cabinet-drawer", 2);
    PointCloud scan = mobile_scan(obj.with_state(std::size_t{1}, 0.15), 1.5);
    const ArticulatedObject posed = obj.with_state(std::size_t{1}, 0.15);
    scan.labels = gt_labels(posed, scan);
    const InteractabilityMap map = build_map(posed, scan, cfg);
    // Translation scores do not depend on the point, so the whole drawer
    // hits the constant-score case and saturates at 1.
    std::size_t drawer_pts = 0;
    for (std::size_t i = 0; i < map.size(); ++i) {
      CHECK(map.active[i]);
      if (scan.labels[i] == 0) CHECK(map.score[i] == 0.0);
      if (scan.labels[i] == 1) {
        ++drawer_pts;
        CHECK(map.score[i] == 1.0);
      }
    }
    CHECK(drawer_pts > 0);
  }
  {
    const ArticulatedObject obj = make_template("double-door", 5);
    PointCloud scan = mobile_scan(obj, 1.5);
    scan.labels = gt_labels(obj, scan);
    const InteractabilityMap map = build_map(obj, scan, cfg);
    for (int part : {1, 2}) {
      double lo = 1, hi = 0;
      for (std::size_t i = 0; i < map.size(); ++i)
        if (scan.labels[i] == part) lo = std::min(lo, map.score[i]), hi = std::max(hi, map.score[i]);
      CHECK(lo == 0.0);
      CHECK(hi == 1.0);
    }
  }
  {
    std::vector<Part> parts{fixtures::make_part("sculpture", make_box({0.3, 0.3, 0.3}, {0.7, 0.7, 0.7}))};
    const ArticulatedObject rock("sculpture", std::move(parts));
    PointCloud scan = mobile_scan(rock, 1.5);
    scan.labels = gt_labels(rock, scan);
    const InteractabilityMap map = build_map(rock, scan, cfg);
    for (double s : map.score) CHECK(s == 0.0);
  }
}

TEST_CASE("build_map: deterministic and invariant to scaling the raw scores") {
  ScoreConfig cfg;
  cfg.mu = 0.0;  // raw rotation scores then scale linearly with the lever arm
  const ArticulatedObject a = hinged_panel(1.0), b = hinged_panel(2.0);
  PointCloud ca = sample_surface(a.posed_mesh(1), 300, 4);
  ca.labels.assign(ca.size(), 1);
  PointCloud cb = ca;
  for (Vec3& p : cb.points) p *= 2.0;
  const InteractabilityMap ma = build_map(a, ca, cfg), mb = build_map(b, cb, cfg);
  CHECK(ma.score == build_map(a, ca, cfg).score);
  for (std::size_t i = 0; i < ma.size(); ++i) CHECK(ma.score[i] == doctest::Approx(mb.score[i]).epsilon(1e-9));
}

TEST_CASE("propose_direction: axis, normal, hinge, co-rotation") {
  ScoreConfig cfg;
  cfg.mu = 0.0;
  cfg.directions = 10000;
  const ArticulatedObject drawer = fixtures::box_with_drawer();
  const Action a = propose_direction(drawer, {0.75, 0.5, 0.5}, Vec3::UnitX(), 1, cfg);
  CHECK(angle_deg(a.dir, Vec3::UnitX()) < 5.0);
  CHECK(std::abs(a.dir.norm() - 1.0) < 1e-9);
  CHECK(a.pos == Vec3(0.75, 0.5, 0.5));

  const ArticulatedObject door = hinged_panel(1.0);
  const Action b = propose_direction(door, {0.9, 0.02, 0.5}, Vec3::UnitY(), 1, cfg);
  CHECK(angle_deg(b.dir, Vec3::UnitY()) < 5.0);

  cfg.mu = 0.3;
  ErrorCode code = ErrorCode::Io;
  try {
    propose_direction(door, {0.0, 0.0, 0.5}, Vec3::UnitY(), 1, cfg);
  } catch (const Error& e) {
    code = e.code();
  }
  CHECK(code == ErrorCode::NoFeasibleDirection);
  CHECK_THROWS_AS(propose_direction(door, {0.0, 0.0, 0.0}, Vec3::UnitY(), 0, cfg), Error);

  // Rotating the whole scene rotates the proposal with it.
  cfg.mu = 0.0;
  const Rigid R = rotation_about(Vec3(0.5, 0.5, 0.5), Vec3(1, 2, 3).normalized(), 0.7);
  std::vector<Part> parts;
  for (const Part& p : drawer.parts()) {
    Part q = fixtures::make_part(p.id, p.mesh->transformed(R), p.joint, p.parent);
    q.joint.origin = R * p.joint.origin;
    q.joint.direction = R.linear() * p.joint.direction;
    parts.push_back(q);
  }
  const ArticulatedObject turned("turned", std::move(parts));
  const Action c = propose_direction(turned, R * Vec3(0.75, 0.5, 0.5), R.linear() * Vec3::UnitX(), 1, cfg);
  CHECK(angle_deg(c.dir, R.linear() * a.dir) < 5.0);
}

TEST_CASE("mask_region and CSV export") {
  const ArticulatedObject obj = make_template("cabinet-door", 3);
  PointCloud scan = mobile_scan(obj, 1.5);
  scan.labels = gt_labels(obj, scan);
  const InteractabilityMap map = build_map(obj, scan, ScoreConfig{});
  CHECK(map.active_count() == map.size());

  const InteractabilityMap none = mask_region(map, std::vector<bool>(map.size(), false));
  CHECK(none.active == map.active);
  CHECK(none.score == map.score);
  CHECK(mask_region(map, std::vector<bool>(map.size(), true)).active_count() == 0);
  CHECK_THROWS_AS(mask_region(map, std::vector<bool>(3, true)), Error);

  std::vector<bool> door(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) door[i] = scan.labels[i] == 1;
  const InteractabilityMap rest = mask_region(map, door);
  for (std::size_t i = 0; i < map.size(); ++i) {
    CHECK(rest.score[i] == map.score[i]);
    if (rest.active[i] && rest.score[i] > 0.0) CHECK(scan.labels[i] != 1);
  }

  const std::string csv = map_to_csv(rest);
  CHECK(csv.rfind("x,y,z,score,active\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == map.size() + 1);
}
