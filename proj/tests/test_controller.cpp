#include <doctest.h>

#include <set>

#include "artiscan/controller.hpp"
#include "artiscan/error.hpp"
#include "artiscan/harness.hpp"
#include "oracles.hpp"

using namespace artiscan;

namespace {

InteractabilityMap line_map(const std::vector<double>& scores) {
  InteractabilityMap m;
  for (std::size_t i = 0; i < scores.size(); ++i) m.cloud.push_back(Vec3(0.01 * i, 0, 0), Vec3::UnitX());
  m.score = scores;
  m.active.assign(scores.size(), true);
  return m;
}

}  // namespace

TEST_CASE("select_index: maximum, failure radius, exhaustion") {
  // Point 0 at x=0 is best; point 3 (x=0.03) second best; point 9 (x=0.09) third.
  std::vector<double> s(10, 0.1);
  s[0] = 1.0;
  s[3] = 0.9;
  s[9] = 0.8;
  const InteractabilityMap m = line_map(s);
  CHECK(select_index(m, {}, 0.05) == 0);
  CHECK(select_index(m, {Vec3::Zero()}, 0.05) == 9);

  InteractabilityMap masked = m;
  masked.active[0] = false;
  CHECK(select_index(masked, {}, 0.05) == 3);

  CHECK_THROWS_AS(select_index(m, {Vec3(0.05, 0, 0)}, 0.05), Error);
  try {
    select_index(m, {Vec3(0.0, 0, 0), Vec3(0.09, 0, 0)}, 0.05);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Exhausted);
  }
  // Ties resolve to the lowest index.
  CHECK(select_index(line_map({0.5, 0.7, 0.7}), {}, 0.05) == 1);
}

TEST_CASE("select_action proposes a pull on the chosen point") {
  const ArticulatedObject obj = fixtures::box_with_drawer();
  InteractabilityMap m;
  m.cloud.push_back({0.5, 0.2, 0.5}, -Vec3::UnitY());
  m.cloud.push_back({0.75, 0.5, 0.5}, Vec3::UnitX());
  m.cloud.labels = {0, 1};
  m.score = {0.0, 1.0};
  m.active = {true, true};
  ControllerConfig cfg;
  cfg.score.directions = 1000;
  const Action a = select_action(obj, m, {}, cfg);
  CHECK(a.pos == Vec3(0.75, 0.5, 0.5));
  CHECK(a.dir.dot(Vec3::UnitX()) > std::cos(kPi / 18));
}

TEST_CASE("attempt_manipulation outcomes") {
  const ArticulatedObject obj = fixtures::box_with_drawer(0.4);
  ManipulationResult r = attempt_manipulation(obj, {{0.75, 0.5, 0.5}, Vec3::UnitX()});
  CHECK(r.log.outcome == Outcome::Moved);
  REQUIRE(r.part);
  CHECK(*r.part == 1);
  CHECK(r.log.part_hit == "drawer");
  CHECK(r.log.final_value == doctest::Approx(0.4));
  CHECK(r.state.value(1) == doctest::Approx(0.4));
  const Trajectory& t = r.log.trajectory;
  REQUIRE(t.size() >= 2);
  for (std::size_t i = 1; i < t.size(); ++i) CHECK(t.timestamps[i] > t.timestamps[i - 1]);
  CHECK((t.samples.back() - t.samples.front()).norm() == doctest::Approx(0.4).epsilon(1e-9));

  r = attempt_manipulation(obj, {{0.75, 0.5, 0.5}, Vec3::UnitY()});
  CHECK(r.log.outcome == Outcome::FailedDirection);
  CHECK(r.state.value(1) == 0.0);

  r = attempt_manipulation(obj, {{0.7, 0.25, 0.5}, Vec3::UnitX()});
  CHECK(r.log.outcome == Outcome::Immovable);

  r = attempt_manipulation(obj, {{0.95, 0.95, 0.95}, Vec3::UnitX()});
  CHECK(r.log.outcome == Outcome::FailedAttach);
  CHECK_FALSE(r.log.part_hit);
}

TEST_CASE("attempt_manipulation: door swing records an arc") {
  const ArticulatedObject obj = fixtures::box_with_door(kPi / 2);
  const ManipulationResult r = attempt_manipulation(obj, {{0.72, 0.75, 0.5}, Vec3::UnitX()});
  REQUIRE(r.log.outcome == Outcome::Moved);
  CHECK(r.log.final_value == doctest::Approx(kPi / 2));
  const MotionParams fit = classify_and_extract(r.log.trajectory);
  CHECK(fit.kind == MotionKind::Rotation);
  CHECK(fit.range == doctest::Approx(kPi / 2).epsilon(1e-6));
}

TEST_CASE("restore_part: exact rest, unchanged rescan, no-op when unmoved") {
  const ArticulatedObject obj = make_template("cabinet-drawer", 1);
  const std::size_t part = obj.movable_parts().at(0);
  const std::string id = obj.part(part).id;
  const ArticulatedObject restored = restore_part(obj.with_state(part, obj.part(part).joint.open_limit()), id);
  CHECK(restored.value(part) == obj.part(part).joint.rest);
  const TriMesh a = obj.posed_mesh(part), b = restored.posed_mesh(part);
  CHECK(a.vertices == b.vertices);

  ScannerConfig sc;
  sc.depth_noise = 0.001;
  sc.seed = 5;
  CHECK(mobile_scan(obj, sc).cloud.points == mobile_scan(restored, sc).cloud.points);
  CHECK(restore_part(obj, id).posed_mesh().vertices == obj.posed_mesh().vertices);
}

TEST_CASE("check_termination thresholds") {
  std::vector<double> s(40, 0.1);
  for (int i = 0; i < 29; ++i) s[i] = 0.9;
  CHECK(check_termination(line_map(s)));
  s[29] = 0.9;
  CHECK_FALSE(check_termination(line_map(s)));
  InteractabilityMap m = line_map(s);
  m.active[0] = false;
  CHECK(check_termination(m));
  CHECK(check_termination(InteractabilityMap{}));
}

TEST_CASE("run_episode: single drawer, no movable parts, determinism") {
  const ArticulatedObject cab = make_template("cabinet-drawer", 3);
  const EpisodeResult ep = run_episode(cab);
  int moved = 0;
  for (const auto& a : ep.state.attempts) moved += a.outcome == Outcome::Moved;
  CHECK(moved == 1);
  REQUIRE(ep.metrics.a_action);
  CHECK(*ep.metrics.a_action == 1.0);
  CHECK(ep.state.attempts.size() == 1);
  CHECK(ep.result.parts.size() == 1);
  CHECK(ep.result.parts[0].motion.kind == MotionKind::Translation);
  CHECK(episode_to_json(run_episode(cab)) == episode_to_json(ep));

  std::vector<Part> parts{fixtures::make_part("rock", make_box({0.3, 0.3, 0.3}, {0.7, 0.7, 0.7}))};
  const EpisodeResult none = run_episode(ArticulatedObject("rock", std::move(parts)));
  CHECK(none.state.attempts.empty());
  CHECK(none.result.parts.empty());
  CHECK_FALSE(none.metrics.a_action);
}

TEST_CASE("run_episode: multi-drawer storage reconstructs every drawer once") {
  const ArticulatedObject obj = make_template("table-drawers", 2);
  const EpisodeResult ep = run_episode(obj);
  std::multiset<std::string> moved;
  for (const auto& a : ep.state.attempts)
    if (a.outcome == Outcome::Moved) moved.insert(*a.part_hit);
  CHECK(ep.result.parts.size() == obj.movable_parts().size());
  for (const auto& id : moved) CHECK(moved.count(id) == 1);
  for (const auto& p : ep.result.parts) {
    CHECK(p.motion.kind == MotionKind::Translation);
    const MotionParams gt = obj.joint_motion(obj.index_of(p.part_id));
    CHECK(std::abs(p.motion.axis_dir.dot(gt.axis_dir)) > 0.999);
  }
  CHECK(ep.state.attempts.size() >= moved.size());
}
