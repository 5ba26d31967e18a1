#include <doctest.h>

#include <cmath>
#include <random>

#include "artiscan/error.hpp"
#include "artiscan/motionfit.hpp"
#include "oracles.hpp"

using namespace artiscan;

namespace {

Trajectory make(std::vector<Vec3> pts) {
  Trajectory t;
  for (std::size_t i = 0; i < pts.size(); ++i) t.timestamps.push_back(0.1 * i);
  t.samples = std::move(pts);
  return t;
}

Trajectory arc(const Vec3& c, double r, double a0, double a1, int n) {
  std::vector<Vec3> pts;
  for (int k = 0; k < n; ++k) {
    const double a = a0 + (a1 - a0) * k / (n - 1);
    pts.push_back(c + r * Vec3(std::cos(a), std::sin(a), 0));
  }
  return make(pts);
}

double line_angle(const Vec3& a, const Vec3& b) { return std::acos(std::min(1.0, std::abs(a.normalized().dot(b.normalized())))); }

}  // namespace

TEST_CASE("resample: uniform spacing, idempotence, arc-length gaps") {
  const Trajectory seg = resample(make({Vec3::Zero(), Vec3::UnitX()}), 20);
  REQUIRE(seg.size() == 20);
  for (int k = 0; k < 20; ++k) CHECK(seg.samples[k].x() == doctest::Approx(k / 19.0).epsilon(1e-12));

  const Trajectory again = resample(seg, 20);
  for (int k = 0; k < 20; ++k) CHECK((again.samples[k] - seg.samples[k]).norm() < 1e-9);

  const Trajectory quarter = resample(arc(Vec3::Zero(), 0.5, 0, kPi / 2, 200), 20);
  const double gap = (quarter.samples[1] - quarter.samples[0]).norm();
  for (int k = 1; k < 19; ++k) CHECK((quarter.samples[k + 1] - quarter.samples[k]).norm() == doctest::Approx(gap).epsilon(1e-6));
  CHECK((quarter.samples.front() - Vec3(0.5, 0, 0)).norm() < 1e-12);
  CHECK((quarter.samples.back() - Vec3(0, 0.5, 0)).norm() < 1e-12);

  CHECK_THROWS_AS(resample(make({Vec3::Ones(), Vec3::Ones()})), Error);
}

TEST_CASE("fit_line: exact, noisy, and worse than a circle on arcs") {
  std::vector<Vec3> pts;
  for (int k = 0; k < 20; ++k) pts.push_back(Vec3(0.05 * k, 0.3, 0.2));
  const LineFit exact = fit_line(make(pts));
  CHECK(exact.residual < 1e-9);
  CHECK(line_angle(exact.dir, Vec3::UnitX()) < 1e-9);

  std::mt19937_64 rng(2);
  const Vec3 dir = Vec3(1, 1, 0.3).normalized();
  for (auto& p : pts) p = Vec3(0.5, 0.5, 0.5) + 0.4 * (&p - pts.data()) / 19.0 * dir;
  for (auto& p : pts) p += 0.005 * Vec3(standard_normal(rng), standard_normal(rng), standard_normal(rng));
  CHECK(line_angle(fit_line(make(pts)).dir, dir) < 2e-2);

  const Trajectory circ = arc(Vec3(0.2, 0.1, 0), 0.4, 0, kPi, 20);
  CHECK(fit_line(circ).residual > 100 * (fit_circle(circ).residual + 1e-12));

  CHECK_THROWS_AS(fit_line(make({Vec3::Ones(), Vec3::Ones(), Vec3::Ones()})), Error);
}

TEST_CASE("fit_circle: full and partial arcs, collinear sentinel") {
  const Trajectory full = arc(Vec3(0.3, -0.2, 0.5), 0.4, 0, 2 * kPi * 19 / 20, 20);
  CircleFit f = fit_circle(full);
  CHECK((f.center - Vec3(0.3, -0.2, 0.5)).norm() < 1e-9);
  CHECK(f.radius == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(line_angle(f.normal, Vec3::UnitZ()) < 1e-9);

  f = fit_circle(arc(Vec3(0.3, -0.2, 0.5), 0.4, 0.3, 0.3 + kPi / 2, 20));
  CHECK((f.center - Vec3(0.3, -0.2, 0.5)).norm() < 1e-6);
  CHECK(f.radius == doctest::Approx(0.4).epsilon(1e-6));

  std::vector<Vec3> line;
  for (int k = 0; k < 10; ++k) line.push_back(Vec3(0.1 * k, 0, 0));
  CHECK(std::isinf(fit_circle(make(line)).radius));
}

TEST_CASE("classify_and_extract: drawer, door, flat arc") {
  std::vector<Vec3> pull;
  for (int k = 0; k < 30; ++k) pull.push_back(Vec3(0.7 + 0.35 * k / 29.0, 0.4, 0.5));
  MotionParams m = classify_and_extract(make(pull));
  CHECK(m.kind == MotionKind::Translation);
  CHECK(m.range == doctest::Approx(0.35).epsilon(1e-6));
  CHECK(m.axis_dir.isApprox(Vec3::UnitX(), 1e-9));

  m = classify_and_extract(arc(Vec3(0.1, 0.2, 0.4), 0.8, 0.0, kPi / 2, 40));
  CHECK(m.kind == MotionKind::Rotation);
  CHECK(m.range == doctest::Approx(kPi / 2).epsilon(1e-6));
  CHECK(m.axis_dir.isApprox(Vec3::UnitZ(), 1e-6));  // counter-clockwise sweep
  CHECK(point_line_distance(Vec3(0.1, 0.2, 0.4), m.axis_point, m.axis_dir) < 1e-6);

  m = classify_and_extract(arc(Vec3(0, 0, 0), 5.0, 0.0, 0.08, 20));
  CHECK(m.kind == MotionKind::Translation);

  // Clockwise sweep flips the axis so the angle stays positive.
  m = classify_and_extract(arc(Vec3(0.1, 0.2, 0.4), 0.8, kPi / 2, 0.0, 40));
  CHECK(m.axis_dir.isApprox(-Vec3::UnitZ(), 1e-6));
  CHECK(m.range > 0.0);
}

TEST_CASE("classify_and_extract: rigid invariance and joint-sweep recovery") {
  using namespace fixtures;
  const ArticulatedObject door = box_with_door(0.6 * kPi);
  const Vec3 handle(0.72, 0.75, 0.5);
  std::vector<Vec3> sweep;
  for (int k = 0; k <= 50; ++k) {
    const double v = 0.6 * kPi * k / 50;
    sweep.push_back(door.with_state("door", v).part_transform(1) * handle);
  }
  const MotionParams m = classify_and_extract(make(sweep));
  const MotionParams gt = door.joint_motion(1);
  CHECK(m.kind == MotionKind::Rotation);
  CHECK(line_angle(m.axis_dir, gt.axis_dir) < 1e-6);
  CHECK(m.axis_dir.dot(gt.axis_dir) > 0.0);
  CHECK(point_line_distance(m.axis_point, gt.axis_point, gt.axis_dir) < 1e-6);
  CHECK(m.range <= gt.range + 1e-9);
  CHECK(m.range == doctest::Approx(gt.range).epsilon(1e-6));

  const Rigid R = rotation_about(Vec3(0.3, 0.1, 0.9), Vec3(-1, 2, 0.5).normalized(), 1.1);
  std::vector<Vec3> moved;
  for (const Vec3& p : sweep) moved.push_back(R * p);
  const MotionParams mr = classify_and_extract(make(moved));
  CHECK(line_angle(mr.axis_dir, R.linear() * m.axis_dir) < 1e-6);
  CHECK(point_line_distance(R * m.axis_point, mr.axis_point, mr.axis_dir) < 1e-6);
  CHECK(mr.range == doctest::Approx(m.range).epsilon(1e-9));

  const ArticulatedObject drawer = box_with_drawer(0.3);
  std::vector<Vec3> pull;
  for (int k = 0; k <= 20; ++k) pull.push_back(drawer.with_state("drawer", 0.3 * k / 20).part_transform(1) * Vec3(0.75, 0.5, 0.5));
  const MotionParams t = classify_and_extract(make(pull));
  CHECK(t.kind == MotionKind::Translation);
  CHECK(line_angle(t.axis_dir, Vec3::UnitX()) < 1e-6);
  CHECK(t.range <= 0.3 + 1e-9);
}

TEST_CASE("classify_and_extract: too few samples") {
  CHECK_THROWS_AS(classify_and_extract(make({Vec3::Zero()})), Error);
  FitConfig bad;
  bad.samples = 2;
  CHECK_THROWS_AS(classify_and_extract(arc(Vec3::Zero(), 0.5, 0, 1, 20), bad), Error);
}

TEST_CASE("classify_and_extract: noisy short pull stays a translation") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> N(0.0, 0.005);
  std::vector<Vec3> pts;
  for (int k = 0; k < 191; ++k) pts.push_back(Vec3(0.1 * k / 190.0, 0, 0) + Vec3(N(rng), N(rng), N(rng)));
  const MotionParams m = classify_and_extract(make(pts));
  CHECK(m.kind == MotionKind::Translation);
  CHECK(line_angle(m.axis_dir, Vec3::UnitX()) < 0.1);

  // Radius test alone on twenty positions bends it into a small circle.
  FitConfig radius_only;
  radius_only.samples = 20;
  radius_only.bend_alpha = 0.0;
  CHECK(classify_and_extract(make(pts), radius_only).kind == MotionKind::Rotation);

  // A clearly curved noisy arc is still a rotation.
  Trajectory swing = arc(Vec3(0.1, 0.2, 0.3), 0.6, 0.0, kPi / 2, 191);
  for (Vec3& p : swing.samples) p += Vec3(N(rng), N(rng), N(rng));
  const MotionParams r = classify_and_extract(swing);
  CHECK(r.kind == MotionKind::Rotation);
  CHECK(line_angle(r.axis_dir, Vec3::UnitZ()) < 0.05);
}
