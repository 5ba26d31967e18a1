#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "artiscan/error.hpp"
#include "artiscan/harness.hpp"
#include "artiscan/io.hpp"
#include "artiscan/metrics.hpp"
#include "artiscan/reconstruction.hpp"
#include "artiscan/scanner.hpp"
#include "oracles.hpp"

using namespace artiscan;

namespace {

PointCloud sphere_samples(const Vec3& c, double r, int n) {
  PointCloud cloud;
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / n, rho = std::sqrt(1 - z * z);
    const Vec3 d(rho * std::cos(golden * i), rho * std::sin(golden * i), z);
    cloud.push_back(c + r * d, d);
  }
  return cloud;
}

PointCloud cube_samples(double step) {
  PointCloud cloud;
  const int n = static_cast<int>(std::round(1.0 / step));
  for (int axis = 0; axis < 3; ++axis)
    for (int side = 0; side < 2; ++side)
      for (int a = 0; a <= n; ++a)
        for (int b = 0; b <= n; ++b) {
          Vec3 p, nrm = Vec3::Zero();
          p[axis] = side;
          p[(axis + 1) % 3] = a * step;
          p[(axis + 2) % 3] = b * step;
          nrm[axis] = side ? 1.0 : -1.0;
          cloud.push_back(p, nrm);
        }
  return cloud;
}

double box_sdf(const Vec3& p, const Vec3& lo, const Vec3& hi) {
  const Vec3 c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
  const Vec3 q = (p - c).cwiseAbs() - h;
  return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
}

}  // namespace

TEST_CASE("fuse_part_observations: identity, dedup and no loss") {
  MotionParams m;
  m.kind = MotionKind::Translation;
  m.axis_dir = Vec3::UnitX();
  PointCloud a;
  a.push_back({0.1, 0.1, 0.1}, Vec3::UnitZ());
  a.push_back({0.101, 0.101, 0.101}, Vec3::UnitZ());  // same 5 mm cell
  a.push_back({0.3, 0.1, 0.1}, Vec3::UnitZ());
  const PointCloud one = fuse_part_observations({{a, 0.0}}, m);
  CHECK(one.points == std::vector<Vec3>{Vec3(0.1, 0.1, 0.1), Vec3(0.3, 0.1, 0.1)});
  CHECK(fuse_part_observations({{a, 0.0}, {a, 0.0}}, m).size() == 2);
  CHECK_THROWS_AS(fuse_part_observations({}, m), Error);

  // Closed and open views of a drawer map back onto the rest pose.
  const ArticulatedObject obj = fixtures::box_with_drawer(0.3);
  const ArticulatedObject open = obj.with_state("drawer", 0.3);
  auto part_points = [](const ArticulatedObject& o, const PointCloud& c) {
    const auto gt = gt_labels(o, c);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < c.size(); ++i)
      if (gt[i] == 1) idx.push_back(i);
    return c.subset(idx);
  };
  const PointCloud closed_part = part_points(obj, mobile_scan(obj, 1.5));
  const PointCloud open_part = part_points(open, mobile_scan(open, 1.5));
  const MotionParams motion = obj.joint_motion(1);
  const FuseConfig cfg;
  const PointCloud fused = fuse_part_observations({{closed_part, 0.0}, {open_part, 0.3}}, motion, cfg);
  const double diag = std::sqrt(3.0) * cfg.voxel;
  for (const Vec3& p : closed_part.points) CHECK(oracle::nn_dist(p, fused.points) <= diag);
  for (const Vec3& p : open_part.points) CHECK(oracle::nn_dist(p - Vec3(0.3, 0, 0), fused.points) <= diag);
  // Everything lands on the rest-pose drawer surface.
  const TriMesh rest = obj.posed_mesh(1);
  for (const Vec3& p : fused.points) CHECK(oracle::mesh_dist(p, rest) < 1e-6);
}

TEST_CASE("remove_small_clusters keeps the main body only") {
  PointCloud c = sphere_samples(Vec3(0.5, 0.5, 0.5), 0.2, 2000);
  c.push_back({0.0, 0.0, 0.0}, Vec3::UnitZ());
  c.push_back({0.01, 0.0, 0.0}, Vec3::UnitZ());
  const PointCloud kept = remove_small_clusters(c);
  CHECK(kept.size() == 2000);
  CHECK(remove_small_clusters(PointCloud{}).empty());
}

TEST_CASE("estimate_sdf: cube centre, plane offset, sphere crossing") {
  const PointCloud cube = cube_samples(0.02);
  const SdfGrid g = estimate_sdf(cube, 31, kInf);
  const int mid = 15;
  CHECK(g.node(mid, mid, mid).isApprox(Vec3(0.5, 0.5, 0.5), 1e-12));
  CHECK(std::abs(g.at(mid, mid, mid) + 0.5) <= g.cell);

  PointCloud plane;
  for (int i = 0; i <= 40; ++i)
    for (int j = 0; j <= 40; ++j) plane.push_back(Vec3(0.025 * i, 0.025 * j, 0.0), Vec3::UnitZ());
  plane.push_back(Vec3(0.5, 0.5, 0.1), Vec3::UnitZ());  // lifts the grid off the plane
  plane.push_back(Vec3(0.5, 0.5, -0.1), -Vec3::UnitZ());
  const SdfGrid pg = estimate_sdf(plane, 32, kInf);
  std::size_t checked = 0;
  for (int k = 0; k < pg.res; ++k)
    for (int j = 0; j < pg.res; ++j)
      for (int i = 0; i < pg.res; ++i) {
        const Vec3 v = pg.node(i, j, k);
        if (v.z() <= 0.0 || v.z() > 0.06 || v.x() < 0.1 || v.x() > 0.9 || v.y() < 0.1 || v.y() > 0.9) continue;
        ++checked;
        CHECK(pg.at(i, j, k) == doctest::Approx(v.z()).epsilon(1e-6));
      }
  CHECK(checked > 100);

  const SdfGrid sg = estimate_sdf(sphere_samples(Vec3(0.5, 0.5, 0.5), 0.3, 20000), 48);
  for (int k = 0; k + 1 < sg.res; ++k)
    for (int j = 0; j < sg.res; ++j)
      for (int i = 0; i < sg.res; ++i) {
        const std::size_t a = sg.index(i, j, k), b = sg.index(i, j, k + 1);
        if (!sg.known[a] || !sg.known[b] || (sg.values[a] < 0) == (sg.values[b] < 0)) continue;
        const double t = sg.values[a] / (sg.values[a] - sg.values[b]);
        const Vec3 x = sg.node(i, j, k) + t * (sg.node(i, j, k + 1) - sg.node(i, j, k));
        CHECK(std::abs((x - Vec3(0.5, 0.5, 0.5)).norm() - 0.3) <= sg.cell);
      }

  CHECK_THROWS_AS(estimate_sdf(PointCloud{}), Error);
}

TEST_CASE("extract_mesh: analytic sphere, cube area, empty grid, round trip") {
  const Vec3 c(0.5, 0.5, 0.5);
  const double cell = 1.0 / 63;
  const SdfGrid sphere = SdfGrid::from_function(Vec3::Zero(), cell, 64, [&](const Vec3& p) { return (p - c).norm() - 0.3; });
  const TriMesh sm = extract_mesh(sphere);
  for (const Vec3& v : sm.vertices) CHECK(std::abs((v - c).norm() - 0.3) <= cell);
  // Outward orientation: normals point away from the centre.
  for (std::size_t t = 0; t < sm.triangles.size(); t += 97)
    CHECK(sm.triangle_normal(t).dot(sm.vertices[sm.triangles[t][0]] - c) > 0.0);

  const Vec3 lo(0.25, 0.25, 0.25), hi(0.75, 0.75, 0.75);
  const SdfGrid cube = SdfGrid::from_function(Vec3::Zero(), cell, 64, [&](const Vec3& p) { return box_sdf(p, lo, hi); });
  CHECK(extract_mesh(cube).area() == doctest::Approx(6 * 0.25).epsilon(0.05));

  const SdfGrid positive = SdfGrid::from_function(Vec3::Zero(), cell, 16, [](const Vec3&) { return 1.0; });
  try {
    extract_mesh(positive);
    FAIL("expected EmptySurface");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptySurface);
  }

  // Unsquared Chamfer between mesh samples and analytic surface samples.
  const PointCloud mesh_pts = sample_surface(sm, 2048, 1);
  const PointCloud truth = sphere_samples(c, 0.3, 2048);
  double cd = 0.0;
  for (const Vec3& p : mesh_pts.points) cd += oracle::nn_dist(p, truth.points) / mesh_pts.size();
  for (const Vec3& p : truth.points) cd += oracle::nn_dist(p, mesh_pts.points) / truth.size();
  CHECK(cd < 2 * cell);
}

TEST_CASE("assemble and write_result") {
  const auto dir = std::filesystem::temp_directory_path() / "artiscan_recon_test";
  std::filesystem::remove_all(dir);

  const ReconstructionResult empty = assemble({}, PointCloud{});
  CHECK(empty.parts.empty());
  CHECK_FALSE(empty.has_remainder);

  std::vector<Part> parts{fixtures::make_part("rock", make_box({0.3, 0.3, 0.3}, {0.7, 0.7, 0.7}))};
  const ArticulatedObject rock("rock", std::move(parts));
  const PointCloud scan = mobile_scan(rock, 1.5);
  ReconstructedPart part{"lid", make_box({0, 0, 0}, {0.1, 0.1, 0.1}), MotionParams{}};
  const ReconstructionResult r = assemble({part}, scan, 48);
  CHECK(r.has_remainder);
  CHECK(r.open_surfaces);
  for (const Vec3& v : r.remainder.vertices) CHECK(oracle::mesh_dist(v, rock.posed_mesh(0)) < 0.03);

  write_result(dir, r);
  CHECK(std::filesystem::exists(dir / "part_0.obj"));
  CHECK(std::filesystem::exists(dir / "remainder.obj"));
  const std::string json = read_text(dir / "result.json");
  CHECK(json.find("\"part_id\": \"lid\"") != std::string::npos);
  CHECK(read_obj(dir / "part_0.obj").triangles.size() == 12);
  std::filesystem::remove_all(dir);
}

TEST_CASE("reconstructed drawer re-posed to its range overlays the open scan") {
  const ArticulatedObject obj = make_template("cabinet-drawer", 0);
  const std::size_t part = obj.movable_parts().at(0);
  const MotionParams motion = obj.joint_motion(part);
  std::vector<std::pair<PointCloud, double>> segments;
  PointCloud open_part;
  for (int step = 0; step <= 4; ++step) {
    const double amount = motion.range * step / 4;
    const Joint& j = obj.part(part).joint;
    const ArticulatedObject posed = obj.with_state(part, j.rest + j.opening_sign() * amount);
    const PointCloud scan = mobile_scan(posed, 1.5);
    const auto gt = gt_labels(posed, scan);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < scan.size(); ++i)
      if (gt[i] == static_cast<int>(part)) idx.push_back(i);
    segments.emplace_back(scan.subset(idx), amount);
    if (step == 4) open_part = scan.subset(idx);
  }
  const TriMesh mesh = extract_mesh(estimate_sdf(remove_small_clusters(fuse_part_observations(segments, motion)), 64));
  const TriMesh reposed = mesh.transformed(motion.transform(motion.range));
  const PointCloud samples = sample_surface(reposed, 4096, 2);
  CHECK(chamfer(open_part.points, samples.points) < 5e-3);
}
