#include "artiscan/controller.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <json.hpp>
#include <set>

#include "artiscan/error.hpp"
#include "artiscan/kdtree.hpp"

namespace artiscan {

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Moved: return "moved";
    case Outcome::FailedAttach: return "failed_attach";
    case Outcome::FailedDirection: return "failed_direction";
    case Outcome::Immovable: return "immovable";
  }
  return "failed_attach";
}

std::size_t select_index(const InteractabilityMap& map, const std::vector<Vec3>& failed, double radius) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (!map.active[i]) continue;
    const Vec3& p = map.cloud.points[i];
    const bool near_failure =
        std::any_of(failed.begin(), failed.end(), [&](const Vec3& f) { return (p - f).norm() <= radius; });
    if (near_failure) continue;
    if (!best || map.score[i] > map.score[*best]) best = i;
  }
  if (!best) throw Error(ErrorCode::Exhausted, "no eligible action point remains");
  return *best;
}

Action select_action(const ArticulatedObject& obj, const InteractabilityMap& map,
                     const std::vector<Vec3>& failed, const ControllerConfig& cfg) {
  const std::size_t i = select_index(map, failed, cfg.failure_radius);
  const Vec3& p = map.cloud.points[i];
  const Vec3& n = map.cloud.normals[i];
  if (map.cloud.has_labels()) {
    const int label = map.cloud.labels[i];
    if (label >= 0 && static_cast<std::size_t>(label) < obj.part_count() &&
        obj.part(label).joint.movable()) {
      try {
        return propose_direction(obj, p, n, static_cast<std::size_t>(label), cfg.score);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoFeasibleDirection) throw;
      }
    }
  }
  // No part information or no feasible direction: pull along the normal.
  return Action{p, n};
}

namespace {

std::vector<Vec3> front_poll(const ArticulatedObject& obj, const Camera& cam) {
  return depth_to_cloud(raycast_depth(obj, cam), cam).points;
}

}  // namespace

ManipulationResult attempt_manipulation(const ArticulatedObject& obj, const Action& action,
                                        const ManipulationConfig& cfg, const ScannerConfig& scanner) {
  ManipulationResult res{AttemptLog{action, std::nullopt, Outcome::FailedAttach, {}, 0.0, 0}, obj, std::nullopt};
  double best = kInf;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < obj.part_count(); ++i) {
    const double d = distance_to_part(obj, i, action.pos);
    if (d < best) {
      best = d;
      hit = i;
    }
  }
  if (!(best <= cfg.attach_tolerance)) return res;
  const Part& part = obj.part(hit);
  res.log.part_hit = part.id;
  res.part = hit;
  res.log.final_value = obj.value(hit);
  if (!part.joint.movable()) {
    res.log.outcome = Outcome::Immovable;
    return res;
  }

  const double start = obj.value(hit);
  const double limit = part.joint.open_limit();
  Vec3 opening;
  try {
    opening = part.joint.opening_sign() * surface_velocity(obj, hit, action.pos);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Degenerate) throw;
    res.log.outcome = Outcome::FailedDirection;
    return res;
  }
  if (!(action.dir.normalized().dot(opening) > std::cos(cfg.suction_cone)) || std::abs(limit - start) < 1e-12) {
    res.log.outcome = Outcome::FailedDirection;
    return res;
  }

  // Constant joint speed toward the opening limit; the gripper rides on the
  // attach point.
  const Vec3 local = obj.part_transform(hit).inverse() * action.pos;
  auto gripper = [&](double v) { return obj.with_state(hit, v).part_transform(hit) * local; };
  const double step = (limit - start) / cfg.ticks_per_range;
  const Camera cam = mobile_cameras(scanner)[0];

  Trajectory& traj = res.log.trajectory;
  traj.samples.push_back(action.pos);
  traj.timestamps.push_back(0.0);
  double value = start;
  bool clamped = false;
  ArticulatedObject current = obj;
  std::vector<Vec3> prev = front_poll(current, cam);
  int tick = 0;
  for (; tick < cfg.max_ticks; ++tick) {
    double next = value;
    if (!clamped) {
      next = step > 0 ? std::min(value + step, limit) : std::max(value + step, limit);
      for (int s = 1; s <= cfg.substeps && next != value; ++s) {
        const double v = s == cfg.substeps ? next : value + (next - value) * s / cfg.substeps;
        const Vec3 g = gripper(v);
        if (cfg.arm_reach > 0.0 && (g - action.pos).norm() > cfg.arm_reach) {
          clamped = true;
          next = value + (next - value) * (s - 1) / cfg.substeps;
          break;
        }
        traj.samples.push_back(g);
        traj.timestamps.push_back(cfg.tick_seconds * (tick + static_cast<double>(s) / cfg.substeps));
      }
    }
    value = next;
    current = obj.with_state(hit, value);
    const std::vector<Vec3> cur = front_poll(current, cam);
    const double cd = (prev.empty() || cur.empty()) ? 0.0 : chamfer_unsquared(prev, cur);
    prev = cur;
    if (cd < cfg.converge_cd) break;
  }
  res.log.poll_ticks = tick + 1;
  res.log.final_value = value;
  if (traj.size() < 2) {
    // Nothing moved before the first poll reported rest.
    traj = {};
    res.log.outcome = Outcome::FailedDirection;
    return res;
  }
  res.log.outcome = Outcome::Moved;
  res.state = current;
  return res;
}

ArticulatedObject restore_part(const ArticulatedObject& obj, const std::string& part) {
  const std::size_t i = obj.index_of(part);
  return obj.with_state(i, obj.part(i).joint.rest);
}

bool check_termination(const InteractabilityMap& map, double score_threshold, int count_threshold) {
  int count = 0;
  for (std::size_t i = 0; i < map.size(); ++i)
    if (map.active[i] && map.score[i] > score_threshold) ++count;
  return count < count_threshold;
}

SegTruth segmentation_truth(const ArticulatedObject& rest, const MobileScan& rest_scan,
                            const ArticulatedObject& moved, const MobileScan& moved_scan, std::size_t part,
                            double visibility_tol) {
  SegTruth t;
  const int id = static_cast<int>(part);
  for (int l : gt_labels(rest, rest_scan.cloud)) t.before.push_back(l == id ? 1 : 0);
  const std::vector<int> after = gt_labels(moved, moved_scan.cloud);
  for (std::size_t i = 0; i < after.size(); ++i) {
    if (after[i] == id)
      t.after.push_back(1);
    else if (observed_surface(moved_scan.cloud.points[i], rest_scan.cameras, rest_scan.depths, visibility_tol))
      t.after.push_back(0);
    else
      t.after.push_back(2);
  }
  return t;
}

namespace {

class Stopwatch {
 public:
  Stopwatch(bool on, std::vector<std::pair<std::string, double>>& sink) : on_(on), sink_(sink) {}
  void lap(const std::string& name) {
    if (!on_) return;
    const auto now = std::chrono::steady_clock::now();
    sink_.emplace_back(name, std::chrono::duration<double>(now - last_).count());
    last_ = now;
  }

 private:
  bool on_;
  std::vector<std::pair<std::string, double>>& sink_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

PointCloud select(const PointCloud& cloud, const std::vector<SegLabel>& labels, SegLabel which) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == which) idx.push_back(i);
  return cloud.subset(idx);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

EpisodeResult run_episode(const ArticulatedObject& input, const ControllerConfig& cfg) {
  EpisodeResult ep;
  Stopwatch clock(cfg.record_timings, ep.timings);
  const ArticulatedObject rest = input.at_rest();

  const MobileScan scan0 = mobile_scan(rest, cfg.scanner);
  PointCloud c0 = scan0.cloud;
  c0.labels = gt_labels(rest, c0);
  EpisodeState& st = ep.state;
  st.map = build_map(rest, c0, cfg.score);
  st.base_cloud = c0;
  clock.lap("initial_scan_and_map");

  std::vector<SegLabel> removed(c0.size(), SegLabel::Static);
  PointCloud interiors;
  interiors.source = CloudSource::Fused;
  std::set<std::size_t> moved_parts;
  int moved_count = 0;
  bool exhausted = false;
  ArticulatedObject current = rest;

  while (true) {
    if (check_termination(st.map, cfg.score_threshold, cfg.count_threshold)) {
      ep.stop_reason = "threshold";
      break;
    }
    std::vector<Vec3> failed;  // reset every iteration
    std::optional<ManipulationResult> success;
    while (!success) {
      Action action;
      try {
        action = select_action(current, st.map, failed, cfg);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::Exhausted) throw;
        exhausted = true;
        break;
      }
      ManipulationResult r = attempt_manipulation(current, action, cfg.manip, cfg.scanner);
      st.attempts.push_back(r.log);
      if (r.log.outcome == Outcome::Moved) {
        success = std::move(r);
      } else {
        failed.push_back(action.pos);
        if (static_cast<int>(failed.size()) >= cfg.retry_budget) {
          exhausted = true;
          break;
        }
      }
    }
    if (exhausted) {
      ep.stop_reason = "exhausted";
      break;
    }
    clock.lap("manipulation_" + std::to_string(st.iteration));

    const std::size_t part = *success->part;
    const std::string part_id = rest.part(part).id;
    ++moved_count;
    moved_parts.insert(part);
    ScannerConfig scan_cfg = cfg.scanner;
    scan_cfg.seed = cfg.scanner.seed + static_cast<std::uint64_t>(st.iteration) + 1;
    const MobileScan scan_i = mobile_scan(success->state, scan_cfg);

    MotionParams motion;
    try {
      motion = classify_and_extract(success->log.trajectory, cfg.fit);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Unfittable) throw;
      // Keep the part out of further selection and move on.
      std::vector<bool> member(st.map.size(), false);
      for (std::size_t i = 0; i < st.map.size(); ++i)
        member[i] = (st.map.cloud.points[i] - success->log.action.pos).norm() <= cfg.failure_radius;
      st.map = mask_region(st.map, member);
      current = restore_part(success->state, part_id);
      continue;
    }

    ViewSet views0 = views_of(scan0), views_i = views_of(scan_i);
    if (!cfg.free_space) views0.cameras = views_i.cameras = {};
    const SegmentationResult seg = segment_pair(c0, scan_i.cloud, motion, motion.range, cfg.seg, views0, views_i);
    const SegTruth truth = segmentation_truth(rest, scan0, success->state, scan_i, part, cfg.truth_tolerance);

    IterationRecord rec;
    rec.part_id = part_id;
    rec.motion = motion;
    rec.gt_motion = rest.joint_motion(part);
    rec.seg_start = seg_metrics(to_ints(seg.labels_before), truth.before);
    rec.seg_end = seg_metrics(to_ints(seg.labels_after), truth.after);
    clock.lap("scan_fit_segment_" + std::to_string(st.iteration));

    std::vector<std::pair<PointCloud, double>> segments;
    PointCloud part_before = select(c0, seg.labels_before, SegLabel::Moving);
    PointCloud part_after = select(scan_i.cloud, seg.labels_after, SegLabel::Moving);
    if (!part_before.empty()) segments.emplace_back(std::move(part_before), 0.0);
    if (!part_after.empty()) segments.emplace_back(std::move(part_after), motion.range);
    PointCloud fused;
    TriMesh mesh;
    if (!segments.empty()) {
      fused = fuse_part_observations(segments, motion);
      try {
        mesh = extract_mesh(estimate_sdf(remove_small_clusters(fused), cfg.grid_res));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptySurface) throw;
      }
    }
    rec.fused_points = fused.size();
    st.reconstructed.push_back(ReconstructedPart{part_id, mesh, motion});
    clock.lap("reconstruct_part_" + std::to_string(st.iteration));

    // Mask the part so it is not selected again.
    std::vector<bool> member(st.map.size(), false);
    const KdTree fused_tree = fused.empty() ? KdTree() : KdTree(fused.points);
    for (std::size_t i = 0; i < st.map.size(); ++i) {
      member[i] = seg.labels_before[i] == SegLabel::Moving ||
                  (!fused.empty() && fused_tree.nearest_distance(st.map.cloud.points[i]) <= cfg.mask_radius);
    }
    st.map = mask_region(st.map, member);

    for (std::size_t i = 0; i < removed.size(); ++i)
      if (seg.labels_before[i] == SegLabel::Moving) removed[i] = SegLabel::Moving;
    PointCloud exposed = select(scan_i.cloud, seg.labels_after, SegLabel::Interior);
    exposed.labels.clear();
    interiors.append(exposed);
    PointCloud base_unlabeled = c0;
    base_unlabeled.labels.clear();
    st.base_cloud = update_base_cloud(
        base_unlabeled, SegmentationResult{removed, std::vector<SegLabel>(interiors.size(), SegLabel::Interior)},
        interiors);

    if (rec.gt_motion.kind == motion.kind) rec.motion_err = motion_errors(motion, rec.gt_motion);
    if (!mesh.empty()) {
      const std::uint64_t seed = cfg.scanner.seed + 1000 + static_cast<std::uint64_t>(st.iteration);
      const TriMesh gt_mesh = rest.posed_mesh(part);
      const PointCloud sp = sample_surface(mesh, cfg.metric_samples, seed);
      const PointCloud sg = sample_surface(gt_mesh, cfg.metric_samples, seed + 1);
      rec.recon_cd = chamfer(sp, sg);
      if (cfg.compute_emd) rec.recon_emd = emd(sp, sg);
    }
    ep.iterations.push_back(rec);
    clock.lap("metrics_" + std::to_string(st.iteration));

    current = restore_part(success->state, part_id);
    ++st.iteration;
  }

  for (std::size_t p : rest.movable_parts())
    if (!moved_parts.count(p)) ep.unmoved_parts.push_back(rest.part(p).id);
  ep.incomplete = exhausted && !ep.unmoved_parts.empty();

  ep.result = assemble(st.reconstructed, st.base_cloud, cfg.grid_res);
  ep.result.provenance = input.name();
  clock.lap("remainder");

  EpisodeMetrics& m = ep.metrics;
  if (!st.attempts.empty()) m.a_action = action_accuracy(moved_count, static_cast<int>(st.attempts.size()));
  std::vector<double> ss, se, is, ie, cd, em, dir, pos;
  for (const auto& r : ep.iterations) {
    ss.push_back(r.seg_start.accuracy);
    se.push_back(r.seg_end.accuracy);
    is.push_back(r.seg_start.miou);
    ie.push_back(r.seg_end.miou);
    if (r.recon_cd) cd.push_back(*r.recon_cd);
    if (r.recon_emd) em.push_back(*r.recon_emd);
    if (r.motion_err) {
      dir.push_back(r.motion_err->dir);
      if (r.motion_err->pos) pos.push_back(*r.motion_err->pos);
    }
  }
  auto set = [](std::optional<double>& f, const std::vector<double>& v) {
    if (!v.empty()) f = mean_of(v);
  };
  set(m.a_seg_start, ss);
  set(m.a_seg_end, se);
  set(m.miou_start, is);
  set(m.miou_end, ie);
  set(m.recon_cd, cd);
  set(m.recon_emd, em);
  set(m.mo_dir, dir);
  set(m.mo_pos, pos);
  return ep;
}

namespace {

nlohmann::ordered_json vec_json(const Vec3& v) { return nlohmann::ordered_json::array({v.x(), v.y(), v.z()}); }

nlohmann::ordered_json motion_json(const MotionParams& m) {
  return {{"kind", to_string(m.kind)},
          {"axis_point", vec_json(m.axis_point)},
          {"axis_dir", vec_json(m.axis_dir)},
          {"range", m.range}};
}

nlohmann::ordered_json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::string episode_to_json(const EpisodeResult& ep, bool include_timings) {
  using J = nlohmann::ordered_json;
  J doc;
  doc["object"] = ep.result.provenance;
  doc["incomplete"] = ep.incomplete;
  doc["stop_reason"] = ep.stop_reason;
  doc["unmoved_parts"] = ep.unmoved_parts;
  doc["iterations_completed"] = ep.state.iteration;
  J attempts = J::array();
  for (const auto& a : ep.state.attempts) {
    J aj;
    aj["action"] = {{"pos", vec_json(a.action.pos)}, {"dir", vec_json(a.action.dir)}};
    aj["part_hit"] = a.part_hit ? J(*a.part_hit) : J(nullptr);
    aj["outcome"] = to_string(a.outcome);
    aj["final_value"] = a.final_value;
    aj["poll_ticks"] = a.poll_ticks;
    J traj = J::array();
    for (std::size_t i = 0; i < a.trajectory.size(); ++i)
      traj.push_back({{"t", a.trajectory.timestamps[i]}, {"p", vec_json(a.trajectory.samples[i])}});
    aj["trajectory"] = traj;
    attempts.push_back(aj);
  }
  doc["attempts"] = attempts;
  J iters = J::array();
  for (const auto& r : ep.iterations) {
    J ij;
    ij["part"] = r.part_id;
    ij["motion"] = motion_json(r.motion);
    ij["gt_motion"] = motion_json(r.gt_motion);
    ij["seg_start"] = {{"accuracy", r.seg_start.accuracy}, {"miou", r.seg_start.miou}};
    ij["seg_end"] = {{"accuracy", r.seg_end.accuracy}, {"miou", r.seg_end.miou}};
    ij["E_recon_cd"] = opt_json(r.recon_cd);
    ij["E_recon_emd"] = opt_json(r.recon_emd);
    ij["E_mo_dir"] = r.motion_err ? J(r.motion_err->dir) : J(nullptr);
    ij["E_mo_pos"] = r.motion_err ? opt_json(r.motion_err->pos) : J(nullptr);
    ij["fused_points"] = r.fused_points;
    iters.push_back(ij);
  }
  doc["iterations"] = iters;
  doc["metrics"] = J::parse(metrics_to_json(ep.metrics));
  if (include_timings) {
    J t = J::object();
    for (const auto& [name, secs] : ep.timings) t[name] = secs;
    doc["timings"] = t;
  }
  return doc.dump(2);
}

}  // namespace artiscan
