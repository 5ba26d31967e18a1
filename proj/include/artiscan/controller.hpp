#pragma once

#include <optional>
#include <string>
#include <vector>

#include "artiscan/interactability.hpp"
#include "artiscan/metrics.hpp"
#include "artiscan/model.hpp"
#include "artiscan/motionfit.hpp"
#include "artiscan/reconstruction.hpp"
#include "artiscan/scanner.hpp"
#include "artiscan/segmentation.hpp"

namespace artiscan {

enum class Outcome { Moved, FailedAttach, FailedDirection, Immovable };
const char* to_string(Outcome o);

struct AttemptLog {
  Action action;
  std::optional<std::string> part_hit;
  Outcome outcome = Outcome::FailedAttach;
  Trajectory trajectory;  // empty unless moved
  double final_value = 0.0;  // joint value when motion stopped
  int poll_ticks = 0;
};

struct ManipulationConfig {
  double attach_tolerance = 1e-3;
  double suction_cone = kPi / 3.0;  // half-angle around the opening velocity
  int ticks_per_range = 10;         // joint advances range/ticks each poll
  int substeps = 19;                // gripper samples recorded per tick
  double tick_seconds = 3.0;
  double converge_cd = 1.5e-3;      // inter-poll Chamfer (unsquared) that signals a stop
  double arm_reach = 0.0;           // max gripper displacement; 0 disables the clamp
  int max_ticks = 1000;
};

struct ControllerConfig {
  ScannerConfig scanner;
  ScoreConfig score;
  FitConfig fit;
  SegmentationConfig seg;
  ManipulationConfig manip;
  double failure_radius = 0.05;
  double score_threshold = 0.8;  // T_a
  int count_threshold = 30;      // T_c
  int retry_budget = 10;
  double mask_radius = 0.02;     // map points this close to a reconstructed part are masked
  bool free_space = true;        // free-space reasoning in segmentation
  int grid_res = 64;
  std::size_t metric_samples = 2048;
  bool compute_emd = true;
  bool record_timings = false;
  double truth_tolerance = 0.01;  // visibility tolerance of the segmentation ground truth
};

/// Highest-scoring active point farther than `radius` from every failed
/// point, with the proposed pull direction. Ties go to the lowest index.
Action select_action(const ArticulatedObject& obj, const InteractabilityMap& map,
                     const std::vector<Vec3>& failed, const ControllerConfig& cfg = {});
/// Index form of select_action.
std::size_t select_index(const InteractabilityMap& map, const std::vector<Vec3>& failed, double radius);

struct ManipulationResult {
  AttemptLog log;
  ArticulatedObject state;  // object after the attempt
  std::optional<std::size_t> part;
};

/// Simulated suction pull. Progress is monitored with front-view polls taken
/// with the camera of `scanner`.
ManipulationResult attempt_manipulation(const ArticulatedObject& obj, const Action& action,
                                        const ManipulationConfig& cfg = {},
                                        const ScannerConfig& scanner = {});

ArticulatedObject restore_part(const ArticulatedObject& obj, const std::string& part);

bool check_termination(const InteractabilityMap& map, double score_threshold = 0.8, int count_threshold = 30);

/// Ground-truth segmentation for a (rest, moved) scan pair: before points are
/// moving iff they lie on the moved part; after points are moving on the
/// part, static where the rest capture already saw them, interior otherwise.
struct SegTruth {
  std::vector<int> before;
  std::vector<int> after;
};
SegTruth segmentation_truth(const ArticulatedObject& rest, const MobileScan& rest_scan,
                            const ArticulatedObject& moved, const MobileScan& moved_scan, std::size_t part,
                            double visibility_tol);

struct IterationRecord {
  std::string part_id;
  MotionParams motion;
  MotionParams gt_motion;
  SegScores seg_start, seg_end;
  std::optional<double> recon_cd, recon_emd;
  std::optional<MotionErrors> motion_err;
  std::size_t fused_points = 0;
};

struct EpisodeState {
  PointCloud base_cloud;
  InteractabilityMap map;
  std::vector<ReconstructedPart> reconstructed;
  std::vector<AttemptLog> attempts;
  int iteration = 0;
};

struct EpisodeResult {
  EpisodeState state;
  ReconstructionResult result;
  std::vector<IterationRecord> iterations;
  EpisodeMetrics metrics;
  bool incomplete = false;
  std::string stop_reason;
  std::vector<std::string> unmoved_parts;
  std::vector<std::pair<std::string, double>> timings;
};

EpisodeResult run_episode(const ArticulatedObject& obj, const ControllerConfig& cfg = {});

std::string episode_to_json(const EpisodeResult& ep, bool include_timings = false);

}  // namespace artiscan
