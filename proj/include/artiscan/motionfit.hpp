#pragma once

#include <vector>

#include "artiscan/geometry.hpp"
#include "artiscan/model.hpp"

namespace artiscan {

struct Trajectory {
  std::vector<Vec3> samples;
  std::vector<double> timestamps;  // seconds, strictly increasing

  std::size_t size() const { return samples.size(); }
  double length() const;
};

/// `n` positions uniformly spaced by arc length along the polyline.
Trajectory resample(const Trajectory& traj, int n = 20);

struct LineFit {
  Vec3 point;
  Vec3 dir;
  double residual;  // RMS orthogonal distance
};

/// Total-least-squares line through the centroid.
LineFit fit_line(const Trajectory& traj);

struct CircleFit {
  Vec3 center;
  double radius;  // +inf for collinear samples
  Vec3 normal;
  double residual;  // RMS distance to the circle
};

/// Plane fit, algebraic circle in-plane, then Gauss-Newton refinement.
CircleFit fit_circle(const Trajectory& traj);

struct FitConfig {
  int samples = 0;  // positions spread by arc length; 0 = every recorded sample
  double radius_threshold = 1.0;  // T_r, in unit-box units
  // Significance level at which the circle must beat the line before a
  // rotation is accepted. 0 leaves the radius test alone.
  double bend_alpha = 0.01;
};

/// Classifies the motion (rotation unless the fitted radius exceeds T_r or
/// the circle fails to beat a line) and extracts axis and range.
MotionParams classify_and_extract(const Trajectory& traj, const FitConfig& cfg = {});

}  // namespace artiscan
