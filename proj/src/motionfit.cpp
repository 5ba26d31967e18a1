#include "artiscan/motionfit.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "artiscan/error.hpp"

namespace artiscan {

double Trajectory::length() const {
  double len = 0.0;
  for (std::size_t i = 1; i < samples.size(); ++i) len += (samples[i] - samples[i - 1]).norm();
  return len;
}

Trajectory resample(const Trajectory& traj, int n) {
  if (traj.size() < 2) throw Error(ErrorCode::Degenerate, "trajectory needs at least 2 samples");
  if (n < 2) throw Error(ErrorCode::Range, "resample count must be at least 2");
  const bool timed = traj.timestamps.size() == traj.samples.size();
  std::vector<double> cum(traj.size(), 0.0);
  for (std::size_t i = 1; i < traj.size(); ++i)
    cum[i] = cum[i - 1] + (traj.samples[i] - traj.samples[i - 1]).norm();
  const double total = cum.back();
  if (!(total > 1e-12)) throw Error(ErrorCode::Degenerate, "trajectory has zero length");

  Trajectory out;
  out.samples.reserve(n);
  out.timestamps.reserve(n);
  std::size_t seg = 1;
  for (int k = 0; k < n; ++k) {
    if (k == 0 || k == n - 1) {
      const std::size_t i = k == 0 ? 0 : traj.size() - 1;
      out.samples.push_back(traj.samples[i]);
      out.timestamps.push_back(timed ? traj.timestamps[i] : static_cast<double>(i));
      continue;
    }
    const double target = total * k / (n - 1);
    while (seg + 1 < traj.size() && cum[seg] < target) ++seg;
    const double span = cum[seg] - cum[seg - 1];
    const double a = span > 0.0 ? (target - cum[seg - 1]) / span : 0.0;
    out.samples.push_back((1.0 - a) * traj.samples[seg - 1] + a * traj.samples[seg]);
    const double t0 = timed ? traj.timestamps[seg - 1] : static_cast<double>(seg - 1);
    const double t1 = timed ? traj.timestamps[seg] : static_cast<double>(seg);
    out.timestamps.push_back((1.0 - a) * t0 + a * t1);
  }
  return out;
}

namespace {

struct Frame {
  Vec3 centroid;
  Eigen::Matrix3d axes;  // columns sorted by decreasing variance
  Eigen::Vector3d variance;
};

Frame principal_frame(const std::vector<Vec3>& pts) {
  Frame f;
  f.centroid = Vec3::Zero();
  for (const auto& p : pts) f.centroid += p;
  f.centroid /= static_cast<double>(pts.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : pts) {
    const Vec3 d = p - f.centroid;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(pts.size());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  // Eigen returns ascending eigenvalues.
  for (int k = 0; k < 3; ++k) {
    f.axes.col(k) = es.eigenvectors().col(2 - k);
    f.variance[k] = std::max(0.0, es.eigenvalues()[2 - k]);
  }
  return f;
}

}  // namespace

LineFit fit_line(const Trajectory& traj) {
  if (traj.size() < 2) throw Error(ErrorCode::Degenerate, "line fit needs at least 2 samples");
  const Frame f = principal_frame(traj.samples);
  if (!(f.variance[0] > 1e-24)) throw Error(ErrorCode::Degenerate, "all trajectory samples coincide");
  Vec3 dir = f.axes.col(0).normalized();
  if ((traj.samples.back() - traj.samples.front()).dot(dir) < 0.0) dir = -dir;
  double ss = 0.0;
  for (const auto& p : traj.samples) {
    const double d = point_line_distance(p, f.centroid, dir);
    ss += d * d;
  }
  return LineFit{f.centroid, dir, std::sqrt(ss / static_cast<double>(traj.size()))};
}

CircleFit fit_circle(const Trajectory& traj) {
  if (traj.size() < 3) throw Error(ErrorCode::Degenerate, "circle fit needs at least 3 samples");
  const Frame f = principal_frame(traj.samples);
  CircleFit out{f.centroid, kInf, f.axes.col(2).normalized(), kInf};
  // Collinear (or coincident) samples have no second principal direction.
  if (!(f.variance[1] > 1e-20 + 1e-14 * f.variance[0])) return out;

  const Vec3 e1 = f.axes.col(0).normalized();
  Vec3 e2 = f.axes.col(1).normalized();
  Vec3 normal = e1.cross(e2).normalized();
  const std::size_t n = traj.size();
  std::vector<Eigen::Vector2d> q(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 d = traj.samples[i] - f.centroid;
    q[i] = {d.dot(e1), d.dot(e2)};
  }

  // Algebraic (Kasa) fit: x^2 + y^2 + D x + E y + F = 0.
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a(i, 0) = q[i].x();
    a(i, 1) = q[i].y();
    a(i, 2) = 1.0;
    b(i) = -q[i].squaredNorm();
  }
  const Eigen::Vector3d sol = a.colPivHouseholderQr().solve(b);
  Eigen::Vector2d c(-0.5 * sol[0], -0.5 * sol[1]);
  double r2 = c.squaredNorm() - sol[2];
  if (!(r2 > 0.0) || !std::isfinite(r2)) return out;
  double r = std::sqrt(r2);

  // Geometric refinement (Gauss-Newton on |q - c| - r).
  for (int iter = 0; iter < 50; ++iter) {
    Eigen::MatrixXd jac(n, 3);
    Eigen::VectorXd res(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::Vector2d d = q[i] - c;
      const double dist = d.norm();
      if (dist < 1e-15) return out;
      res(i) = dist - r;
      jac(i, 0) = -d.x() / dist;
      jac(i, 1) = -d.y() / dist;
      jac(i, 2) = -1.0;
    }
    const Eigen::Vector3d step = jac.colPivHouseholderQr().solve(-res);
    c += step.head<2>();
    r += step[2];
    if (step.norm() < 1e-15 * (1.0 + r)) break;
  }
  if (!(r > 0.0) || !std::isfinite(r)) return out;

  // Orient the normal so the sweep from first to last sample is positive.
  double sweep = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    const Eigen::Vector2d u = q[i - 1] - c, v = q[i] - c;
    sweep += std::atan2(u.x() * v.y() - u.y() * v.x(), u.dot(v));
  }
  if (sweep < 0.0) normal = -normal;

  out.center = f.centroid + c.x() * e1 + c.y() * e2;
  out.radius = r;
  out.normal = normal;
  double ss = 0.0;
  for (const auto& p : traj.samples) {
    const Vec3 d = p - out.center;
    const double h = d.dot(normal);
    const double rho = (d - h * normal).norm();
    ss += h * h + (rho - r) * (rho - r);
  }
  out.residual = std::sqrt(ss / static_cast<double>(n));
  return out;
}

namespace {

// Recorded samples closest to n uniform arc-length positions. Unlike
// interpolation this keeps every point on the travelled path, so noiseless
// arcs fit exactly. Falls back to resampling for sparse recordings.
Trajectory pick_uniform(const Trajectory& traj, int n) {
  if (traj.size() <= static_cast<std::size_t>(n)) return resample(traj, n);
  std::vector<double> cum(traj.size(), 0.0);
  for (std::size_t i = 1; i < traj.size(); ++i)
    cum[i] = cum[i - 1] + (traj.samples[i] - traj.samples[i - 1]).norm();
  Trajectory out;
  std::size_t j = 0;
  for (int k = 0; k < n; ++k) {
    const double target = cum.back() * k / (n - 1);
    while (j + 1 < cum.size() && std::abs(cum[j + 1] - target) <= std::abs(cum[j] - target)) ++j;
    if (!out.samples.empty() && out.samples.back() == traj.samples[j]) continue;
    out.samples.push_back(traj.samples[j]);
    out.timestamps.push_back(j < traj.timestamps.size() ? traj.timestamps[j] : static_cast<double>(j));
  }
  if (out.size() < 3) return resample(traj, n);
  return out;
}

}  // namespace

MotionParams classify_and_extract(const Trajectory& traj, const FitConfig& cfg) {
  if (cfg.samples != 0 && cfg.samples < 3)
    throw Error(ErrorCode::Range, "classification needs at least 3 resampled points");
  if (!(cfg.bend_alpha >= 0.0 && cfg.bend_alpha < 1.0)) throw Error(ErrorCode::Range, "bend_alpha must lie in [0, 1)");
  Trajectory rs;
  try {
    if (cfg.samples > 0)
      rs = pick_uniform(traj, cfg.samples);
    else
      rs = traj.size() >= 3 ? traj : resample(traj, 3);
  } catch (const Error& e) {
    throw Error(ErrorCode::Unfittable, e.what());
  }
  const CircleFit circle = fit_circle(rs);
  LineFit line;
  try {
    line = fit_line(rs);
  } catch (const Error& e) {
    if (circle.radius > cfg.radius_threshold) throw Error(ErrorCode::Unfittable, e.what());
    line.residual = kInf;
  }
  // Nested-model F-test, circle (6 parameters) against line (4), with two
  // residual dimensions per sample. For 2 extra parameters the F tail is
  // (1 + 2f/m)^(-m/2), so the critical residual-sum ratio is alpha^(-2/m).
  bool bent = true;
  const double m_dof = 2.0 * static_cast<double>(rs.size()) - 6.0;
  if (cfg.bend_alpha > 0.0 && m_dof > 0.0) {
    const double ratio = std::pow(cfg.bend_alpha, -2.0 / m_dof);
    bent = line.residual * line.residual > ratio * circle.residual * circle.residual;
  }
  MotionParams m;
  if (circle.radius > cfg.radius_threshold || !bent) {
    m.kind = MotionKind::Translation;
    m.axis_dir = line.dir;
    const Vec3 s = rs.samples.front() - line.point;
    m.axis_point = line.point + s.dot(line.dir) * line.dir;
    m.range = (rs.samples.back() - rs.samples.front()).norm();
    return m;
  }
  m.kind = MotionKind::Rotation;
  m.axis_point = circle.center;
  m.axis_dir = circle.normal;
  double sweep = 0.0;
  for (std::size_t i = 1; i < rs.size(); ++i) {
    const Vec3 u = rs.samples[i - 1] - circle.center, v = rs.samples[i] - circle.center;
    sweep += std::atan2(u.cross(v).dot(circle.normal), u.dot(v));
  }
  m.range = std::abs(sweep);
  return m;
}

}  // namespace artiscan
