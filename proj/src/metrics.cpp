#include "artiscan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <json.hpp>
#include <limits>
#include <set>

#include "artiscan/error.hpp"
#include "artiscan/io.hpp"
#include "artiscan/kdtree.hpp"

namespace artiscan {

namespace {

void require_nonempty(std::span<const Vec3> a, std::span<const Vec3> b, const char* what) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyInput, std::string(what) + " needs non-empty inputs");
}

double mean_nn(std::span<const Vec3> from, const KdTree& to, bool squared) {
  double sum = 0.0;
  for (const auto& p : from) {
    const double d2 = to.nearest(p).dist2;
    sum += squared ? d2 : std::sqrt(d2);
  }
  return sum / static_cast<double>(from.size());
}

double chamfer_impl(std::span<const Vec3> a, std::span<const Vec3> b, bool squared) {
  require_nonempty(a, b, "chamfer");
  const KdTree ta(a), tb(b);
  return mean_nn(a, tb, squared) + mean_nn(b, ta, squared);
}

void require_same_size(std::span<const Vec3> a, std::span<const Vec3> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::SizeMismatch, "EMD needs equal-size point sets");
}

}  // namespace

double chamfer(std::span<const Vec3> a, std::span<const Vec3> b) { return chamfer_impl(a, b, true); }
double chamfer(const PointCloud& a, const PointCloud& b) { return chamfer(a.points, b.points); }
double chamfer_unsquared(std::span<const Vec3> a, std::span<const Vec3> b) {
  return chamfer_impl(a, b, false);
}

double emd_exact(std::span<const Vec3> a, std::span<const Vec3> b) {
  require_same_size(a, b);
  const std::size_t n = a.size();
  if (n == 0) return 0.0;
  // Hungarian method with potentials, 1-based (rows = a, columns = b).
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = (a[i] - b[j]).norm();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (std::size_t j = 1; j <= n; ++j) total += cost[(match[j] - 1) * n + (j - 1)];
  return total / static_cast<double>(n);
}

double emd_auction(std::span<const Vec3> a, std::span<const Vec3> b, double eps) {
  require_same_size(a, b);
  if (!(eps > 0.0)) throw Error(ErrorCode::Range, "auction epsilon must be positive");
  const std::size_t n = a.size();
  if (n == 0) return 0.0;
  if (n == 1) return (a[0] - b[0]).norm();
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  double max_cost = 0.0;
  const Aabb ba = bounds_of(a), bb = bounds_of(b);
  {
    Aabb all = ba;
    all.extend(bb);
    max_cost = all.extent().norm();
  }
  // Final epsilon: total cost within n*eps_final of optimal, so the mean is
  // within eps_final; a small safety factor absorbs rounding.
  const double eps_final = 0.9 * eps;
  std::vector<double> price(n, 0.0);
  std::vector<std::size_t> owner(n, kNone), assigned(n, kNone);
  double e = std::max(max_cost / 4.0, eps_final);
  while (true) {
    std::fill(owner.begin(), owner.end(), kNone);
    std::fill(assigned.begin(), assigned.end(), kNone);
    std::deque<std::size_t> queue;
    for (std::size_t i = 0; i < n; ++i) queue.push_back(i);
    while (!queue.empty()) {
      const std::size_t i = queue.front();
      queue.pop_front();
      // Maximize -(cost + price).
      double best = -kInf, second = -kInf;
      std::size_t best_j = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const double val = -(a[i] - b[j]).norm() - price[j];
        if (val > best) {
          second = best;
          best = val;
          best_j = j;
        } else if (val > second) {
          second = val;
        }
      }
      price[best_j] += (best - second) + e;
      if (owner[best_j] != kNone) {
        assigned[owner[best_j]] = kNone;
        queue.push_back(owner[best_j]);
      }
      owner[best_j] = i;
      assigned[i] = best_j;
    }
    if (e <= eps_final) break;
    e = std::max(e / 5.0, eps_final);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += (a[i] - b[assigned[i]]).norm();
  return total / static_cast<double>(n);
}

double emd(std::span<const Vec3> a, std::span<const Vec3> b) {
  require_same_size(a, b);
  return a.size() <= kEmdExactLimit ? emd_exact(a, b) : emd_auction(a, b);
}
double emd(const PointCloud& a, const PointCloud& b) { return emd(a.points, b.points); }

double hausdorff(std::span<const Vec3> a, std::span<const Vec3> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyInput, "Hausdorff distance needs non-empty sets");
  const KdTree ta(a), tb(b);
  double d = 0.0;
  for (const auto& p : a) d = std::max(d, tb.nearest_distance(p));
  for (const auto& p : b) d = std::max(d, ta.nearest_distance(p));
  return d;
}

HausdorffResult hausdorff_map(const TriMesh& pred, const TriMesh& gt, std::size_t n, std::uint64_t seed) {
  if (pred.empty() || gt.empty()) throw Error(ErrorCode::EmptyInput, "Hausdorff map needs non-empty meshes");
  if (n == 0) throw Error(ErrorCode::Range, "sample count must be positive");
  // One seed for both meshes: identical meshes then give identical samples.
  const PointCloud sp = sample_surface(pred, n, seed);
  const PointCloud sg = sample_surface(gt, n, seed);
  const KdTree tp(sp.points);
  HausdorffResult h;
  h.per_vertex.reserve(gt.vertices.size());
  for (const auto& v : gt.vertices) h.per_vertex.push_back(tp.nearest_distance(v));
  double sum = 0.0;
  for (const auto& p : sg.points) sum += tp.nearest_distance(p);
  h.max = hausdorff(sp.points, sg.points);
  h.mean = sum / static_cast<double>(sg.size());
  return h;
}

std::string hausdorff_to_csv(const TriMesh& gt, const HausdorffResult& h) {
  if (h.per_vertex.size() != gt.vertices.size())
    throw Error(ErrorCode::SizeMismatch, "distance map does not match the mesh");
  std::string out = "x,y,z,distance\n";
  for (std::size_t i = 0; i < gt.vertices.size(); ++i) {
    const Vec3& v = gt.vertices[i];
    out += format_double(v.x()) + ',' + format_double(v.y()) + ',' + format_double(v.z()) + ',' +
           format_double(h.per_vertex[i]) + '\n';
  }
  return out;
}

SegScores seg_metrics(std::span<const int> pred, std::span<const int> gt) {
  if (pred.size() != gt.size()) throw Error(ErrorCode::SizeMismatch, "label sequences differ in length");
  if (gt.empty()) throw Error(ErrorCode::EmptyInput, "no labels to score");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) hits += pred[i] == gt[i];
  const std::set<int> classes(gt.begin(), gt.end());
  double iou_sum = 0.0;
  for (int c : classes) {
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      const bool p = pred[i] == c, g = gt[i] == c;
      inter += p && g;
      uni += p || g;
    }
    iou_sum += static_cast<double>(inter) / static_cast<double>(uni);
  }
  return {static_cast<double>(hits) / static_cast<double>(gt.size()),
          iou_sum / static_cast<double>(classes.size())};
}

double action_accuracy(int moved, int attempts) {
  if (attempts == 0) throw Error(ErrorCode::Undefined, "action accuracy is undefined without attempts");
  if (moved < 0 || attempts < 0 || moved > attempts)
    throw Error(ErrorCode::Range, "need 0 <= moved <= attempts");
  return static_cast<double>(moved) / static_cast<double>(attempts);
}

double line_distance(const Vec3& p1, const Vec3& d1, const Vec3& p2, const Vec3& d2) {
  const Vec3 u = d1.normalized(), v = d2.normalized();
  const Vec3 c = u.cross(v);
  const double s = c.norm();
  if (s < 1e-9) return point_line_distance(p2, p1, u);
  return std::abs((p2 - p1).dot(c)) / s;
}

MotionErrors motion_errors(const MotionParams& pred, const MotionParams& gt) {
  if (pred.kind != gt.kind) throw Error(ErrorCode::Range, "motion kinds differ");
  MotionErrors e;
  const double c = std::abs(pred.axis_dir.normalized().dot(gt.axis_dir.normalized()));
  e.dir = 1.0 - std::min(1.0, c);
  if (gt.kind == MotionKind::Rotation)
    e.pos = line_distance(pred.axis_point, pred.axis_dir, gt.axis_point, gt.axis_dir);
  return e;
}

namespace {

using Field = std::optional<double> EpisodeMetrics::*;
constexpr std::pair<const char*, Field> kFields[] = {
    {"A_action", &EpisodeMetrics::a_action},       {"mIoU_start", &EpisodeMetrics::miou_start},
    {"mIoU_end", &EpisodeMetrics::miou_end},       {"A_seg_start", &EpisodeMetrics::a_seg_start},
    {"A_seg_end", &EpisodeMetrics::a_seg_end},     {"E_recon_cd", &EpisodeMetrics::recon_cd},
    {"E_recon_emd", &EpisodeMetrics::recon_emd},   {"E_mo_dir", &EpisodeMetrics::mo_dir},
    {"E_mo_pos", &EpisodeMetrics::mo_pos},
};

}  // namespace

std::string metrics_to_json(const EpisodeMetrics& m) {
  nlohmann::ordered_json j;
  for (const auto& [name, field] : kFields) {
    if ((m.*field).has_value())
      j[name] = *(m.*field);
    else
      j[name] = nullptr;
  }
  return j.dump(2);
}

EpisodeMetrics average(std::span<const EpisodeMetrics> rows) {
  EpisodeMetrics out;
  for (const auto& [name, field] : kFields) {
    double sum = 0.0;
    int count = 0;
    for (const auto& r : rows) {
      if (!(r.*field)) continue;
      sum += *(r.*field);
      ++count;
    }
    if (count > 0) out.*field = sum / count;
  }
  return out;
}

std::string metrics_csv_row(const std::string& category, const EpisodeMetrics& m) {
  std::string row = category;
  for (const auto& [name, field] : kFields) {
    row += ',';
    if (m.*field) row += format_double(*(m.*field));
  }
  return row;
}

}  // namespace artiscan
