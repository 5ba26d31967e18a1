#include "artiscan/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace artiscan {

namespace {
constexpr std::size_t kLeafSize = 12;

bool better(const KdTree::Hit& a, const KdTree::Hit& b) {
  return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
}
}  // namespace

KdTree::KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
  index_.resize(points_.size());
  std::iota(index_.begin(), index_.end(), std::size_t{0});
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 1);
    build(0, points_.size(), 0);
  }
}

int KdTree::build(std::size_t begin, std::size_t end, int depth) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{});
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  if (end - begin <= kLeafSize) return id;

  Aabb box;
  for (std::size_t i = begin; i < end; ++i) box.extend(points_[index_[i]]);
  int axis = 0;
  box.extent().maxCoeff(&axis);
  if (box.extent()[axis] <= 0.0) return id;  // all coincident

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(index_.begin() + begin, index_.begin() + mid, index_.begin() + end,
                   [&](std::size_t a, std::size_t b) {
                     const double pa = points_[a][axis], pb = points_[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  const double split = points_[index_[mid]][axis];
  const int left = build(begin, mid, depth + 1);
  const int right = build(mid, end, depth + 1);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree::nearest_rec(int node, const Vec3& q, Hit& best) const {
  const Node& n = nodes_[node];
  if (n.axis < 0) {
    for (std::size_t i = n.begin; i < n.end; ++i) {
      const Hit h{index_[i], (points_[index_[i]] - q).squaredNorm()};
      if (better(h, best)) best = h;
    }
    return;
  }
  const double diff = q[n.axis] - n.split;
  const int first = diff < 0 ? n.left : n.right;
  const int second = diff < 0 ? n.right : n.left;
  nearest_rec(first, q, best);
  if (diff * diff <= best.dist2) nearest_rec(second, q, best);
}

KdTree::Hit KdTree::nearest(const Vec3& q) const {
  Hit best;
  if (!nodes_.empty()) nearest_rec(0, q, best);
  return best;
}

double KdTree::nearest_distance(const Vec3& q) const { return std::sqrt(nearest(q).dist2); }

void KdTree::radius_rec(int node, const Vec3& q, double r2, std::vector<std::size_t>& out) const {
  const Node& n = nodes_[node];
  if (n.axis < 0) {
    for (std::size_t i = n.begin; i < n.end; ++i)
      if ((points_[index_[i]] - q).squaredNorm() <= r2) out.push_back(index_[i]);
    return;
  }
  const double diff = q[n.axis] - n.split;
  const int first = diff < 0 ? n.left : n.right;
  const int second = diff < 0 ? n.right : n.left;
  radius_rec(first, q, r2, out);
  if (diff * diff <= r2) radius_rec(second, q, r2, out);
}

std::vector<std::size_t> KdTree::radius(const Vec3& q, double r) const {
  std::vector<std::size_t> out;
  if (!nodes_.empty()) radius_rec(0, q, r * r, out);
  std::sort(out.begin(), out.end());
  return out;
}

void KdTree::knn_rec(int node, const Vec3& q, std::size_t k, std::vector<Hit>& heap) const {
  const Node& n = nodes_[node];
  if (n.axis < 0) {
    for (std::size_t i = n.begin; i < n.end; ++i) {
      const Hit h{index_[i], (points_[index_[i]] - q).squaredNorm()};
      if (heap.size() < k) {
        heap.push_back(h);
        std::push_heap(heap.begin(), heap.end(), better);
      } else if (better(h, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), better);
        heap.back() = h;
        std::push_heap(heap.begin(), heap.end(), better);
      }
    }
    return;
  }
  const double diff = q[n.axis] - n.split;
  const int first = diff < 0 ? n.left : n.right;
  const int second = diff < 0 ? n.right : n.left;
  knn_rec(first, q, k, heap);
  if (heap.size() < k || diff * diff <= heap.front().dist2) knn_rec(second, q, k, heap);
}

std::vector<KdTree::Hit> KdTree::knn(const Vec3& q, std::size_t k) const {
  std::vector<Hit> heap;
  if (nodes_.empty() || k == 0) return heap;
  heap.reserve(k);
  knn_rec(0, q, k, heap);
  std::sort_heap(heap.begin(), heap.end(), better);
  return heap;
}

}  // namespace artiscan
