#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "artiscan/geometry.hpp"

namespace artiscan {

/// Exact nearest-neighbour index over a fixed point set (owns a copy).
class KdTree {
 public:
  struct Hit {
    std::size_t index = 0;
    double dist2 = kInf;
  };

  KdTree() = default;
  explicit KdTree(std::span<const Vec3> points);

  bool empty() const { return points_.empty(); }
  std::size_t size() const { return points_.size(); }

  /// Nearest point; ties resolve to the lowest index.
  Hit nearest(const Vec3& q) const;
  double nearest_distance(const Vec3& q) const;
  std::vector<std::size_t> radius(const Vec3& q, double r) const;
  std::vector<Hit> knn(const Vec3& q, std::size_t k) const;

 private:
  struct Node {
    int axis = -1;  // -1: leaf
    double split = 0.0;
    int left = -1, right = -1;
    std::size_t begin = 0, end = 0;
  };

  int build(std::size_t begin, std::size_t end, int depth);
  void nearest_rec(int node, const Vec3& q, Hit& best) const;
  void radius_rec(int node, const Vec3& q, double r2, std::vector<std::size_t>& out) const;
  void knn_rec(int node, const Vec3& q, std::size_t k, std::vector<Hit>& heap) const;

  std::vector<Vec3> points_;
  std::vector<std::size_t> index_;
  std::vector<Node> nodes_;
};

}  // namespace artiscan
