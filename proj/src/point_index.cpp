#include "stview/point_index.hpp"

#include <algorithm>
#include <limits>
#include <queue>

namespace stview {

namespace {

bool closer(const Neighbor& a, const Neighbor& b) {
  return a.distance_sq < b.distance_sq || (a.distance_sq == b.distance_sq && a.index < b.index);
}

double squared_distance(const Point3& a, const Point3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace

KdTree::KdTree(std::span<const Point3> points, int leaf_size)
    : points_(points), leaf_size_(std::max(leaf_size, 1)) {
  order_.resize(points.size());
  for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
  if (!order_.empty()) build(0, static_cast<std::uint32_t>(order_.size()));
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({begin, end});
  if (end - begin <= static_cast<std::uint32_t>(leaf_size_)) return id;

  Eigen::Vector3d lo = points_[order_[begin]];
  Eigen::Vector3d hi = lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return points_[a][axis] < points_[b][axis];
                   });
  const double split = points_[order_[mid]][axis];
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  Node& node = nodes_[id];
  node.axis = axis;
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

std::vector<Neighbor> KdTree::search(const Point3& query, int k, std::int64_t skip) const {
  std::vector<Neighbor> result;
  if (k <= 0 || nodes_.empty()) return result;
  // Max-heap on (distance, index) holding the current best k.
  std::priority_queue<Neighbor, std::vector<Neighbor>, decltype(&closer)> heap(&closer);
  auto worst = [&]() {
    return static_cast<int>(heap.size()) < k ? std::numeric_limits<double>::infinity()
                                              : heap.top().distance_sq;
  };

  struct Pending {
    std::int32_t node;
    double bound;
  };
  std::vector<Pending> stack{{0, 0.0}};
  while (!stack.empty()) {
    const Pending p = stack.back();
    stack.pop_back();
    if (p.bound > worst()) continue;
    const Node& node = nodes_[p.node];
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const std::uint32_t idx = order_[i];
        if (static_cast<std::int64_t>(idx) == skip) continue;
        const Neighbor cand{squared_distance(query, points_[idx]), idx};
        if (static_cast<int>(heap.size()) < k) {
          heap.push(cand);
        } else if (closer(cand, heap.top())) {
          heap.pop();
          heap.push(cand);
        }
      }
      continue;
    }
    const double diff = query[node.axis] - node.split;
    const std::int32_t near = diff < 0.0 ? node.left : node.right;
    const std::int32_t far = diff < 0.0 ? node.right : node.left;
    // Points equal to the split value may sit on either side, so the far
    // bound is diff² and ties (bound == worst) are still visited.
    stack.push_back({far, std::max(p.bound, diff * diff)});
    stack.push_back({near, p.bound});
  }
  result.resize(heap.size());
  for (std::size_t i = result.size(); i-- > 0;) {
    result[i] = heap.top();
    heap.pop();
  }
  return result;
}

std::vector<Neighbor> KdTree::knn_excluding(std::uint32_t query_index, int k) const {
  return search(points_[query_index], k, query_index);
}

std::vector<Neighbor> KdTree::knn(const Point3& query, int k) const {
  return search(query, k, -1);
}

}  // namespace stview
