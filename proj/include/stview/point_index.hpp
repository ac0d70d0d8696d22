#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stview/geometry.hpp"

namespace stview {

struct Neighbor {
  double distance_sq = 0.0;
  std::uint32_t index = 0;
};

/// Static 3-d tree over a borrowed point array. Queries are exact.
class KdTree {
 public:
  explicit KdTree(std::span<const Point3> points, int leaf_size = 16);

  /// The k nearest points to points[query_index], excluding that point
  /// itself, sorted by ascending distance (ties by index).
  std::vector<Neighbor> knn_excluding(std::uint32_t query_index, int k) const;
  std::vector<Neighbor> knn(const Point3& query, int k) const;

 private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int axis = 0;
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  std::vector<Neighbor> search(const Point3& query, int k, std::int64_t skip) const;

  std::span<const Point3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  int leaf_size_;
};

}  // namespace stview
