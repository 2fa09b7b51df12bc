#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bigreg/transform.hpp"

namespace bigreg {

/// Balanced k-d tree over n points of any fixed dimension (3-D positions,
/// 33-D descriptors). Queries are exact; ties in distance are broken by
/// the lower point index so results match a linear scan.
class KdTree {
 public:
  struct Neighbor {
    std::size_t index;
    double sq_dist;
  };

  KdTree() = default;
  /// `data` is row-major n x dim.
  KdTree(std::vector<double> data, int dim);
  static KdTree from_points(std::span<const Point3> points);

  int dim() const { return dim_; }
  std::size_t size() const { return dim_ ? data_.size() / dim_ : 0; }
  bool empty() const { return size() == 0; }
  std::span<const double> point(std::size_t i) const {
    return {data_.data() + i * dim_, static_cast<std::size_t>(dim_)};
  }

  /// k nearest, ascending by distance. Throws EmptyIndex on an empty tree,
  /// InvalidArgument when k == 0 or the query has the wrong dimension.
  std::vector<Neighbor> knn(std::span<const double> query, std::size_t k) const;
  Neighbor nearest(std::span<const double> query) const;
  Neighbor nearest(const Point3& query) const {
    return nearest(std::span<const double>(query.data(), 3));
  }
  std::vector<Neighbor> knn(const Point3& query, std::size_t k) const {
    return knn(std::span<const double>(query.data(), 3), k);
  }

  /// Points with distance <= radius, nearest first, at most `max_count`.
  std::vector<Neighbor> radius_search(std::span<const double> query, double radius,
                                      std::size_t max_count) const;
  std::vector<Neighbor> radius_search(const Point3& query, double radius,
                                      std::size_t max_count) const {
    return radius_search(std::span<const double>(query.data(), 3), radius, max_count);
  }

 private:
  struct Node {
    // Leaf when axis < 0: points order_[begin, end).
    int axis = -1;
    double split = 0.0;
    std::size_t begin = 0, end = 0;
    std::size_t left = 0, right = 0;
  };

  std::size_t build(std::size_t begin, std::size_t end);
  double sq_distance(std::span<const double> q, std::size_t idx) const;
  template <typename Visitor>
  void search(std::span<const double> q, Visitor& visit) const;

  std::vector<double> data_;
  int dim_ = 0;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace bigreg
