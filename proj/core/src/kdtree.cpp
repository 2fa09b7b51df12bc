#include "bigreg/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>

#include "bigreg/error.hpp"

namespace bigreg {

namespace {

constexpr std::size_t kLeafSize = 12;

bool closer(const KdTree::Neighbor& a, const KdTree::Neighbor& b) {
  return a.sq_dist < b.sq_dist || (a.sq_dist == b.sq_dist && a.index < b.index);
}

}  // namespace

KdTree::KdTree(std::vector<double> data, int dim) : data_(std::move(data)), dim_(dim) {
  if (dim <= 0) throw InvalidArgument("KdTree: dimension must be positive");
  if (data_.size() % static_cast<std::size_t>(dim) != 0)
    throw InvalidArgument("KdTree: data length is not a multiple of the dimension");
  order_.resize(size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  if (!order_.empty()) {
    nodes_.reserve(2 * (order_.size() / kLeafSize + 1));
    build(0, order_.size());
  }
}

KdTree KdTree::from_points(std::span<const Point3> points) {
  std::vector<double> data;
  data.reserve(points.size() * 3);
  for (const auto& p : points) data.insert(data.end(), {p.x(), p.y(), p.z()});
  return KdTree(std::move(data), 3);
}

std::size_t KdTree::build(std::size_t begin, std::size_t end) {
  const std::size_t id = nodes_.size();
  nodes_.push_back(Node{});
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  if (end - begin <= kLeafSize) return id;

  // Split on the axis of largest spread at the median.
  int best_axis = 0;
  double best_spread = -1.0;
  for (int a = 0; a < dim_; ++a) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = begin; i < end; ++i) {
      const double v = data_[order_[i] * dim_ + a];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > best_spread) {
      best_spread = hi - lo;
      best_axis = a;
    }
  }
  if (best_spread <= 0.0) return id;  // all points identical

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                   order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](std::size_t a, std::size_t b) {
                     const double va = data_[a * dim_ + best_axis];
                     const double vb = data_[b * dim_ + best_axis];
                     return va < vb || (va == vb && a < b);
                   });
  const double split = data_[order_[mid] * dim_ + best_axis];
  const std::size_t left = build(begin, mid);
  const std::size_t right = build(mid, end);
  nodes_[id].axis = best_axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

double KdTree::sq_distance(std::span<const double> q, std::size_t idx) const {
  const double* p = data_.data() + idx * dim_;
  double s = 0.0;
  for (int a = 0; a < dim_; ++a) {
    const double d = q[a] - p[a];
    s += d * d;
  }
  return s;
}

// Depth-first search; `visit` offers each leaf point and reports the current
// pruning bound. Left subtree holds values <= split, right holds >= split.
template <typename Visitor>
void KdTree::search(std::span<const double> q, Visitor& visit) const {
  struct Item {
    std::size_t node;
    double plane_sq;
  };
  std::vector<Item> stack{{0, 0.0}};
  while (!stack.empty()) {
    const Item it = stack.back();
    stack.pop_back();
    if (it.plane_sq > visit.bound()) continue;
    const Node& n = nodes_[it.node];
    if (n.axis < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) visit.offer(order_[i], sq_distance(q, order_[i]));
      continue;
    }
    const double diff = q[n.axis] - n.split;
    const std::size_t near = diff <= 0.0 ? n.left : n.right;
    const std::size_t far = diff <= 0.0 ? n.right : n.left;
    stack.push_back({far, std::max(it.plane_sq, diff * diff)});
    stack.push_back({near, it.plane_sq});
  }
}

std::vector<KdTree::Neighbor> KdTree::knn(std::span<const double> query, std::size_t k) const {
  if (empty()) throw EmptyIndex("KdTree: query on empty index");
  if (k == 0) throw InvalidArgument("KdTree: k must be at least 1");
  if (query.size() != static_cast<std::size_t>(dim_))
    throw InvalidArgument("KdTree: query dimension mismatch");
  k = std::min(k, size());

  struct Visitor {
    std::size_t k;
    std::priority_queue<Neighbor, std::vector<Neighbor>, decltype(&closer)> heap{&closer};
    double bound() const {
      return heap.size() < k ? std::numeric_limits<double>::infinity() : heap.top().sq_dist;
    }
    void offer(std::size_t idx, double d) {
      const Neighbor n{idx, d};
      if (heap.size() < k) {
        heap.push(n);
      } else if (closer(n, heap.top())) {
        heap.pop();
        heap.push(n);
      }
    }
  } visitor{k};
  search(query, visitor);

  std::vector<Neighbor> out;
  out.reserve(visitor.heap.size());
  while (!visitor.heap.empty()) {
    out.push_back(visitor.heap.top());
    visitor.heap.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

KdTree::Neighbor KdTree::nearest(std::span<const double> query) const {
  if (empty()) throw EmptyIndex("KdTree: query on empty index");
  if (query.size() != static_cast<std::size_t>(dim_))
    throw InvalidArgument("KdTree: query dimension mismatch");
  struct Visitor {
    Neighbor best{0, std::numeric_limits<double>::infinity()};
    double bound() const { return best.sq_dist; }
    void offer(std::size_t idx, double d) {
      const Neighbor n{idx, d};
      if (closer(n, best)) best = n;
    }
  } visitor;
  search(query, visitor);
  return visitor.best;
}

std::vector<KdTree::Neighbor> KdTree::radius_search(std::span<const double> query, double radius,
                                                    std::size_t max_count) const {
  if (empty()) throw EmptyIndex("KdTree: query on empty index");
  if (query.size() != static_cast<std::size_t>(dim_))
    throw InvalidArgument("KdTree: query dimension mismatch");
  struct Visitor {
    double r2;
    std::vector<Neighbor> hits;
    double bound() const { return r2; }
    void offer(std::size_t idx, double d) {
      if (d <= r2) hits.push_back({idx, d});
    }
  } visitor{radius * radius, {}};
  search(query, visitor);
  auto& hits = visitor.hits;
  if (hits.size() > max_count) {
    std::nth_element(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(max_count),
                     hits.end(), closer);
    hits.resize(max_count);
  }
  std::sort(hits.begin(), hits.end(), closer);
  return hits;
}

}  // namespace bigreg
