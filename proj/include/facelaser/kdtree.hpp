#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <utility>
#include <vector>

namespace facelaser {

/// Static 3D k-d tree over a point array. Holds indices only; the caller keeps
/// the positions alive and unchanged for the lifetime of the tree.
class KdTree {
 public:
  KdTree() = default;

  explicit KdTree(const std::vector<Eigen::Vector3d>& points, std::size_t leaf_size = 12)
      : points_(&points), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
    index_.resize(points.size());
    std::iota(index_.begin(), index_.end(), std::uint32_t{0});
    if (!points.empty()) {
      nodes_.reserve(2 * points.size() / leaf_size_ + 2);
      build(0, static_cast<std::uint32_t>(points.size()));
    }
  }

  [[nodiscard]] std::size_t size() const { return index_.size(); }
  [[nodiscard]] bool empty() const { return index_.empty(); }

  /// Index and squared distance of the nearest point; index == npos when empty.
  [[nodiscard]] std::pair<std::size_t, double> nearest(const Eigen::Vector3d& q) const {
    std::size_t best = npos;
    double best_d2 = std::numeric_limits<double>::infinity();
    if (!nodes_.empty()) nearest_rec(0, q, best, best_d2);
    return {best, best_d2};
  }

  /// k nearest neighbours sorted by increasing distance (ties by index).
  [[nodiscard]] std::vector<std::pair<double, std::size_t>> knn(const Eigen::Vector3d& q,
                                                                std::size_t k) const {
    std::priority_queue<std::pair<double, std::size_t>> heap;
    if (!nodes_.empty() && k > 0) knn_rec(0, q, k, heap);
    std::vector<std::pair<double, std::size_t>> out;
    out.reserve(heap.size());
    while (!heap.empty()) {
      out.push_back(heap.top());
      heap.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

  /// Indices within `radius` of q, in ascending index order.
  [[nodiscard]] std::vector<std::size_t> radius_search(const Eigen::Vector3d& q, double radius) const {
    std::vector<std::size_t> out;
    if (!nodes_.empty()) radius_rec(0, q, radius * radius, out);
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Point with the smallest ray parameter t >= 0 among those whose
  /// perpendicular distance to the ray is at most `radius`.
  /// Returns {index, t}; index == npos when nothing qualifies.
  [[nodiscard]] std::pair<std::size_t, double> ray_first(const Eigen::Vector3d& origin,
                                                         const Eigen::Vector3d& dir, double radius,
                                                         double max_t) const {
    std::size_t best = npos;
    double best_t = max_t;
    if (!nodes_.empty()) ray_rec(0, origin, dir, radius, best, best_t);
    return {best, best_t};
  }

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

 private:
  struct Node {
    Eigen::Vector3d lo;
    Eigen::Vector3d hi;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
  };

  const Eigen::Vector3d& pt(std::uint32_t i) const { return (*points_)[i]; }

  std::int32_t build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({});
    Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector3d hi = -lo;
    for (std::uint32_t i = begin; i < end; ++i) {
      lo = lo.cwiseMin(pt(index_[i]));
      hi = hi.cwiseMax(pt(index_[i]));
    }
    nodes_[id].lo = lo;
    nodes_[id].hi = hi;
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    if (end - begin <= leaf_size_) return id;

    Eigen::Index axis = 0;
    (hi - lo).maxCoeff(&axis);
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(index_.begin() + begin, index_.begin() + mid, index_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                       const double va = pt(a)[axis];
                       const double vb = pt(b)[axis];
                       return va < vb || (va == vb && a < b);
                     });
    const std::int32_t l = build(begin, mid);
    const std::int32_t r = build(mid, end);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  static double box_dist2(const Node& n, const Eigen::Vector3d& q) {
    const Eigen::Vector3d d = (n.lo - q).cwiseMax(q - n.hi).cwiseMax(0.0);
    return d.squaredNorm();
  }

  void nearest_rec(std::int32_t id, const Eigen::Vector3d& q, std::size_t& best, double& best_d2) const {
    const Node& n = nodes_[id];
    if (box_dist2(n, q) > best_d2) return;
    if (n.left < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const std::uint32_t idx = index_[i];
        const double d2 = (pt(idx) - q).squaredNorm();
        if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
          best_d2 = d2;
          best = idx;
        }
      }
      return;
    }
    const double dl = box_dist2(nodes_[n.left], q);
    const double dr = box_dist2(nodes_[n.right], q);
    if (dl <= dr) {
      nearest_rec(n.left, q, best, best_d2);
      nearest_rec(n.right, q, best, best_d2);
    } else {
      nearest_rec(n.right, q, best, best_d2);
      nearest_rec(n.left, q, best, best_d2);
    }
  }

  void knn_rec(std::int32_t id, const Eigen::Vector3d& q, std::size_t k,
               std::priority_queue<std::pair<double, std::size_t>>& heap) const {
    const Node& n = nodes_[id];
    if (heap.size() == k && box_dist2(n, q) > heap.top().first) return;
    if (n.left < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const std::pair<double, std::size_t> cand{(pt(index_[i]) - q).squaredNorm(), index_[i]};
        if (heap.size() < k) {
          heap.push(cand);
        } else if (cand < heap.top()) {
          heap.pop();
          heap.push(cand);
        }
      }
      return;
    }
    const double dl = box_dist2(nodes_[n.left], q);
    const double dr = box_dist2(nodes_[n.right], q);
    const std::int32_t first = dl <= dr ? n.left : n.right;
    const std::int32_t second = dl <= dr ? n.right : n.left;
    knn_rec(first, q, k, heap);
    knn_rec(second, q, k, heap);
  }

  void radius_rec(std::int32_t id, const Eigen::Vector3d& q, double r2, std::vector<std::size_t>& out) const {
    const Node& n = nodes_[id];
    if (box_dist2(n, q) > r2) return;
    if (n.left < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        if ((pt(index_[i]) - q).squaredNorm() <= r2) out.push_back(index_[i]);
      }
      return;
    }
    radius_rec(n.left, q, r2, out);
    radius_rec(n.right, q, r2, out);
  }

  // Entry parameter of the ray into the node box inflated by `radius`;
  // infinity when the ray misses it.
  static double slab_entry(const Node& n, const Eigen::Vector3d& o, const Eigen::Vector3d& d, double radius) {
    double t0 = 0.0;
    double t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
      const double lo = n.lo[a] - radius;
      const double hi = n.hi[a] + radius;
      if (std::abs(d[a]) < 1e-300) {
        if (o[a] < lo || o[a] > hi) return std::numeric_limits<double>::infinity();
        continue;
      }
      double ta = (lo - o[a]) / d[a];
      double tb = (hi - o[a]) / d[a];
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      if (t0 > t1) return std::numeric_limits<double>::infinity();
    }
    return t0;
  }

  void ray_rec(std::int32_t id, const Eigen::Vector3d& o, const Eigen::Vector3d& d, double radius,
               std::size_t& best, double& best_t) const {
    const Node& n = nodes_[id];
    const double entry = slab_entry(n, o, d, radius);
    if (entry > best_t) return;
    if (n.left < 0) {
      const double r2 = radius * radius;
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const std::uint32_t idx = index_[i];
        const Eigen::Vector3d rel = pt(idx) - o;
        const double t = rel.dot(d);
        if (t < 0.0 || t > best_t) continue;
        if ((rel - t * d).squaredNorm() > r2) continue;
        if (t < best_t || (t == best_t && idx < best)) {
          best_t = t;
          best = idx;
        }
      }
      return;
    }
    const double el = slab_entry(nodes_[n.left], o, d, radius);
    const double er = slab_entry(nodes_[n.right], o, d, radius);
    if (el <= er) {
      ray_rec(n.left, o, d, radius, best, best_t);
      ray_rec(n.right, o, d, radius, best, best_t);
    } else {
      ray_rec(n.right, o, d, radius, best, best_t);
      ray_rec(n.left, o, d, radius, best, best_t);
    }
  }

  const std::vector<Eigen::Vector3d>* points_ = nullptr;
  std::size_t leaf_size_ = 12;
  std::vector<std::uint32_t> index_;
  std::vector<Node> nodes_;
};

}  // namespace facelaser
