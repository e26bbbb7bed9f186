#include "noma/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "noma/errors.hpp"

namespace noma {

namespace {
constexpr int kLeafSize = 8;
}

KdTree3::KdTree3(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.empty()) throw DataError("KdTree3: empty point set");
  index_.resize(points_.size());
  std::iota(index_.begin(), index_.end(), 0);
  nodes_.reserve(2 * points_.size() / kLeafSize + 2);
  root_ = build(0, static_cast<int>(points_.size()), 0);
}

int KdTree3::build(int begin, int end, int depth) {
  Node node;
  node.begin = begin;
  node.end = end;
  int id = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= kLeafSize) return id;

  // Split along the widest axis at the median.
  Vec3 lo = points_[static_cast<std::size_t>(index_[static_cast<std::size_t>(begin)])];
  Vec3 hi = lo;
  for (int i = begin; i < end; ++i) {
    const Vec3& p = points_[static_cast<std::size_t>(index_[static_cast<std::size_t>(i)])];
    lo = cwise_min(lo, p);
    hi = cwise_max(hi, p);
  }
  Vec3 extent = hi - lo;
  int axis = 0;
  if (extent.y > extent[axis]) axis = 1;
  if (extent.z > extent[axis]) axis = 2;
  if (extent[axis] <= 0.f) return id;  // all points identical: keep as leaf

  int mid = (begin + end) / 2;
  std::nth_element(index_.begin() + begin, index_.begin() + mid, index_.begin() + end,
                   [&](int a, int b) {
                     return points_[static_cast<std::size_t>(a)][axis] <
                            points_[static_cast<std::size_t>(b)][axis];
                   });
  (void)depth;
  nodes_[static_cast<std::size_t>(id)].axis = axis;
  nodes_[static_cast<std::size_t>(id)].split =
      points_[static_cast<std::size_t>(index_[static_cast<std::size_t>(mid)])][axis];
  int left = build(begin, mid, depth + 1);
  int right = build(mid, end, depth + 1);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

void KdTree3::search(int node_id, const Vec3& query, int& best, float& best_sq) const {
  const Node& node = nodes_[static_cast<std::size_t>(node_id)];
  if (node.left < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      int idx = index_[static_cast<std::size_t>(i)];
      float d = squared_norm(points_[static_cast<std::size_t>(idx)] - query);
      if (d < best_sq) {
        best_sq = d;
        best = idx;
      }
    }
    return;
  }
  float diff = query[node.axis] - node.split;
  int near = diff < 0.f ? node.left : node.right;
  int far = diff < 0.f ? node.right : node.left;
  search(near, query, best, best_sq);
  if (diff * diff < best_sq) search(far, query, best, best_sq);
}

std::pair<int, float> KdTree3::nearest(const Vec3& query) const {
  int best = -1;
  float best_sq = std::numeric_limits<float>::infinity();
  search(root_, query, best, best_sq);
  return {best, best_sq};
}

float KdTree3::nearest_distance(const Vec3& query) const {
  return std::sqrt(nearest(query).second);
}

}  // namespace noma
