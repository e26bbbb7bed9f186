#pragma once

#include <vector>

#include "noma/geom.hpp"

namespace noma {

// Static 3-d tree over a point set; nearest-neighbor queries only.
class KdTree3 {
public:
  explicit KdTree3(std::vector<Vec3> points);

  // Index and squared distance of the nearest stored point.
  std::pair<int, float> nearest(const Vec3& query) const;
  float nearest_distance(const Vec3& query) const;

  std::size_t size() const { return points_.size(); }
  const std::vector<Vec3>& points() const { return points_; }

private:
  struct Node {
    int left = -1, right = -1;
    int begin = 0, end = 0;  // leaf range into index_
    int axis = 0;
    float split = 0.f;
  };

  int build(int begin, int end, int depth);
  void search(int node, const Vec3& query, int& best, float& best_sq) const;

  std::vector<Vec3> points_;
  std::vector<int> index_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace noma
