#include "noma/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "noma/errors.hpp"
#include "noma/kdtree.hpp"

namespace noma {

double chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.empty() || b.empty()) throw DataError("chamfer: empty cloud");
  KdTree3 tree_a(a), tree_b(b);
  double sum_ab = 0.0;
  for (const Vec3& p : a) sum_ab += tree_b.nearest_distance(p);
  double sum_ba = 0.0;
  for (const Vec3& p : b) sum_ba += tree_a.nearest_distance(p);
  return 0.5 * (sum_ab / static_cast<double>(a.size()) + sum_ba / static_cast<double>(b.size()));
}

double completion_ratio(const std::vector<Vec3>& gt, const std::vector<Vec3>& rec, double tau) {
  if (tau <= 0.0) throw UsageError("completion_ratio: tau must be positive");
  if (gt.empty()) throw DataError("completion_ratio: empty ground-truth cloud");
  if (rec.empty()) return 0.0;
  KdTree3 tree(rec);
  std::size_t covered = 0;
  for (const Vec3& p : gt)
    if (tree.nearest_distance(p) <= tau) ++covered;
  return static_cast<double>(covered) / static_cast<double>(gt.size());
}

// Shortest augmenting path with potentials; runs in O(n^3).
std::vector<int> hungarian_assignment(const std::vector<double>& cost, int n) {
  const double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, kInf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      int i0 = p[static_cast<std::size_t>(j0)], j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        double cur = cost[static_cast<std::size_t>(i0 - 1) * n + (j - 1)] -
                     u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> assignment(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j)
    if (p[static_cast<std::size_t>(j)] > 0)
      assignment[static_cast<std::size_t>(p[static_cast<std::size_t>(j)]) - 1] = j - 1;
  return assignment;
}

namespace {

std::vector<Vec3> subsample(const std::vector<Vec3>& cloud, int n_sub, std::uint64_t seed) {
  if (static_cast<int>(cloud.size()) == n_sub) return cloud;
  std::vector<int> idx(cloud.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937 rng(static_cast<std::uint32_t>(seed ^ (seed >> 32)));
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(n_sub));
  for (int i = 0; i < n_sub; ++i) out.push_back(cloud[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])]);
  return out;
}

}  // namespace

double emd(const std::vector<Vec3>& a, const std::vector<Vec3>& b, int n_sub, std::uint64_t seed) {
  if (n_sub < 1) throw UsageError("emd: n_sub must be >= 1");
  if (static_cast<int>(a.size()) < n_sub || static_cast<int>(b.size()) < n_sub)
    throw UsageError("emd: n_sub exceeds cloud size");
  std::vector<Vec3> sa = subsample(a, n_sub, seed);
  // Both sides draw with the same seed so emd(a, a, n, s) == 0 exactly.
  std::vector<Vec3> sb = subsample(b, n_sub, seed);

  const int n = n_sub;
  std::vector<double> cost(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vec3 d = sa[static_cast<std::size_t>(i)] - sb[static_cast<std::size_t>(j)];
      cost[static_cast<std::size_t>(i) * n + j] = std::sqrt(static_cast<double>(dot(d, d)));
    }
  std::vector<int> match = hungarian_assignment(cost, n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += cost[static_cast<std::size_t>(i) * n + match[static_cast<std::size_t>(i)]];
  return total / static_cast<double>(n);
}

}  // namespace noma
