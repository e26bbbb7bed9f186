#include "noma/icp.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "noma/errors.hpp"
#include "noma/kdtree.hpp"

namespace noma {
namespace {

Eigen::Vector3d to_eigen(const Vec3& v) { return {v.x, v.y, v.z}; }

}  // namespace

Pose rigid_align(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.size() != b.size() || a.size() < 3)
    throw DataError("rigid_align: needs >= 3 paired points");
  Eigen::Vector3d ca = Eigen::Vector3d::Zero(), cb = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca += to_eigen(a[i]);
    cb += to_eigen(b[i]);
  }
  ca /= static_cast<double>(a.size());
  cb /= static_cast<double>(a.size());
  Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < a.size(); ++i)
    H += (to_eigen(a[i]) - ca) * (to_eigen(b[i]) - cb).transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d U = svd.matrixU(), V = svd.matrixV();
  Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
  D(2, 2) = (V * U.transpose()).determinant() < 0 ? -1.0 : 1.0;
  Eigen::Matrix3d R = V * D * U.transpose();
  Eigen::Vector3d t = cb - R * ca;
  Pose pose;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) pose.R(r, c) = static_cast<float>(R(r, c));
  pose.t = {static_cast<float>(t.x()), static_cast<float>(t.y()), static_cast<float>(t.z())};
  return pose;
}

IcpResult icp_refine(const std::vector<Vec3>& source, const std::vector<Vec3>& target,
                     int max_iters, double tol) {
  if (source.size() < 3 || target.size() < 3)
    throw DataError("icp_refine: both clouds need >= 3 points");
  KdTree3 tree(target);
  IcpResult result;
  std::vector<Vec3> current = source;
  std::vector<Vec3> corr(source.size());
  double prev = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iters; ++iter) {
    for (std::size_t i = 0; i < current.size(); ++i)
      corr[i] = target[static_cast<std::size_t>(tree.nearest(current[i]).first)];
    Pose delta = rigid_align(current, corr);
    double sq = 0.0;
    for (std::size_t i = 0; i < current.size(); ++i) {
      current[i] = delta.apply(current[i]);
      Vec3 d = current[i] - corr[i];
      sq += static_cast<double>(dot(d, d));
    }
    result.transform = {delta.R * result.transform.R,
                        delta.R * result.transform.t + delta.t};
    double err = std::sqrt(sq / static_cast<double>(current.size()));
    result.error_history.push_back(err);
    result.error = err;
    result.iterations = iter + 1;
    if (prev - err < tol) {
      result.converged = true;
      break;
    }
    prev = err;
  }
  return result;
}

}  // namespace noma
