#pragma once

#include <vector>

#include "noma/geom.hpp"

namespace noma {

struct IcpResult {
  Pose transform;  // maps source points onto the target cloud
  double error = 0.0;  // RMS correspondence distance at the last iteration
  int iterations = 0;
  bool converged = false;
  std::vector<double> error_history;  // per-iteration RMS, non-increasing
};

// Point-to-point ICP: nearest-neighbor correspondences against target, rigid
// update by the SVD (Horn) closed form each iteration, until the RMS
// improvement drops below tol or max_iters is reached.
IcpResult icp_refine(const std::vector<Vec3>& source, const std::vector<Vec3>& target,
                     int max_iters, double tol);

// One Horn/SVD alignment for known pairs: minimizes sum |R a_i + t - b_i|^2.
Pose rigid_align(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

}  // namespace noma
