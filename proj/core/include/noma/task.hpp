#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "noma/image.hpp"
#include "noma/mesh.hpp"
#include "noma/render.hpp"
#include "noma/shapes.hpp"

namespace noma {

struct Frame {
  ColorImage rgb;
  DepthImage depth;  // distance along the ray, 0 = no return
  MaskImage mask;    // 0 = background, k+1 = instance k
};

// One object's reconstruction data. The object sits at gt_pose in the world;
// its metric bounding box in the object frame is centered at gt_center with
// extents gt_size.
struct Task {
  Category category = Category::kMug;
  std::uint64_t shape_seed = 0;
  std::vector<Frame> frames;
  std::vector<Camera> cameras;  // camera -> world, parallel to frames
  Mesh gt_mesh;                 // object frame, metric units
  Pose gt_pose;                 // object -> world
  Vec3 gt_size;
  Vec3 gt_center;

  Box3 object_box() const {
    return {gt_center - gt_size * 0.5f, gt_center + gt_size * 0.5f};
  }
};

}  // namespace noma
