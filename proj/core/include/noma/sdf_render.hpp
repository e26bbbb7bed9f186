#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "noma/task.hpp"

namespace noma {

// Sphere tracing limits shared by single-object and scene rendering.
struct TraceConfig {
  int max_steps = 128;
  float hit_eps = 1e-4f;
  float max_distance = 10.f;
};

struct RenderedFrame {
  ColorImage rgb;
  DepthImage depth;
  MaskImage mask;
};

// One posed object inside a composed scene.
struct PlacedShape {
  ShapeSpec shape;
  Pose pose;  // object -> world
};

// Sphere-traces every pixel against one shape; depth is distance along the
// ray with sentinel 0 for misses; mask = hit pixels; color = albedo times
// Lambertian shading from central-difference normals.
RenderedFrame render_frame(const ShapeSpec& spec, const Camera& camera, const Vec3& light_dir,
                           const TraceConfig& trace = {});

// Scene variant: nearest object wins per pixel, mask holds instance k+1.
RenderedFrame render_scene_frame(const std::vector<PlacedShape>& objects, const Camera& camera,
                                 const Vec3& light_dir, const TraceConfig& trace = {});

// Ground-truth surface of a shape at the given lattice resolution, vertices
// in the shape's canonical metric frame.
Mesh shape_gt_mesh(const ShapeSpec& spec, int resolution = 96);

// Randomized hemisphere ring of inward-looking cameras around center. The
// viewing distance is drawn from object_radius * [near_scale, far_scale] /
// tan(fov/2); the defaults frame a single object with margin, scene callers
// pass tighter scales so each object still covers enough pixels.
std::vector<Camera> hemisphere_cameras(const Vec3& center, float object_radius, int count,
                                       int width, int height, std::mt19937& rng,
                                       float near_scale = 2.6f, float far_scale = 3.8f);

// Frames, cameras, and ground truth for one object at the world origin.
// Frame count is drawn uniformly from frame_count_range.
Task make_task(Category category, std::uint64_t seed, std::pair<int, int> frame_count_range,
               int resolution);

// Disjoint deterministic train/test task sets for one category.
std::pair<std::vector<Task>, std::vector<Task>> build_splits(Category category, int n_train,
                                                             int n_test, std::uint64_t seed,
                                                             std::pair<int, int> frame_count_range,
                                                             int resolution);

struct SceneObject {
  Category category = Category::kMug;
  std::uint64_t shape_seed = 0;
  ShapeSpec shape;
  Pose pose;       // object -> world
  Vec3 size;       // canonical-frame extents
  Vec3 center;     // canonical-frame bounds center
};

struct Scene {
  std::vector<Frame> frames;
  std::vector<Camera> cameras;
  std::vector<SceneObject> objects;
};

// Multi-object tabletop scene: objects placed apart on the z=0 plane with
// random yaws, viewed from a camera ring around the whole arrangement.
Scene make_scene(const std::vector<Category>& categories, std::uint64_t seed, int n_frames,
                 int resolution);

}  // namespace noma
