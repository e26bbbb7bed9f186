#include "noma/sdf_render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "noma/errors.hpp"
#include "noma/marching_cubes.hpp"
#include "noma/threading.hpp"

namespace noma {
namespace {

constexpr Vec3 kBackgroundColor{0.58f, 0.58f, 0.62f};
constexpr float kAmbient = 0.2f;

struct TraceHit {
  bool hit = false;
  float t = 0.f;
  int object = -1;
};

float scene_sdf(const std::vector<PlacedShape>& objects, const Vec3& p_world, int* nearest) {
  float best = std::numeric_limits<float>::infinity();
  for (std::size_t i = 0; i < objects.size(); ++i) {
    Vec3 local = objects[i].pose.apply_inverse(p_world);
    float d = sdf_eval(objects[i].shape, local);
    if (d < best) {
      best = d;
      if (nearest) *nearest = static_cast<int>(i);
    }
  }
  return best;
}

TraceHit sphere_trace(const std::vector<PlacedShape>& objects, const Vec3& origin, const Vec3& dir,
                      const TraceConfig& cfg) {
  TraceHit hit;
  float t = 0.f;
  for (int step = 0; step < cfg.max_steps; ++step) {
    int which = -1;
    float d = scene_sdf(objects, origin + dir * t, &which);
    if (std::fabs(d) < cfg.hit_eps) {
      hit.hit = true;
      hit.t = t;
      hit.object = which;
      return hit;
    }
    t += d;
    if (t > cfg.max_distance || t < -0.5f) break;
  }
  return hit;
}

Vec3 shade(const PlacedShape& obj, const Vec3& p_world, const Vec3& light_dir) {
  Vec3 n_local = sdf_normal(obj.shape, obj.pose.apply_inverse(p_world));
  Vec3 n_world = obj.pose.R * n_local;
  float lambert = std::fmax(0.f, dot(n_world, -normalized(light_dir)));
  float s = kAmbient + (1.f - kAmbient) * lambert;
  Vec3 c = obj.shape.albedo * s;
  return {std::clamp(c.x, 0.f, 1.f), std::clamp(c.y, 0.f, 1.f), std::clamp(c.z, 0.f, 1.f)};
}

RenderedFrame trace_frame(const std::vector<PlacedShape>& objects, const Camera& camera,
                          const Vec3& light_dir, const TraceConfig& cfg) {
  RenderedFrame frame;
  frame.rgb = ColorImage(camera.width, camera.height, kBackgroundColor);
  frame.depth = DepthImage(camera.width, camera.height, 0.f);
  frame.mask = MaskImage(camera.width, camera.height, 0);
  parallel_for(camera.height, [&](int y) {
    for (int x = 0; x < camera.width; ++x) {
      Vec3 dir = camera.pose.R * camera.pixel_direction(static_cast<float>(x), static_cast<float>(y));
      TraceHit hit = sphere_trace(objects, camera.pose.t, dir, cfg);
      if (!hit.hit) continue;
      frame.depth.at(x, y) = hit.t;
      frame.mask.at(x, y) = static_cast<std::uint8_t>(hit.object + 1);
      frame.rgb.at(x, y) = shade(objects[static_cast<std::size_t>(hit.object)],
                                 camera.pose.t + dir * hit.t, light_dir);
    }
  });
  return frame;
}

}  // namespace

RenderedFrame render_frame(const ShapeSpec& spec, const Camera& camera, const Vec3& light_dir,
                           const TraceConfig& trace) {
  std::vector<PlacedShape> one{{spec, Pose{}}};
  RenderedFrame frame = trace_frame(one, camera, light_dir, trace);
  for (auto& m : frame.mask.data)
    if (m) m = 1;
  return frame;
}

RenderedFrame render_scene_frame(const std::vector<PlacedShape>& objects, const Camera& camera,
                                 const Vec3& light_dir, const TraceConfig& trace) {
  return trace_frame(objects, camera, light_dir, trace);
}

Mesh shape_gt_mesh(const ShapeSpec& spec, int resolution) {
  Box3 box = shape_bounds(spec);
  Vec3 size = box.size();
  Vec3 pad = size * 0.06f;
  Box3 inflated{box.min - pad, box.max + pad};
  Vec3 span = inflated.size();

  // Occupancy ramp clamped around the zero level set: linear within one
  // band-width of the surface so edge interpolation recovers sdf == 0.
  float band = 2.f * std::fmax(span.x, std::fmax(span.y, span.z)) / static_cast<float>(resolution - 1);
  DensityGrid grid(resolution);
  const float inv = 1.f / static_cast<float>(resolution - 1);
  parallel_for(resolution, [&](int k) {
    for (int j = 0; j < resolution; ++j)
      for (int i = 0; i < resolution; ++i) {
        Vec3 p = inflated.min + cwise_mul(span, Vec3{i * inv, j * inv, k * inv});
        float d = sdf_eval(spec, p);
        grid.at(i, j, k) = std::clamp(band - d, 0.f, 2.f * band);
      }
  });
  Mesh unit = marching_cubes(grid, band);
  for (Vec3& v : unit.vertices) v = inflated.min + cwise_mul(span, v);
  return unit;
}

std::vector<Camera> hemisphere_cameras(const Vec3& center, float object_radius, int count,
                                       int width, int height, std::mt19937& rng,
                                       float near_scale, float far_scale) {
  std::uniform_real_distribution<float> unit(0.f, 1.f);
  std::vector<Camera> cams;
  cams.reserve(static_cast<std::size_t>(count));
  const float fov = 50.f * kPi / 180.f;
  const float f = 0.5f * static_cast<float>(width) / std::tan(0.5f * fov);
  for (int i = 0; i < count; ++i) {
    float azimuth = (static_cast<float>(i) + 0.7f * unit(rng)) * 2.f * kPi / static_cast<float>(count);
    float elevation = (22.f + 30.f * unit(rng)) * kPi / 180.f;
    float radius =
        object_radius * (near_scale + (far_scale - near_scale) * unit(rng)) / std::tan(0.5f * fov);

    Vec3 eye = center + Vec3{radius * std::cos(elevation) * std::cos(azimuth),
                             radius * std::cos(elevation) * std::sin(azimuth),
                             radius * std::sin(elevation)};
    Vec3 forward = normalized(center - eye);
    Vec3 right = normalized(cross(forward, Vec3{0.f, 0.f, 1.f}));
    Vec3 down = cross(forward, right);

    Camera cam;
    cam.fx = cam.fy = f;
    cam.cx = 0.5f * static_cast<float>(width);
    cam.cy = 0.5f * static_cast<float>(height);
    cam.width = width;
    cam.height = height;
    cam.pose.R.m = {right.x, down.x, forward.x, right.y, down.y, forward.y,
                    right.z, down.z, forward.z};
    cam.pose.t = eye;
    cams.push_back(cam);
  }
  return cams;
}

Task make_task(Category category, std::uint64_t seed, std::pair<int, int> frame_count_range,
               int resolution) {
  if (frame_count_range.first < 4 || frame_count_range.second > 64 ||
      frame_count_range.first > frame_count_range.second)
    throw UsageError("make_task: frame count range must sit within [4, 64]");

  std::mt19937 rng(static_cast<std::uint32_t>(seed * 0x9e3779b9u + 0x7f4a7c15u));
  Task task;
  task.category = category;
  task.shape_seed = seed;
  ShapeSpec spec = sample_shape(category, seed);

  Box3 box = shape_bounds(spec);
  task.gt_center = box.center();
  task.gt_size = box.size();
  task.gt_pose = Pose{};
  task.gt_mesh = shape_gt_mesh(spec, 96);

  std::uniform_int_distribution<int> count_dist(frame_count_range.first, frame_count_range.second);
  int n_frames = count_dist(rng);
  float radius = 0.5f * norm(task.gt_size);
  task.cameras = hemisphere_cameras(task.gt_center, radius, n_frames, resolution, resolution, rng);

  std::uniform_real_distribution<float> unit(0.f, 1.f);
  Vec3 light = normalized(Vec3{0.4f + 0.4f * unit(rng), 0.3f + 0.4f * unit(rng), -1.f});
  task.frames.reserve(task.cameras.size());
  for (const Camera& cam : task.cameras) {
    RenderedFrame rf = render_frame(spec, cam, light);
    task.frames.push_back({std::move(rf.rgb), std::move(rf.depth), std::move(rf.mask)});
  }
  return task;
}

std::pair<std::vector<Task>, std::vector<Task>> build_splits(Category category, int n_train,
                                                             int n_test, std::uint64_t seed,
                                                             std::pair<int, int> frame_count_range,
                                                             int resolution) {
  if (n_train < 1 || n_test < 1) throw UsageError("build_splits: need at least one task per split");
  std::vector<Task> train, test;
  train.reserve(static_cast<std::size_t>(n_train));
  test.reserve(static_cast<std::size_t>(n_test));
  const std::uint64_t base = seed * 1000003ull;
  for (int i = 0; i < n_train; ++i)
    train.push_back(make_task(category, base + static_cast<std::uint64_t>(i), frame_count_range,
                              resolution));
  for (int i = 0; i < n_test; ++i)
    test.push_back(make_task(category, base + 500000ull + static_cast<std::uint64_t>(i),
                             frame_count_range, resolution));
  return {std::move(train), std::move(test)};
}

Scene make_scene(const std::vector<Category>& categories, std::uint64_t seed, int n_frames,
                 int resolution) {
  if (categories.empty()) throw UsageError("make_scene: no objects requested");
  std::mt19937 rng(static_cast<std::uint32_t>(seed * 0x85ebca6bu + 0xc2b2ae35u));
  std::uniform_real_distribution<float> unit(0.f, 1.f);

  Scene scene;
  std::vector<PlacedShape> placed;
  const int n = static_cast<int>(categories.size());
  float ring = 0.16f + 0.1f * static_cast<float>(n);
  float scene_radius = 0.f;
  for (int i = 0; i < n; ++i) {
    SceneObject obj;
    obj.category = categories[static_cast<std::size_t>(i)];
    obj.shape_seed = seed * 7919ull + static_cast<std::uint64_t>(i) * 104729ull;
    obj.shape = sample_shape(obj.category, obj.shape_seed);
    Box3 box = shape_bounds(obj.shape);
    obj.center = box.center();
    obj.size = box.size();

    float angle = (static_cast<float>(i) + 0.25f * unit(rng)) * 2.f * kPi / static_cast<float>(n);
    float yaw = unit(rng) * 2.f * kPi;
    Vec3 position{ring * std::cos(angle), ring * std::sin(angle), 0.f};
    // rest the object on the z=0 plane
    position.z = -box.min.z;
    obj.pose = Pose{rot_z(yaw), position};
    placed.push_back({obj.shape, obj.pose});
    scene.objects.push_back(obj);
    scene_radius = std::fmax(scene_radius, ring + 0.6f * norm(obj.size));
  }

  // Smooth orbit: monotonic azimuth with light jitter and a slow elevation /
  // distance wobble, so consecutive frames overlap like a handheld scan.
  Vec3 scene_center{0.f, 0.f, 0.12f};
  const float fov = 50.f * kPi / 180.f;
  const float f = 0.5f * static_cast<float>(resolution) / std::tan(0.5f * fov);
  const float base_dist = scene_radius * (1.25f + 0.3f * unit(rng)) / std::tan(0.5f * fov);
  const float phase = unit(rng) * 2.f * kPi;
  scene.cameras.reserve(static_cast<std::size_t>(n_frames));
  for (int i = 0; i < n_frames; ++i) {
    const float s01 = static_cast<float>(i) / static_cast<float>(n_frames);
    const float azimuth =
        (static_cast<float>(i) + 0.3f * unit(rng)) * 2.f * kPi / static_cast<float>(n_frames);
    const float elevation = (31.f + 9.f * std::sin(2.f * kPi * s01 + phase) + 2.f * unit(rng)) *
                            kPi / 180.f;
    const float dist = base_dist * (1.f + 0.05f * std::sin(4.f * kPi * s01 + phase));
    Vec3 eye = scene_center + Vec3{dist * std::cos(elevation) * std::cos(azimuth),
                                   dist * std::cos(elevation) * std::sin(azimuth),
                                   dist * std::sin(elevation)};
    Vec3 forward = normalized(scene_center - eye);
    Vec3 right = normalized(cross(forward, Vec3{0.f, 0.f, 1.f}));
    Vec3 down = cross(forward, right);
    Camera cam;
    cam.fx = cam.fy = f;
    cam.cx = 0.5f * static_cast<float>(resolution);
    cam.cy = 0.5f * static_cast<float>(resolution);
    cam.width = resolution;
    cam.height = resolution;
    cam.pose.R.m = {right.x, down.x, forward.x, right.y, down.y, forward.y,
                    right.z, down.z, forward.z};
    cam.pose.t = eye;
    scene.cameras.push_back(cam);
  }
  Vec3 light = normalized(Vec3{0.5f, 0.35f, -1.f});
  scene.frames.reserve(scene.cameras.size());
  for (const Camera& cam : scene.cameras) {
    RenderedFrame rf = render_scene_frame(placed, cam, light);
    scene.frames.push_back({std::move(rf.rgb), std::move(rf.depth), std::move(rf.mask)});
  }
  return scene;
}

}  // namespace noma
