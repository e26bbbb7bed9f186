#pragma once

#include <optional>
#include <random>
#include <vector>

#include "noma/field.hpp"
#include "noma/geom.hpp"
#include "noma/image.hpp"

namespace noma {

struct Camera {
  float fx = 0.f, fy = 0.f, cx = 0.f, cy = 0.f;
  int width = 0, height = 0;
  Pose pose;  // camera -> world

  // Unit direction through pixel center (u, v) in camera frame; pixel
  // (cx, cy) maps to (0, 0, 1).
  Vec3 pixel_direction(float u, float v) const {
    return normalized({(u - cx) / fx, (v - cy) / fy, 1.f});
  }
};

enum class RayKind { kObject, kBackground };

// A camera ray expressed in the object's metric frame.
struct ObjectRay {
  Vec3 origin;
  Vec3 direction;  // unit norm
  RayKind kind = RayKind::kObject;
  Vec3 target_color;
  std::optional<float> target_depth;  // meters along the ray; absent for
                                      // background rays and sentinel readings
};

// Ordered samples along one ray. positions are normalized bounding-box
// coordinates in [0,1]^3; depths/deltas stay in meters.
struct RaySampleSet {
  Vec3 origin;
  Vec3 direction;
  Box3 bbox;  // metric object-frame box the samples were drawn in
  float t_entry = 0.f, t_exit = 0.f;
  std::vector<float> depths;
  std::vector<float> deltas;
  std::vector<Vec3> positions;
  bool escaped = false;

  std::size_t size() const { return depths.size(); }
};

Vec3 normalize_in_box(const Vec3& p, const Box3& bbox);

// Draws n rays for one object instance: (1 - bg_fraction) of them from mask
// pixels (targets from RGB-D; sentinel depth 0 -> absent target_depth), the
// rest from a band of width band_px around the mask. Rays are returned
// object rays first, then background rays; callers that consume rng per ray
// rely on that order.
std::vector<ObjectRay> generate_rays(const Camera& camera, const ColorImage& rgb,
                                     const DepthImage& depth, const MaskImage& mask,
                                     std::uint8_t instance_value, const Pose& obj_pose,
                                     const Vec3& obj_size, int n, float bg_fraction,
                                     std::mt19937& rng, int band_px = 8);

// n samples at interval midpoints across the ray's in-box span, equal deltas.
// Rays that miss the box (or whose span lies behind the origin) come back
// escaped with no samples.
RaySampleSet uniform_samples(const ObjectRay& ray, const Box3& bbox, int n);

struct CompositeResult {
  Vec3 color;
  float depth = 0.f;
  std::vector<float> term_probs;
};

// Front-to-back compositing: occupancy a_i = 1 - exp(-sigma_i * delta_i),
// termination rho_i = a_i * prod_{j<i}(1 - a_j), color/depth = rho-weighted
// sums. Internal arithmetic in 64-bit, rounded once on return.
CompositeResult composite(const std::vector<float>& sigmas, const std::vector<Vec3>& colors,
                          const std::vector<float>& deltas, const std::vector<float>& depths);

struct SampleGrad {
  float d_sigma = 0.f;
  Vec3 d_rgb;
};

// Accumulates d(loss)/d(sigma_i), d(loss)/d(color_i) given upstream
// d(loss)/d(composite color) and d(loss)/d(composite depth).
void composite_backward(const std::vector<float>& sigmas, const std::vector<Vec3>& colors,
                        const std::vector<float>& deltas, const std::vector<float>& depths,
                        const Vec3& d_color, float d_depth, std::vector<SampleGrad>& grads);

struct LossWeights {
  float lambda_d = 0.1f;
  float lambda_sigma = 1e-4f;
};

struct LossResult {
  double total = 0.0;
  double color_term = 0.0;   // sum over rays of ||C_hat - target||_2
  double depth_term = 0.0;   // sum over object rays of |D_hat - target|
  double sigma_term = 0.0;   // sum over background-ray samples of |sigma|
  std::vector<std::vector<SampleGrad>> grads;  // per ray, per sample
};

// Three-term objective over one ray batch. Object rays: Euclidean color
// error plus absolute depth error; background rays: Euclidean error against
// a fresh uniform random color (drawn per ray, in ray order) plus the
// density magnitude penalty. Plain sums, no averaging. Escaped rays
// contribute nothing and consume no rng draws.
LossResult batch_loss(const std::vector<ObjectRay>& rays,
                      const std::vector<RaySampleSet>& samples,
                      const std::vector<std::vector<FieldOutput>>& outputs,
                      const LossWeights& weights, std::mt19937& rng);

// Chebyshev dilation of {mask == value} by band_px, minus the region itself.
MaskImage dilation_band(const MaskImage& mask, std::uint8_t value, int band_px);

}  // namespace noma
