#include "noma/render.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "noma/errors.hpp"

namespace noma {

Vec3 normalize_in_box(const Vec3& p, const Box3& bbox) {
  Vec3 s = bbox.size();
  Vec3 r = cwise_div(p - bbox.min, s);
  return {std::clamp(r.x, 0.f, 1.f), std::clamp(r.y, 0.f, 1.f), std::clamp(r.z, 0.f, 1.f)};
}

MaskImage dilation_band(const MaskImage& mask, std::uint8_t value, int band_px) {
  MaskImage band(mask.width, mask.height, 0);
  std::vector<int> dist(static_cast<std::size_t>(mask.width) * mask.height, -1);
  std::deque<std::pair<int, int>> queue;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(x, y) == value) {
        dist[static_cast<std::size_t>(y) * mask.width + x] = 0;
        queue.emplace_back(x, y);
      }
  // 8-connected BFS: layer k = Chebyshev distance k from the region.
  while (!queue.empty()) {
    auto [x, y] = queue.front();
    queue.pop_front();
    int d = dist[static_cast<std::size_t>(y) * mask.width + x];
    if (d >= band_px) continue;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        int nx = x + dx, ny = y + dy;
        if (!mask.in_bounds(nx, ny)) continue;
        int& nd = dist[static_cast<std::size_t>(ny) * mask.width + nx];
        if (nd >= 0) continue;
        nd = d + 1;
        band.at(nx, ny) = 1;
        queue.emplace_back(nx, ny);
      }
  }
  return band;
}

std::vector<ObjectRay> generate_rays(const Camera& camera, const ColorImage& rgb,
                                     const DepthImage& depth, const MaskImage& mask,
                                     std::uint8_t instance_value, const Pose& obj_pose,
                                     const Vec3& obj_size, int n, float bg_fraction,
                                     std::mt19937& rng, int band_px) {
  (void)obj_size;
  if (mask.width != camera.width || mask.height != camera.height)
    throw DataError("generate_rays: mask does not match camera dimensions");
  if (n < 1) throw UsageError("generate_rays: n must be >= 1");

  std::vector<std::pair<int, int>> obj_px, bg_px;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(x, y) == instance_value) obj_px.emplace_back(x, y);
  if (obj_px.empty()) throw DataError("generate_rays: no object pixels");

  MaskImage band = dilation_band(mask, instance_value, band_px);
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (band.at(x, y)) bg_px.emplace_back(x, y);

  int n_bg = bg_px.empty() ? 0 : static_cast<int>(std::lround(n * bg_fraction));
  n_bg = std::min(n_bg, n);
  int n_obj = n - n_bg;

  const Pose world_to_obj = obj_pose.inverse();
  auto make_ray = [&](int x, int y, RayKind kind) {
    ObjectRay ray;
    Vec3 dir_cam = camera.pixel_direction(static_cast<float>(x), static_cast<float>(y));
    ray.origin = world_to_obj.apply(camera.pose.t);
    ray.direction = world_to_obj.R * (camera.pose.R * dir_cam);
    ray.kind = kind;
    ray.target_color = rgb.at(x, y);
    if (kind == RayKind::kObject) {
      float d = depth.at(x, y);
      if (d > 0.f) ray.target_depth = d;
    }
    return ray;
  };

  std::vector<ObjectRay> rays;
  rays.reserve(static_cast<std::size_t>(n));
  std::uniform_int_distribution<std::size_t> pick_obj(0, obj_px.size() - 1);
  for (int i = 0; i < n_obj; ++i) {
    auto [x, y] = obj_px[pick_obj(rng)];
    rays.push_back(make_ray(x, y, RayKind::kObject));
  }
  if (n_bg > 0) {
    std::uniform_int_distribution<std::size_t> pick_bg(0, bg_px.size() - 1);
    for (int i = 0; i < n_bg; ++i) {
      auto [x, y] = bg_px[pick_bg(rng)];
      rays.push_back(make_ray(x, y, RayKind::kBackground));
    }
  }
  return rays;
}

RaySampleSet uniform_samples(const ObjectRay& ray, const Box3& bbox, int n) {
  RaySampleSet set;
  set.origin = ray.origin;
  set.direction = ray.direction;
  set.bbox = bbox;
  float t0, t1;
  if (!ray_box_intersect(ray.origin, ray.direction, bbox, t0, t1) || t1 <= 0.f) {
    set.escaped = true;
    return set;
  }
  t0 = std::fmax(t0, 0.f);
  if (t1 - t0 < 1e-9f) {
    set.escaped = true;
    return set;
  }
  set.t_entry = t0;
  set.t_exit = t1;
  const float step = (t1 - t0) / static_cast<float>(n);
  set.depths.resize(static_cast<std::size_t>(n));
  set.deltas.assign(static_cast<std::size_t>(n), step);
  set.positions.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    float d = t0 + (static_cast<float>(i) + 0.5f) * step;
    set.depths[static_cast<std::size_t>(i)] = d;
    set.positions[static_cast<std::size_t>(i)] =
        normalize_in_box(ray.origin + ray.direction * d, bbox);
  }
  return set;
}

CompositeResult composite(const std::vector<float>& sigmas, const std::vector<Vec3>& colors,
                          const std::vector<float>& deltas, const std::vector<float>& depths) {
  const std::size_t n = sigmas.size();
  CompositeResult res;
  res.term_probs.resize(n);
  double cr = 0.0, cg = 0.0, cb = 0.0, dep = 0.0;
  double transmittance = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    double a = 1.0 - std::exp(-static_cast<double>(sigmas[i]) * deltas[i]);
    double rho = a * transmittance;
    res.term_probs[i] = static_cast<float>(rho);
    cr += rho * colors[i].x;
    cg += rho * colors[i].y;
    cb += rho * colors[i].z;
    dep += rho * depths[i];
    transmittance *= 1.0 - a;
  }
  res.color = {static_cast<float>(cr), static_cast<float>(cg), static_cast<float>(cb)};
  res.depth = static_cast<float>(dep);
  return res;
}

void composite_backward(const std::vector<float>& sigmas, const std::vector<Vec3>& colors,
                        const std::vector<float>& deltas, const std::vector<float>& depths,
                        const Vec3& d_color, float d_depth, std::vector<SampleGrad>& grads) {
  const std::size_t n = sigmas.size();
  grads.resize(n);
  std::vector<double> a(n), rho(n), t_before(n);
  double transmittance = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = 1.0 - std::exp(-static_cast<double>(sigmas[i]) * deltas[i]);
    t_before[i] = transmittance;
    rho[i] = a[i] * transmittance;
    transmittance *= 1.0 - a[i];
  }
  // s_i = d(loss)/d(rho_i); suffix sums give d(loss)/d(a_k) in one backward
  // sweep: dL/da_k = s_k T_{k-1} - (sum_{i>k} s_i rho_i) / (1 - a_k).
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = static_cast<double>(d_color.x) * colors[i].x + static_cast<double>(d_color.y) * colors[i].y +
           static_cast<double>(d_color.z) * colors[i].z + static_cast<double>(d_depth) * depths[i];
    grads[i].d_rgb += d_color * static_cast<float>(rho[i]);
  }
  double suffix = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    double denom = std::max(1.0 - a[k], 1e-300);
    double da = s[k] * t_before[k] - suffix / denom;
    // da/dsigma = delta * exp(-sigma*delta) = delta * (1 - a)
    grads[k].d_sigma += static_cast<float>(da * deltas[k] * (1.0 - a[k]));
    suffix += s[k] * rho[k];
  }
}

LossResult batch_loss(const std::vector<ObjectRay>& rays,
                      const std::vector<RaySampleSet>& samples,
                      const std::vector<std::vector<FieldOutput>>& outputs,
                      const LossWeights& weights, std::mt19937& rng) {
  if (rays.empty()) throw DataError("batch_loss: no rays");
  if (samples.size() != rays.size() || outputs.size() != rays.size())
    throw NumericError("batch_loss: shape mismatch");

  LossResult res;
  res.grads.resize(rays.size());
  std::uniform_real_distribution<float> unit(0.f, 1.f);

  for (std::size_t r = 0; r < rays.size(); ++r) {
    const RaySampleSet& set = samples[r];
    const std::size_t n = set.size();
    if (set.escaped || n == 0) continue;
    const auto& outs = outputs[r];
    if (outs.size() != n) throw NumericError("batch_loss: outputs do not match samples");

    std::vector<float> sigmas(n);
    std::vector<Vec3> colors(n);
    for (std::size_t i = 0; i < n; ++i) {
      sigmas[i] = outs[i].sigma;
      colors[i] = outs[i].rgb;
    }
    CompositeResult comp = composite(sigmas, colors, set.deltas, set.depths);

    Vec3 target = rays[r].target_color;
    if (rays[r].kind == RayKind::kBackground) {
      target = {unit(rng), unit(rng), unit(rng)};
    }
    Vec3 diff = comp.color - target;
    float cnorm = norm(diff);
    res.color_term += cnorm;
    Vec3 d_color = cnorm > 1e-12f ? diff / cnorm : Vec3{0.f, 0.f, 0.f};

    float d_depth = 0.f;
    if (rays[r].kind == RayKind::kObject && rays[r].target_depth) {
      float derr = comp.depth - *rays[r].target_depth;
      res.depth_term += std::fabs(derr);
      d_depth = weights.lambda_d * (derr > 0.f ? 1.f : (derr < 0.f ? -1.f : 0.f));
    }

    composite_backward(sigmas, colors, set.deltas, set.depths, d_color, d_depth, res.grads[r]);

    if (rays[r].kind == RayKind::kBackground) {
      for (std::size_t i = 0; i < n; ++i) {
        res.sigma_term += sigmas[i];
        res.grads[r][i].d_sigma += weights.lambda_sigma;
      }
    }
  }
  res.total = res.color_term + weights.lambda_d * res.depth_term +
              weights.lambda_sigma * res.sigma_term;
  if (!std::isfinite(res.total)) throw NumericError("batch_loss: non-finite loss");
  return res;
}

}  // namespace noma
