#include "gradcheck.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "shadow.hpp"
#include "testutil.hpp"

namespace gradcheck {
namespace {

constexpr double kKinkMargin = 2e-2;  // distance every gate must keep from 0

// Index of the density-output bias within the parameter vector.
std::size_t output_bias_index(const noma::FieldArch& arch, int output) {
  std::size_t off = noma::hash_param_count(arch);
  int in = arch.hash_levels * arch.features_per_level;
  for (int l = 0; l < arch.hidden_layers; ++l) {
    off += static_cast<std::size_t>(arch.hidden_width) * in + arch.hidden_width;
    in = arch.hidden_width;
  }
  return off + static_cast<std::size_t>(4) * in + static_cast<std::size_t>(output);
}

std::size_t hidden_bias_index(const noma::FieldArch& arch, int layer, int unit) {
  std::size_t off = noma::hash_param_count(arch);
  int in = arch.hash_levels * arch.features_per_level;
  for (int l = 0; l < layer; ++l) {
    off += static_cast<std::size_t>(arch.hidden_width) * in + arch.hidden_width;
    in = arch.hidden_width;
  }
  return off + static_cast<std::size_t>(arch.hidden_width) * in + static_cast<std::size_t>(unit);
}

// Smallest |s| from a step grid such that every value+s clears the margin.
float clearing_shift(const std::vector<float>& values, float margin) {
  for (int k = 0; k < 400; ++k) {
    const float mag = 0.04f * ((k + 1) / 2);
    const float s = (k % 2 == 0) ? mag : -mag;
    bool ok = true;
    for (float v : values)
      if (std::fabs(v + s) < margin) ok = false;
    if (ok) return s;
  }
  throw std::logic_error("gradcheck: no clearing bias shift found");
}

std::vector<noma::Vec3> live_positions(const Case& c) {
  std::vector<noma::Vec3> pts;
  for (const noma::RaySampleSet& set : c.samples) {
    if (set.escaped) continue;
    pts.insert(pts.end(), set.positions.begin(), set.positions.end());
  }
  return pts;
}

// Push parameters and targets until no ReLU pre-activation, activation
// clamp, color norm, or depth residual sits within the margin. Deterministic:
// each phase makes its quantity safe exactly, layer by layer, so one pass
// suffices. Returns false only if the background redraw loop stalls.
bool sanitize(Case& c) {
  const float margin = static_cast<float>(kKinkMargin);
  const auto points = live_positions(c);

  // Hidden-unit kinks: a bias shift moves that unit's pre-activation by the
  // same amount at every point (inputs fixed once earlier layers are clean),
  // so solve each layer exactly, then recompute for the next.
  for (int layer = 0; layer < c.arch.hidden_layers; ++layer) {
    std::vector<std::vector<float>> pre_by_unit(c.arch.hidden_width);
    for (const noma::Vec3& q : points) {
      noma::FieldEvalCache cache;
      noma::field_eval(c.arch, c.params, q, &cache);
      for (int u = 0; u < c.arch.hidden_width; ++u)
        pre_by_unit[u].push_back(
            cache.pre[static_cast<std::size_t>(layer) * c.arch.hidden_width + u]);
    }
    for (int u = 0; u < c.arch.hidden_width; ++u) {
      bool violated = false;
      for (float v : pre_by_unit[u])
        if (std::fabs(v) < 1.5f * margin) violated = true;
      if (violated)
        c.params[hidden_bias_index(c.arch, layer, u)] +=
            clearing_shift(pre_by_unit[u], 2.f * margin);
    }
  }

  // Density clamp: the raw pre-activation must stay below the saturation
  // region; shifting the density output bias moves it uniformly.
  if (c.arch.density_activation == noma::DensityActivation::kExpClamped) {
    float max_raw = -1e30f;
    for (const noma::Vec3& q : points) {
      noma::FieldEvalCache cache;
      noma::field_eval(c.arch, c.params, q, &cache);
      max_raw = std::fmax(max_raw, cache.raw[0]);
    }
    if (max_raw > 8.5f) c.params[output_bias_index(c.arch, 0)] -= max_raw - 8.f;
  }

  // Loss-term margins. Parameters are frozen from here on, so per-ray
  // composites are fixed and each target can be set safely in one step.
  std::vector<noma::CompositeResult> comps(c.rays.size());
  for (std::size_t r = 0; r < c.rays.size(); ++r) {
    if (c.samples[r].escaped || c.samples[r].size() == 0) continue;
    std::vector<float> sigmas;
    std::vector<noma::Vec3> colors;
    for (const noma::FieldOutput& o : noma::field_eval(c.arch, c.params, c.samples[r].positions)) {
      sigmas.push_back(o.sigma);
      colors.push_back(o.rgb);
    }
    comps[r] = noma::composite(sigmas, colors, c.samples[r].deltas, c.samples[r].depths);
  }

  for (std::size_t r = 0; r < c.rays.size(); ++r) {
    if (c.samples[r].escaped || c.samples[r].size() == 0) continue;
    if (c.rays[r].kind == noma::RayKind::kObject) {
      // Candidate targets are mutually > 2 margins apart, so one of the
      // first two always clears the rendered color.
      const noma::Vec3 orig = c.rays[r].target_color;
      const noma::Vec3 candidates[] = {orig,
                                       {1.f, 0.f, orig.z},
                                       {0.f, 1.f, orig.z},
                                       {0.5f, 0.5f, 0.5f},
                                       {1.f, 1.f, 0.f},
                                       {0.f, 0.f, 1.f}};
      for (const noma::Vec3& cand : candidates) {
        if (noma::norm(comps[r].color - cand) >= margin) {
          c.rays[r].target_color = cand;
          break;
        }
      }
      if (c.rays[r].target_depth &&
          std::fabs(comps[r].depth - *c.rays[r].target_depth) < margin)
        c.rays[r].target_depth = comps[r].depth + 0.11f;
    }
  }

  // Background targets are drawn from the seed; redraw until every
  // background ray's target clears its rendered color.
  for (int redraw = 0; redraw < 200; ++redraw) {
    const auto bg = shadow::draw_bg_colors(c.rays, c.samples, c.bg_seed);
    std::size_t bg_used = 0;
    bool ok = true;
    for (std::size_t r = 0; r < c.rays.size(); ++r) {
      if (c.samples[r].escaped || c.samples[r].size() == 0) continue;
      if (c.rays[r].kind != noma::RayKind::kBackground) continue;
      const auto& t = bg[bg_used++];
      const noma::Vec3 target{static_cast<float>(t[0]), static_cast<float>(t[1]),
                              static_cast<float>(t[2])};
      if (noma::norm(comps[r].color - target) < margin) ok = false;
    }
    if (ok) return true;
    c.bg_seed += 1;
  }
  return false;
}

}  // namespace

Case make_case(std::uint64_t seed) {
  std::mt19937 rng(static_cast<std::uint32_t>(seed * 2654435761u + 12345u));
  Case c;
  c.arch = testutil::random_tiny_arch(rng);
  c.params = testutil::random_params_for_gradients(c.arch, rng);
  c.weights.lambda_d = testutil::uniform(rng, 0.05f, 0.4f);
  c.weights.lambda_sigma = testutil::uniform(rng, 1e-4f, 1e-2f);
  c.bg_seed = static_cast<std::uint32_t>(seed + 77);

  const noma::Box3 box{{0.f, 0.f, 0.f}, {1.f, 1.f, 1.f}};
  const int n_rays = testutil::uniform_int(rng, 3, 5);
  const int n_samples = testutil::uniform_int(rng, 4, 6);
  for (int r = 0; r < n_rays; ++r) {
    noma::ObjectRay ray;
    // Origin outside the box, direction through a random interior point.
    ray.origin = {testutil::uniform(rng, -1.5f, -0.5f), testutil::uniform(rng, 0.1f, 0.9f),
                  testutil::uniform(rng, 0.1f, 0.9f)};
    const noma::Vec3 through = testutil::random_point(rng, 0.2f, 0.8f);
    ray.direction = noma::normalized(through - ray.origin);
    ray.target_color = testutil::random_point(rng, 0.f, 1.f);
    if (r == n_rays - 1) {
      ray.kind = noma::RayKind::kBackground;
    } else {
      ray.kind = noma::RayKind::kObject;
      if (r % 2 == 0) ray.target_depth = testutil::uniform(rng, 0.8f, 2.2f);
    }
    c.rays.push_back(ray);
    c.samples.push_back(noma::uniform_samples(ray, box, n_samples));
    if (c.samples.back().escaped) throw std::logic_error("gradcheck: constructed ray escaped");
  }

  if (!sanitize(c)) throw std::logic_error("gradcheck: failed to sanitize case");
  return c;
}

noma::ParamVector analytic_gradient(const Case& c) {
  std::vector<std::vector<noma::FieldOutput>> outputs(c.rays.size());
  std::vector<std::vector<noma::FieldEvalCache>> caches(c.rays.size());
  for (std::size_t r = 0; r < c.rays.size(); ++r) {
    if (c.samples[r].escaped) continue;
    caches[r].resize(c.samples[r].size());
    outputs[r].resize(c.samples[r].size());
    for (std::size_t i = 0; i < c.samples[r].size(); ++i)
      outputs[r][i] = noma::field_eval(c.arch, c.params, c.samples[r].positions[i], &caches[r][i]);
  }
  std::mt19937 rng(c.bg_seed);
  noma::LossResult loss = noma::batch_loss(c.rays, c.samples, outputs, c.weights, rng);

  noma::ParamVector grad(c.params.size(), 0.f);
  for (std::size_t r = 0; r < c.rays.size(); ++r) {
    if (c.samples[r].escaped) continue;
    for (std::size_t i = 0; i < c.samples[r].size(); ++i)
      noma::field_backward(c.arch, c.params, caches[r][i], loss.grads[r][i].d_sigma,
                           loss.grads[r][i].d_rgb, grad);
  }
  return grad;
}

std::vector<double> fd_gradient(const Case& c, double h) {
  const auto bg = shadow::draw_bg_colors(c.rays, c.samples, c.bg_seed);
  std::vector<float> params(c.params);
  std::vector<double> grad(params.size(), 0.0);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const float saved = params[i];
    const float up = static_cast<float>(saved + h);
    const float down = static_cast<float>(saved - h);
    params[i] = up;
    const double hi = shadow::batch_loss(c.arch, params, c.rays, c.samples, c.weights, bg);
    params[i] = down;
    const double lo = shadow::batch_loss(c.arch, params, c.rays, c.samples, c.weights, bg);
    params[i] = saved;
    // Divide by the realized float step, not the nominal one, so parameter
    // quantization does not bias the quotient.
    grad[i] = (hi - lo) / (static_cast<double>(up) - static_cast<double>(down));
  }
  return grad;
}

Comparison compare(const noma::ParamVector& analytic, const std::vector<double>& fd,
                   double floor) {
  Comparison result;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    if (std::fabs(fd[i]) <= floor) continue;
    ++result.checked;
    const double rel = std::fabs(static_cast<double>(analytic[i]) - fd[i]) / std::fabs(fd[i]);
    if (rel > result.max_rel) {
      result.max_rel = rel;
      result.worst_index = i;
      result.worst_analytic = analytic[i];
      result.worst_fd = fd[i];
    }
  }
  return result;
}

}  // namespace gradcheck
