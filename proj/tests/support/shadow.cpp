#include "shadow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace shadow {
namespace {

constexpr double kSigmaCap = 1e4;
constexpr std::uint32_t kPrimes[3] = {1u, 2654435761u, 805459861u};

int level_res(const noma::FieldArch& arch, int level) {
  const double r = arch.base_resolution * std::pow(static_cast<double>(arch.per_level_scale), level);
  return std::max(1, static_cast<int>(r));
}

std::uint32_t table_row(const noma::FieldArch& arch, int level, std::uint32_t x, std::uint32_t y,
                        std::uint32_t z) {
  const std::uint64_t rows = static_cast<std::uint64_t>(1) << arch.log2_table_size;
  const std::uint32_t verts = static_cast<std::uint32_t>(level_res(arch, level)) + 1;
  const std::uint64_t dense = static_cast<std::uint64_t>(verts) * verts * verts;
  if (dense <= rows) return x + verts * (y + verts * z);
  const std::uint32_t h = x * kPrimes[0] ^ y * kPrimes[1] ^ z * kPrimes[2];
  return h & (static_cast<std::uint32_t>(rows) - 1u);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double density(noma::DensityActivation act, double x) {
  if (act == noma::DensityActivation::kExpClamped)
    return std::min(std::exp(std::min(x, 10.0)), kSigmaCap);
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace

std::vector<double> hash_encode(const noma::FieldArch& arch, const std::vector<float>& params,
                                const std::array<double, 3>& p_in) {
  const int L = arch.hash_levels;
  const int F = arch.features_per_level;
  const std::size_t rows = static_cast<std::size_t>(1) << arch.log2_table_size;
  std::vector<double> features(static_cast<std::size_t>(L) * F, 0.0);
  std::array<double, 3> p;
  for (int a = 0; a < 3; ++a) p[static_cast<std::size_t>(a)] = std::clamp(p_in[static_cast<std::size_t>(a)], 0.0, 1.0);

  for (int l = 0; l < L; ++l) {
    const int res = level_res(arch, l);
    const std::size_t level_off = static_cast<std::size_t>(l) * F * rows;
    const double gx = p[0] * res, gy = p[1] * res, gz = p[2] * res;
    const int cx = std::min(static_cast<int>(gx), res - 1);
    const int cy = std::min(static_cast<int>(gy), res - 1);
    const int cz = std::min(static_cast<int>(gz), res - 1);
    const double fx = gx - cx, fy = gy - cy, fz = gz - cz;
    for (int corner = 0; corner < 8; ++corner) {
      const int dx = corner & 1, dy = (corner >> 1) & 1, dz = (corner >> 2) & 1;
      const double w =
          (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy) * (dz ? fz : 1.0 - fz);
      const std::uint32_t row = table_row(arch, l, static_cast<std::uint32_t>(cx + dx),
                                          static_cast<std::uint32_t>(cy + dy),
                                          static_cast<std::uint32_t>(cz + dz));
      const std::size_t entry = level_off + static_cast<std::size_t>(row) * F;
      for (int f = 0; f < F; ++f)
        features[static_cast<std::size_t>(l) * F + f] +=
            w * static_cast<double>(params[entry + static_cast<std::size_t>(f)]);
    }
  }
  return features;
}

ShadowOutput field_eval(const noma::FieldArch& arch, const std::vector<float>& params,
                        const std::array<double, 3>& p) {
  std::vector<double> act = hash_encode(arch, params, p);

  std::size_t off = static_cast<std::size_t>(arch.hash_levels) * arch.features_per_level *
                    (static_cast<std::size_t>(1) << arch.log2_table_size);
  int in_width = arch.hash_levels * arch.features_per_level;
  for (int l = 0; l < arch.hidden_layers; ++l) {
    const int out_width = arch.hidden_width;
    std::vector<double> next(static_cast<std::size_t>(out_width), 0.0);
    const std::size_t w_off = off;
    const std::size_t b_off = off + static_cast<std::size_t>(out_width) * in_width;
    for (int o = 0; o < out_width; ++o) {
      double s = static_cast<double>(params[b_off + static_cast<std::size_t>(o)]);
      for (int i = 0; i < in_width; ++i)
        s += static_cast<double>(params[w_off + static_cast<std::size_t>(o) * in_width + i]) *
             act[static_cast<std::size_t>(i)];
      next[static_cast<std::size_t>(o)] = s > 0.0 ? s : 0.0;
    }
    act = std::move(next);
    off = b_off + static_cast<std::size_t>(out_width);
    in_width = out_width;
  }

  std::array<double, 4> raw{};
  const std::size_t w_off = off;
  const std::size_t b_off = off + static_cast<std::size_t>(4) * in_width;
  for (int o = 0; o < 4; ++o) {
    double s = static_cast<double>(params[b_off + static_cast<std::size_t>(o)]);
    for (int i = 0; i < in_width; ++i)
      s += static_cast<double>(params[w_off + static_cast<std::size_t>(o) * in_width + i]) *
           act[static_cast<std::size_t>(i)];
    raw[static_cast<std::size_t>(o)] = s;
  }

  ShadowOutput out;
  out.sigma = density(arch.density_activation, raw[0]);
  out.rgb = {sigmoid(raw[1]), sigmoid(raw[2]), sigmoid(raw[3])};
  return out;
}

std::vector<std::array<double, 3>> draw_bg_colors(const std::vector<noma::ObjectRay>& rays,
                                                  const std::vector<noma::RaySampleSet>& samples,
                                                  std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> unit(0.f, 1.f);
  std::vector<std::array<double, 3>> colors;
  for (std::size_t r = 0; r < rays.size(); ++r) {
    if (samples[r].escaped || samples[r].size() == 0) continue;
    if (rays[r].kind != noma::RayKind::kBackground) continue;
    const double c0 = unit(rng), c1 = unit(rng), c2 = unit(rng);
    colors.push_back({c0, c1, c2});
  }
  return colors;
}

double batch_loss(const noma::FieldArch& arch, const std::vector<float>& params,
                  const std::vector<noma::ObjectRay>& rays,
                  const std::vector<noma::RaySampleSet>& samples,
                  const noma::LossWeights& weights,
                  const std::vector<std::array<double, 3>>& bg_colors) {
  if (rays.size() != samples.size()) throw std::invalid_argument("shadow::batch_loss: shape mismatch");
  double color_term = 0.0, depth_term = 0.0, sigma_term = 0.0;
  std::size_t bg_used = 0;

  for (std::size_t r = 0; r < rays.size(); ++r) {
    const noma::RaySampleSet& set = samples[r];
    const std::size_t n = set.size();
    if (set.escaped || n == 0) continue;

    // Product-form compositing on shadow field outputs.
    double transmittance = 1.0;
    std::array<double, 3> chat{0.0, 0.0, 0.0};
    double dhat = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const noma::Vec3& q = set.positions[i];
      const std::array<double, 3> pos{static_cast<double>(q.x), static_cast<double>(q.y),
                                      static_cast<double>(q.z)};
      const ShadowOutput o = shadow::field_eval(arch, params, pos);
      const double a = 1.0 - std::exp(-o.sigma * static_cast<double>(set.deltas[i]));
      const double rho = a * transmittance;
      for (int c = 0; c < 3; ++c) chat[static_cast<std::size_t>(c)] += rho * o.rgb[static_cast<std::size_t>(c)];
      dhat += rho * static_cast<double>(set.depths[i]);
      transmittance *= 1.0 - a;
      if (rays[r].kind == noma::RayKind::kBackground) sigma_term += o.sigma;
    }

    std::array<double, 3> target{static_cast<double>(rays[r].target_color.x),
                                 static_cast<double>(rays[r].target_color.y),
                                 static_cast<double>(rays[r].target_color.z)};
    if (rays[r].kind == noma::RayKind::kBackground) {
      if (bg_used >= bg_colors.size())
        throw std::invalid_argument("shadow::batch_loss: not enough background colors");
      target = bg_colors[bg_used++];
    }
    const double dx = chat[0] - target[0], dy = chat[1] - target[1], dz = chat[2] - target[2];
    color_term += std::sqrt(dx * dx + dy * dy + dz * dz);

    if (rays[r].kind == noma::RayKind::kObject && rays[r].target_depth)
      depth_term += std::fabs(dhat - static_cast<double>(*rays[r].target_depth));
  }
  return color_term + static_cast<double>(weights.lambda_d) * depth_term +
         static_cast<double>(weights.lambda_sigma) * sigma_term;
}

}  // namespace shadow
