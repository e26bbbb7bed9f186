#include "noma/density_grid.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "noma/errors.hpp"
#include "noma/marching_cubes.hpp"
#include "noma/threading.hpp"

namespace noma {

float DensityGrid::max_value() const {
  float m = 0.f;
  for (float v : values) m = std::fmax(m, v);
  return m;
}

float trilerp(const DensityGrid& grid, const Vec3& p_in) {
  const int R = grid.resolution;
  Vec3 p{std::clamp(p_in.x, 0.f, 1.f), std::clamp(p_in.y, 0.f, 1.f),
         std::clamp(p_in.z, 0.f, 1.f)};
  float gx = p.x * static_cast<float>(R - 1);
  float gy = p.y * static_cast<float>(R - 1);
  float gz = p.z * static_cast<float>(R - 1);
  int i = std::min(static_cast<int>(gx), R - 2);
  int j = std::min(static_cast<int>(gy), R - 2);
  int k = std::min(static_cast<int>(gz), R - 2);
  float fx = gx - static_cast<float>(i);
  float fy = gy - static_cast<float>(j);
  float fz = gz - static_cast<float>(k);

  float c00 = grid.at(i, j, k) * (1.f - fx) + grid.at(i + 1, j, k) * fx;
  float c10 = grid.at(i, j + 1, k) * (1.f - fx) + grid.at(i + 1, j + 1, k) * fx;
  float c01 = grid.at(i, j, k + 1) * (1.f - fx) + grid.at(i + 1, j, k + 1) * fx;
  float c11 = grid.at(i, j + 1, k + 1) * (1.f - fx) + grid.at(i + 1, j + 1, k + 1) * fx;
  float c0 = c00 * (1.f - fy) + c10 * fy;
  float c1 = c01 * (1.f - fy) + c11 * fy;
  return c0 * (1.f - fz) + c1 * fz;
}

RayCdf build_ray_cdf(const DensityGrid& grid, const RaySampleSet& samples, float eps) {
  if (samples.escaped) throw NumericError("build_ray_cdf: escaped sample set");
  const std::size_t n = samples.size();
  RayCdf out;
  out.term_probs.resize(n);
  double transmittance = 1.0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double sigma = trilerp(grid, samples.positions[i]);
    double a = 1.0 - std::exp(-sigma * samples.deltas[i]);
    double rho = a * transmittance;
    out.term_probs[i] = static_cast<float>(rho);
    total += rho;
    transmittance *= 1.0 - a;
  }
  if (total < eps) {
    out.escaped = true;
    return out;
  }
  out.cdf.resize(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += out.term_probs[i];
    out.cdf[i] = static_cast<float>(acc / total);
  }
  out.cdf[n - 1] = 1.f;
  return out;
}

RaySampleSet inverse_transform_sample(const RaySampleSet& coarse, const std::vector<float>& cdf,
                                      int n, std::mt19937& rng) {
  if (cdf.size() != coarse.size() || coarse.size() == 0)
    throw NumericError("inverse_transform_sample: invalid cdf");
  RaySampleSet out;
  out.origin = coarse.origin;
  out.direction = coarse.direction;
  out.bbox = coarse.bbox;
  out.t_entry = coarse.t_entry;
  out.t_exit = coarse.t_exit;

  std::uniform_real_distribution<float> unit(0.f, 1.f);
  out.depths.resize(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    float u = unit(rng);
    std::size_t bin = static_cast<std::size_t>(
        std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    bin = std::min(bin, coarse.size() - 1);
    float lo = coarse.depths[bin] - 0.5f * coarse.deltas[bin];
    float hi = coarse.depths[bin] + 0.5f * coarse.deltas[bin];
    lo = std::fmax(lo, coarse.t_entry);
    hi = std::fmin(hi, coarse.t_exit);
    out.depths[static_cast<std::size_t>(s)] = lo + unit(rng) * (hi - lo);
  }
  std::sort(out.depths.begin(), out.depths.end());
  for (std::size_t i = 1; i < out.depths.size(); ++i)
    if (out.depths[i] <= out.depths[i - 1]) out.depths[i] = out.depths[i - 1] + 1e-6f;

  const std::size_t m = out.depths.size();
  out.deltas.resize(m);
  for (std::size_t i = 0; i + 1 < m; ++i) out.deltas[i] = out.depths[i + 1] - out.depths[i];
  out.deltas[m - 1] = std::fmax(out.t_exit - out.depths[m - 1], 1e-6f);
  out.positions.resize(m);
  for (std::size_t i = 0; i < m; ++i)
    out.positions[i] = normalize_in_box(out.origin + out.direction * out.depths[i], out.bbox);
  return out;
}

RaySampleSet sample_ray(const DensityGrid& grid, const ObjectRay& ray, const Box3& bbox,
                        int n_coarse, int n_fine, float eps, std::mt19937& rng) {
  RaySampleSet coarse = uniform_samples(ray, bbox, n_coarse);
  if (coarse.escaped) return uniform_samples(ray, bbox, n_fine);
  RayCdf cdf = build_ray_cdf(grid, coarse, eps);
  if (cdf.escaped) return uniform_samples(ray, bbox, n_fine);
  return inverse_transform_sample(coarse, cdf.cdf, n_fine, rng);
}

DensityGrid refresh_grid(const FieldArch& arch, const ParamVector& params, int resolution) {
  DensityGrid grid(resolution);
  const float scale = 1.f / static_cast<float>(resolution - 1);
  parallel_for(resolution, [&](int k) {
    FieldEvalCache cache;
    for (int j = 0; j < resolution; ++j)
      for (int i = 0; i < resolution; ++i) {
        Vec3 p{static_cast<float>(i) * scale, static_cast<float>(j) * scale,
               static_cast<float>(k) * scale};
        grid.at(i, j, k) = field_eval(arch, params, p, &cache).sigma;
      }
  });
  return grid;
}

float choose_iso(const DensityGrid& grid, float floor_value) {
  return std::fmax(0.5f * grid.max_value(), floor_value);
}

BakedPrior bake_prior(const FieldArch& arch, const ParamVector& params, int resolution, float iso) {
  BakedPrior baked;
  baked.grid = refresh_grid(arch, params, resolution);
  baked.mesh = marching_cubes(baked.grid, iso);
  return baked;
}

void save_grid(std::ostream& out, const DensityGrid& grid) {
  std::uint32_t r = static_cast<std::uint32_t>(grid.resolution);
  out.write(reinterpret_cast<const char*>(&r), sizeof(r));
  out.write(reinterpret_cast<const char*>(grid.values.data()),
            static_cast<std::streamsize>(grid.values.size() * sizeof(float)));
  if (!out) throw DataError("save_grid: write failed");
}

DensityGrid load_grid(std::istream& in) {
  std::uint32_t r = 0;
  in.read(reinterpret_cast<char*>(&r), sizeof(r));
  if (!in || r < 2 || r > 4096) throw DataError("load_grid: bad resolution header");
  DensityGrid grid(static_cast<int>(r));
  in.read(reinterpret_cast<char*>(grid.values.data()),
          static_cast<std::streamsize>(grid.values.size() * sizeof(float)));
  if (!in) throw DataError("load_grid: truncated grid data");
  for (float v : grid.values)
    if (!(v >= 0.f) || !std::isfinite(v)) throw DataError("load_grid: invalid density value");
  return grid;
}

}  // namespace noma
