#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "noma/field.hpp"
#include "noma/geom.hpp"
#include "noma/mesh.hpp"
#include "noma/render.hpp"

namespace noma {

// Vertex-centered density lattice over [0,1]^3: vertex (i,j,k) sits at
// (i,j,k)/(R-1), values stored x-fastest.
struct DensityGrid {
  int resolution = 0;
  std::vector<float> values;

  DensityGrid() = default;
  DensityGrid(int r, float fill = 0.f)
      : resolution(r),
        values(static_cast<std::size_t>(r) * r * r, fill) {}

  float& at(int i, int j, int k) {
    return values[static_cast<std::size_t>(i) +
                  static_cast<std::size_t>(resolution) * (j + static_cast<std::size_t>(resolution) * k)];
  }
  float at(int i, int j, int k) const {
    return values[static_cast<std::size_t>(i) +
                  static_cast<std::size_t>(resolution) * (j + static_cast<std::size_t>(resolution) * k)];
  }
  float max_value() const;
};

// Trilinear blend of the 8 enclosing vertices; p clamped to [0,1]^3.
float trilerp(const DensityGrid& grid, const Vec3& p);

struct RayCdf {
  std::vector<float> term_probs;
  std::vector<float> cdf;  // normalized prefix sum; empty when escaped
  bool escaped = false;
};

// Termination probabilities along the sample set with sigma_i taken from the
// grid; escaped when their sum falls below eps.
RayCdf build_ray_cdf(const DensityGrid& grid, const RaySampleSet& samples, float eps);

// Draws n depths by inverting the discrete CDF: bin i = min{i : cdf(i) >= u},
// uniform placement within the bin's depth interval; output sorted with
// recomputed deltas.
RaySampleSet inverse_transform_sample(const RaySampleSet& coarse, const std::vector<float>& cdf,
                                      int n, std::mt19937& rng);

// uniform_samples -> build_ray_cdf -> inverse_transform_sample; any escape
// falls back to plain uniform_samples(ray, bbox, n_fine).
RaySampleSet sample_ray(const DensityGrid& grid, const ObjectRay& ray, const Box3& bbox,
                        int n_coarse, int n_fine, float eps, std::mt19937& rng);

// Field density sampled at every grid vertex.
DensityGrid refresh_grid(const FieldArch& arch, const ParamVector& params, int resolution);

// Half the grid maximum, never below floor_value.
float choose_iso(const DensityGrid& grid, float floor_value = 5.f);

struct BakedPrior {
  DensityGrid grid;
  Mesh mesh;  // vertices in [0,1]^3
};

// refresh_grid + isosurface extraction at iso.
BakedPrior bake_prior(const FieldArch& arch, const ParamVector& params, int resolution, float iso);

// Binary layout: u32 resolution, then R^3 little-endian 32-bit reals,
// x-fastest.
void save_grid(std::ostream& out, const DensityGrid& grid);
DensityGrid load_grid(std::istream& in);

}  // namespace noma
