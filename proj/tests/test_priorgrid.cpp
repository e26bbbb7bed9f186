// Density-grid interpolation, ray CDF construction, guided inverse-transform
// sampling, grid refresh from a field, and prior baking.

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "noma/density_grid.hpp"
#include "noma/errors.hpp"
#include "oracle.hpp"
#include "testutil.hpp"

using noma::Box3;
using noma::DensityGrid;
using noma::ObjectRay;
using noma::RaySampleSet;
using noma::Vec3;

namespace {

DensityGrid linear_field_grid(int r) {
  DensityGrid g(r);
  for (int k = 0; k < r; ++k)
    for (int j = 0; j < r; ++j)
      for (int i = 0; i < r; ++i) {
        const float x = static_cast<float>(i) / (r - 1);
        const float y = static_cast<float>(j) / (r - 1);
        const float z = static_cast<float>(k) / (r - 1);
        g.at(i, j, k) = 2.f * x + 3.f * y + 5.f * z;
      }
  return g;
}

ObjectRay z_axis_ray() {
  ObjectRay ray;
  ray.origin = {0.5f, 0.5f, -0.5f};
  ray.direction = {0.f, 0.f, 1.f};
  return ray;
}

const Box3 kUnitBox{{0.f, 0.f, 0.f}, {1.f, 1.f, 1.f}};

}  // namespace

TEST_CASE("trilerp: exact at grid vertices and for constant grids") {
  DensityGrid g(5);
  std::mt19937 rng(1);
  for (float& v : g.values) v = testutil::uniform(rng, 0.f, 10.f);
  for (int k = 0; k < 5; ++k)
    for (int j = 0; j < 5; ++j)
      for (int i = 0; i < 5; ++i) {
        // (R-1) = 4 is a power of two, so vertex coordinates are exact floats.
        const Vec3 p{i / 4.f, j / 4.f, k / 4.f};
        CHECK(noma::trilerp(g, p) == g.at(i, j, k));
      }
  const DensityGrid c(7, 3.25f);
  for (int round = 0; round < 50; ++round)
    CHECK(noma::trilerp(c, testutil::random_point(rng)) == doctest::Approx(3.25f).epsilon(1e-6));
}

TEST_CASE("trilerp: reproduces a linear field exactly and matches the 8-corner oracle") {
  const DensityGrid g = linear_field_grid(9);
  std::mt19937 rng(2);
  for (int round = 0; round < 100; ++round) {
    const Vec3 p = testutil::random_point(rng);
    const float expect = 2.f * p.x + 3.f * p.y + 5.f * p.z;
    CHECK(noma::trilerp(g, p) == doctest::Approx(expect).epsilon(1e-5));
  }
  DensityGrid random_grid(6);
  for (float& v : random_grid.values) v = testutil::uniform(rng, -4.f, 4.f);
  for (int round = 0; round < 100; ++round) {
    const Vec3 p = testutil::random_point(rng);
    const double ref =
        oracle::trilerp_ref(random_grid.values, random_grid.resolution, p.x, p.y, p.z);
    CHECK(noma::trilerp(random_grid, p) == doctest::Approx(ref).epsilon(1e-5));
  }
}

TEST_CASE("trilerp: continuous across cell boundaries") {
  DensityGrid g(8);
  std::mt19937 rng(3);
  for (float& v : g.values) v = testutil::uniform(rng, 0.f, 20.f);
  for (int round = 0; round < 100; ++round) {
    // A random point snapped to a random cell boundary along one axis.
    Vec3 p = testutil::random_point(rng, 0.05f, 0.95f);
    const int axis = testutil::uniform_int(rng, 0, 2);
    p[axis] = static_cast<float>(testutil::uniform_int(rng, 1, 6)) / 7.f;
    Vec3 lo = p, hi = p;
    lo[axis] -= 1e-6f;
    hi[axis] += 1e-6f;
    CHECK(std::fabs(noma::trilerp(g, lo) - noma::trilerp(g, hi)) < 1e-3f);
  }
}

TEST_CASE("build_ray_cdf: zero grid escapes under the default epsilon") {
  const DensityGrid g(8, 0.f);
  const RaySampleSet samples = noma::uniform_samples(z_axis_ray(), kUnitBox, 16);
  const noma::RayCdf cdf = noma::build_ray_cdf(g, samples, 1e-4f);
  CHECK(cdf.escaped);
  CHECK(cdf.cdf.empty());
}

TEST_CASE("build_ray_cdf: constant density gives the geometric termination sequence") {
  const DensityGrid g(8, 1.f);
  // Hand-built sample set: 4 samples, delta 0.1 each.
  RaySampleSet samples;
  samples.origin = {0.5f, 0.5f, 0.f};
  samples.direction = {0.f, 0.f, 1.f};
  samples.bbox = kUnitBox;
  samples.t_entry = 0.f;
  samples.t_exit = 0.4f;
  for (int i = 0; i < 4; ++i) {
    samples.depths.push_back(0.05f + 0.1f * i);
    samples.deltas.push_back(0.1f);
    samples.positions.push_back({0.5f, 0.5f, 0.05f + 0.1f * i});
  }
  const noma::RayCdf out = noma::build_ray_cdf(g, samples, 1e-4f);
  REQUIRE_FALSE(out.escaped);
  const double rho = 1.0 - std::exp(-0.1);
  double expect = rho, acc = 0.0, total = 0.0;
  for (int i = 0; i < 4; ++i) {
    CHECK(out.term_probs[i] == doctest::Approx(expect).epsilon(1e-6));
    total += expect;
    expect *= 1.0 - rho;
  }
  for (int i = 0; i < 4; ++i) {
    acc += out.term_probs[i];
    CHECK(out.cdf[i] == doctest::Approx(acc / total).epsilon(1e-6));
  }
  CHECK(out.cdf[3] == 1.f);
}

TEST_CASE("build_ray_cdf: cdf is non-decreasing and ends at one") {
  std::mt19937 rng(5);
  for (int round = 0; round < 20; ++round) {
    DensityGrid g(6);
    for (float& v : g.values) v = testutil::uniform(rng, 0.f, 5.f);
    const RaySampleSet samples = noma::uniform_samples(z_axis_ray(), kUnitBox, 12);
    const noma::RayCdf out = noma::build_ray_cdf(g, samples, 1e-4f);
    if (out.escaped) continue;
    for (std::size_t i = 1; i < out.cdf.size(); ++i) CHECK(out.cdf[i] >= out.cdf[i - 1]);
    CHECK(out.cdf.back() == doctest::Approx(1.f).epsilon(1e-6));
  }
}

TEST_CASE("build_ray_cdf: escape flag is equivalent to the termination mass test") {
  const RaySampleSet samples = noma::uniform_samples(z_axis_ray(), kUnitBox, 16);
  for (float c = 1e-6f; c < 1e-2f; c *= 1.7f) {
    const DensityGrid g(4, c);
    const noma::RayCdf out = noma::build_ray_cdf(g, samples, 1e-4f);
    double total = 0.0;
    for (float p : out.term_probs) total += p;
    CHECK(out.escaped == (total < 1e-4));
  }
}

TEST_CASE("inverse_transform_sample: all mass in one bin confines every draw to it") {
  const RaySampleSet coarse = noma::uniform_samples(z_axis_ray(), kUnitBox, 8);
  std::vector<float> cdf(8, 0.f);
  for (int i = 2; i < 8; ++i) cdf[i] = 1.f;  // bin 2 holds all mass
  std::mt19937 rng(7);
  const RaySampleSet fine = noma::inverse_transform_sample(coarse, cdf, 64, rng);
  REQUIRE(fine.size() == 64);
  const float lo = coarse.depths[2] - 0.5f * coarse.deltas[2];
  const float hi = coarse.depths[2] + 0.5f * coarse.deltas[2];
  for (float d : fine.depths) {
    CHECK(d >= lo - 1e-5f);
    CHECK(d <= hi + 1e-5f);
  }
}

TEST_CASE("inverse_transform_sample: deterministic, sorted, in-span, forward-difference deltas") {
  const RaySampleSet coarse = noma::uniform_samples(z_axis_ray(), kUnitBox, 8);
  const DensityGrid g(6, 2.f);
  const noma::RayCdf cdf = noma::build_ray_cdf(g, coarse, 1e-4f);
  REQUIRE_FALSE(cdf.escaped);
  auto draw = [&] {
    std::mt19937 rng(11);
    return noma::inverse_transform_sample(coarse, cdf.cdf, 32, rng);
  };
  const RaySampleSet a = draw();
  const RaySampleSet b = draw();
  CHECK(a.depths == b.depths);
  for (std::size_t i = 1; i < a.size(); ++i) CHECK(a.depths[i] > a.depths[i - 1]);
  for (float d : a.depths) {
    CHECK(d >= a.t_entry);
    CHECK(d <= a.t_exit);
  }
  for (std::size_t i = 0; i + 1 < a.size(); ++i)
    CHECK(a.deltas[i] == doctest::Approx(a.depths[i + 1] - a.depths[i]).epsilon(1e-6));
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.positions[i].x == doctest::Approx(0.5f));
    CHECK(a.positions[i].z == doctest::Approx(a.depths[i] - 0.5f).epsilon(1e-5));
  }
}

TEST_CASE("inverse_transform_sample: bin frequencies match term_probs under chi-square") {
  const RaySampleSet coarse = noma::uniform_samples(z_axis_ray(), kUnitBox, 8);
  const DensityGrid g(6, 1.f);  // geometric bin masses, all comfortably large
  const noma::RayCdf cdf = noma::build_ray_cdf(g, coarse, 1e-4f);
  REQUIRE_FALSE(cdf.escaped);

  const int n = 100000;
  std::mt19937 rng(13);
  const RaySampleSet fine = noma::inverse_transform_sample(coarse, cdf.cdf, n, rng);
  std::vector<int> counts(8, 0);
  for (float d : fine.depths) {
    int bin = static_cast<int>((d - coarse.depths[0] + 0.5f * coarse.deltas[0]) /
                               coarse.deltas[0]);
    bin = std::clamp(bin, 0, 7);
    counts[bin] += 1;
  }
  double total_mass = 0.0;
  for (float p : cdf.term_probs) total_mass += p;
  double stat = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double expect = n * cdf.term_probs[i] / total_mass;
    REQUIRE(expect > 100.0);
    stat += (counts[i] - expect) * (counts[i] - expect) / expect;
  }
  const double p_value = oracle::chi_square_sf_numeric(stat, 7);
  INFO("chi-square stat ", stat, " p ", p_value);
  CHECK(p_value > 0.01);
}

TEST_CASE("sample_ray: zero grid falls back to exactly the uniform sample set") {
  const DensityGrid g(8, 0.f);
  const ObjectRay ray = z_axis_ray();
  std::mt19937 rng(17);
  const RaySampleSet guided = noma::sample_ray(g, ray, kUnitBox, 32, 24, 1e-4f, rng);
  const RaySampleSet uniform = noma::uniform_samples(ray, kUnitBox, 24);
  REQUIRE_FALSE(guided.escaped);
  CHECK(guided.depths == uniform.depths);
  CHECK(guided.deltas == uniform.deltas);
  for (std::size_t i = 0; i < guided.size(); ++i) {
    CHECK(guided.positions[i].x == uniform.positions[i].x);
    CHECK(guided.positions[i].y == uniform.positions[i].y);
    CHECK(guided.positions[i].z == uniform.positions[i].z);
  }
}

TEST_CASE("sample_ray: a dense slab captures at least 80% of guided samples") {
  // Slab z in [0.4, 0.5] at density 50; the measured window widens by one
  // grid cell plus one coarse bin for interpolation and in-bin placement.
  const int r = 101;
  DensityGrid g(r, 0.f);
  for (int k = 0; k < r; ++k) {
    const float z = static_cast<float>(k) / (r - 1);
    if (z >= 0.4f && z <= 0.5f)
      for (int j = 0; j < r; ++j)
        for (int i = 0; i < r; ++i) g.at(i, j, k) = 50.f;
  }
  const ObjectRay ray = z_axis_ray();  // slab depth range [0.9, 1.0]
  const float smear = 1.f / (r - 1) + 1.f / 32.f;
  std::mt19937 rng(19);
  int inside = 0, total = 0;
  for (int round = 0; round < 100; ++round) {
    const RaySampleSet s = noma::sample_ray(g, ray, kUnitBox, 32, 100, 1e-4f, rng);
    REQUIRE_FALSE(s.escaped);
    for (float d : s.depths) {
      total += 1;
      if (d >= 0.9f - smear && d <= 1.0f + smear) inside += 1;
    }
  }
  CHECK(total == 10000);
  INFO("fraction inside slab ", static_cast<double>(inside) / total);
  CHECK(inside >= 8000);
}

TEST_CASE("sample_ray: default-sized call returns 32 sorted samples") {
  DensityGrid g(16, 0.5f);
  std::mt19937 rng(23);
  const RaySampleSet s = noma::sample_ray(g, z_axis_ray(), kUnitBox, 32, 32, 1e-4f, rng);
  REQUIRE_FALSE(s.escaped);
  CHECK(s.size() == 32);
  for (std::size_t i = 1; i < s.size(); ++i) CHECK(s.depths[i] > s.depths[i - 1]);
}

TEST_CASE("refresh_grid: vertex values equal pointwise field evaluation") {
  std::mt19937 rng(29);
  const noma::FieldArch arch = testutil::random_tiny_arch(rng);
  const noma::ParamVector params = testutil::random_params_for_gradients(arch, rng);
  // R-1 = 16 is a power of two, so the vertex position (i,j,k)/(R-1) is the
  // same float no matter how the division is associated.
  const DensityGrid g = noma::refresh_grid(arch, params, 17);
  CHECK(g.resolution == 17);
  CHECK(g.values.size() == 17u * 17u * 17u);
  for (int round = 0; round < 50; ++round) {
    const int i = testutil::uniform_int(rng, 0, 16);
    const int j = testutil::uniform_int(rng, 0, 16);
    const int k = testutil::uniform_int(rng, 0, 16);
    const Vec3 p{i / 16.f, j / 16.f, k / 16.f};
    CHECK(g.at(i, j, k) == noma::field_eval(arch, params, p).sigma);
  }
}

TEST_CASE("refresh_grid: position-independent field gives a constant grid") {
  // All-zero parameters: features vanish, so the density is the same number
  // at every vertex.
  std::mt19937 rng(31);
  const noma::FieldArch arch = testutil::random_tiny_arch(rng);
  const noma::ParamVector params(noma::param_count(arch), 0.f);
  const DensityGrid g = noma::refresh_grid(arch, params, 8);
  const float c = noma::field_eval(arch, params, {0.3f, 0.7f, 0.1f}).sigma;
  for (float v : g.values) CHECK(v == c);
}

TEST_CASE("refresh_grid: full-size invocation produces 64^3 values") {
  noma::FieldArch arch;
  arch.hash_levels = 1;
  arch.features_per_level = 1;
  arch.log2_table_size = 4;
  arch.hidden_width = 8;
  arch.hidden_layers = 1;
  const noma::ParamVector params = noma::init_params(arch, 1);
  const DensityGrid g = noma::refresh_grid(arch, params, 64);
  CHECK(g.values.size() == 64u * 64u * 64u);
}

TEST_CASE("choose_iso: half the maximum with a floor") {
  DensityGrid g(4, 0.f);
  g.at(1, 2, 3) = 30.f;
  CHECK(noma::choose_iso(g) == 15.f);
  DensityGrid low(4, 0.f);
  low.at(0, 0, 0) = 4.f;
  CHECK(noma::choose_iso(low) == 5.f);
  CHECK(noma::choose_iso(DensityGrid(4, 0.f)) == 5.f);
  CHECK(noma::choose_iso(low, 1.f) == 2.f);
}

TEST_CASE("bake_prior: grid matches refresh_grid bit-for-bit; zero field bakes empty") {
  std::mt19937 rng(37);
  const noma::FieldArch arch = testutil::random_tiny_arch(rng);
  const noma::ParamVector params = testutil::random_params_for_gradients(arch, rng);
  const noma::BakedPrior baked = noma::bake_prior(arch, params, 24, 1.f);
  const DensityGrid direct = noma::refresh_grid(arch, params, 24);
  CHECK(baked.grid.values == direct.values);

  // Zero parameters give a constant density around 1, far below iso 5.
  const noma::ParamVector zeros(noma::param_count(arch), 0.f);
  const noma::BakedPrior empty = noma::bake_prior(arch, zeros, 16, 5.f);
  CHECK(empty.mesh.vertices.empty());
  CHECK(empty.mesh.triangles.empty());
}

TEST_CASE("bake_prior: mesh vertices lie on the iso-surface of the baked grid") {
  // Find a random field whose baked mesh is non-empty, then require every
  // vertex to interpolate to the iso value and stay inside the unit cube.
  std::mt19937 rng(41);
  for (int attempt = 0; attempt < 40; ++attempt) {
    const noma::FieldArch arch = testutil::random_tiny_arch(rng);
    noma::ParamVector params = testutil::random_params_for_gradients(arch, rng);
    const DensityGrid grid = noma::refresh_grid(arch, params, 24);
    const float iso = noma::choose_iso(grid, 0.05f);
    const noma::BakedPrior baked = noma::bake_prior(arch, params, 24, iso);
    if (baked.mesh.vertices.size() < 50) continue;
    for (const Vec3& v : baked.mesh.vertices) {
      CHECK(v.x >= 0.f);
      CHECK(v.x <= 1.f);
      CHECK(v.y >= 0.f);
      CHECK(v.y <= 1.f);
      CHECK(v.z >= 0.f);
      CHECK(v.z <= 1.f);
      CHECK(std::fabs(noma::trilerp(grid, v) - iso) <= 5e-3f * (1.f + std::fabs(iso)));
    }
    return;
  }
  FAIL("no random field produced a non-empty baked mesh");
}

TEST_CASE("save_grid/load_grid: binary round-trip is bit-exact") {
  std::mt19937 rng(43);
  DensityGrid g(9);
  for (float& v : g.values) v = testutil::uniform(rng, 0.f, 40.f);
  std::stringstream buf;
  noma::save_grid(buf, g);
  const DensityGrid back = noma::load_grid(buf);
  CHECK(back.resolution == 9);
  CHECK(back.values == g.values);

  DensityGrid bad(4, 1.f);
  bad.at(2, 1, 0) = -0.5f;  // densities are non-negative by contract
  std::stringstream bad_buf;
  noma::save_grid(bad_buf, bad);
  CHECK_THROWS_AS(noma::load_grid(bad_buf), noma::DataError);
}
