// Hot-path microbenchmarks: field evaluation and backward pass, ray
// compositing, density-guided sampling, nearest-neighbor metrics, and
// isosurface extraction.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "noma/density_grid.hpp"
#include "noma/field.hpp"
#include "noma/kdtree.hpp"
#include "noma/marching_cubes.hpp"
#include "noma/metrics.hpp"
#include "noma/render.hpp"

namespace {

using namespace noma;

FieldArch bench_arch() {
  FieldArch arch;
  arch.hash_levels = 8;
  arch.features_per_level = 2;
  arch.log2_table_size = 14;
  arch.hidden_width = 32;
  arch.hidden_layers = 2;
  return arch;
}

std::vector<Vec3> random_cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937 rng(static_cast<unsigned>(seed));
  std::uniform_real_distribution<float> u(0.f, 1.f);
  std::vector<Vec3> cloud(n);
  for (auto& p : cloud) p = {u(rng), u(rng), u(rng)};
  return cloud;
}

void BM_FieldEval(benchmark::State& state) {
  const FieldArch arch = bench_arch();
  const ParamVector params = init_params(arch, 7);
  const auto points = random_cloud(static_cast<std::size_t>(state.range(0)), 11);
  for (auto _ : state) {
    for (const auto& p : points) {
      FieldOutput out = field_eval(arch, params, p);
      benchmark::DoNotOptimize(out.sigma);
    }
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FieldEval)->Arg(256)->Arg(1024);

void BM_FieldBackward(benchmark::State& state) {
  const FieldArch arch = bench_arch();
  const ParamVector params = init_params(arch, 7);
  const auto points = random_cloud(static_cast<std::size_t>(state.range(0)), 13);
  ParamVector grad(params.size(), 0.f);
  for (auto _ : state) {
    for (const auto& p : points) {
      FieldEvalCache cache;
      FieldOutput out = field_eval(arch, params, p, &cache);
      benchmark::DoNotOptimize(out.sigma);
      field_backward(arch, params, cache, 0.1f, {0.2f, 0.3f, 0.4f}, grad);
    }
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FieldBackward)->Arg(256);

void BM_Composite(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937 rng(17);
  std::uniform_real_distribution<float> u(0.f, 2.f);
  std::vector<float> sigma(static_cast<std::size_t>(n)), delta(static_cast<std::size_t>(n), 0.01f);
  std::vector<float> depth(static_cast<std::size_t>(n));
  std::vector<Vec3> color(static_cast<std::size_t>(n), Vec3{0.5f, 0.5f, 0.5f});
  for (auto& s : sigma) s = u(rng);
  for (std::size_t i = 0; i < depth.size(); ++i) depth[i] = 0.01f * static_cast<float>(i);
  for (auto _ : state) {
    CompositeResult res = composite(sigma, color, delta, depth);
    benchmark::DoNotOptimize(res.term_probs.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_Composite)->Arg(32)->Arg(128);

void BM_GuidedSampling(benchmark::State& state) {
  DensityGrid grid;
  grid.resolution = 48;
  grid.values.assign(static_cast<std::size_t>(48) * 48 * 48, 0.f);
  for (int k = 16; k < 32; ++k)
    for (int j = 16; j < 32; ++j)
      for (int i = 16; i < 32; ++i)
        grid.values[static_cast<std::size_t>((k * 48 + j) * 48 + i)] = 8.f;
  ObjectRay ray;
  ray.origin = {0.5f, 0.5f, -1.f};
  ray.direction = {0.f, 0.f, 1.f};
  Box3 box{{0.f, 0.f, 0.f}, {1.f, 1.f, 1.f}};
  std::mt19937 rng(23);
  for (auto _ : state) {
    auto samples = sample_ray(grid, ray, box, 32, 24, 1e-4f, rng);
    benchmark::DoNotOptimize(samples.depths.data());
  }
}
BENCHMARK(BM_GuidedSampling);

void BM_ChamferKd(benchmark::State& state) {
  const auto a = random_cloud(static_cast<std::size_t>(state.range(0)), 29);
  const auto b = random_cloud(static_cast<std::size_t>(state.range(0)), 31);
  for (auto _ : state) {
    double d = chamfer(a, b);
    benchmark::DoNotOptimize(d);
  }
  state.SetItemsProcessed(state.iterations() * 2 * state.range(0));
}
BENCHMARK(BM_ChamferKd)->Arg(2048);

void BM_MarchingCubes(benchmark::State& state) {
  const int r = static_cast<int>(state.range(0));
  DensityGrid grid;
  grid.resolution = r;
  grid.values.resize(static_cast<std::size_t>(r) * r * r);
  for (int k = 0; k < r; ++k)
    for (int j = 0; j < r; ++j)
      for (int i = 0; i < r; ++i) {
        const float x = static_cast<float>(i) / static_cast<float>(r - 1) - 0.5f;
        const float y = static_cast<float>(j) / static_cast<float>(r - 1) - 0.5f;
        const float z = static_cast<float>(k) / static_cast<float>(r - 1) - 0.5f;
        grid.values[static_cast<std::size_t>((k * r + j) * r + i)] =
            x * x + y * y + z * z < 0.09f ? 10.f : 0.f;
      }
  for (auto _ : state) {
    Mesh mesh = marching_cubes(grid, 5.f);
    benchmark::DoNotOptimize(mesh.vertices.data());
  }
}
BENCHMARK(BM_MarchingCubes)->Arg(48);

}  // namespace

BENCHMARK_MAIN();
