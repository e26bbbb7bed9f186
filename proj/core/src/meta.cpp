#include "noma/meta.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "noma/errors.hpp"

namespace noma {
namespace {

// Fixed-increment seed derivation so every meta-step gets an independent,
// reproducible stream.
std::uint32_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t s = base * 0x9E3779B97F4A7C15ULL + salt * 0xBF58476D1CE4E5B9ULL + 1;
  s ^= s >> 31;
  s *= 0x94D049BB133111EBULL;
  s ^= s >> 29;
  return static_cast<std::uint32_t>(s ^ (s >> 32));
}

}  // namespace

ParamVector inner_adapt(const ParamVector& theta, const FieldArch& arch, const Task& task, int q,
                        float eta, std::mt19937& rng, const InnerOptions& options,
                        std::vector<double>* loss_log, std::vector<double>* iter_seconds) {
  if (task.frames.empty()) throw DataError("inner_adapt: task has no frames");
  if (theta.size() != param_count(arch))
    throw DataError("inner_adapt: parameter vector does not match architecture");
  if (loss_log) loss_log->clear();
  if (iter_seconds) iter_seconds->clear();

  ParamVector params = theta;
  AdamState adam(params.size(), eta);
  ParamVector grad(params.size(), 0.f);
  const Box3 box = task.object_box();
  std::uniform_int_distribution<std::size_t> frame_pick(0, task.frames.size() - 1);

  std::vector<RaySampleSet> samples;
  std::vector<std::vector<FieldOutput>> outputs;
  std::vector<std::vector<FieldEvalCache>> caches;
  for (int iter = 0; iter < q; ++iter) {
    auto t0 = std::chrono::steady_clock::now();
    const std::size_t fi = frame_pick(rng);
    const Frame& frame = task.frames[fi];
    auto rays = generate_rays(task.cameras[fi], frame.rgb, frame.depth, frame.mask, 1,
                              task.gt_pose, task.gt_size, options.rays_per_iter,
                              options.bg_fraction, rng);

    samples.clear();
    outputs.clear();
    caches.clear();
    samples.reserve(rays.size());
    outputs.reserve(rays.size());
    caches.reserve(rays.size());
    for (const ObjectRay& ray : rays) {
      RaySampleSet set = uniform_samples(ray, box, options.samples_per_ray);
      std::vector<FieldOutput> outs(set.size());
      std::vector<FieldEvalCache> cache(set.size());
      for (std::size_t i = 0; i < set.size(); ++i)
        outs[i] = field_eval(arch, params, set.positions[i], &cache[i]);
      samples.push_back(std::move(set));
      outputs.push_back(std::move(outs));
      caches.push_back(std::move(cache));
    }

    LossResult loss = batch_loss(rays, samples, outputs, options.weights, rng);
    std::fill(grad.begin(), grad.end(), 0.f);
    for (std::size_t r = 0; r < rays.size(); ++r)
      for (std::size_t i = 0; i < loss.grads[r].size(); ++i)
        field_backward(arch, params, caches[r][i], loss.grads[r][i].d_sigma,
                       loss.grads[r][i].d_rgb, grad);
    adam_step(adam, params, grad);

    if (loss_log) loss_log->push_back(loss.total);
    if (iter_seconds)
      iter_seconds->push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return params;
}

ParamVector reptile_update(const ParamVector& theta_meta, const ParamVector& theta_adapted,
                           float beta) {
  if (theta_meta.size() != theta_adapted.size())
    throw DataError("reptile_update: parameter vectors differ in length");
  ParamVector out(theta_meta.size());
  const float keep = 1.f - beta;
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = keep * theta_meta[i] + beta * theta_adapted[i];
  return out;
}

ParamVector meta_train(const std::vector<Task>& tasks, const FieldArch& arch,
                       const MetaConfig& cfg, std::vector<double>* step_losses) {
  if (tasks.empty()) throw DataError("meta_train: no tasks");
  if (step_losses) step_losses->clear();

  ParamVector theta = init_params(arch, cfg.seed);
  std::vector<std::size_t> order(tasks.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<double> losses;
  for (int step = 0; step < cfg.N; ++step) {
    const std::size_t slot = static_cast<std::size_t>(step) % tasks.size();
    if (slot == 0) {
      std::mt19937 shuffle_rng(
          derive_seed(cfg.seed, 0xE9C6ULL + static_cast<std::size_t>(step) / tasks.size()));
      std::shuffle(order.begin(), order.end(), shuffle_rng);
    }
    std::mt19937 inner_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(step)));
    ParamVector adapted = inner_adapt(theta, arch, tasks[order[slot]], cfg.q, cfg.eta, inner_rng,
                                      cfg.inner, step_losses ? &losses : nullptr);
    theta = reptile_update(theta, adapted, cfg.beta);
    if (step_losses && !losses.empty())
      step_losses->push_back(std::accumulate(losses.begin(), losses.end(), 0.0) /
                             static_cast<double>(losses.size()));
  }
  return theta;
}

}  // namespace noma
