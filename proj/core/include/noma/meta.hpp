#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "noma/field.hpp"
#include "noma/render.hpp"
#include "noma/task.hpp"

namespace noma {

// Per-iteration knobs shared by the inner loop and its callers.
struct InnerOptions {
  int rays_per_iter = 256;
  float bg_fraction = 0.25f;
  int samples_per_ray = 32;
  LossWeights weights;
};

struct MetaConfig {
  int N = 300;       // meta-steps
  int q = 40;        // inner iterations per step
  float eta = 1e-2f; // inner learning rate
  float beta = 0.1f; // interpolation step toward adapted parameters
  std::uint64_t seed = 0;
  InnerOptions inner;
};

// q iterations of: pick a random frame, draw a ray batch, render with
// midpoint samples across the object box, take an Adam step at lr=eta on the
// batch loss. Optimizer state is fresh per call; the input vector is left
// untouched. Optional outputs: per-iteration batch loss and wall seconds.
ParamVector inner_adapt(const ParamVector& theta, const FieldArch& arch, const Task& task, int q,
                        float eta, std::mt19937& rng, const InnerOptions& options = {},
                        std::vector<double>* loss_log = nullptr,
                        std::vector<double>* iter_seconds = nullptr);

// Exact interpolation (1 - beta) * meta + beta * adapted, componentwise.
ParamVector reptile_update(const ParamVector& theta_meta, const ParamVector& theta_adapted,
                           float beta);

// N meta-steps over the tasks: each step adapts a copy of the running
// parameters on one task (round-robin over an order reshuffled every epoch)
// and interpolates toward the result. Deterministic per (arch, cfg.seed).
ParamVector meta_train(const std::vector<Task>& tasks, const FieldArch& arch,
                       const MetaConfig& cfg, std::vector<double>* step_losses = nullptr);

}  // namespace noma
