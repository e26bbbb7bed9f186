#pragma once

#include <iosfwd>
#include <string>

#include "noma/config.hpp"

namespace noma {

// Pipeline entry points shared by the command-line binary and the tests.
// Each command reads its inputs from the flat key=value Config, writes its
// artifacts to disk, and prints a short human-readable summary to `out`.
// Required keys missing from the config raise UsageError naming the key;
// unreadable or inconsistent inputs raise DataError. Every command is
// deterministic given the `seed` key (default 0); wall-time fields in
// reports are the only exception.

// Renders disjoint train/test task sets for each listed category under
// `out`/<category>/{train,test}/task_###, and optionally one multi-object
// sequence under `out`/scenes/scene_000.
//
// keys: out, categories (comma list)     required
//       train_count, test_count          required counts per category
//       seed=0, resolution=48, frames_min=6, frames_max=10
//       scene_objects (comma list)       optional; emits the sequence
//       scene_frames=30, scene_resolution=resolution
void cmd_gen_tasks(const Config& cfg, std::ostream& out);

// Runs the architecture search on one category's train/test splits, meta
// trains the knee genome, bakes its density grid and mesh, and writes the
// prior file plus a per-candidate search log next to it.
//
// keys: dataset, category, out           required
//       seed=0, population=8, generations=5
//       search_rays=64, search_samples=16, adapt_iters=60
//       eval_grid=32, metric_samples=2048, time_scale=2.5e-10
//       bake_resolution=48, log=<out>.log
void cmd_train_prior(const Config& cfg, std::ostream& out);

// Replays a recorded sequence through the incremental mapper, writes one
// world-frame OBJ per reconstructed object plus report.csv, and appends
// Chamfer distance / completion ratio columns computed against the
// sequence's ground-truth meshes.
//
// keys: scene, out                       required
//       priors                           directory of *.prior files
//       no_priors=false, prior_sampling=true
//       seed=0, iters_per_object=200, rays=128, samples=24
//       grid_resolution=48, cr_tau=0.01, metric_samples=2048
//       association gates: iou_threshold=0.5, piou_threshold=0.3,
//       alpha_rank=0.05, alpha_centroid=0.05, rank_subsample=40,
//       voxel=0.02, cluster_radius=0.05, min_cluster=20,
//       ready_min_frames=6, ready_min_bearing_deg=60
void cmd_map(const Config& cfg, std::ostream& out);

// Compares reconstructed meshes against ground truth by matching OBJ
// basenames across two directories and prints one comma-separated row per
// pair (Chamfer, completion ratios at each tau, earth mover's distance)
// plus a final mean row.
//
// keys: rec, gt                          required directories
//       tau=0.004,0.01 (meters), samples=10000, emd_sub=512, seed=0
//       report                           optional CSV output path
void cmd_eval(const Config& cfg, std::ostream& out);

// Prints a prior file's header: category, architecture, parameter/grid/mesh
// counts, and density statistics. Reads only the file, never instantiates
// the field.
//
// keys: prior                            required path
void cmd_inspect(const Config& cfg, std::ostream& out);

}  // namespace noma
