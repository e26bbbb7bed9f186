#pragma once

#include <string>
#include <vector>

#include "noma/sdf_render.hpp"
#include "noma/task.hpp"

namespace noma {

// Directory layout per task: manifest.txt (key=value), per-frame raw blobs
// (rgb_###.bin: w*h*3 little-endian f32; depth_###.bin: w*h f32;
// mask_###.bin: w*h bytes) and gt_mesh.obj. Round-trips bit-exactly.
void save_task(const std::string& dir, const Task& task);
Task load_task(const std::string& dir);

// Scene layout mirrors tasks with per-object entries and gt/obj<k>.obj
// ground-truth meshes in world frame.
void save_scene(const std::string& dir, const Scene& scene);
Scene load_scene(const std::string& dir);

// Task directories of one category under a dataset root, manifest-ordered.
std::vector<std::string> list_task_dirs(const std::string& dataset_root, Category category,
                                        const std::string& split);

}  // namespace noma
