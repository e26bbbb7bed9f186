#include "noma/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "noma/config.hpp"
#include "noma/errors.hpp"

namespace fs = std::filesystem;

namespace noma {
namespace {

std::string float_list(const float* v, int n) {
  std::ostringstream ss;
  ss.precision(9);
  for (int i = 0; i < n; ++i) {
    if (i) ss << ",";
    ss << v[i];
  }
  return ss.str();
}

std::vector<float> parse_floats(const Config& cfg, const std::string& key, std::size_t expect) {
  auto vals = cfg.get_float_list(key, {});
  if (vals.size() != expect)
    throw DataError("manifest key '" + key + "': expected " + std::to_string(expect) + " values");
  return vals;
}

std::string camera_record(const Camera& cam) {
  float v[16] = {cam.fx, cam.fy, cam.cx, cam.cy};
  for (int i = 0; i < 9; ++i) v[4 + i] = cam.pose.R.m[static_cast<std::size_t>(i)];
  v[13] = cam.pose.t.x;
  v[14] = cam.pose.t.y;
  v[15] = cam.pose.t.z;
  return float_list(v, 16);
}

Camera parse_camera(const Config& cfg, const std::string& key, int width, int height) {
  auto v = parse_floats(cfg, key, 16);
  Camera cam;
  cam.fx = v[0];
  cam.fy = v[1];
  cam.cx = v[2];
  cam.cy = v[3];
  cam.width = width;
  cam.height = height;
  for (int i = 0; i < 9; ++i) cam.pose.R.m[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(4 + i)];
  cam.pose.t = {v[13], v[14], v[15]};
  return cam;
}

std::string pose_record(const Pose& pose) {
  float v[12];
  for (int i = 0; i < 9; ++i) v[i] = pose.R.m[static_cast<std::size_t>(i)];
  v[9] = pose.t.x;
  v[10] = pose.t.y;
  v[11] = pose.t.z;
  return float_list(v, 12);
}

Pose parse_pose(const Config& cfg, const std::string& key) {
  auto v = parse_floats(cfg, key, 12);
  Pose pose;
  for (int i = 0; i < 9; ++i) pose.R.m[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(i)];
  pose.t = {v[9], v[10], v[11]};
  return pose;
}

std::string vec_record(const Vec3& v) {
  float a[3] = {v.x, v.y, v.z};
  return float_list(a, 3);
}

Vec3 parse_vec(const Config& cfg, const std::string& key) {
  auto v = parse_floats(cfg, key, 3);
  return {v[0], v[1], v[2]};
}

std::string frame_name(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%03zu.bin", prefix, i);
  return buf;
}

void write_blob(const fs::path& path, const void* data, std::size_t bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write: " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
  if (!out) throw DataError("write failed: " + path.string());
}

void read_blob(const fs::path& path, void* data, std::size_t bytes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read: " + path.string());
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(bytes));
  if (in.gcount() != static_cast<std::streamsize>(bytes))
    throw DataError("truncated blob: " + path.string());
}

void save_frames(const fs::path& dir, const std::vector<Frame>& frames) {
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Frame& f = frames[i];
    write_blob(dir / frame_name("rgb", i), f.rgb.data.data(), f.rgb.data.size() * sizeof(Vec3));
    write_blob(dir / frame_name("depth", i), f.depth.data.data(),
               f.depth.data.size() * sizeof(float));
    write_blob(dir / frame_name("mask", i), f.mask.data.data(), f.mask.data.size());
  }
}

std::vector<Frame> load_frames(const fs::path& dir, int count, int width, int height) {
  std::vector<Frame> frames;
  frames.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Frame f;
    f.rgb = ColorImage(width, height);
    f.depth = DepthImage(width, height);
    f.mask = MaskImage(width, height);
    read_blob(dir / frame_name("rgb", static_cast<std::size_t>(i)), f.rgb.data.data(),
              f.rgb.data.size() * sizeof(Vec3));
    read_blob(dir / frame_name("depth", static_cast<std::size_t>(i)), f.depth.data.data(),
              f.depth.data.size() * sizeof(float));
    read_blob(dir / frame_name("mask", static_cast<std::size_t>(i)), f.mask.data.data(),
              f.mask.data.size());
    frames.push_back(std::move(f));
  }
  return frames;
}

}  // namespace

void save_task(const std::string& dir, const Task& task) {
  fs::create_directories(dir);
  std::ofstream man(fs::path(dir) / "manifest.txt");
  if (!man) throw DataError("cannot write manifest in " + dir);
  if (task.frames.empty() || task.frames.size() != task.cameras.size())
    throw DataError("save_task: inconsistent frame/camera counts");
  const int w = task.frames[0].rgb.width, h = task.frames[0].rgb.height;
  man << "kind=task\n"
      << "category=" << to_string(task.category) << "\n"
      << "shape_seed=" << task.shape_seed << "\n"
      << "frame_count=" << task.frames.size() << "\n"
      << "width=" << w << "\nheight=" << h << "\n"
      << "gt_size=" << vec_record(task.gt_size) << "\n"
      << "gt_center=" << vec_record(task.gt_center) << "\n"
      << "gt_pose=" << pose_record(task.gt_pose) << "\n";
  for (std::size_t i = 0; i < task.cameras.size(); ++i)
    man << "camera_" << i << "=" << camera_record(task.cameras[i]) << "\n";
  if (!man) throw DataError("manifest write failed in " + dir);
  man.close();

  save_frames(dir, task.frames);
  std::ofstream mesh_out(fs::path(dir) / "gt_mesh.obj");
  if (!mesh_out) throw DataError("cannot write gt mesh in " + dir);
  save_obj(mesh_out, task.gt_mesh);
}

Task load_task(const std::string& dir) {
  Config cfg = Config::from_file((fs::path(dir) / "manifest.txt").string());
  if (cfg.get_string("kind", "") != "task") throw DataError(dir + ": not a task directory");
  Task task;
  task.category = category_from_string(cfg.get_string("category", ""));
  task.shape_seed = static_cast<std::uint64_t>(cfg.get_double("shape_seed", 0));
  int count = cfg.get_int("frame_count", 0);
  int w = cfg.get_int("width", 0), h = cfg.get_int("height", 0);
  if (count < 1 || w < 1 || h < 1) throw DataError(dir + ": bad manifest dimensions");
  task.gt_size = parse_vec(cfg, "gt_size");
  task.gt_center = parse_vec(cfg, "gt_center");
  task.gt_pose = parse_pose(cfg, "gt_pose");
  for (int i = 0; i < count; ++i)
    task.cameras.push_back(parse_camera(cfg, "camera_" + std::to_string(i), w, h));
  task.frames = load_frames(dir, count, w, h);
  std::ifstream mesh_in(fs::path(dir) / "gt_mesh.obj");
  if (!mesh_in) throw DataError(dir + ": missing gt_mesh.obj");
  task.gt_mesh = load_obj(mesh_in);
  return task;
}

void save_scene(const std::string& dir, const Scene& scene) {
  fs::create_directories(fs::path(dir) / "gt");
  std::ofstream man(fs::path(dir) / "manifest.txt");
  if (!man) throw DataError("cannot write manifest in " + dir);
  if (scene.frames.empty() || scene.frames.size() != scene.cameras.size())
    throw DataError("save_scene: inconsistent frame/camera counts");
  const int w = scene.frames[0].rgb.width, h = scene.frames[0].rgb.height;
  man << "kind=scene\n"
      << "frame_count=" << scene.frames.size() << "\n"
      << "width=" << w << "\nheight=" << h << "\n"
      << "object_count=" << scene.objects.size() << "\n";
  for (std::size_t i = 0; i < scene.cameras.size(); ++i)
    man << "camera_" << i << "=" << camera_record(scene.cameras[i]) << "\n";
  for (std::size_t k = 0; k < scene.objects.size(); ++k) {
    const SceneObject& obj = scene.objects[k];
    man << "object_" << k << "=" << to_string(obj.category) << "\n"
        << "object_" << k << "_seed=" << obj.shape_seed << "\n"
        << "object_" << k << "_pose=" << pose_record(obj.pose) << "\n"
        << "object_" << k << "_size=" << vec_record(obj.size) << "\n"
        << "object_" << k << "_center=" << vec_record(obj.center) << "\n";
  }
  if (!man) throw DataError("manifest write failed in " + dir);
  man.close();

  save_frames(dir, scene.frames);
  for (std::size_t k = 0; k < scene.objects.size(); ++k) {
    Mesh world = transformed(shape_gt_mesh(scene.objects[k].shape), {1.f, 1.f, 1.f},
                             scene.objects[k].pose);
    std::ofstream mesh_out(fs::path(dir) / "gt" / ("obj" + std::to_string(k) + ".obj"));
    if (!mesh_out) throw DataError("cannot write scene gt mesh in " + dir);
    save_obj(mesh_out, world);
  }
}

Scene load_scene(const std::string& dir) {
  Config cfg = Config::from_file((fs::path(dir) / "manifest.txt").string());
  if (cfg.get_string("kind", "") != "scene") throw DataError(dir + ": not a scene directory");
  Scene scene;
  int count = cfg.get_int("frame_count", 0);
  int w = cfg.get_int("width", 0), h = cfg.get_int("height", 0);
  int n_obj = cfg.get_int("object_count", 0);
  if (count < 1 || w < 1 || h < 1 || n_obj < 1) throw DataError(dir + ": bad manifest dimensions");
  for (int i = 0; i < count; ++i) {
    if (!cfg.has("camera_" + std::to_string(i)))
      throw DataError(dir + ": missing pose for frame " + std::to_string(i));
    scene.cameras.push_back(parse_camera(cfg, "camera_" + std::to_string(i), w, h));
  }
  scene.frames = load_frames(dir, count, w, h);
  for (int k = 0; k < n_obj; ++k) {
    SceneObject obj;
    std::string base = "object_" + std::to_string(k);
    obj.category = category_from_string(cfg.get_string(base, ""));
    obj.shape_seed = static_cast<std::uint64_t>(cfg.get_double(base + "_seed", 0));
    obj.shape = sample_shape(obj.category, obj.shape_seed);
    obj.pose = parse_pose(cfg, base + "_pose");
    obj.size = parse_vec(cfg, base + "_size");
    obj.center = parse_vec(cfg, base + "_center");
    scene.objects.push_back(std::move(obj));
  }
  return scene;
}

std::vector<std::string> list_task_dirs(const std::string& dataset_root, Category category,
                                        const std::string& split) {
  fs::path dir = fs::path(dataset_root) / to_string(category) / split;
  if (!fs::is_directory(dir))
    throw DataError("dataset has no " + split + " tasks for category " + to_string(category));
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_directory()) out.push_back(entry.path().string());
  std::sort(out.begin(), out.end());
  if (out.empty())
    throw DataError("dataset has no " + split + " tasks for category " + to_string(category));
  return out;
}

}  // namespace noma
