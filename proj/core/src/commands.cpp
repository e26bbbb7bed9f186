#include "noma/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <vector>

#include "noma/dataset.hpp"
#include "noma/errors.hpp"
#include "noma/mapper.hpp"
#include "noma/marching_cubes.hpp"
#include "noma/mesh.hpp"
#include "noma/metrics.hpp"
#include "noma/prior_bundle.hpp"
#include "noma/search.hpp"
#include "noma/sdf_render.hpp"

namespace fs = std::filesystem;

namespace noma {
namespace {

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t z = base * 0x9E3779B97F4A7C15ULL + salt * 0xBF58476D1CE4E5B9ULL + 1;
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

std::string require(const Config& cfg, const std::string& key) {
  auto v = cfg.get(key);
  if (!v || v->empty()) throw UsageError("missing required config key: " + key);
  return *v;
}

int require_int(const Config& cfg, const std::string& key) {
  require(cfg, key);
  return cfg.get_int(key, 0);
}

std::vector<std::string> split_list(const std::string& text, const std::string& key) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    const auto b = tok.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = tok.find_last_not_of(" \t");
    out.push_back(tok.substr(b, e - b + 1));
  }
  if (out.empty()) throw UsageError("config key '" + key + "': empty list");
  return out;
}

std::vector<Category> parse_categories(const std::string& text, const std::string& key) {
  std::vector<Category> out;
  for (const auto& name : split_list(text, key)) {
    try {
      out.push_back(category_from_string(name));
    } catch (const std::exception&) {
      throw UsageError("config key '" + key + "': unknown category '" + name + "'");
    }
  }
  return out;
}

std::string pad3(int i) {
  std::ostringstream ss;
  ss << std::setw(3) << std::setfill('0') << i;
  return ss.str();
}

// Sorted *.obj (or *.prior) basenames in a directory.
std::vector<std::string> dir_files(const std::string& dir, const std::string& ext,
                                   const std::string& what) {
  if (!fs::is_directory(dir)) throw DataError(what + " directory not found: " + dir);
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().extension() == ext) out.push_back(entry.path().filename().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

void cmd_gen_tasks(const Config& cfg, std::ostream& out) {
  const std::string root = require(cfg, "out");
  const auto categories = parse_categories(require(cfg, "categories"), "categories");
  const int n_train = require_int(cfg, "train_count");
  const int n_test = require_int(cfg, "test_count");
  if (n_train < 1 || n_test < 1)
    throw UsageError("config keys train_count/test_count must be >= 1");
  const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  const int resolution = cfg.get_int("resolution", 48);
  const int frames_min = cfg.get_int("frames_min", 6);
  const int frames_max = cfg.get_int("frames_max", 10);
  if (resolution < 8) throw UsageError("config key 'resolution': must be >= 8");
  if (frames_min < 4 || frames_max < frames_min)
    throw UsageError("config keys frames_min/frames_max: need 4 <= min <= max");

  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec || !fs::is_directory(root)) throw DataError("cannot create output directory " + root);

  int written = 0;
  for (const Category cat : categories) {
    const std::uint64_t cat_seed = mix_seed(seed, 0xC47ULL + static_cast<std::uint64_t>(cat));
    auto [train, test] =
        build_splits(cat, n_train, n_test, cat_seed, {frames_min, frames_max}, resolution);
    const fs::path base = fs::path(root) / to_string(cat);
    for (std::size_t i = 0; i < train.size(); ++i)
      save_task((base / "train" / ("task_" + pad3(static_cast<int>(i)))).string(), train[i]);
    for (std::size_t i = 0; i < test.size(); ++i)
      save_task((base / "test" / ("task_" + pad3(static_cast<int>(i)))).string(), test[i]);
    written += static_cast<int>(train.size() + test.size());
    out << to_string(cat) << ": " << train.size() << " train + " << test.size() << " test tasks\n";
  }

  if (cfg.has("scene_objects")) {
    const auto scene_cats = parse_categories(require(cfg, "scene_objects"), "scene_objects");
    const int scene_frames = cfg.get_int("scene_frames", 30);
    const int scene_res = cfg.get_int("scene_resolution", resolution);
    if (scene_frames < 1) throw UsageError("config key 'scene_frames': must be >= 1");
    Scene scene = make_scene(scene_cats, mix_seed(seed, 0x5CEULL), scene_frames, scene_res);
    const fs::path dir = fs::path(root) / "scenes" / "scene_000";
    save_scene(dir.string(), scene);
    out << "scene_000: " << scene.objects.size() << " objects, " << scene.frames.size()
        << " frames\n";
  }

  out << "wrote " << written << " tasks under " << root << "\n";
}

void cmd_train_prior(const Config& cfg, std::ostream& out) {
  const std::string dataset = require(cfg, "dataset");
  const std::string category_name = require(cfg, "category");
  const std::string out_path = require(cfg, "out");
  Category category;
  try {
    category = category_from_string(category_name);
  } catch (const std::exception&) {
    throw UsageError("config key 'category': unknown category '" + category_name + "'");
  }

  SearchConfig scfg;
  scfg.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  scfg.population = cfg.get_int("population", scfg.population);
  scfg.generations = cfg.get_int("generations", scfg.generations);
  scfg.inner.rays_per_iter = cfg.get_int("search_rays", scfg.inner.rays_per_iter);
  scfg.inner.samples_per_ray = cfg.get_int("search_samples", scfg.inner.samples_per_ray);
  scfg.adapt_iters = cfg.get_int("adapt_iters", scfg.adapt_iters);
  scfg.grid_resolution = cfg.get_int("eval_grid", scfg.grid_resolution);
  scfg.metric_samples = cfg.get_int("metric_samples", scfg.metric_samples);
  scfg.time_scale = cfg.get_double("time_scale", scfg.time_scale);
  scfg.inner.bg_fraction = cfg.get_float("bg_fraction", scfg.inner.bg_fraction);
  scfg.mutation_rate = cfg.get_float("mutation_rate", scfg.mutation_rate);
  const int bake_resolution = cfg.get_int("bake_resolution", 48);
  if (bake_resolution < 2) throw UsageError("config key 'bake_resolution': must be >= 2");

  std::vector<Task> train, test;
  for (const auto& dir : list_task_dirs(dataset, category, "train"))
    train.push_back(load_task(dir));
  for (const auto& dir : list_task_dirs(dataset, category, "test")) test.push_back(load_task(dir));
  out << "loaded " << train.size() << " train / " << test.size() << " test tasks for "
      << to_string(category) << "\n";

  SearchResult result = run_search(train, test, scfg);

  PriorBundle bundle;
  bundle.category = category;
  bundle.arch = arch_of(result.knee);
  bundle.theta = result.theta;
  DensityGrid grid = refresh_grid(bundle.arch, bundle.theta, bake_resolution);
  const float iso = cfg.get_float("bake_iso", choose_iso(grid));
  bundle.mesh = marching_cubes(grid, iso);
  bundle.grid = std::move(grid);
  bundle.provenance.search_seed = scfg.seed;
  bundle.provenance.population = scfg.population;
  bundle.provenance.generations = scfg.generations;
  bundle.provenance.genome = result.knee;

  if (const fs::path parent = fs::path(out_path).parent_path(); !parent.empty()) {
    std::error_code ec;
    fs::create_directories(parent, ec);
  }
  save_prior(bundle, out_path);

  const std::string log_path = cfg.get_string("log", out_path + ".log");
  std::ofstream log(log_path);
  if (!log) throw DataError("cannot write search log " + log_path);
  for (const auto& line : result.log_lines) log << line << "\n";

  out << "knee: params=" << param_count(bundle.arch)
      << " time_per_iter=" << result.knee_eval.time_per_iter << " cd=" << result.knee_eval.cd
      << "\n";
  out << "front size: " << result.front0.size() << "\n";
  out << "wrote " << out_path << " and " << log_path << "\n";
}

void cmd_map(const Config& cfg, std::ostream& out) {
  const std::string scene_dir = require(cfg, "scene");
  const std::string out_dir = require(cfg, "out");
  const bool no_priors = cfg.get_bool("no_priors", false);

  MapperConfig mcfg;
  mcfg.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  mcfg.use_priors = !no_priors;
  mcfg.prior_sampling = cfg.get_bool("prior_sampling", true);
  mcfg.iou_threshold = cfg.get_float("iou_threshold", mcfg.iou_threshold);
  mcfg.piou_threshold = cfg.get_float("piou_threshold", mcfg.piou_threshold);
  mcfg.alpha_rank = cfg.get_float("alpha_rank", mcfg.alpha_rank);
  mcfg.alpha_centroid = cfg.get_float("alpha_centroid", mcfg.alpha_centroid);
  mcfg.rank_subsample = cfg.get_int("rank_subsample", mcfg.rank_subsample);
  mcfg.voxel = cfg.get_float("voxel", mcfg.voxel);
  mcfg.cluster_radius = cfg.get_float("cluster_radius", mcfg.cluster_radius);
  mcfg.min_cluster = cfg.get_int("min_cluster", mcfg.min_cluster);
  mcfg.ready_min_frames = cfg.get_int("ready_min_frames", mcfg.ready_min_frames);
  mcfg.ready_min_bearing_deg =
      cfg.get_float("ready_min_bearing_deg", mcfg.ready_min_bearing_deg);
  mcfg.yaw_samples = cfg.get_int("yaw_samples", mcfg.yaw_samples);
  mcfg.iters_per_object = cfg.get_int("iters_per_object", mcfg.iters_per_object);
  mcfg.grid_refresh_every = cfg.get_int("grid_refresh_every", mcfg.grid_refresh_every);
  mcfg.inner.rays_per_iter = cfg.get_int("rays", mcfg.inner.rays_per_iter);
  mcfg.inner.samples_per_ray = cfg.get_int("samples", mcfg.inner.samples_per_ray);
  mcfg.inner.bg_fraction = cfg.get_float("bg_fraction", mcfg.inner.bg_fraction);
  mcfg.inner.weights.lambda_d = cfg.get_float("lambda_d", mcfg.inner.weights.lambda_d);
  mcfg.inner.weights.lambda_sigma =
      cfg.get_float("lambda_sigma", mcfg.inner.weights.lambda_sigma);
  mcfg.coarse_samples = cfg.get_int("coarse_samples", mcfg.coarse_samples);
  mcfg.escape_eps = cfg.get_float("escape_eps", mcfg.escape_eps);
  mcfg.grid_resolution = cfg.get_int("grid_resolution", mcfg.grid_resolution);
  mcfg.eta = cfg.get_float("eta", mcfg.eta);
  mcfg.min_track_points = cfg.get_int("min_track_points", mcfg.min_track_points);
  const float cr_tau = cfg.get_float("cr_tau", 0.01f);
  const int metric_samples = cfg.get_int("metric_samples", 2048);

  Scene scene = load_scene(scene_dir);
  std::vector<SequenceFrame> frames(scene.frames.size());
  for (std::size_t i = 0; i < scene.frames.size(); ++i) {
    frames[i].camera = scene.cameras[i];
    frames[i].rgb = scene.frames[i].rgb;
    frames[i].depth = scene.frames[i].depth;
    frames[i].mask = scene.frames[i].mask;
  }
  std::vector<Category> labels;
  for (const auto& obj : scene.objects) labels.push_back(obj.category);

  std::map<Category, PriorBundle> priors;
  if (mcfg.use_priors && cfg.has("priors")) {
    const std::string prior_dir = require(cfg, "priors");
    for (const auto& name : dir_files(prior_dir, ".prior", "priors")) {
      PriorBundle bundle = load_prior((fs::path(prior_dir) / name).string());
      priors.emplace(bundle.category, std::move(bundle));
    }
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw DataError("cannot create output directory " + out_dir);

  MapperResult result = run_mapper(frames, labels, priors, mcfg);

  // Ground-truth world meshes indexed by mask instance value.
  std::vector<Mesh> gt_world(scene.objects.size());
  for (std::size_t k = 0; k < scene.objects.size(); ++k)
    gt_world[k] = transformed(shape_gt_mesh(scene.objects[k].shape), {1.f, 1.f, 1.f},
                              scene.objects[k].pose);

  std::ofstream report(fs::path(out_dir) / "report.csv");
  if (!report) throw DataError("cannot write report in " + out_dir);
  report << "id,category,prior,yaw_deg,size_x,size_y,size_z,cd,cr,iterations,seconds,note\n";
  int meshes_written = 0;
  for (std::size_t i = 0; i < result.objects.size(); ++i) {
    const MappedObject& obj = result.objects[i];
    const ObjectTrack& track = obj.track;
    std::string cd_text, cr_text;
    if (!obj.mesh.empty() && !track.keyframes.empty()) {
      const int inst = track.keyframes.front().instance_value - 1;
      if (inst >= 0 && inst < static_cast<int>(gt_world.size()) && !gt_world[inst].empty()) {
        const auto rec = sample_surface(obj.mesh, metric_samples, mix_seed(mcfg.seed, 0xEC0 + i));
        const auto gt = sample_surface(gt_world[static_cast<std::size_t>(inst)], metric_samples,
                                       mix_seed(mcfg.seed, 0x6700 + i));
        std::ostringstream val;
        val.precision(6);
        val << chamfer(rec, gt);
        cd_text = val.str();
        val.str("");
        val << completion_ratio(gt, rec, cr_tau);
        cr_text = val.str();
      }
      const std::string mesh_name =
          "object_" + std::to_string(track.id) + "_" + to_string(track.category) + ".obj";
      save_obj_file((fs::path(out_dir) / mesh_name).string(), obj.mesh);
      ++meshes_written;
    }
    std::ostringstream row;
    row.precision(6);
    row << track.id << "," << to_string(track.category) << "," << (obj.used_prior ? 1 : 0) << ","
        << track.yaw * 180.0 / 3.14159265358979323846 << "," << track.size.x << "," << track.size.y
        << "," << track.size.z << "," << cd_text << "," << cr_text << "," << obj.iterations << ","
        << obj.train_seconds << "," << obj.note;
    report << row.str() << "\n";
    out << row.str() << "\n";
  }
  out << "wrote " << meshes_written << " meshes and report.csv under " << out_dir << "\n";
}

void cmd_eval(const Config& cfg, std::ostream& out) {
  const std::string rec_dir = require(cfg, "rec");
  const std::string gt_dir = require(cfg, "gt");
  const auto taus = cfg.get_float_list("tau", {0.004f, 0.01f});
  const int samples = cfg.get_int("samples", 10000);
  const int emd_sub = cfg.get_int("emd_sub", 512);
  const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  if (samples < 1) throw UsageError("config key 'samples': must be >= 1");

  const auto rec_files = dir_files(rec_dir, ".obj", "rec");
  const auto gt_files = dir_files(gt_dir, ".obj", "gt");
  if (rec_files.empty()) throw DataError("no .obj files in " + rec_dir);
  std::set<std::string> rec_set(rec_files.begin(), rec_files.end());
  std::set<std::string> gt_set(gt_files.begin(), gt_files.end());
  for (const auto& name : rec_files)
    if (!gt_set.count(name)) throw DataError("unmatched mesh pair: " + name + " has no ground truth");
  for (const auto& name : gt_files)
    if (!rec_set.count(name)) throw DataError("unmatched mesh pair: " + name + " has no reconstruction");

  std::ostringstream table;
  table.precision(6);
  table << "name,cd";
  for (float tau : taus) table << ",cr_" << tau;
  table << ",emd\n";

  double mean_cd = 0.0, mean_emd = 0.0;
  std::vector<double> mean_cr(taus.size(), 0.0);
  for (std::size_t i = 0; i < rec_files.size(); ++i) {
    Mesh rec = load_obj_file((fs::path(rec_dir) / rec_files[i]).string());
    Mesh gt = load_obj_file((fs::path(gt_dir) / rec_files[i]).string());
    if (rec.empty()) throw DataError("empty reconstruction mesh: " + rec_files[i]);
    if (gt.empty()) throw DataError("empty ground-truth mesh: " + rec_files[i]);
    const auto rec_cloud = sample_surface(rec, samples, mix_seed(seed, 0x2EC0 + i));
    const auto gt_cloud = sample_surface(gt, samples, mix_seed(seed, 0x2EC0 + i));
    const double cd = chamfer(rec_cloud, gt_cloud);
    const int n_sub = std::min<int>(emd_sub, static_cast<int>(std::min(rec_cloud.size(), gt_cloud.size())));
    const double e = emd(rec_cloud, gt_cloud, n_sub, mix_seed(seed, 0x33D + i));
    table << rec_files[i] << "," << cd;
    mean_cd += cd;
    for (std::size_t t = 0; t < taus.size(); ++t) {
      const double cr = completion_ratio(gt_cloud, rec_cloud, taus[t]);
      table << "," << cr;
      mean_cr[t] += cr;
    }
    table << "," << e << "\n";
    mean_emd += e;
  }
  const auto n = static_cast<double>(rec_files.size());
  table << "mean," << mean_cd / n;
  for (double cr : mean_cr) table << "," << cr / n;
  table << "," << mean_emd / n << "\n";

  out << table.str();
  if (cfg.has("report")) {
    const std::string path = require(cfg, "report");
    std::ofstream file(path);
    if (!file) throw DataError("cannot write report " + path);
    file << table.str();
  }
}

void cmd_inspect(const Config& cfg, std::ostream& out) {
  const std::string path = require(cfg, "prior");
  out << prior_summary(path);
}

}  // namespace noma
