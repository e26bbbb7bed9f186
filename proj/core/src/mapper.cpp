#include "noma/mapper.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "noma/errors.hpp"
#include "noma/marching_cubes.hpp"
#include "noma/stats.hpp"
#include "noma/threading.hpp"

namespace noma {
namespace {

std::uint32_t mix_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t s = base * 0x9E3779B97F4A7C15ULL + salt * 0xC2B2AE3D27D4EB4FULL + 1;
  s ^= s >> 31;
  s *= 0x94D049BB133111EBULL;
  s ^= s >> 29;
  return static_cast<std::uint32_t>(s ^ (s >> 32));
}

Vec3 centroid_of(const std::vector<Vec3>& pts) {
  Vec3 c;
  for (const Vec3& p : pts) c = c + p;
  return pts.empty() ? c : c * (1.f / static_cast<float>(pts.size()));
}

// Deterministic stride subsample of one coordinate axis, capped at limit.
std::vector<double> axis_values(const std::vector<Vec3>& pts, int axis, int limit) {
  const std::size_t n = pts.size();
  const std::size_t take = std::min<std::size_t>(n, static_cast<std::size_t>(limit));
  std::vector<double> out;
  out.reserve(take);
  for (std::size_t k = 0; k < take; ++k) {
    const std::size_t i = k * n / take;
    const Vec3& p = pts[i];
    out.push_back(axis == 0 ? p.x : axis == 1 ? p.y : p.z);
  }
  return out;
}

// Two-sided p-value that a fresh draw `x` comes from the Gaussian fitted to
// `history` (prediction-interval t, n-1 dof). Unlike a mean test, the
// standard error converges to the sample spread as history grows, so the
// gate does not tighten without bound on long-lived tracks.
double centroid_prediction_p(const std::vector<double>& history, double x) {
  const auto n = static_cast<double>(history.size());
  double mean = 0.0;
  for (double v : history) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : history) var += (v - mean) * (v - mean);
  var /= (n - 1.0);
  const double se = std::sqrt(var * (1.0 + 1.0 / n));
  if (se == 0.0) return x == mean ? 1.0 : 0.0;
  const double t = (x - mean) / se;
  const double dof = n - 1.0;
  return incomplete_beta(0.5 * dof, 0.5, dof / (dof + t * t));
}

// 2D convex hull (Andrew monotone chain), counter-clockwise, no duplicates.
std::vector<std::pair<float, float>> convex_hull_2d(std::vector<std::pair<float, float>> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const std::size_t n = pts.size();
  if (n < 3) return pts;
  auto cross = [](const std::pair<float, float>& o, const std::pair<float, float>& a,
                  const std::pair<float, float>& b) {
    return (static_cast<double>(a.first) - o.first) * (static_cast<double>(b.second) - o.second) -
           (static_cast<double>(a.second) - o.second) * (static_cast<double>(b.first) - o.first);
  };
  std::vector<std::pair<float, float>> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = n - 1, lower = k + 1; i > 0; --i) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return hull;
}

struct Extents {
  Vec3 lo, hi;
};

Extents yaw_frame_extents(const std::vector<Vec3>& cloud, float yaw) {
  const Mat3 R_inv = rot_z(-yaw);
  Extents e;
  e.lo = {std::numeric_limits<float>::max(), std::numeric_limits<float>::max(),
          std::numeric_limits<float>::max()};
  e.hi = {std::numeric_limits<float>::lowest(), std::numeric_limits<float>::lowest(),
          std::numeric_limits<float>::lowest()};
  for (const Vec3& p : cloud) {
    const Vec3 q = R_inv * p;
    e.lo = {std::min(e.lo.x, q.x), std::min(e.lo.y, q.y), std::min(e.lo.z, q.z)};
    e.hi = {std::max(e.hi.x, q.x), std::max(e.hi.y, q.y), std::max(e.hi.z, q.z)};
  }
  return e;
}

constexpr float kMinExtent = 1e-4f;

void apply_extent_state(ObjectTrack& track, float yaw) {
  const Extents e = yaw_frame_extents(track.cloud, yaw);
  const Vec3 size = e.hi - e.lo;
  track.yaw = wrap_angle(yaw);
  track.size = {std::max(size.x, kMinExtent), std::max(size.y, kMinExtent),
                std::max(size.z, kMinExtent)};
  track.position = rot_z(yaw) * ((e.lo + e.hi) * 0.5f);
  track.state_valid = true;
}

struct TrainOutput {
  Mesh mesh_world;
  int iterations = 0;
  double seconds = 0.0;
  std::string note;
};

TrainOutput train_track(const ObjectTrack& track, const std::vector<SequenceFrame>& frames,
                        const PriorBundle* prior, const MapperConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  FieldArch arch = prior ? prior->arch : FieldArch{};
  ParamVector params =
      prior ? prior->theta : init_params(arch, mix_seed(cfg.seed, 0x1217ULL + track.id));
  const int live_res = prior ? prior->grid.resolution : cfg.grid_resolution;
  DensityGrid grid = prior ? prior->grid : DensityGrid(live_res, 0.f);

  AdamState adam(params.size(), cfg.eta);
  ParamVector grad(params.size(), 0.f);
  const Box3 box = track.object_box();
  const Pose pose = track.obj_to_world();
  std::mt19937 rng(mix_seed(cfg.seed, 0x77AAULL + track.id));
  std::uniform_int_distribution<std::size_t> pick_kf(0, track.keyframes.size() - 1);

  TrainOutput out;
  std::vector<RaySampleSet> samples;
  std::vector<std::vector<FieldOutput>> outputs;
  std::vector<std::vector<FieldEvalCache>> caches;
  for (int it = 0; it < cfg.iters_per_object; ++it) {
    const KeyframeRef& kf = track.keyframes[pick_kf(rng)];
    const SequenceFrame& fr = frames[static_cast<std::size_t>(kf.frame_index)];
    auto rays = generate_rays(fr.camera, fr.rgb, fr.depth, fr.mask, kf.instance_value, pose,
                              track.size, cfg.inner.rays_per_iter, cfg.inner.bg_fraction, rng);

    samples.clear();
    outputs.clear();
    caches.clear();
    for (const ObjectRay& ray : rays) {
      RaySampleSet set =
          cfg.prior_sampling
              ? sample_ray(grid, ray, box, cfg.coarse_samples, cfg.inner.samples_per_ray,
                           cfg.escape_eps, rng)
              : uniform_samples(ray, box, cfg.inner.samples_per_ray);
      std::vector<FieldOutput> outs(set.size());
      std::vector<FieldEvalCache> cache(set.size());
      for (std::size_t i = 0; i < set.size(); ++i)
        outs[i] = field_eval(arch, params, set.positions[i], &cache[i]);
      samples.push_back(std::move(set));
      outputs.push_back(std::move(outs));
      caches.push_back(std::move(cache));
    }

    LossResult loss = batch_loss(rays, samples, outputs, cfg.inner.weights, rng);
    std::fill(grad.begin(), grad.end(), 0.f);
    for (std::size_t r = 0; r < rays.size(); ++r)
      for (std::size_t i = 0; i < loss.grads[r].size(); ++i)
        field_backward(arch, params, caches[r][i], loss.grads[r][i].d_sigma,
                       loss.grads[r][i].d_rgb, grad);
    adam_step(adam, params, grad);
    out.iterations = it + 1;
    if (cfg.grid_refresh_every > 0 && (it + 1) % cfg.grid_refresh_every == 0)
      grid = refresh_grid(arch, params, live_res);
  }

  grid = refresh_grid(arch, params, live_res);
  Mesh unit = marching_cubes(grid, choose_iso(grid));
  if (unit.triangles.empty()) {
    out.note = "empty reconstruction";
  } else {
    const Mat3 R = pose.R;
    const Vec3 shift = pose.t - R * (track.size * 0.5f);
    out.mesh_world = transformed(unit, track.size, Pose{R, shift});
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace

float iou_2d(const BBox2D& a, const BBox2D& b) {
  const float ix = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const float iy = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  const float inter = std::max(0.f, ix) * std::max(0.f, iy);
  const float uni = a.area() + b.area() - inter;
  return uni > 0.f ? inter / uni : 0.f;
}

std::vector<InstanceObservation> extract_detections(const SequenceFrame& frame, int frame_index,
                                                    const std::vector<Category>& labels_by_instance) {
  std::map<std::uint8_t, InstanceObservation> by_value;
  for (int y = 0; y < frame.mask.height; ++y)
    for (int x = 0; x < frame.mask.width; ++x) {
      const std::uint8_t v = frame.mask.at(x, y);
      if (v == 0) continue;
      const float d = frame.depth.at(x, y);
      if (d <= 0.f) continue;
      auto [it, inserted] = by_value.try_emplace(v);
      InstanceObservation& obs = it->second;
      if (inserted) {
        if (static_cast<std::size_t>(v) > labels_by_instance.size())
          throw DataError("extract_detections: no category label for mask value " +
                          std::to_string(int(v)));
        obs.frame_index = frame_index;
        obs.instance_value = v;
        obs.category = labels_by_instance[static_cast<std::size_t>(v) - 1];
        obs.bbox = {static_cast<float>(x), static_cast<float>(y), static_cast<float>(x + 1),
                    static_cast<float>(y + 1)};
      }
      obs.bbox.x0 = std::min(obs.bbox.x0, static_cast<float>(x));
      obs.bbox.y0 = std::min(obs.bbox.y0, static_cast<float>(y));
      obs.bbox.x1 = std::max(obs.bbox.x1, static_cast<float>(x + 1));
      obs.bbox.y1 = std::max(obs.bbox.y1, static_cast<float>(y + 1));
      const Vec3 dir = frame.camera.pixel_direction(static_cast<float>(x), static_cast<float>(y));
      obs.cloud.push_back(frame.camera.pose.apply(dir * d));
    }
  std::vector<InstanceObservation> out;
  out.reserve(by_value.size());
  for (auto& [v, obs] : by_value) out.push_back(std::move(obs));
  return out;
}

std::vector<std::vector<Vec3>> cluster_filter(const std::vector<Vec3>& cloud, float voxel,
                                              float radius, int min_count) {
  if (voxel <= 0.f || radius <= 0.f) throw UsageError("cluster_filter: voxel and radius must be > 0");
  if (cloud.empty()) return {};

  struct Accum {
    Vec3 sum;
    int count = 0;
  };
  std::map<std::array<std::int64_t, 3>, Accum> cells;
  for (const Vec3& p : cloud) {
    std::array<std::int64_t, 3> key = {static_cast<std::int64_t>(std::floor(p.x / voxel)),
                                       static_cast<std::int64_t>(std::floor(p.y / voxel)),
                                       static_cast<std::int64_t>(std::floor(p.z / voxel))};
    Accum& a = cells[key];
    a.sum = a.sum + p;
    ++a.count;
  }
  std::vector<Vec3> down;
  down.reserve(cells.size());
  for (const auto& [key, a] : cells) down.push_back(a.sum * (1.f / static_cast<float>(a.count)));

  const std::size_t n = down.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  const float r2 = radius * radius;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const Vec3 d = down[i] - down[j];
      if (dot(d, d) <= r2) parent[find(i)] = find(j);
    }

  std::map<std::size_t, std::vector<Vec3>> groups;  // keyed by smallest member
  std::vector<std::size_t> root_key(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (root_key[r] == n) root_key[r] = i;
    groups[root_key[r]].push_back(down[i]);
  }
  std::vector<std::vector<Vec3>> clusters;
  for (auto& [key, pts] : groups)
    if (static_cast<int>(pts.size()) >= min_count) clusters.push_back(std::move(pts));
  return clusters;
}

float projected_iou(const ObjectTrack& track, const Camera& cam, const InstanceObservation& det) {
  std::vector<Vec3> corners;
  corners.reserve(8);
  if (track.state_valid) {
    const Mat3 R = rot_z(track.yaw);
    const Vec3 h = track.size * 0.5f;
    for (int sx : {-1, 1})
      for (int sy : {-1, 1})
        for (int sz : {-1, 1})
          corners.push_back(track.position + R * Vec3{sx * h.x, sy * h.y, sz * h.z});
  } else {
    if (track.cloud.empty()) return 0.f;
    Extents e = yaw_frame_extents(track.cloud, 0.f);
    for (int sx : {0, 1})
      for (int sy : {0, 1})
        for (int sz : {0, 1})
          corners.push_back({sx ? e.hi.x : e.lo.x, sy ? e.hi.y : e.lo.y, sz ? e.hi.z : e.lo.z});
  }
  BBox2D proj;
  bool any = false;
  for (const Vec3& c : corners) {
    const Vec3 q = cam.pose.apply_inverse(c);
    if (q.z <= 1e-6f) continue;
    const float u = cam.fx * q.x / q.z + cam.cx;
    const float v = cam.fy * q.y / q.z + cam.cy;
    if (!any) {
      proj = {u, v, u, v};
      any = true;
    } else {
      proj.x0 = std::min(proj.x0, u);
      proj.y0 = std::min(proj.y0, v);
      proj.x1 = std::max(proj.x1, u);
      proj.y1 = std::max(proj.y1, v);
    }
  }
  if (!any) return 0.f;
  return iou_2d(proj, det.bbox);
}

AssociationResult associate(const ObjectTrack& track, const Camera& cam,
                            const InstanceObservation& det, bool consecutive,
                            const MapperConfig& cfg) {
  AssociationResult res;
  if (det.category != track.category) return res;

  if (consecutive && !track.keyframes.empty()) {
    res.gate_iou = iou_2d(track.keyframes.back().bbox, det.bbox);
    if (res.gate_iou < cfg.iou_threshold) return res;
  } else {
    res.gate_iou = projected_iou(track, cam, det);
    if (res.gate_iou < cfg.piou_threshold) return res;
  }

  auto clusters = cluster_filter(det.cloud, cfg.voxel, cfg.cluster_radius, cfg.min_cluster);
  for (const auto& cluster : clusters) {
    double min_p_rank = 1.0;
    for (int axis = 0; axis < 3; ++axis) {
      auto a = axis_values(cluster, axis, cfg.rank_subsample);
      auto b = axis_values(track.cloud, axis, cfg.rank_subsample);
      if (a.size() < 2 || b.size() < 2) continue;
      min_p_rank = std::min(min_p_rank, wilcoxon_rank_sum(a, b).p_value);
    }
    const Vec3 c = centroid_of(cluster);
    double min_p_centroid = 1.0;
    if (track.centroid_history.size() >= 2) {
      for (int axis = 0; axis < 3; ++axis) {
        std::vector<double> hist;
        hist.reserve(track.centroid_history.size());
        for (const Vec3& h : track.centroid_history)
          hist.push_back(axis == 0 ? h.x : axis == 1 ? h.y : h.z);
        const double mu0 = axis == 0 ? c.x : axis == 1 ? c.y : c.z;
        min_p_centroid = std::min(min_p_centroid, centroid_prediction_p(hist, mu0));
      }
    }
    res.min_p_rank = std::min(res.min_p_rank, min_p_rank);
    res.min_p_centroid = std::min(res.min_p_centroid, min_p_centroid);
    if (min_p_rank >= cfg.alpha_rank && min_p_centroid >= cfg.alpha_centroid) {
      res.merge = true;
      res.accepted_points.insert(res.accepted_points.end(), cluster.begin(), cluster.end());
      res.cluster_centroids.push_back(c);
    }
  }
  return res;
}

CoarseState coarse_state(const std::vector<Vec3>& cloud) {
  if (cloud.empty()) throw DataError("coarse_state: empty cloud");
  std::vector<std::pair<float, float>> flat;
  flat.reserve(cloud.size());
  for (const Vec3& p : cloud) flat.emplace_back(p.x, p.y);
  auto hull = convex_hull_2d(std::move(flat));

  float best_yaw = 0.f;
  if (hull.size() >= 3) {
    double best_area = std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < hull.size(); ++i) {
      const auto& p0 = hull[i];
      const auto& p1 = hull[(i + 1) % hull.size()];
      const float theta = std::atan2(p1.second - p0.second, p1.first - p0.first);
      const float c = std::cos(theta), s = std::sin(theta);
      float ux0 = std::numeric_limits<float>::max(), ux1 = std::numeric_limits<float>::lowest();
      float uy0 = ux0, uy1 = ux1;
      for (const auto& h : hull) {
        const float u = c * h.first + s * h.second;
        const float v = -s * h.first + c * h.second;
        ux0 = std::min(ux0, u);
        ux1 = std::max(ux1, u);
        uy0 = std::min(uy0, v);
        uy1 = std::max(uy1, v);
      }
      const double area = static_cast<double>(ux1 - ux0) * (uy1 - uy0);
      if (area < best_area) {
        best_area = area;
        best_yaw = theta;
      }
    }
  }
  // Rectangle orientation is only defined modulo a quarter turn.
  const float quarter = kPi / 2.f;
  best_yaw = best_yaw - quarter * std::floor(best_yaw / quarter);

  const Extents e = yaw_frame_extents(cloud, best_yaw);
  CoarseState cs;
  cs.yaw = best_yaw;
  cs.size = e.hi - e.lo;
  cs.position = rot_z(best_yaw) * ((e.lo + e.hi) * 0.5f);
  return cs;
}

YawEstimate canonical_yaw(const std::vector<Vec3>& cloud, Category category,
                          const DensityGrid& grid, int K, float fallback_yaw) {
  if (cloud.empty()) throw DataError("canonical_yaw: empty cloud");
  if (K < 1) throw UsageError("canonical_yaw: K must be >= 1");

  std::vector<float> candidates;
  if (rotationally_symmetric(category)) {
    candidates.push_back(fallback_yaw);
  } else {
    candidates.reserve(static_cast<std::size_t>(K));
    for (int i = 0; i < K; ++i)
      candidates.push_back(2.f * kPi * static_cast<float>(i) / static_cast<float>(K));
  }

  YawEstimate est;
  est.scores.reserve(candidates.size());
  est.degenerate_grid = grid.max_value() <= 0.f;
  double best_score = -1.0;
  for (const float yaw : candidates) {
    const Extents e = yaw_frame_extents(cloud, yaw);
    const Vec3 size = {std::max(e.hi.x - e.lo.x, kMinExtent),
                       std::max(e.hi.y - e.lo.y, kMinExtent),
                       std::max(e.hi.z - e.lo.z, kMinExtent)};
    const Vec3 center = (e.lo + e.hi) * 0.5f;
    const Mat3 R_inv = rot_z(-yaw);
    double score = 0.0;
    for (const Vec3& p : cloud) {
      const Vec3 q = R_inv * p - center;
      const Vec3 u = {q.x / size.x + 0.5f, q.y / size.y + 0.5f, q.z / size.z + 0.5f};
      score += trilerp(grid, u);
    }
    est.scores.push_back(score);
    if (score > best_score) {
      best_score = score;
      est.yaw = yaw;
      est.size = size;
      est.position = rot_z(yaw) * center;
    }
  }
  return est;
}

MapperResult run_mapper(const std::vector<SequenceFrame>& frames,
                        const std::vector<Category>& labels_by_instance,
                        const std::map<Category, PriorBundle>& priors, const MapperConfig& cfg) {
  MapperResult result;
  std::vector<ObjectTrack> tracks;
  std::map<std::uint8_t, int> mask_seen;       // mask pixels observed per value
  std::map<std::uint8_t, int> detections_for;  // valid detections per value

  for (std::size_t fi = 0; fi < frames.size(); ++fi) {
    const SequenceFrame& frame = frames[fi];
    for (int y = 0; y < frame.mask.height; ++y)
      for (int x = 0; x < frame.mask.width; ++x)
        if (frame.mask.at(x, y) != 0) ++mask_seen[frame.mask.at(x, y)];

    auto dets = extract_detections(frame, static_cast<int>(fi), labels_by_instance);
    for (const InstanceObservation& det : dets) {
      ++detections_for[det.instance_value];
      int best_track = -1;
      AssociationResult best;
      for (std::size_t t = 0; t < tracks.size(); ++t) {
        const bool consecutive =
            tracks[t].last_seen_frame == static_cast<int>(fi) - 1;
        AssociationResult r = associate(tracks[t], frame.camera, det, consecutive, cfg);
        if (r.merge && (best_track < 0 || r.gate_iou > best.gate_iou)) {
          best_track = static_cast<int>(t);
          best = std::move(r);
        }
      }
      if (best_track >= 0) {
        ObjectTrack& track = tracks[static_cast<std::size_t>(best_track)];
        track.cloud.insert(track.cloud.end(), best.accepted_points.begin(),
                           best.accepted_points.end());
        track.centroid_history.push_back(centroid_of(best.accepted_points));
        track.keyframes.push_back({static_cast<int>(fi), det.instance_value, det.bbox});
        track.last_seen_frame = static_cast<int>(fi);
      } else {
        auto clusters = cluster_filter(det.cloud, cfg.voxel, cfg.cluster_radius, cfg.min_cluster);
        if (clusters.empty()) continue;  // all points treated as outliers
        ObjectTrack track;
        track.id = static_cast<int>(tracks.size());
        track.category = det.category;
        for (const auto& cluster : clusters)
          track.cloud.insert(track.cloud.end(), cluster.begin(), cluster.end());
        track.centroid_history.push_back(centroid_of(track.cloud));
        track.keyframes.push_back({static_cast<int>(fi), det.instance_value, det.bbox});
        track.last_seen_frame = static_cast<int>(fi);
        tracks.push_back(std::move(track));
      }
    }

    // Promotion pass: viewpoint-spread gate.
    for (ObjectTrack& track : tracks) {
      if (track.status != TrackStatus::kAccumulating) continue;
      if (static_cast<int>(track.keyframes.size()) < cfg.ready_min_frames) continue;
      if (static_cast<int>(track.cloud.size()) < cfg.min_track_points) continue;
      const Vec3 c = centroid_of(track.cloud);
      std::vector<float> bearings;
      bearings.reserve(track.keyframes.size());
      for (const KeyframeRef& kf : track.keyframes) {
        const Vec3 cam_pos = frames[static_cast<std::size_t>(kf.frame_index)].camera.pose.t;
        bearings.push_back(std::atan2(cam_pos.y - c.y, cam_pos.x - c.x));
      }
      std::sort(bearings.begin(), bearings.end());
      float max_gap = 2.f * kPi - (bearings.back() - bearings.front());
      for (std::size_t i = 1; i < bearings.size(); ++i)
        max_gap = std::max(max_gap, bearings[i] - bearings[i - 1]);
      const float span = 2.f * kPi - max_gap;
      if (span < cfg.ready_min_bearing_deg * kPi / 180.f) continue;

      track.status = TrackStatus::kReady;
      const CoarseState cs = coarse_state(track.cloud);
      apply_extent_state(track, cs.yaw);
      const auto prior_it = cfg.use_priors ? priors.find(track.category) : priors.end();
      if (prior_it != priors.end()) {
        const PriorBundle& prior = prior_it->second;
        YawEstimate ye =
            canonical_yaw(track.cloud, track.category, prior.grid, cfg.yaw_samples, cs.yaw);
        track.grid_degenerate = ye.degenerate_grid;
        apply_extent_state(track, ye.yaw);
        track.yaw_canonical = !ye.degenerate_grid;

        if (!prior.mesh.triangles.empty() && track.cloud.size() >= 3) {
          auto ref_unit =
              sample_surface(prior.mesh, 512, mix_seed(cfg.seed, 0x1C9ULL + track.id));
          const Pose pose = track.obj_to_world();
          std::vector<Vec3> ref_world;
          ref_world.reserve(ref_unit.size());
          for (const Vec3& u : ref_unit)
            ref_world.push_back(pose.apply(cwise_mul(u - Vec3{0.5f, 0.5f, 0.5f}, track.size)));
          IcpResult icp = icp_refine(ref_world, track.cloud, 20, 1e-5);
          const float corrected = yaw_of(icp.transform.R * rot_z(track.yaw));
          apply_extent_state(track, corrected);
        }
      }
    }
  }

  // Training phase: each promoted track owns its field and optimizer.
  std::vector<MappedObject> objects(tracks.size());
  std::vector<int> ready_ids;
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    objects[t].track = tracks[t];
    if (tracks[t].status == TrackStatus::kReady)
      ready_ids.push_back(static_cast<int>(t));
    else {
      objects[t].track.status = TrackStatus::kSkipped;
      objects[t].note = "insufficient viewpoint coverage";
    }
  }
  parallel_for(static_cast<int>(ready_ids.size()), [&](int k) {
    const std::size_t t = static_cast<std::size_t>(ready_ids[static_cast<std::size_t>(k)]);
    ObjectTrack& track = objects[t].track;
    const auto prior_it = cfg.use_priors ? priors.find(track.category) : priors.end();
    const PriorBundle* prior = prior_it != priors.end() ? &prior_it->second : nullptr;
    objects[t].used_prior = prior != nullptr;
    objects[t].prior_sampling = cfg.prior_sampling;
    TrainOutput trained = train_track(track, frames, prior, cfg);
    objects[t].mesh = std::move(trained.mesh_world);
    objects[t].iterations = trained.iterations;
    objects[t].train_seconds = trained.seconds;
    objects[t].note = trained.note;
    track.status = TrackStatus::kDone;
  });

  // Instances that never produced a valid-depth detection.
  for (const auto& [value, seen] : mask_seen) {
    if (seen > 0 && detections_for[value] == 0) {
      MappedObject skipped;
      skipped.track.id = static_cast<int>(objects.size());
      skipped.track.status = TrackStatus::kSkipped;
      if (static_cast<std::size_t>(value) <= labels_by_instance.size())
        skipped.track.category = labels_by_instance[static_cast<std::size_t>(value) - 1];
      skipped.note = "no valid depth for mask value " + std::to_string(int(value));
      objects.push_back(std::move(skipped));
    }
  }

  result.report_lines.push_back(
      "id,category,prior,yaw_deg,size_x,size_y,size_z,iterations,seconds,note");
  for (const MappedObject& obj : objects) {
    std::ostringstream ss;
    ss.precision(6);
    ss << obj.track.id << "," << to_string(obj.track.category) << ","
       << (obj.used_prior ? "yes" : "no") << "," << obj.track.yaw * 180.f / kPi << ","
       << obj.track.size.x << "," << obj.track.size.y << "," << obj.track.size.z << ","
       << obj.iterations << "," << obj.train_seconds << "," << obj.note;
    result.report_lines.push_back(ss.str());
  }
  result.objects = std::move(objects);
  return result;
}

}  // namespace noma
