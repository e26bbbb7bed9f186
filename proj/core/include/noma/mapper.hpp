#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "noma/density_grid.hpp"
#include "noma/icp.hpp"
#include "noma/prior_bundle.hpp"
#include "noma/render.hpp"
#include "noma/shapes.hpp"
#include "noma/task.hpp"

namespace noma {

struct BBox2D {
  float x0 = 0.f, y0 = 0.f, x1 = 0.f, y1 = 0.f;  // pixel corners, x1 >= x0

  float width() const { return x1 - x0; }
  float height() const { return y1 - y0; }
  float area() const { return std::max(0.f, width()) * std::max(0.f, height()); }
};

// area(a intersect b) / area(a union b); 0 when the union is empty.
float iou_2d(const BBox2D& a, const BBox2D& b);

// One masked object observation in one frame.
struct InstanceObservation {
  int frame_index = -1;
  std::uint8_t instance_value = 0;  // mask value that produced it
  Category category = Category::kMug;
  BBox2D bbox;
  std::vector<Vec3> cloud;  // world-frame points from valid depth pixels
};

struct SequenceFrame {
  Camera camera;  // camera -> world
  ColorImage rgb;
  DepthImage depth;
  MaskImage mask;  // 0 = background, k+1 = detector instance k
};

// One observation per distinct mask value with >= 1 valid-depth pixel;
// labels_by_instance[v-1] names mask value v's category.
std::vector<InstanceObservation> extract_detections(const SequenceFrame& frame, int frame_index,
                                                    const std::vector<Category>& labels_by_instance);

enum class TrackStatus { kAccumulating, kReady, kDone, kSkipped };

struct KeyframeRef {
  int frame_index = -1;
  std::uint8_t instance_value = 0;
  BBox2D bbox;
};

struct ObjectTrack {
  int id = -1;
  Category category = Category::kMug;
  std::vector<Vec3> cloud;  // world frame, voxel-downsampled accumulation
  std::vector<Vec3> centroid_history;  // one accepted-cluster centroid per merge
  std::vector<KeyframeRef> keyframes;
  int last_seen_frame = -1;
  TrackStatus status = TrackStatus::kAccumulating;

  // 9-DoF state: box center (world), yaw about +z, box extents (meters).
  Vec3 position;
  float yaw = 0.f;
  Vec3 size{1.f, 1.f, 1.f};
  bool state_valid = false;
  bool yaw_canonical = false;  // true once refined against a prior
  bool grid_degenerate = false;

  Pose obj_to_world() const { return {rot_z(yaw), position}; }
  // Training/sampling box in the object frame, centered on the origin.
  Box3 object_box() const { return {size * -0.5f, size * 0.5f}; }
};

struct MapperConfig {
  float iou_threshold = 0.5f;        // consecutive-frame gate
  float piou_threshold = 0.3f;       // non-consecutive gate
  float alpha_rank = 0.05f;          // per-axis rank-sum acceptance level
  float alpha_centroid = 0.05f;      // centroid-history t-test level
  int rank_subsample = 40;           // per-side cap for the rank-sum test
  float voxel = 0.02f;               // meters
  float cluster_radius = 0.05f;      // meters
  int min_cluster = 20;              // downsampled points
  int ready_min_frames = 6;
  float ready_min_bearing_deg = 60.f;
  int yaw_samples = 72;              // K
  int iters_per_object = 200;
  int grid_refresh_every = 50;       // m
  InnerOptions inner{128, 0.25f, 24, {}};
  int coarse_samples = 32;           // coarse samples feeding the ray CDF
  float escape_eps = 1e-4f;
  int grid_resolution = 48;
  float eta = 1e-2f;
  bool use_priors = true;
  bool prior_sampling = true;  // false -> always midpoint sampling
  std::uint64_t seed = 0;
  int min_track_points = 30;
};

// Voxel-grid downsample (centroid per voxel) then single-linkage clustering
// by radius; clusters below min_count downsampled points are dropped.
std::vector<std::vector<Vec3>> cluster_filter(const std::vector<Vec3>& cloud, float voxel,
                                              float radius, int min_count);

// IoU between det.bbox and the screen-space bounds of the track's box
// corners (oriented box when the state exists, cloud bounds otherwise);
// 0 when every corner sits behind the camera.
float projected_iou(const ObjectTrack& track, const Camera& cam, const InstanceObservation& det);

struct AssociationResult {
  bool merge = false;
  std::vector<Vec3> accepted_points;   // union of clusters that passed
  std::vector<Vec3> cluster_centroids; // one per accepted cluster
  float gate_iou = 0.f;
  double min_p_rank = 1.0;
  double min_p_centroid = 1.0;
};

// Two gates: overlap (IoU or p-IoU, plus category equality), then per
// retained cluster a per-axis rank-sum test against the track cloud and a
// per-axis t-test of the cluster centroid against the track's centroid
// history. merge = gate 1 passed and at least one cluster passed gate 2.
AssociationResult associate(const ObjectTrack& track, const Camera& cam,
                            const InstanceObservation& det, bool consecutive,
                            const MapperConfig& cfg);

struct CoarseState {
  Vec3 position;
  float yaw = 0.f;  // in [0, pi/2): minimum-area rectangle orientation
  Vec3 size{0.f, 0.f, 0.f};
};

// Ground-plane minimum-area bounding rectangle (convex hull + rotating
// calipers) for yaw and horizontal extents; vertical extent from z bounds;
// position = extents center. Collinear projections fall back to yaw 0.
CoarseState coarse_state(const std::vector<Vec3>& cloud);

struct YawEstimate {
  float yaw = 0.f;       // object->world rotation about +z
  Vec3 size{0.f, 0.f, 0.f};
  Vec3 position;         // world box center at the chosen yaw
  bool degenerate_grid = false;  // all-zero grid: tie, smallest yaw returned
  std::vector<double> scores;    // accumulated density per yaw sample
};

// Canonical yaw against a category prior grid: K candidate yaws in [0, 2pi);
// the cloud is rotated into each candidate's object frame, normalized by its
// extents into the unit cube, and scored by summed trilinear grid density.
// Rotationally symmetric categories keep fallback_yaw (one candidate).
YawEstimate canonical_yaw(const std::vector<Vec3>& cloud, Category category,
                          const DensityGrid& grid, int K, float fallback_yaw);

struct MappedObject {
  ObjectTrack track;
  Mesh mesh;  // world frame; empty when skipped
  bool used_prior = false;
  bool prior_sampling = false;
  int iterations = 0;
  double train_seconds = 0.0;
  IcpResult icp;
  std::string note;  // non-empty when skipped or degraded
};

struct MapperResult {
  std::vector<MappedObject> objects;
  std::vector<std::string> report_lines;  // one header + one row per object
};

// Sequential ingest: per frame, detections associate into tracks (overlap +
// statistics gates); a track whose keyframes span enough bearings is
// promoted, its state estimated (coarse box, then prior yaw canonicalization
// and ICP when a prior exists). After ingest every promoted track trains its
// own field — prior parameters or random initialization — with CDF-guided
// ray sampling from the live grid, then bakes a world-frame mesh.
MapperResult run_mapper(const std::vector<SequenceFrame>& frames,
                        const std::vector<Category>& labels_by_instance,
                        const std::map<Category, PriorBundle>& priors, const MapperConfig& cfg);

}  // namespace noma
