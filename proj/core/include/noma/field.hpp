#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "noma/geom.hpp"

namespace noma {

enum class DensityActivation { kExpClamped, kSoftplus };

std::string to_string(DensityActivation a);
DensityActivation density_activation_from_string(const std::string& s);

// Hash-grid encoder + shallow MLP over [0,1]^3 producing (sigma, rgb).
// Color depends on position only; there is no view-direction input.
struct FieldArch {
  int hash_levels = 8;          // L
  int features_per_level = 2;   // F
  int log2_table_size = 14;     // T
  int base_resolution = 4;      // cells per axis at level 0
  float per_level_scale = 1.45f;
  int hidden_width = 32;
  int hidden_layers = 2;
  DensityActivation density_activation = DensityActivation::kExpClamped;

  bool operator==(const FieldArch&) const = default;
};

using ParamVector = std::vector<float>;

struct FieldOutput {
  float sigma = 0.f;   // >= 0
  Vec3 rgb;            // componentwise in [0,1]
};

// Cell count per axis at a level; never below 1.
int level_resolution(const FieldArch& arch, int level);

std::size_t table_rows(const FieldArch& arch);        // 2^T
std::size_t hash_param_count(const FieldArch& arch);  // L * F * 2^T
std::size_t mlp_param_count(const FieldArch& arch);
std::size_t param_count(const FieldArch& arch);

// Table row for an integer vertex of one level: direct (dense) indexing when
// the level's (res+1)^3 vertices fit in 2^T rows, spatial hash otherwise.
std::uint32_t vertex_table_row(const FieldArch& arch, int level, std::uint32_t x, std::uint32_t y,
                               std::uint32_t z);

// Hash tables uniform in [-1e-4, 1e-4]; MLP weights zero-mean normal scaled
// by sqrt(2 / fan_in); biases zero. Deterministic per (arch, seed).
ParamVector init_params(const FieldArch& arch, std::uint64_t seed);

// Per-point forward intermediates consumed by field_backward.
struct FieldEvalCache {
  std::vector<float> features;            // L*F encoder output
  std::vector<float> pre;                 // hidden pre-activations, layer-major
  std::vector<float> hidden;              // hidden post-activations, layer-major
  std::array<float, 4> raw{};             // output pre-activations
  FieldOutput out;
  std::vector<std::uint32_t> corner_row;  // L*8 table rows (within level)
  std::vector<float> corner_w;            // L*8 trilinear weights
};

// Encoder only: per level, trilinear blend of the 8 hashed corner rows.
// Points outside the unit cube are clamped to its boundary.
std::vector<float> hash_encode(const FieldArch& arch, const ParamVector& params, const Vec3& p);

FieldOutput field_eval(const FieldArch& arch, const ParamVector& params, const Vec3& p,
                       FieldEvalCache* cache = nullptr);
std::vector<FieldOutput> field_eval(const FieldArch& arch, const ParamVector& params,
                                    const std::vector<Vec3>& points);

// Accumulates d(loss)/d(params) for one point into grad (same length as
// params). cache must come from field_eval on the same (arch, params, point).
void field_backward(const FieldArch& arch, const ParamVector& params, const FieldEvalCache& cache,
                    float d_sigma, const Vec3& d_rgb, ParamVector& grad);

struct AdamState {
  std::vector<float> m, v;
  std::int64_t step = 0;
  float lr = 1e-2f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;

  explicit AdamState(std::size_t n = 0, float lr_ = 1e-2f)
      : m(n, 0.f), v(n, 0.f), lr(lr_) {}
};

// In-place Adam update with bias correction; increments state.step.
void adam_step(AdamState& state, ParamVector& params, const ParamVector& grads);

std::string arch_to_text(const FieldArch& arch);
FieldArch arch_from_text(const std::string& text);

// Binary layout: arch text block, a "data=<count>" line, then count
// little-endian 32-bit reals (hash tables level-major, then MLP layer-major).
void save_params(std::ostream& out, const FieldArch& arch, const ParamVector& params);
std::pair<FieldArch, ParamVector> load_params(std::istream& in);

}  // namespace noma
