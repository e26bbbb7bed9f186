#include "noma/field.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "noma/config.hpp"
#include "noma/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "serialized parameter blobs assume a little-endian host");

namespace noma {
namespace {

constexpr float kSigmaCap = 1e4f;
constexpr std::uint32_t kPrimes[3] = {1u, 2654435761u, 805459861u};

float stable_sigmoid(float x) {
  if (x >= 0.f) {
    float e = std::exp(-x);
    return 1.f / (1.f + e);
  }
  float e = std::exp(x);
  return e / (1.f + e);
}

float density_forward(DensityActivation act, float x) {
  if (act == DensityActivation::kExpClamped) return std::fmin(std::exp(std::fmin(x, 10.f)), kSigmaCap);
  return x > 0.f ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

float density_derivative(DensityActivation act, float x, float sigma) {
  if (act == DensityActivation::kExpClamped) return sigma < kSigmaCap ? sigma : 0.f;
  (void)sigma;
  return stable_sigmoid(x);
}

struct MlpLayer {
  std::size_t w_off, b_off;
  int in, out;
};

// Layer-major layout after the hash tables: weights [out][in] row-major, then
// biases, for each hidden layer and finally the 4-wide output layer.
std::vector<MlpLayer> mlp_layout(const FieldArch& arch) {
  std::vector<MlpLayer> layers;
  std::size_t off = hash_param_count(arch);
  int in = arch.hash_levels * arch.features_per_level;
  for (int l = 0; l < arch.hidden_layers; ++l) {
    int out = arch.hidden_width;
    layers.push_back({off, off + static_cast<std::size_t>(out) * in, in, out});
    off += static_cast<std::size_t>(out) * in + out;
    in = out;
  }
  layers.push_back({off, off + static_cast<std::size_t>(4) * in, in, 4});
  return layers;
}

void encode_point(const FieldArch& arch, const ParamVector& params, const Vec3& p_in,
                  std::vector<float>& features, std::vector<std::uint32_t>* corner_row,
                  std::vector<float>* corner_w) {
  const int L = arch.hash_levels;
  const int F = arch.features_per_level;
  const std::size_t rows = table_rows(arch);
  features.assign(static_cast<std::size_t>(L) * F, 0.f);
  if (corner_row) corner_row->assign(static_cast<std::size_t>(L) * 8, 0);
  if (corner_w) corner_w->assign(static_cast<std::size_t>(L) * 8, 0.f);

  Vec3 p{std::clamp(p_in.x, 0.f, 1.f), std::clamp(p_in.y, 0.f, 1.f),
         std::clamp(p_in.z, 0.f, 1.f)};

  for (int l = 0; l < L; ++l) {
    const int res = level_resolution(arch, l);
    const std::size_t level_off = static_cast<std::size_t>(l) * F * rows;
    float gx = p.x * res, gy = p.y * res, gz = p.z * res;
    int cx = std::min(static_cast<int>(gx), res - 1);
    int cy = std::min(static_cast<int>(gy), res - 1);
    int cz = std::min(static_cast<int>(gz), res - 1);
    float fx = gx - cx, fy = gy - cy, fz = gz - cz;
    for (int corner = 0; corner < 8; ++corner) {
      int dx = corner & 1, dy = (corner >> 1) & 1, dz = (corner >> 2) & 1;
      float w = (dx ? fx : 1.f - fx) * (dy ? fy : 1.f - fy) * (dz ? fz : 1.f - fz);
      std::uint32_t row = vertex_table_row(arch, l, static_cast<std::uint32_t>(cx + dx),
                                           static_cast<std::uint32_t>(cy + dy),
                                           static_cast<std::uint32_t>(cz + dz));
      if (corner_row) (*corner_row)[static_cast<std::size_t>(l) * 8 + corner] = row;
      if (corner_w) (*corner_w)[static_cast<std::size_t>(l) * 8 + corner] = w;
      if (w == 0.f) continue;
      const float* entry = params.data() + level_off + static_cast<std::size_t>(row) * F;
      for (int f = 0; f < F; ++f)
        features[static_cast<std::size_t>(l) * F + f] += w * entry[f];
    }
  }
}

}  // namespace

std::string to_string(DensityActivation a) {
  return a == DensityActivation::kExpClamped ? "exponential-clamped" : "softplus";
}

DensityActivation density_activation_from_string(const std::string& s) {
  if (s == "exponential-clamped") return DensityActivation::kExpClamped;
  if (s == "softplus") return DensityActivation::kSoftplus;
  throw DataError("unknown density activation: " + s);
}

int level_resolution(const FieldArch& arch, int level) {
  double r = arch.base_resolution * std::pow(static_cast<double>(arch.per_level_scale), level);
  return std::max(1, static_cast<int>(r));
}

std::size_t table_rows(const FieldArch& arch) {
  return static_cast<std::size_t>(1) << arch.log2_table_size;
}

std::size_t hash_param_count(const FieldArch& arch) {
  return static_cast<std::size_t>(arch.hash_levels) * arch.features_per_level * table_rows(arch);
}

std::size_t mlp_param_count(const FieldArch& arch) {
  std::size_t n = 0;
  int in = arch.hash_levels * arch.features_per_level;
  for (int l = 0; l < arch.hidden_layers; ++l) {
    n += static_cast<std::size_t>(arch.hidden_width) * in + arch.hidden_width;
    in = arch.hidden_width;
  }
  n += static_cast<std::size_t>(4) * in + 4;
  return n;
}

std::size_t param_count(const FieldArch& arch) {
  return hash_param_count(arch) + mlp_param_count(arch);
}

std::uint32_t vertex_table_row(const FieldArch& arch, int level, std::uint32_t x, std::uint32_t y,
                               std::uint32_t z) {
  const std::uint32_t verts = static_cast<std::uint32_t>(level_resolution(arch, level)) + 1;
  const std::uint64_t dense = static_cast<std::uint64_t>(verts) * verts * verts;
  if (dense <= table_rows(arch)) return x + verts * (y + verts * z);
  std::uint32_t h = x * kPrimes[0] ^ y * kPrimes[1] ^ z * kPrimes[2];
  return h & (static_cast<std::uint32_t>(table_rows(arch)) - 1u);
}

ParamVector init_params(const FieldArch& arch, std::uint64_t seed) {
  ParamVector params(param_count(arch));
  std::mt19937 rng(static_cast<std::uint32_t>(seed ^ (seed >> 32)));
  std::uniform_real_distribution<float> table_dist(-1e-4f, 1e-4f);
  const std::size_t nh = hash_param_count(arch);
  for (std::size_t i = 0; i < nh; ++i) params[i] = table_dist(rng);

  std::normal_distribution<float> normal(0.f, 1.f);
  for (const MlpLayer& layer : mlp_layout(arch)) {
    const float scale = std::sqrt(2.f / static_cast<float>(layer.in));
    for (int o = 0; o < layer.out; ++o)
      for (int i = 0; i < layer.in; ++i)
        params[layer.w_off + static_cast<std::size_t>(o) * layer.in + i] = scale * normal(rng);
    for (int o = 0; o < layer.out; ++o) params[layer.b_off + o] = 0.f;
  }
  return params;
}

std::vector<float> hash_encode(const FieldArch& arch, const ParamVector& params, const Vec3& p) {
  std::vector<float> features;
  encode_point(arch, params, p, features, nullptr, nullptr);
  return features;
}

FieldOutput field_eval(const FieldArch& arch, const ParamVector& params, const Vec3& p,
                       FieldEvalCache* cache) {
  FieldEvalCache local;
  FieldEvalCache& c = cache ? *cache : local;
  encode_point(arch, params, p, c.features, cache ? &c.corner_row : nullptr,
               cache ? &c.corner_w : nullptr);

  const int W = arch.hidden_width;
  const int H = arch.hidden_layers;
  c.pre.assign(static_cast<std::size_t>(H) * W, 0.f);
  c.hidden.assign(static_cast<std::size_t>(H) * W, 0.f);

  const auto layers = mlp_layout(arch);
  const float* in = c.features.data();
  for (int l = 0; l < H; ++l) {
    const MlpLayer& layer = layers[static_cast<std::size_t>(l)];
    float* pre = c.pre.data() + static_cast<std::size_t>(l) * W;
    float* act = c.hidden.data() + static_cast<std::size_t>(l) * W;
    for (int o = 0; o < layer.out; ++o) {
      const float* wrow = params.data() + layer.w_off + static_cast<std::size_t>(o) * layer.in;
      float s = params[layer.b_off + o];
      for (int i = 0; i < layer.in; ++i) s += wrow[i] * in[i];
      pre[o] = s;
      act[o] = s > 0.f ? s : 0.f;
    }
    in = act;
  }
  const MlpLayer& out_layer = layers.back();
  for (int o = 0; o < 4; ++o) {
    const float* wrow = params.data() + out_layer.w_off + static_cast<std::size_t>(o) * out_layer.in;
    float s = params[out_layer.b_off + o];
    for (int i = 0; i < out_layer.in; ++i) s += wrow[i] * in[i];
    c.raw[static_cast<std::size_t>(o)] = s;
  }

  FieldOutput out;
  out.sigma = density_forward(arch.density_activation, c.raw[0]);
  out.rgb = {stable_sigmoid(c.raw[1]), stable_sigmoid(c.raw[2]), stable_sigmoid(c.raw[3])};
  if (!std::isfinite(out.sigma) || !std::isfinite(out.rgb.x) || !std::isfinite(out.rgb.y) ||
      !std::isfinite(out.rgb.z))
    throw NumericError("field_eval produced a non-finite output");
  c.out = out;
  return out;
}

std::vector<FieldOutput> field_eval(const FieldArch& arch, const ParamVector& params,
                                    const std::vector<Vec3>& points) {
  std::vector<FieldOutput> outs;
  outs.reserve(points.size());
  for (const Vec3& p : points) outs.push_back(field_eval(arch, params, p));
  return outs;
}

void field_backward(const FieldArch& arch, const ParamVector& params, const FieldEvalCache& cache,
                    float d_sigma, const Vec3& d_rgb, ParamVector& grad) {
  const int W = arch.hidden_width;
  const int H = arch.hidden_layers;
  const auto layers = mlp_layout(arch);

  std::array<float, 4> g_raw;
  g_raw[0] = d_sigma * density_derivative(arch.density_activation, cache.raw[0], cache.out.sigma);
  for (int k = 0; k < 3; ++k) {
    float s = cache.out.rgb[k];
    g_raw[static_cast<std::size_t>(k) + 1] = d_rgb[k] * s * (1.f - s);
  }

  // Output layer.
  const MlpLayer& out_layer = layers.back();
  const float* last = H > 0 ? cache.hidden.data() + static_cast<std::size_t>(H - 1) * W
                            : cache.features.data();
  std::vector<float> d_in(static_cast<std::size_t>(out_layer.in), 0.f);
  for (int o = 0; o < 4; ++o) {
    float g = g_raw[static_cast<std::size_t>(o)];
    if (g == 0.f) continue;
    float* gw = grad.data() + out_layer.w_off + static_cast<std::size_t>(o) * out_layer.in;
    const float* wrow = params.data() + out_layer.w_off + static_cast<std::size_t>(o) * out_layer.in;
    for (int i = 0; i < out_layer.in; ++i) {
      gw[i] += g * last[i];
      d_in[static_cast<std::size_t>(i)] += g * wrow[i];
    }
    grad[out_layer.b_off + o] += g;
  }

  // Hidden layers in reverse.
  for (int l = H - 1; l >= 0; --l) {
    const MlpLayer& layer = layers[static_cast<std::size_t>(l)];
    const float* pre = cache.pre.data() + static_cast<std::size_t>(l) * W;
    const float* in = l > 0 ? cache.hidden.data() + static_cast<std::size_t>(l - 1) * W
                            : cache.features.data();
    std::vector<float> d_prev(static_cast<std::size_t>(layer.in), 0.f);
    for (int o = 0; o < layer.out; ++o) {
      if (pre[o] <= 0.f) continue;  // ReLU gate
      float g = d_in[static_cast<std::size_t>(o)];
      if (g == 0.f) continue;
      float* gw = grad.data() + layer.w_off + static_cast<std::size_t>(o) * layer.in;
      const float* wrow = params.data() + layer.w_off + static_cast<std::size_t>(o) * layer.in;
      for (int i = 0; i < layer.in; ++i) {
        gw[i] += g * in[i];
        d_prev[static_cast<std::size_t>(i)] += g * wrow[i];
      }
      grad[layer.b_off + o] += g;
    }
    d_in.swap(d_prev);
  }

  // Scatter feature gradients into the hash tables.
  const int F = arch.features_per_level;
  const std::size_t rows = table_rows(arch);
  for (int l = 0; l < arch.hash_levels; ++l) {
    const std::size_t level_off = static_cast<std::size_t>(l) * F * rows;
    for (int corner = 0; corner < 8; ++corner) {
      float w = cache.corner_w[static_cast<std::size_t>(l) * 8 + corner];
      if (w == 0.f) continue;
      std::uint32_t row = cache.corner_row[static_cast<std::size_t>(l) * 8 + corner];
      float* gentry = grad.data() + level_off + static_cast<std::size_t>(row) * F;
      for (int f = 0; f < F; ++f)
        gentry[f] += w * d_in[static_cast<std::size_t>(l) * F + f];
    }
  }
}

void adam_step(AdamState& state, ParamVector& params, const ParamVector& grads) {
  if (state.m.size() != params.size() || grads.size() != params.size())
    throw NumericError("adam_step: shape mismatch");
  state.step += 1;
  const float b1 = state.beta1, b2 = state.beta2;
  const float c1 = 1.f - std::pow(b1, static_cast<float>(state.step));
  const float c2 = 1.f - std::pow(b2, static_cast<float>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    float g = grads[i];
    state.m[i] = b1 * state.m[i] + (1.f - b1) * g;
    state.v[i] = b2 * state.v[i] + (1.f - b2) * g * g;
    float mhat = state.m[i] / c1;
    float vhat = state.v[i] / c2;
    params[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

std::string arch_to_text(const FieldArch& arch) {
  std::ostringstream ss;
  ss.precision(9);  // float -> text -> float identity
  ss << "hash_levels=" << arch.hash_levels << "\n"
     << "features_per_level=" << arch.features_per_level << "\n"
     << "log2_table_size=" << arch.log2_table_size << "\n"
     << "base_resolution=" << arch.base_resolution << "\n"
     << "per_level_scale=" << arch.per_level_scale << "\n"
     << "hidden_width=" << arch.hidden_width << "\n"
     << "hidden_layers=" << arch.hidden_layers << "\n"
     << "density_activation=" << to_string(arch.density_activation) << "\n";
  return ss.str();
}

FieldArch arch_from_text(const std::string& text) {
  Config cfg = Config::from_string(text);
  FieldArch arch;
  arch.hash_levels = cfg.get_int("hash_levels", arch.hash_levels);
  arch.features_per_level = cfg.get_int("features_per_level", arch.features_per_level);
  arch.log2_table_size = cfg.get_int("log2_table_size", arch.log2_table_size);
  arch.base_resolution = cfg.get_int("base_resolution", arch.base_resolution);
  arch.per_level_scale = cfg.get_float("per_level_scale", arch.per_level_scale);
  arch.hidden_width = cfg.get_int("hidden_width", arch.hidden_width);
  arch.hidden_layers = cfg.get_int("hidden_layers", arch.hidden_layers);
  arch.density_activation =
      density_activation_from_string(cfg.get_string("density_activation", "exponential-clamped"));
  if (arch.hash_levels < 1 || arch.features_per_level < 1 || arch.log2_table_size < 0 ||
      arch.base_resolution < 1 || arch.per_level_scale < 1.f || arch.hidden_width < 1 ||
      arch.hidden_layers < 1)
    throw DataError("invalid architecture description");
  return arch;
}

void save_params(std::ostream& out, const FieldArch& arch, const ParamVector& params) {
  if (params.size() != param_count(arch))
    throw NumericError("save_params: length does not match architecture");
  out << arch_to_text(arch);
  out << "data=" << params.size() << "\n";
  out.write(reinterpret_cast<const char*>(params.data()),
            static_cast<std::streamsize>(params.size() * sizeof(float)));
  if (!out) throw DataError("save_params: write failed");
}

std::pair<FieldArch, ParamVector> load_params(std::istream& in) {
  std::string header;
  std::string line;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    if (line.rfind("data=", 0) == 0) {
      count = std::stoull(line.substr(5));
      break;
    }
    header += line;
    header += "\n";
  }
  if (!in) throw DataError("load_params: truncated header");
  FieldArch arch = arch_from_text(header);
  if (count != param_count(arch))
    throw DataError("load_params: length does not match architecture");
  ParamVector params(count);
  in.read(reinterpret_cast<char*>(params.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  if (!in) throw DataError("load_params: truncated data");
  return {arch, params};
}

}  // namespace noma
