#include "noma/prior_bundle.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "noma/config.hpp"
#include "noma/errors.hpp"

namespace noma {
namespace {

constexpr char kMagic[4] = {'N', 'O', 'M', 'A'};
constexpr std::uint16_t kSupportedVersion = 1;

void write_bytes(std::ostream& out, const void* data, std::size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

template <typename T>
void write_pod(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little, "little-endian layout assumed");
  write_bytes(out, &value, sizeof(T));
}

void read_bytes(std::istream& in, void* data, std::size_t n, const char* what) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n))
    throw DataError(std::string("prior bundle truncated in ") + what);
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
  T value;
  read_bytes(in, &value, sizeof(T), what);
  return value;
}

std::string header_text(const PriorBundle& b) {
  std::ostringstream ss;
  ss.precision(9);
  ss << "category=" << to_string(b.category) << "\n";
  ss << arch_to_text(b.arch);
  const Genome& g = b.provenance.genome;
  ss << "search_seed=" << b.provenance.search_seed << "\n"
     << "search_population=" << b.provenance.population << "\n"
     << "search_generations=" << b.provenance.generations << "\n"
     << "genome_hash_levels=" << g.hash_levels << "\n"
     << "genome_log2_table_size=" << g.log2_table_size << "\n"
     << "genome_features_per_level=" << g.features_per_level << "\n"
     << "genome_hidden_width=" << g.hidden_width << "\n"
     << "genome_hidden_layers=" << g.hidden_layers << "\n"
     << "genome_meta_steps=" << g.meta_steps << "\n"
     << "genome_inner_iters=" << g.inner_iters << "\n"
     << "genome_eta=" << g.eta << "\n"
     << "genome_beta=" << g.beta << "\n"
     << "genome_per_level_scale=" << g.per_level_scale << "\n"
     << "genome_lambda_d=" << g.lambda_d << "\n"
     << "genome_lambda_sigma=" << g.lambda_sigma << "\n"
     << "genome_density_activation=" << to_string(g.density_activation) << "\n";
  return ss.str();
}

void parse_header(const std::string& text, PriorBundle& b) {
  Config cfg = Config::from_string(text);
  b.category = category_from_string(cfg.get_string("category", ""));
  b.arch = arch_from_text(text);
  b.provenance.search_seed = static_cast<std::uint64_t>(cfg.get_double("search_seed", 0));
  b.provenance.population = cfg.get_int("search_population", 0);
  b.provenance.generations = cfg.get_int("search_generations", 0);
  Genome& g = b.provenance.genome;
  g.hash_levels = cfg.get_int("genome_hash_levels", g.hash_levels);
  g.log2_table_size = cfg.get_int("genome_log2_table_size", g.log2_table_size);
  g.features_per_level = cfg.get_int("genome_features_per_level", g.features_per_level);
  g.hidden_width = cfg.get_int("genome_hidden_width", g.hidden_width);
  g.hidden_layers = cfg.get_int("genome_hidden_layers", g.hidden_layers);
  g.meta_steps = cfg.get_int("genome_meta_steps", g.meta_steps);
  g.inner_iters = cfg.get_int("genome_inner_iters", g.inner_iters);
  g.eta = cfg.get_float("genome_eta", g.eta);
  g.beta = cfg.get_float("genome_beta", g.beta);
  g.per_level_scale = cfg.get_float("genome_per_level_scale", g.per_level_scale);
  g.lambda_d = cfg.get_float("genome_lambda_d", g.lambda_d);
  g.lambda_sigma = cfg.get_float("genome_lambda_sigma", g.lambda_sigma);
  g.density_activation = density_activation_from_string(
      cfg.get_string("genome_density_activation", to_string(g.density_activation)));
}

std::uint64_t theta_section_bytes(const PriorBundle& b) {
  return b.theta.size() * sizeof(float);
}
std::uint64_t grid_section_bytes(const PriorBundle& b) {
  return sizeof(std::uint32_t) + b.grid.values.size() * sizeof(float);
}
std::uint64_t mesh_section_bytes(const PriorBundle& b) {
  return 2 * sizeof(std::uint64_t) + b.mesh.vertices.size() * 3 * sizeof(float) +
         b.mesh.triangles.size() * 3 * sizeof(std::uint32_t);
}

}  // namespace

void save_prior(const PriorBundle& bundle, const std::string& path) {
  if (bundle.theta.size() != param_count(bundle.arch))
    throw DataError("save_prior: parameter count does not match architecture");
  const std::size_t r = static_cast<std::size_t>(bundle.grid.resolution);
  if (bundle.grid.values.size() != r * r * r)
    throw DataError("save_prior: grid payload does not match its resolution");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("save_prior: cannot write " + path);
  write_bytes(out, kMagic, 4);
  write_pod<std::uint16_t>(out, bundle.format_version);

  const std::string header = header_text(bundle);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
  write_bytes(out, header.data(), header.size());

  write_pod<std::uint64_t>(out, theta_section_bytes(bundle));
  write_bytes(out, bundle.theta.data(), bundle.theta.size() * sizeof(float));

  write_pod<std::uint64_t>(out, grid_section_bytes(bundle));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(bundle.grid.resolution));
  write_bytes(out, bundle.grid.values.data(), bundle.grid.values.size() * sizeof(float));

  write_pod<std::uint64_t>(out, mesh_section_bytes(bundle));
  write_pod<std::uint64_t>(out, bundle.mesh.vertices.size());
  write_bytes(out, bundle.mesh.vertices.data(), bundle.mesh.vertices.size() * sizeof(Vec3));
  write_pod<std::uint64_t>(out, bundle.mesh.triangles.size());
  for (const auto& tri : bundle.mesh.triangles) {
    std::uint32_t idx[3] = {static_cast<std::uint32_t>(tri[0]),
                            static_cast<std::uint32_t>(tri[1]),
                            static_cast<std::uint32_t>(tri[2])};
    write_bytes(out, idx, sizeof(idx));
  }
  if (!out) throw DataError("save_prior: write failed for " + path);
}

PriorBundle load_prior(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("load_prior: cannot read " + path);
  char magic[4];
  read_bytes(in, magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) throw DataError(path + ": not a prior bundle");
  PriorBundle b;
  b.format_version = read_pod<std::uint16_t>(in, "version");
  if (b.format_version == 0 || b.format_version > kSupportedVersion)
    throw DataError(path + ": unsupported prior bundle version " +
                    std::to_string(b.format_version));

  const auto header_len = read_pod<std::uint32_t>(in, "header length");
  std::string header(header_len, '\0');
  read_bytes(in, header.data(), header_len, "header");
  parse_header(header, b);

  const auto theta_len = read_pod<std::uint64_t>(in, "theta length");
  if (theta_len != param_count(b.arch) * sizeof(float))
    throw DataError(path + ": parameter section does not match the declared architecture");
  b.theta.resize(theta_len / sizeof(float));
  read_bytes(in, b.theta.data(), theta_len, "theta");

  const auto grid_len = read_pod<std::uint64_t>(in, "grid length");
  const auto res = read_pod<std::uint32_t>(in, "grid resolution");
  if (res < 2 || res > 4096) throw DataError(path + ": grid resolution out of range");
  const std::uint64_t vox = static_cast<std::uint64_t>(res) * res * res;
  if (grid_len != sizeof(std::uint32_t) + vox * sizeof(float))
    throw DataError(path + ": grid section does not match its resolution");
  b.grid.resolution = static_cast<int>(res);
  b.grid.values.resize(vox);
  read_bytes(in, b.grid.values.data(), vox * sizeof(float), "grid");

  const auto mesh_len = read_pod<std::uint64_t>(in, "mesh length");
  const auto n_vert = read_pod<std::uint64_t>(in, "vertex count");
  if (mesh_len < 2 * sizeof(std::uint64_t) + n_vert * sizeof(Vec3))
    throw DataError(path + ": mesh section shorter than its vertex payload");
  b.mesh.vertices.resize(n_vert);
  read_bytes(in, b.mesh.vertices.data(), n_vert * sizeof(Vec3), "vertices");
  const auto n_tri = read_pod<std::uint64_t>(in, "triangle count");
  if (mesh_len != 2 * sizeof(std::uint64_t) + n_vert * sizeof(Vec3) +
                      n_tri * 3 * sizeof(std::uint32_t))
    throw DataError(path + ": mesh section length mismatch");
  b.mesh.triangles.resize(n_tri);
  for (auto& tri : b.mesh.triangles) {
    std::uint32_t idx[3];
    read_bytes(in, idx, sizeof(idx), "triangles");
    tri = {static_cast<int>(idx[0]), static_cast<int>(idx[1]), static_cast<int>(idx[2])};
    for (std::uint32_t k : idx)
      if (k >= b.mesh.vertices.size())
        throw DataError(path + ": triangle index out of range");
  }
  in.peek();
  if (!in.eof()) throw DataError(path + ": trailing bytes after mesh section");
  return b;
}

std::string prior_summary(const std::string& path) {
  const PriorBundle b = load_prior(path);
  float theta_min = 0.f, theta_max = 0.f;
  if (!b.theta.empty()) {
    auto [lo, hi] = std::minmax_element(b.theta.begin(), b.theta.end());
    theta_min = *lo;
    theta_max = *hi;
  }
  std::ostringstream ss;
  ss.precision(6);
  ss << "category: " << to_string(b.category) << "\n"
     << "format version: " << b.format_version << "\n"
     << "architecture:\n";
  std::istringstream arch_lines(arch_to_text(b.arch));
  std::string line;
  while (std::getline(arch_lines, line)) ss << "  " << line << "\n";
  ss << "parameters: " << b.theta.size() << " (min " << theta_min << ", max " << theta_max
     << ")\n"
     << "grid: " << b.grid.resolution << "^3, max density " << b.grid.max_value() << "\n"
     << "mesh: " << b.mesh.vertices.size() << " vertices, " << b.mesh.triangles.size()
     << " triangles\n"
     << "search: seed " << b.provenance.search_seed << ", population "
     << b.provenance.population << ", generations " << b.provenance.generations << "\n";
  return ss.str();
}

}  // namespace noma
