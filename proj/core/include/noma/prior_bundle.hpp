#pragma once

#include <cstdint>
#include <string>

#include "noma/density_grid.hpp"
#include "noma/field.hpp"
#include "noma/mesh.hpp"
#include "noma/search.hpp"
#include "noma/shapes.hpp"

namespace noma {

struct PriorProvenance {
  std::uint64_t search_seed = 0;
  int population = 0;
  int generations = 0;
  Genome genome;  // chosen genes exactly as searched
};

// Everything the mapper needs to bootstrap one category: the searched
// architecture, meta-learned parameters, a baked density grid over the
// canonical unit cube, and its extracted mesh.
struct PriorBundle {
  std::uint16_t format_version = 1;
  Category category = Category::kMug;
  FieldArch arch;
  ParamVector theta;
  DensityGrid grid;
  Mesh mesh;  // vertices in [0,1]^3
  PriorProvenance provenance;
};

// Single-file container: magic "NOMA", u16 version, u32-length-prefixed
// text header (category, arch, provenance), then length-prefixed
// little-endian sections theta / grid / mesh. Round-trips bit-exactly.
void save_prior(const PriorBundle& bundle, const std::string& path);
PriorBundle load_prior(const std::string& path);

// Header + array statistics without constructing a field; for inspection.
std::string prior_summary(const std::string& path);

}  // namespace noma
