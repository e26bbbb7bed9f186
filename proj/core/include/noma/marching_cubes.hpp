#pragma once

#include "noma/density_grid.hpp"
#include "noma/mesh.hpp"

namespace noma {

// Isosurface of {density == iso} with "inside" = value > iso. Classic
// 256-configuration cube table with vertices placed by linear interpolation
// along crossed lattice edges; shared vertices are welded via canonical edge
// keys and the result is run through cleanup_mesh. Vertices lie in [0,1]^3.
Mesh marching_cubes(const DensityGrid& grid, float iso);

// Triangulation (as cube-edge index triples) for one of the 256 corner
// configurations. Exposed for table-level audits.
const std::vector<std::array<int, 3>>& cube_case_triangles(int config);

// Cube corner offsets and edge endpoints of the table's convention.
extern const int kCubeCorner[8][3];
extern const int kCubeEdge[12][2];

}  // namespace noma
