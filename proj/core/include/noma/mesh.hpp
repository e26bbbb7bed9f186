#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "noma/geom.hpp"

namespace noma {

struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;

  bool empty() const { return triangles.empty(); }
};

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);
double surface_area(const Mesh& mesh);

// Drops zero-area triangles, then vertices no triangle references.
void cleanup_mesh(Mesh& mesh);

// Componentwise scale then rigid transform: v' = pose(R*cwise(v)+t applied to scaled v).
Mesh transformed(const Mesh& mesh, const Vec3& scale, const Pose& pose);

Box3 bounds(const Mesh& mesh);

// Area-weighted uniform surface sampling, deterministic per seed.
std::vector<Vec3> sample_surface(const Mesh& mesh, int n, std::uint64_t seed);

// ASCII OBJ, vertices and triangular faces only.
void save_obj(std::ostream& out, const Mesh& mesh);
Mesh load_obj(std::istream& in);
void save_obj_file(const std::string& path, const Mesh& mesh);
Mesh load_obj_file(const std::string& path);

}  // namespace noma
