#include "noma/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "noma/errors.hpp"

namespace noma {

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  Vec3 n = cross(b - a, c - a);
  return 0.5 * std::sqrt(static_cast<double>(dot(n, n)));
}

double surface_area(const Mesh& mesh) {
  double area = 0.0;
  for (const auto& t : mesh.triangles)
    area += triangle_area(mesh.vertices[static_cast<std::size_t>(t[0])],
                          mesh.vertices[static_cast<std::size_t>(t[1])],
                          mesh.vertices[static_cast<std::size_t>(t[2])]);
  return area;
}

void cleanup_mesh(Mesh& mesh) {
  std::vector<std::array<int, 3>> kept;
  kept.reserve(mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) continue;
    if (triangle_area(mesh.vertices[static_cast<std::size_t>(t[0])],
                      mesh.vertices[static_cast<std::size_t>(t[1])],
                      mesh.vertices[static_cast<std::size_t>(t[2])]) <= 0.0)
      continue;
    kept.push_back(t);
  }
  mesh.triangles.swap(kept);

  std::vector<int> remap(mesh.vertices.size(), -1);
  std::vector<Vec3> verts;
  for (auto& t : mesh.triangles)
    for (int& idx : t) {
      if (remap[static_cast<std::size_t>(idx)] < 0) {
        remap[static_cast<std::size_t>(idx)] = static_cast<int>(verts.size());
        verts.push_back(mesh.vertices[static_cast<std::size_t>(idx)]);
      }
      idx = remap[static_cast<std::size_t>(idx)];
    }
  mesh.vertices.swap(verts);
}

Mesh transformed(const Mesh& mesh, const Vec3& scale, const Pose& pose) {
  Mesh out = mesh;
  for (Vec3& v : out.vertices) v = pose.apply(cwise_mul(v, scale));
  return out;
}

Box3 bounds(const Mesh& mesh) {
  Box3 box;
  if (mesh.vertices.empty()) return box;
  box.min = box.max = mesh.vertices[0];
  for (const Vec3& v : mesh.vertices) box.expand(v);
  return box;
}

std::vector<Vec3> sample_surface(const Mesh& mesh, int n, std::uint64_t seed) {
  if (mesh.triangles.empty()) throw DataError("sample_surface: empty mesh");
  std::vector<double> cumulative(mesh.triangles.size());
  double total = 0.0;
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const auto& t = mesh.triangles[i];
    total += triangle_area(mesh.vertices[static_cast<std::size_t>(t[0])],
                           mesh.vertices[static_cast<std::size_t>(t[1])],
                           mesh.vertices[static_cast<std::size_t>(t[2])]);
    cumulative[i] = total;
  }
  if (total <= 0.0) throw DataError("sample_surface: degenerate mesh");

  std::mt19937 rng(static_cast<std::uint32_t>(seed ^ (seed >> 32)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec3> points;
  points.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double u = unit(rng) * total;
    std::size_t idx = static_cast<std::size_t>(
        std::lower_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    idx = std::min(idx, mesh.triangles.size() - 1);
    const auto& t = mesh.triangles[idx];
    const Vec3& a = mesh.vertices[static_cast<std::size_t>(t[0])];
    const Vec3& b = mesh.vertices[static_cast<std::size_t>(t[1])];
    const Vec3& c = mesh.vertices[static_cast<std::size_t>(t[2])];
    float r1 = static_cast<float>(unit(rng));
    float r2 = static_cast<float>(unit(rng));
    if (r1 + r2 > 1.f) {
      r1 = 1.f - r1;
      r2 = 1.f - r2;
    }
    points.push_back(a + (b - a) * r1 + (c - a) * r2);
  }
  return points;
}

void save_obj(std::ostream& out, const Mesh& mesh) {
  out.precision(9);  // float round-trips exactly at 9 significant digits
  out << "# triangle mesh, " << mesh.vertices.size() << " vertices, " << mesh.triangles.size()
      << " faces\n";
  for (const Vec3& v : mesh.vertices) out << "v " << v.x << " " << v.y << " " << v.z << "\n";
  for (const auto& t : mesh.triangles)
    out << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
  if (!out) throw DataError("save_obj: write failed");
}

Mesh load_obj(std::istream& in) {
  Mesh mesh;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      Vec3 v;
      ss >> v.x >> v.y >> v.z;
      if (!ss) throw DataError("load_obj: malformed vertex line");
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::array<int, 3> t{};
      std::string tok;
      for (int k = 0; k < 3; ++k) {
        if (!(ss >> tok)) throw DataError("load_obj: malformed face line");
        // tolerate v/vt/vn syntax: take the leading vertex index
        t[static_cast<std::size_t>(k)] = std::stoi(tok) - 1;
      }
      for (int idx : t)
        if (idx < 0 || idx >= static_cast<int>(mesh.vertices.size()))
          throw DataError("load_obj: face index out of range");
      mesh.triangles.push_back(t);
    }
  }
  return mesh;
}

void save_obj_file(const std::string& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  save_obj(out, mesh);
}

Mesh load_obj_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open mesh file: " + path);
  return load_obj(in);
}

}  // namespace noma
