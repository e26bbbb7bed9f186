#include "noma/marching_cubes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <unordered_map>

namespace noma {

const int kCubeCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
const int kCubeEdge[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                              {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

namespace {

// Faces as corner cycles; kFaceEdge[f][i] joins corner i and i+1 of the cycle.
constexpr int kFaceCorner[6][4] = {{0, 1, 2, 3}, {4, 5, 6, 7}, {0, 1, 5, 4},
                                   {1, 2, 6, 5},  {2, 3, 7, 6}, {3, 0, 4, 7}};
constexpr int kFaceEdge[6][4] = {{0, 1, 2, 3},  {4, 5, 6, 7},  {0, 9, 4, 8},
                                 {1, 10, 5, 9}, {2, 11, 6, 10}, {3, 8, 7, 11}};

using CaseTable = std::array<std::vector<std::array<int, 3>>, 256>;

// For each corner configuration, the surface is recovered by pairing crossed
// edges on every face (ambiguous faces always isolate the inside corners,
// which keeps shared faces consistent between neighbor cells), tracing the
// resulting closed polygons, and fan-triangulating them.
CaseTable build_case_table() {
  CaseTable table;
  for (int config = 0; config < 256; ++config) {
    auto inside = [&](int corner) { return (config >> corner) & 1; };
    bool crossed[12];
    for (int e = 0; e < 12; ++e)
      crossed[e] = inside(kCubeEdge[e][0]) != inside(kCubeEdge[e][1]);

    // partners[e] = the two edges e links to across its two adjacent faces
    std::array<std::array<int, 2>, 12> partners;
    std::array<int, 12> partner_count{};
    partners.fill({-1, -1});
    auto link = [&](int a, int b) {
      partners[static_cast<std::size_t>(a)][static_cast<std::size_t>(partner_count[static_cast<std::size_t>(a)]++)] = b;
      partners[static_cast<std::size_t>(b)][static_cast<std::size_t>(partner_count[static_cast<std::size_t>(b)]++)] = a;
    };
    for (int f = 0; f < 6; ++f) {
      int xs[4], nx = 0;
      for (int i = 0; i < 4; ++i)
        if (crossed[kFaceEdge[f][i]]) xs[nx++] = i;
      if (nx == 2) {
        link(kFaceEdge[f][xs[0]], kFaceEdge[f][xs[1]]);
      } else if (nx == 4) {
        // diagonal inside corners: pair the edges flanking each inside corner
        if (inside(kFaceCorner[f][0])) {
          link(kFaceEdge[f][3], kFaceEdge[f][0]);  // around corner 0
          link(kFaceEdge[f][1], kFaceEdge[f][2]);  // around corner 2
        } else {
          link(kFaceEdge[f][0], kFaceEdge[f][1]);  // around corner 1
          link(kFaceEdge[f][2], kFaceEdge[f][3]);  // around corner 3
        }
      }
    }

    bool visited[12] = {};
    for (int start = 0; start < 12; ++start) {
      if (!crossed[start] || visited[start]) continue;
      std::vector<int> poly;
      int prev = -1, cur = start;
      while (true) {
        poly.push_back(cur);
        visited[cur] = true;
        int next = partners[static_cast<std::size_t>(cur)][0] == prev
                       ? partners[static_cast<std::size_t>(cur)][1]
                       : partners[static_cast<std::size_t>(cur)][0];
        prev = cur;
        cur = next;
        if (cur == start) break;
      }

      // Orient so the polygon normal points from the inside region outward.
      auto midpoint = [&](int e) {
        Vec3 a{static_cast<float>(kCubeCorner[kCubeEdge[e][0]][0]),
               static_cast<float>(kCubeCorner[kCubeEdge[e][0]][1]),
               static_cast<float>(kCubeCorner[kCubeEdge[e][0]][2])};
        Vec3 b{static_cast<float>(kCubeCorner[kCubeEdge[e][1]][0]),
               static_cast<float>(kCubeCorner[kCubeEdge[e][1]][1]),
               static_cast<float>(kCubeCorner[kCubeEdge[e][1]][2])};
        return (a + b) * 0.5f;
      };
      Vec3 centroid{0, 0, 0}, inside_centroid{0, 0, 0};
      for (int e : poly) {
        centroid += midpoint(e);
        int c = inside(kCubeEdge[e][0]) ? kCubeEdge[e][0] : kCubeEdge[e][1];
        inside_centroid += Vec3{static_cast<float>(kCubeCorner[c][0]),
                                static_cast<float>(kCubeCorner[c][1]),
                                static_cast<float>(kCubeCorner[c][2])};
      }
      float inv = 1.f / static_cast<float>(poly.size());
      centroid *= inv;
      inside_centroid *= inv;
      Vec3 normal{0, 0, 0};
      for (std::size_t i = 0; i + 1 < poly.size(); ++i)
        normal += cross(midpoint(poly[i]) - centroid, midpoint(poly[i + 1]) - centroid);
      normal += cross(midpoint(poly.back()) - centroid, midpoint(poly[0]) - centroid);
      if (dot(normal, centroid - inside_centroid) < 0.f)
        std::reverse(poly.begin(), poly.end());

      for (std::size_t i = 1; i + 1 < poly.size(); ++i)
        table[static_cast<std::size_t>(config)].push_back({poly[0], poly[i], poly[i + 1]});
    }
  }
  return table;
}

const CaseTable& case_table() {
  static const CaseTable table = build_case_table();
  return table;
}

}  // namespace

const std::vector<std::array<int, 3>>& cube_case_triangles(int config) {
  return case_table()[static_cast<std::size_t>(config)];
}

Mesh marching_cubes(const DensityGrid& grid, float iso) {
  const int R = grid.resolution;
  Mesh mesh;
  if (R < 2) return mesh;
  const float scale = 1.f / static_cast<float>(R - 1);
  std::unordered_map<std::uint64_t, int> edge_vertex;
  const CaseTable& table = case_table();

  auto vertex_on_edge = [&](int ci, int cj, int ck, int edge) {
    const int a = kCubeEdge[edge][0], b = kCubeEdge[edge][1];
    int ax = ci + kCubeCorner[a][0], ay = cj + kCubeCorner[a][1], az = ck + kCubeCorner[a][2];
    int bx = ci + kCubeCorner[b][0], by = cj + kCubeCorner[b][1], bz = ck + kCubeCorner[b][2];
    if (std::tie(bx, by, bz) < std::tie(ax, ay, az)) {
      std::swap(ax, bx);
      std::swap(ay, by);
      std::swap(az, bz);
    }
    int axis = bx != ax ? 0 : (by != ay ? 1 : 2);
    std::uint64_t key =
        ((static_cast<std::uint64_t>(az) * static_cast<std::uint64_t>(R) + ay) * R + ax) * 3 +
        static_cast<std::uint64_t>(axis);
    auto it = edge_vertex.find(key);
    if (it != edge_vertex.end()) return it->second;

    float fa = grid.at(ax, ay, az);
    float fb = grid.at(bx, by, bz);
    float t = (iso - fa) / (fb - fa);
    t = std::clamp(t, 0.f, 1.f);
    Vec3 pa{ax * scale, ay * scale, az * scale};
    Vec3 pb{bx * scale, by * scale, bz * scale};
    int idx = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back(pa + (pb - pa) * t);
    edge_vertex.emplace(key, idx);
    return idx;
  };

  for (int k = 0; k + 1 < R; ++k)
    for (int j = 0; j + 1 < R; ++j)
      for (int i = 0; i + 1 < R; ++i) {
        int config = 0;
        for (int c = 0; c < 8; ++c) {
          float v = grid.at(i + kCubeCorner[c][0], j + kCubeCorner[c][1], k + kCubeCorner[c][2]);
          if (v > iso) config |= 1 << c;
        }
        if (config == 0 || config == 255) continue;
        for (const auto& tri : table[static_cast<std::size_t>(config)]) {
          int v0 = vertex_on_edge(i, j, k, tri[0]);
          int v1 = vertex_on_edge(i, j, k, tri[1]);
          int v2 = vertex_on_edge(i, j, k, tri[2]);
          mesh.triangles.push_back({v0, v1, v2});
        }
      }
  cleanup_mesh(mesh);
  return mesh;
}

}  // namespace noma
