#include "handretarget/primitives.h"

#include <cmath>
#include <map>

namespace hr {

Mesh makeGrid(int nx, int ny, double spacing, const Vec3& origin) {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      vertices.push_back(origin + Vec3(i * spacing, j * spacing, 0.0));
    }
  }
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      faces.emplace_back(id(i, j), id(i + 1, j), id(i + 1, j + 1));
      faces.emplace_back(id(i, j), id(i + 1, j + 1), id(i, j + 1));
    }
  }
  return Mesh(std::move(vertices), std::move(faces));
}

Mesh makeIcosphere(int subdivisions, double radius) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> vertices = {
      {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
      {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  std::vector<Face> faces = {
      {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
      {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
  for (auto& v : vertices) {
    v.normalize();
  }
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoints;
    auto midpoint = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoints.find({key.first, key.second});
      if (it != midpoints.end()) {
        return it->second;
      }
      vertices.push_back((vertices[a] + vertices[b]).normalized());
      const int id = static_cast<int>(vertices.size()) - 1;
      midpoints[{key.first, key.second}] = id;
      return id;
    };
    std::vector<Face> refined;
    refined.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int a = midpoint(f[0], f[1]);
      const int b = midpoint(f[1], f[2]);
      const int c = midpoint(f[2], f[0]);
      refined.emplace_back(f[0], a, c);
      refined.emplace_back(f[1], b, a);
      refined.emplace_back(f[2], c, b);
      refined.emplace_back(a, b, c);
    }
    faces = std::move(refined);
  }
  for (auto& v : vertices) {
    v *= radius;
  }
  return Mesh(std::move(vertices), std::move(faces));
}

Mesh makeBoxMesh(const Vec3& center, const Vec3& halfExtents, int divisions) {
  std::set<VoxelCell> cells;
  for (int i = 0; i < divisions; ++i) {
    for (int j = 0; j < divisions; ++j) {
      for (int k = 0; k < divisions; ++k) {
        cells.insert({i, j, k});
      }
    }
  }
  Mesh unit = voxelSurface(cells, 1.0 / divisions);
  std::vector<Vec3> vertices = unit.vertices();
  for (auto& v : vertices) {
    v = center + (2.0 * v - Vec3::Ones()).cwiseProduct(halfExtents);
  }
  return Mesh(std::move(vertices), unit.faces());
}

Mesh subdivide(const Mesh& mesh) {
  std::vector<Vec3> vertices = mesh.vertices();
  std::map<std::pair<int, int>, int> midpoints;
  auto midpoint = [&](int a, int b) {
    auto key = std::minmax(a, b);
    auto it = midpoints.find({key.first, key.second});
    if (it != midpoints.end()) {
      return it->second;
    }
    vertices.push_back(0.5 * (vertices[a] + vertices[b]));
    const int id = static_cast<int>(vertices.size()) - 1;
    midpoints[{key.first, key.second}] = id;
    return id;
  };
  std::vector<Face> faces;
  faces.reserve(mesh.numFaces() * 4);
  for (const auto& f : mesh.faces()) {
    const int a = midpoint(f[0], f[1]);
    const int b = midpoint(f[1], f[2]);
    const int c = midpoint(f[2], f[0]);
    faces.emplace_back(f[0], a, c);
    faces.emplace_back(f[1], b, a);
    faces.emplace_back(f[2], c, b);
    faces.emplace_back(a, b, c);
  }
  return Mesh(std::move(vertices), std::move(faces));
}

Mesh voxelSurface(const std::set<VoxelCell>& cells, double voxelSize, const Vec3& origin) {
  std::map<VoxelCell, int> lattice;
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  auto vertexId = [&](const VoxelCell& p) {
    auto [it, inserted] = lattice.emplace(p, static_cast<int>(vertices.size()));
    if (inserted) {
      vertices.push_back(origin + voxelSize * Vec3(p[0], p[1], p[2]));
    }
    return it->second;
  };
  for (const auto& c : cells) {
    for (int axis = 0; axis < 3; ++axis) {
      for (int side = 0; side < 2; ++side) {
        VoxelCell nbr = c;
        nbr[axis] += side ? 1 : -1;
        if (cells.count(nbr)) {
          continue;
        }
        const int u = (axis + 1) % 3;
        const int v = (axis + 2) % 3;
        // quad corners in the face plane, ordered counter-clockwise seen from outside
        std::array<VoxelCell, 4> q;
        for (auto& p : q) {
          p = c;
          p[axis] += side;
        }
        q[1][u] += 1;
        q[2][u] += 1;
        q[2][v] += 1;
        q[3][v] += 1;
        if (!side) {
          std::swap(q[1], q[3]);
        }
        const int a = vertexId(q[0]);
        const int b = vertexId(q[1]);
        const int cc = vertexId(q[2]);
        const int d = vertexId(q[3]);
        faces.emplace_back(a, b, cc);
        faces.emplace_back(a, cc, d);
      }
    }
  }
  return Mesh(std::move(vertices), std::move(faces));
}

Mesh taubinSmooth(const Mesh& mesh, int iterations, double lambda, double mu) {
  std::vector<Vec3> v = mesh.vertices();
  std::vector<Vec3> next(v.size());
  auto step = [&](double factor) {
    for (int i = 0; i < mesh.numVertices(); ++i) {
      Vec3 mean = Vec3::Zero();
      const auto nbrs = mesh.vertexNeighbors(i);
      for (int n : nbrs) {
        mean += v[n];
      }
      mean /= static_cast<double>(nbrs.size());
      next[i] = v[i] + factor * (mean - v[i]);
    }
    v.swap(next);
  };
  for (int it = 0; it < iterations; ++it) {
    step(lambda);
    step(mu);
  }
  return Mesh(std::move(v), mesh.faces());
}

} // namespace hr
