#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <filesystem>
#include <memory>
#include <span>
#include <vector>

namespace hr {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Face = Eigen::Vector3i;

/// Location on a triangle mesh as convex weights over one face's corners.
struct SurfacePoint {
  int face = -1;
  Vec3 bary = Vec3(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);

  bool operator==(const SurfacePoint& other) const {
    return face == other.face && bary == other.bary;
  }
};

/// Tolerant validity check: weights non-negative and summing to one.
bool isValidBary(const Vec3& bary, double tol = 1e-9);

/// Connectivity shared by all meshes with the same face list (e.g. posed
/// copies of one hand). Built once, immutable afterwards.
struct MeshTopology {
  int numVertices = 0;
  std::vector<Face> faces;
  // Face across local edge k of face f (edge k runs faces[f][k] -> faces[f][(k+1)%3]); -1 on boundary.
  std::vector<Eigen::Vector3i> faceNeighbor;
  // Local edge index of the same edge inside faceNeighbor[f][k].
  std::vector<Eigen::Vector3i> neighborEdge;
  std::vector<std::vector<int>> vertexFaces;
  std::vector<std::vector<int>> vertexNeighbors;
  std::vector<bool> boundaryVertex;
  int numEdges = 0;
};

/// Manifold, consistently oriented triangle mesh. Immutable after
/// construction; safe to share across threads.
class Mesh {
 public:
  Mesh() = default;

  /// Validates and builds adjacency. Throws hr::Error on non-manifold edges,
  /// inconsistent orientation, out-of-range indices or zero-area faces.
  Mesh(std::vector<Vec3> vertices, std::vector<Face> faces);

  /// Same connectivity, new vertex positions (no re-validation of areas).
  Mesh withVertices(std::vector<Vec3> vertices) const;
  Mesh transformed(const Eigen::Isometry3d& xf) const;

  int numVertices() const {
    return static_cast<int>(vertices_.size());
  }
  int numFaces() const {
    return topology_ ? static_cast<int>(topology_->faces.size()) : 0;
  }
  int numEdges() const {
    return topology_ ? topology_->numEdges : 0;
  }
  int eulerCharacteristic() const {
    return numVertices() - numEdges() + numFaces();
  }

  const std::vector<Vec3>& vertices() const {
    return vertices_;
  }
  const std::vector<Face>& faces() const {
    return topology_->faces;
  }
  const Vec3& vertex(int v) const {
    return vertices_[v];
  }
  const Face& face(int f) const {
    return topology_->faces[f];
  }
  Vec3 corner(int f, int k) const {
    return vertices_[topology_->faces[f][k]];
  }

  const Vec3& faceNormal(int f) const {
    return faceNormals_[f];
  }
  const Vec3& vertexNormal(int v) const {
    return vertexNormals_[v];
  }
  double faceArea(int f) const {
    return faceAreas_[f];
  }

  int neighborFace(int f, int k) const {
    return topology_->faceNeighbor[f][k];
  }
  int neighborEdge(int f, int k) const {
    return topology_->neighborEdge[f][k];
  }
  std::span<const int> vertexFaces(int v) const {
    return topology_->vertexFaces[v];
  }
  std::span<const int> vertexNeighbors(int v) const {
    return topology_->vertexNeighbors[v];
  }
  bool isBoundaryVertex(int v) const {
    return topology_->boundaryVertex[v];
  }
  bool hasBoundary() const;

  double edgeLength(int f, int k) const {
    return (corner(f, (k + 1) % 3) - corner(f, k)).norm();
  }
  double meanEdgeLength() const;
  double boundingDiagonal() const;

  /// Sum of corner angles around a vertex.
  double angleSum(int v) const;

  const std::shared_ptr<const MeshTopology>& topology() const {
    return topology_;
  }

 private:
  Mesh(std::vector<Vec3> vertices, std::shared_ptr<const MeshTopology> topology);
  void computeGeometry();

  std::vector<Vec3> vertices_;
  std::shared_ptr<const MeshTopology> topology_;
  std::vector<Vec3> faceNormals_;
  std::vector<Vec3> vertexNormals_;
  std::vector<double> faceAreas_;
};

/// Reads an ASCII OBJ (v/f records). Normals in the file are ignored.
Mesh loadMesh(const std::filesystem::path& path);
Mesh parseObj(std::istream& in);
void saveMesh(const Mesh& mesh, const std::filesystem::path& path);

/// b0*v0 + b1*v1 + b2*v2. Throws on face index out of range.
Vec3 positionOf(const Mesh& mesh, const SurfacePoint& p);

/// Barycentric interpolation of vertex normals, renormalized.
Vec3 normalAt(const Mesh& mesh, const SurfacePoint& p);

/// Surface point located exactly at vertex v (first incident face).
SurfacePoint pointAtVertex(const Mesh& mesh, int v);

/// Barycentric coordinates of the projection of `x` onto the plane of face f.
Vec3 barycentricOf(const Mesh& mesh, int f, const Vec3& x);

/// Analytic oriented box signed distance (negative inside).
struct BoxSdf {
  Vec3 center = Vec3::Zero();
  Vec3 halfExtents = Vec3::Constant(0.5);
  Mat3 rotation = Mat3::Identity();
};

double boxSdf(const BoxSdf& box, const Vec3& point);

} // namespace hr
