#pragma once

#include "handretarget/mesh.h"

#include <optional>
#include <vector>

namespace hr {

struct RayHit {
  SurfacePoint point;
  double distance = 0.0; // along the (unit) ray direction
  bool frontFace = true; // ray direction opposes the face normal
};

/// Möller–Trumbore test against one face; hits with t >= tMin are reported.
std::optional<RayHit> intersectFace(const Mesh& mesh, int face, const Vec3& origin, const Vec3& dir, double tMin);

/// Axis-aligned bounding-volume hierarchy over a mesh's faces. Holds a
/// reference to the mesh, which must outlive it.
class TriangleBvh {
 public:
  explicit TriangleBvh(const Mesh& mesh);

  /// Nearest hit with distance >= tMin, front or back facing.
  std::optional<RayHit> raycast(const Vec3& origin, const Vec3& dir, double tMin = 0.0) const;

  /// Every hit with distance >= tMin, sorted by distance.
  std::vector<RayHit> raycastAll(const Vec3& origin, const Vec3& dir, double tMin = 0.0) const;

  const Mesh& mesh() const {
    return *mesh_;
  }

 private:
  struct Node {
    Eigen::AlignedBox3d box;
    int left = -1; // child index, or -1 for leaves
    int right = -1;
    int begin = 0; // range into faceOrder_ for leaves
    int end = 0;
  };

  int build(int begin, int end, std::vector<Vec3>& centroids);
  template <typename Visitor>
  void traverse(const Vec3& origin, const Vec3& dir, double& tMax, Visitor&& visit) const;

  const Mesh* mesh_;
  std::vector<Node> nodes_;
  std::vector<int> faceOrder_;
};

/// Exhaustive O(F) nearest hit; kept as a test oracle for the hierarchy.
std::optional<RayHit> raycastBruteForce(const Mesh& mesh, const Vec3& origin, const Vec3& dir, double tMin = 0.0);

} // namespace hr
