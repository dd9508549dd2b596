#pragma once

#include "handretarget/bvh.h"
#include "handretarget/rig.h"

#include <string>
#include <vector>

namespace hr {

/// Hand vertices inside a closed mesh by ray parity: three fixed oblique rays
/// per vertex, majority vote.
std::vector<int> penetratingVertices(const Mesh& hand, const TriangleBvh& other);
std::vector<int> penetratingVertices(const Mesh& hand, const Mesh& other);

/// Hand vertices strictly inside the box.
std::vector<int> penetratingVertices(const Mesh& hand, const BoxSdf& box);

/// Hand vertices inside another part of the same hand. Each vertex casts
/// rays along its outward normal (and two tilted copies) and ignores faces
/// touching its `ringExclusion`-ring, so creases do not count.
std::vector<int> selfPenetratingVertices(const Mesh& hand, int ringExclusion = 2);

/// Connected components of the given vertices over mesh edges (depth-first),
/// each sorted, ordered by smallest vertex.
std::vector<std::vector<int>> vertexClusters(const Mesh& mesh, const std::vector<int>& vertices);

/// Volume of the convex hull; 0 for fewer than four points or a flat set.
double convexHullVolume(const std::vector<Vec3>& points);

/// Enclosed volume by signed tetrahedra. Throws Geometry on an open mesh.
double meshVolume(const Mesh& mesh);

struct IntersectionReport {
  std::vector<int> vertices;
  std::vector<std::vector<int>> clusters;
  std::vector<double> clusterVolumes;
  double volume = 0.0; // sum of cluster hull volumes
  double percent = 0.0; // relative to the hand volume
};

/// Clusters `vertices` on the hand and sums the hull volume of each cluster.
/// This overestimates the true overlap wherever a cluster is not convex.
IntersectionReport intersectionFromVertices(const Mesh& hand, const std::vector<int>& vertices, double handVolume);

IntersectionReport handObjectIntersection(const Mesh& hand, const Mesh& object);
IntersectionReport handTableIntersection(const Mesh& hand, const BoxSdf& table);
IntersectionReport selfIntersection(const Mesh& hand, int ringExclusion = 2);

struct FrameIntersection {
  int frame = 0;
  double handObject = 0.0;
  double self = 0.0;
  double table = 0.0;
};

/// Poses the hand at every frame of `frames` and measures the three
/// intersection percentages. `objectPoses` pairs with `frames`.
std::vector<FrameIntersection> intersectionSeries(
    const SkinnedHand& hand,
    const std::vector<DofVector>& frames,
    const Mesh& object,
    const std::vector<Eigen::Isometry3d>& objectPoses,
    const BoxSdf& table,
    const std::vector<int>& frameIds = {});

/// "frame,hand_object_pct,self_pct,table_pct" rows.
std::string intersectionCsv(const std::vector<FrameIntersection>& series);

} // namespace hr
