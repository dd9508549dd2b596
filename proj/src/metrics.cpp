#include "handretarget/metrics.h"

#include "handretarget/error.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

namespace hr {

namespace {

// Oblique directions; axis-aligned rays hit box edges and grid diagonals exactly.
const std::array<Vec3, 3> kParityDirs = {
    Vec3(0.2673, 0.5345, 0.8018).normalized(),
    Vec3(-0.7071, 0.1231, 0.6963).normalized(),
    Vec3(0.3123, -0.8711, -0.3789).normalized(),
};

// Crossings along a ray; hits at the same distance (shared edges) count once.
int crossings(std::vector<RayHit> hits, double tol) {
  int count = 0;
  double last = -1.0;
  for (const RayHit& h : hits) {
    if (count == 0 || h.distance - last > tol) {
      ++count;
      last = h.distance;
    }
  }
  return count;
}

int majority(const std::array<int, 3>& votes) {
  return (votes[0] % 2) + (votes[1] % 2) + (votes[2] % 2) >= 2;
}

std::vector<int> ringVertices(const Mesh& mesh, int v, int rings) {
  std::vector<int> out{v};
  std::set<int> seen{v};
  size_t begin = 0;
  for (int r = 0; r < rings; ++r) {
    const size_t end = out.size();
    for (size_t i = begin; i < end; ++i) {
      for (int n : mesh.vertexNeighbors(out[i])) {
        if (seen.insert(n).second) {
          out.push_back(n);
        }
      }
    }
    begin = end;
  }
  return out;
}

Vec3 anyPerpendicular(const Vec3& n) {
  const Vec3 a = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return n.cross(a).normalized();
}

} // namespace

std::vector<int> penetratingVertices(const Mesh& hand, const TriangleBvh& other) {
  const double tol = 1e-12 * std::max(1.0, other.mesh().boundingDiagonal());
  std::vector<int> out;
  for (int v = 0; v < hand.numVertices(); ++v) {
    std::array<int, 3> votes{};
    for (int k = 0; k < 3; ++k) {
      votes[k] = crossings(other.raycastAll(hand.vertex(v), kParityDirs[k]), tol);
    }
    if (majority(votes)) {
      out.push_back(v);
    }
  }
  return out;
}

std::vector<int> penetratingVertices(const Mesh& hand, const Mesh& other) {
  return penetratingVertices(hand, TriangleBvh(other));
}

std::vector<int> penetratingVertices(const Mesh& hand, const BoxSdf& box) {
  std::vector<int> out;
  for (int v = 0; v < hand.numVertices(); ++v) {
    if (boxSdf(box, hand.vertex(v)) < 0.0) {
      out.push_back(v);
    }
  }
  return out;
}

std::vector<int> selfPenetratingVertices(const Mesh& hand, int ringExclusion) {
  const TriangleBvh bvh(hand);
  const double tol = 1e-12 * std::max(1.0, hand.boundingDiagonal());
  const double tilt = std::tan(15.0 * M_PI / 180.0);
  std::vector<int> out;
  for (int v = 0; v < hand.numVertices(); ++v) {
    std::set<int> excluded;
    for (int r : ringVertices(hand, v, ringExclusion)) {
      for (int f : hand.vertexFaces(r)) {
        excluded.insert(f);
      }
    }
    const Vec3 n = hand.vertexNormal(v);
    const Vec3 t1 = anyPerpendicular(n);
    const Vec3 t2 = n.cross(t1);
    const std::array<Vec3, 3> dirs = {n, (n + tilt * t1).normalized(), (n + tilt * t2).normalized()};
    std::array<int, 3> votes{};
    for (int k = 0; k < 3; ++k) {
      std::vector<RayHit> hits = bvh.raycastAll(hand.vertex(v), dirs[k]);
      std::erase_if(hits, [&](const RayHit& h) { return excluded.count(h.point.face) > 0; });
      votes[k] = crossings(std::move(hits), tol);
    }
    if (majority(votes)) {
      out.push_back(v);
    }
  }
  return out;
}

std::vector<std::vector<int>> vertexClusters(const Mesh& mesh, const std::vector<int>& vertices) {
  std::vector<char> member(mesh.numVertices(), 0);
  for (int v : vertices) {
    member[v] = 1;
  }
  std::vector<std::vector<int>> clusters;
  std::vector<int> sorted = vertices;
  std::sort(sorted.begin(), sorted.end());
  for (int seed : sorted) {
    if (member[seed] != 1) {
      continue;
    }
    std::vector<int> cluster;
    std::vector<int> stack{seed};
    member[seed] = 2;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      cluster.push_back(v);
      for (int n : mesh.vertexNeighbors(v)) {
        if (member[n] == 1) {
          member[n] = 2;
          stack.push_back(n);
        }
      }
    }
    std::sort(cluster.begin(), cluster.end());
    clusters.push_back(std::move(cluster));
  }
  return clusters;
}

double convexHullVolume(const std::vector<Vec3>& points) {
  const int n = static_cast<int>(points.size());
  if (n < 4) {
    return 0.0;
  }
  Eigen::AlignedBox3d box;
  for (const Vec3& p : points) {
    box.extend(p);
  }
  const double eps = 1e-10 * std::max(box.diagonal().norm(), 1e-300);

  // Initial tetrahedron from extreme points.
  const Vec3& p0 = points[0];
  int i1 = 0;
  for (int i = 1; i < n; ++i) {
    if ((points[i] - p0).squaredNorm() > (points[i1] - p0).squaredNorm()) {
      i1 = i;
    }
  }
  if ((points[i1] - p0).norm() < eps) {
    return 0.0;
  }
  const Vec3 axis = (points[i1] - p0).normalized();
  int i2 = 0;
  double best = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = (points[i] - p0).cross(axis).norm();
    if (d > best) {
      best = d;
      i2 = i;
    }
  }
  if (best < eps) {
    return 0.0;
  }
  const Vec3 pn = (points[i1] - p0).cross(points[i2] - p0).normalized();
  int i3 = 0;
  best = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = std::abs(pn.dot(points[i] - p0));
    if (d > best) {
      best = d;
      i3 = i;
    }
  }
  if (best < eps) {
    return 0.0;
  }
  const Vec3 interior = (p0 + points[i1] + points[i2] + points[i3]) / 4.0;

  struct HullFace {
    std::array<int, 3> v;
    Vec3 normal;
    double offset;
  };
  auto makeFace = [&](int a, int b, int c) {
    HullFace f{{a, b, c}, (points[b] - points[a]).cross(points[c] - points[a]).normalized(), 0.0};
    f.offset = f.normal.dot(points[a]);
    if (f.normal.dot(interior) > f.offset) {
      std::swap(f.v[1], f.v[2]);
      f.normal = -f.normal;
      f.offset = -f.offset;
    }
    return f;
  };
  std::vector<HullFace> faces = {makeFace(0, i1, i2), makeFace(0, i1, i3), makeFace(0, i2, i3), makeFace(i1, i2, i3)};

  for (int k = 0; k < n; ++k) {
    if (k == 0 || k == i1 || k == i2 || k == i3) {
      continue;
    }
    const Vec3& p = points[k];
    std::vector<HullFace> keep;
    std::set<std::pair<int, int>> visibleEdges;
    for (const HullFace& f : faces) {
      if (f.normal.dot(p) - f.offset > eps) {
        for (int e = 0; e < 3; ++e) {
          visibleEdges.insert({f.v[e], f.v[(e + 1) % 3]});
        }
      } else {
        keep.push_back(f);
      }
    }
    if (visibleEdges.empty()) {
      continue;
    }
    for (const auto& [a, b] : visibleEdges) {
      if (!visibleEdges.count({b, a})) {
        HullFace f{{a, b, k}, (points[b] - points[a]).cross(p - points[a]), 0.0};
        const double len = f.normal.norm();
        if (len == 0.0) {
          continue;
        }
        f.normal /= len;
        f.offset = f.normal.dot(points[a]);
        keep.push_back(f);
      }
    }
    faces = std::move(keep);
  }
  double volume = 0.0;
  for (const HullFace& f : faces) {
    volume += (points[f.v[0]] - interior).dot((points[f.v[1]] - interior).cross(points[f.v[2]] - interior));
  }
  return volume / 6.0;
}

double meshVolume(const Mesh& mesh) {
  if (mesh.hasBoundary()) {
    throw Error(ErrorKind::Geometry, "hand volume needs a closed mesh");
  }
  const Vec3 c = mesh.vertex(0);
  double volume = 0.0;
  for (int f = 0; f < mesh.numFaces(); ++f) {
    volume += (mesh.corner(f, 0) - c).dot((mesh.corner(f, 1) - c).cross(mesh.corner(f, 2) - c));
  }
  return volume / 6.0;
}

IntersectionReport intersectionFromVertices(const Mesh& hand, const std::vector<int>& vertices, double handVolume) {
  if (!(handVolume > 0.0)) {
    throw Error(ErrorKind::Geometry, "hand volume must be positive");
  }
  IntersectionReport r;
  r.vertices = vertices;
  std::sort(r.vertices.begin(), r.vertices.end());
  r.clusters = vertexClusters(hand, r.vertices);
  for (const auto& c : r.clusters) {
    std::vector<Vec3> pts;
    for (int v : c) {
      pts.push_back(hand.vertex(v));
    }
    r.clusterVolumes.push_back(convexHullVolume(pts));
    r.volume += r.clusterVolumes.back();
  }
  r.percent = 100.0 * r.volume / handVolume;
  return r;
}

IntersectionReport handObjectIntersection(const Mesh& hand, const Mesh& object) {
  return intersectionFromVertices(hand, penetratingVertices(hand, object), meshVolume(hand));
}

IntersectionReport handTableIntersection(const Mesh& hand, const BoxSdf& table) {
  return intersectionFromVertices(hand, penetratingVertices(hand, table), meshVolume(hand));
}

IntersectionReport selfIntersection(const Mesh& hand, int ringExclusion) {
  return intersectionFromVertices(hand, selfPenetratingVertices(hand, ringExclusion), meshVolume(hand));
}

std::vector<FrameIntersection> intersectionSeries(
    const SkinnedHand& hand,
    const std::vector<DofVector>& frames,
    const Mesh& object,
    const std::vector<Eigen::Isometry3d>& objectPoses,
    const BoxSdf& table,
    const std::vector<int>& frameIds) {
  if (objectPoses.size() != frames.size() || (!frameIds.empty() && frameIds.size() != frames.size())) {
    throw Error(ErrorKind::InvalidInput, "object poses and frame ids must match the frame count");
  }
  std::vector<FrameIntersection> out;
  for (size_t i = 0; i < frames.size(); ++i) {
    const Mesh posed = hand.posed(frames[i]);
    const double volume = meshVolume(posed);
    const Mesh obj = object.transformed(objectPoses[i]);
    FrameIntersection fi;
    fi.frame = frameIds.empty() ? static_cast<int>(i) : frameIds[i];
    fi.handObject = intersectionFromVertices(posed, penetratingVertices(posed, obj), volume).percent;
    fi.self = intersectionFromVertices(posed, selfPenetratingVertices(posed), volume).percent;
    fi.table = intersectionFromVertices(posed, penetratingVertices(posed, table), volume).percent;
    out.push_back(fi);
  }
  return out;
}

std::string intersectionCsv(const std::vector<FrameIntersection>& series) {
  std::ostringstream os;
  os << "frame,hand_object_pct,self_pct,table_pct\n";
  os << std::setprecision(9);
  for (const FrameIntersection& f : series) {
    os << f.frame << ',' << f.handObject << ',' << f.self << ',' << f.table << '\n';
  }
  return os.str();
}

} // namespace hr
