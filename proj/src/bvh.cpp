#include "handretarget/bvh.h"

#include <algorithm>
#include <limits>
#include <numeric>

namespace hr {

std::optional<RayHit> intersectFace(const Mesh& mesh, int face, const Vec3& origin, const Vec3& dir, double tMin) {
  const Vec3 v0 = mesh.corner(face, 0);
  const Vec3 e1 = mesh.corner(face, 1) - v0;
  const Vec3 e2 = mesh.corner(face, 2) - v0;
  const Vec3 pvec = dir.cross(e2);
  const double det = e1.dot(pvec);
  const double scale = e1.norm() * e2.norm();
  if (std::abs(det) <= 1e-14 * scale) {
    return std::nullopt; // parallel to the face plane
  }
  const double inv = 1.0 / det;
  const Vec3 tvec = origin - v0;
  const double u = tvec.dot(pvec) * inv;
  constexpr double kEdgeTol = 1e-12;
  if (u < -kEdgeTol || u > 1.0 + kEdgeTol) {
    return std::nullopt;
  }
  const Vec3 qvec = tvec.cross(e1);
  const double v = dir.dot(qvec) * inv;
  if (v < -kEdgeTol || u + v > 1.0 + kEdgeTol) {
    return std::nullopt;
  }
  const double t = e2.dot(qvec) * inv;
  if (t < tMin) {
    return std::nullopt;
  }
  RayHit hit;
  Vec3 bary(1.0 - u - v, u, v);
  bary = bary.cwiseMax(0.0);
  hit.point = {face, bary / bary.sum()};
  hit.distance = t;
  hit.frontFace = dir.dot(mesh.faceNormal(face)) < 0.0;
  return hit;
}

TriangleBvh::TriangleBvh(const Mesh& mesh) : mesh_(&mesh) {
  const int nf = mesh.numFaces();
  faceOrder_.resize(nf);
  std::iota(faceOrder_.begin(), faceOrder_.end(), 0);
  std::vector<Vec3> centroids(nf);
  for (int f = 0; f < nf; ++f) {
    centroids[f] = (mesh.corner(f, 0) + mesh.corner(f, 1) + mesh.corner(f, 2)) / 3.0;
  }
  if (nf > 0) {
    nodes_.reserve(2 * nf);
    build(0, nf, centroids);
  }
}

int TriangleBvh::build(int begin, int end, std::vector<Vec3>& centroids) {
  const int index = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  Eigen::AlignedBox3d box;
  Eigen::AlignedBox3d centroidBox;
  for (int i = begin; i < end; ++i) {
    const int f = faceOrder_[i];
    for (int k = 0; k < 3; ++k) {
      box.extend(mesh_->corner(f, k));
    }
    centroidBox.extend(centroids[f]);
  }
  // pad so flat boxes still intersect robustly
  const Vec3 pad = Vec3::Constant(1e-9 * std::max(box.diagonal().norm(), 1e-12));
  box.min() -= pad;
  box.max() += pad;
  nodes_[index].box = box;

  constexpr int kLeafSize = 4;
  if (end - begin <= kLeafSize) {
    nodes_[index].begin = begin;
    nodes_[index].end = end;
    return index;
  }
  int axis = 0;
  centroidBox.diagonal().maxCoeff(&axis);
  const int mid = (begin + end) / 2;
  std::nth_element(
      faceOrder_.begin() + begin, faceOrder_.begin() + mid, faceOrder_.begin() + end, [&](int a, int b) {
        return centroids[a][axis] < centroids[b][axis] || (centroids[a][axis] == centroids[b][axis] && a < b);
      });
  const int left = build(begin, mid, centroids);
  const int right = build(mid, end, centroids);
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

namespace {

// Slab test; returns entry distance or +inf when missed within [0, tMax].
double rayBoxEntry(const Eigen::AlignedBox3d& box, const Vec3& origin, const Vec3& invDir, double tMax) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = tMax;
  for (int a = 0; a < 3; ++a) {
    double lo = (box.min()[a] - origin[a]) * invDir[a];
    double hi = (box.max()[a] - origin[a]) * invDir[a];
    if (std::isnan(lo) || std::isnan(hi)) {
      // origin on the slab boundary with zero direction component
      if (origin[a] < box.min()[a] || origin[a] > box.max()[a]) {
        return std::numeric_limits<double>::infinity();
      }
      continue;
    }
    if (lo > hi) {
      std::swap(lo, hi);
    }
    t0 = std::max(t0, lo);
    t1 = std::min(t1, hi);
    if (t0 > t1) {
      return std::numeric_limits<double>::infinity();
    }
  }
  return t0;
}

} // namespace

template <typename Visitor>
void TriangleBvh::traverse(const Vec3& origin, const Vec3& dir, double& tMax, Visitor&& visit) const {
  if (nodes_.empty()) {
    return;
  }
  const Vec3 invDir = dir.cwiseInverse();
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int n = stack.back();
    stack.pop_back();
    const Node& node = nodes_[n];
    if (rayBoxEntry(node.box, origin, invDir, tMax) == std::numeric_limits<double>::infinity()) {
      continue;
    }
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        visit(faceOrder_[i]);
      }
    } else {
      stack.push_back(node.right);
      stack.push_back(node.left);
    }
  }
}

std::optional<RayHit> TriangleBvh::raycast(const Vec3& origin, const Vec3& dir, double tMin) const {
  std::optional<RayHit> best;
  double tMax = std::numeric_limits<double>::infinity();
  traverse(origin, dir, tMax, [&](int f) {
    auto hit = intersectFace(*mesh_, f, origin, dir, tMin);
    if (hit && (!best || hit->distance < best->distance ||
                (hit->distance == best->distance && hit->point.face < best->point.face))) {
      best = hit;
      tMax = hit->distance + 1e-12;
    }
  });
  return best;
}

std::vector<RayHit> TriangleBvh::raycastAll(const Vec3& origin, const Vec3& dir, double tMin) const {
  std::vector<RayHit> hits;
  double tMax = std::numeric_limits<double>::infinity();
  traverse(origin, dir, tMax, [&](int f) {
    if (auto hit = intersectFace(*mesh_, f, origin, dir, tMin)) {
      hits.push_back(*hit);
    }
  });
  std::sort(hits.begin(), hits.end(), [](const RayHit& a, const RayHit& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.point.face < b.point.face);
  });
  return hits;
}

std::optional<RayHit> raycastBruteForce(const Mesh& mesh, const Vec3& origin, const Vec3& dir, double tMin) {
  std::optional<RayHit> best;
  for (int f = 0; f < mesh.numFaces(); ++f) {
    auto hit = intersectFace(mesh, f, origin, dir, tMin);
    if (hit && (!best || hit->distance < best->distance ||
                (hit->distance == best->distance && hit->point.face < best->point.face))) {
      best = hit;
    }
  }
  return best;
}

} // namespace hr
