#include "handretarget/intrinsic.h"

#include "handretarget/error.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

namespace hr {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kZeroBary = 1e-12;
constexpr double kVertexSnap = 1e-9;

Vec3 rotateInPlane(const Vec3& u, double angle, const Vec3& n) {
  return std::cos(angle) * u + std::sin(angle) * n.cross(u);
}

Vec3 projectToFace(const Mesh& mesh, int f, const Vec3& d) {
  const Vec3& n = mesh.faceNormal(f);
  return d - n * n.dot(d);
}

int localCorner(const Mesh& mesh, int f, int v) {
  for (int k = 0; k < 3; ++k) {
    if (mesh.face(f)[k] == v) {
      return k;
    }
  }
  return -1;
}

double cornerAngle(const Mesh& mesh, int f, int k) {
  const Vec3 a = mesh.corner(f, (k + 1) % 3) - mesh.corner(f, k);
  const Vec3 b = mesh.corner(f, (k + 2) % 3) - mesh.corner(f, k);
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

// number of (near) zero weights, and the index of the single nonzero / zero one
struct BaryKind {
  int zeros = 0;
  int vertexCorner = -1; // set when zeros == 2
  int edgeZero = -1; // set when zeros == 1
};

BaryKind classify(const Vec3& b) {
  BaryKind kind;
  for (int k = 0; k < 3; ++k) {
    if (b[k] < kZeroBary) {
      ++kind.zeros;
      kind.edgeZero = k;
    } else {
      kind.vertexCorner = k;
    }
  }
  return kind;
}

Vec3 cleanBary(Vec3 b) {
  for (int k = 0; k < 3; ++k) {
    if (b[k] < kZeroBary) {
      b[k] = 0.0;
    }
  }
  return b / b.sum();
}

// Faces around a vertex in counter-clockwise order (about the outward normal),
// with the accumulated angle at which each face's wedge starts.
struct VertexFan {
  int vertex = -1;
  std::vector<int> faces;
  std::vector<int> corner;
  std::vector<double> start;
  std::vector<double> angle;
  double total = 0.0;
  bool closed = true;

  int indexOf(int f) const {
    auto it = std::find(faces.begin(), faces.end(), f);
    return it == faces.end() ? -1 : static_cast<int>(it - faces.begin());
  }
};

VertexFan vertexFan(const Mesh& mesh, int v) {
  VertexFan fan;
  fan.vertex = v;
  auto incident = mesh.vertexFaces(v);
  int first = incident.front();
  fan.closed = !mesh.isBoundaryVertex(v);
  if (!fan.closed) {
    // rewind clockwise to the face whose clockwise neighbour is missing
    for (int f : incident) {
      const int k = localCorner(mesh, f, v);
      if (mesh.neighborFace(f, k) < 0) {
        first = f;
        break;
      }
    }
  }
  int f = first;
  double acc = 0.0;
  do {
    const int k = localCorner(mesh, f, v);
    fan.faces.push_back(f);
    fan.corner.push_back(k);
    fan.start.push_back(acc);
    fan.angle.push_back(cornerAngle(mesh, f, k));
    acc += fan.angle.back();
    f = mesh.neighborFace(f, (k + 2) % 3);
  } while (f >= 0 && f != first && fan.faces.size() <= incident.size());
  fan.total = acc;
  return fan;
}

Vec3 firstEdge(const Mesh& mesh, int f, int k) {
  return (mesh.corner(f, (k + 1) % 3) - mesh.corner(f, k)).normalized();
}

double fanPosition(const Mesh& mesh, const VertexFan& fan, int f, const Vec3& dir) {
  const int i = fan.indexOf(f);
  if (i < 0) {
    throw Error(ErrorKind::Geometry, "face does not contain the vertex");
  }
  const Vec3 e = firstEdge(mesh, f, fan.corner[i]);
  return fan.start[i] + signedAngle(e, dir, mesh.faceNormal(f));
}

// Face and in-plane direction at a fan position; false when it falls outside a boundary fan.
bool fanDirection(const Mesh& mesh, const VertexFan& fan, double pos, int& face, Vec3& dir) {
  if (fan.closed) {
    pos = std::fmod(pos, fan.total);
    if (pos < 0.0) {
      pos += fan.total;
    }
  } else {
    const double tol = 1e-12;
    if (pos < -tol || pos > fan.total + tol) {
      return false;
    }
    pos = std::clamp(pos, 0.0, fan.total);
  }
  size_t i = 0;
  while (i + 1 < fan.faces.size() && pos > fan.start[i] + fan.angle[i]) {
    ++i;
  }
  face = fan.faces[i];
  const Vec3 e = firstEdge(mesh, face, fan.corner[i]);
  dir = rotateInPlane(e, pos - fan.start[i], mesh.faceNormal(face)).normalized();
  return true;
}

// Rotation scale at a vertex: total angle maps onto a full turn at interior vertices.
double fanScale(const VertexFan& fan) {
  return fan.closed ? fan.total / (2.0 * kPi) : 1.0;
}

} // namespace

SurfacePoint pointInFace(const Mesh& mesh, const SurfacePoint& p, int g) {
  if (p.face == g) {
    return p;
  }
  SurfacePoint q{g, Vec3::Zero()};
  for (int k = 0; k < 3; ++k) {
    if (p.bary[k] < kZeroBary) {
      continue;
    }
    const int c = localCorner(mesh, g, mesh.face(p.face)[k]);
    if (c < 0) {
      throw Error(ErrorKind::Geometry, "surface point is not on face " + std::to_string(g));
    }
    q.bary[c] = p.bary[k];
  }
  q.bary /= q.bary.sum();
  return q;
}

namespace {

int sharedEdge(const Mesh& mesh, int f, int g) {
  for (int k = 0; k < 3; ++k) {
    if (mesh.neighborFace(f, k) == g) {
      return k;
    }
  }
  return -1;
}

// Unfold a tangent of face f across its local edge k into the neighbouring face.
Vec3 hinge(const Mesh& mesh, int f, int k, const Vec3& d) {
  const int g = mesh.neighborFace(f, k);
  const Vec3 e = firstEdge(mesh, f, k);
  const double a = d.dot(e);
  const double b = d.dot(mesh.faceNormal(f).cross(e));
  return a * e + b * mesh.faceNormal(g).cross(e);
}

// Barycentric rate of change per unit length along d.
Vec3 baryRate(const Mesh& mesh, int f, const Vec3& d) {
  const Vec3& n = mesh.faceNormal(f);
  const double twiceArea = 2.0 * mesh.faceArea(f);
  Vec3 db;
  for (int i = 0; i < 3; ++i) {
    const Vec3 e = mesh.corner(f, (i + 2) % 3) - mesh.corner(f, (i + 1) % 3);
    db[i] = n.cross(e).dot(d) / twiceArea;
  }
  return db;
}

struct Cursor {
  int face;
  Vec3 bary;
  Vec3 dir;
};

// Straightest continuation through vertex corner `k` of face f for a path arriving along d.
bool passVertex(const Mesh& mesh, int f, int k, const Vec3& d, Cursor& out) {
  const int v = mesh.face(f)[k];
  if (mesh.isBoundaryVertex(v)) {
    return false;
  }
  const VertexFan fan = vertexFan(mesh, v);
  const double pos = fanPosition(mesh, fan, f, -d) + 0.5 * fan.total;
  if (!fanDirection(mesh, fan, pos, out.face, out.dir)) {
    return false;
  }
  out.bary = Vec3::Zero();
  out.bary[localCorner(mesh, out.face, v)] = 1.0;
  return true;
}

// Pick the face that `dir` actually points into from an edge or vertex start.
bool normalizeStart(const Mesh& mesh, const SurfacePoint& start, const Vec3& dir, Cursor& out) {
  const Vec3 b = cleanBary(start.bary);
  const BaryKind kind = classify(b);
  out = {start.face, b, projectToFace(mesh, start.face, dir)};
  if (out.dir.norm() == 0.0) {
    throw Error(ErrorKind::Geometry, "zero launch direction");
  }
  out.dir.normalize();
  if (kind.zeros == 2) {
    const int v = mesh.face(start.face)[kind.vertexCorner];
    const VertexFan fan = vertexFan(mesh, v);
    if (!fanDirection(mesh, fan, fanPosition(mesh, fan, start.face, out.dir), out.face, out.dir)) {
      return false;
    }
    out.bary = Vec3::Zero();
    out.bary[localCorner(mesh, out.face, v)] = 1.0;
  } else if (kind.zeros == 1) {
    const Vec3 db = baryRate(mesh, start.face, out.dir);
    if (db[kind.edgeZero] < 0.0) {
      const int k = (kind.edgeZero + 1) % 3;
      const int g = mesh.neighborFace(start.face, k);
      if (g < 0) {
        return false;
      }
      out.dir = hinge(mesh, start.face, k, out.dir).normalized();
      out.bary = pointInFace(mesh, {start.face, b}, g).bary;
      out.face = g;
    }
  }
  return true;
}

} // namespace

double wrapAngle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  return a <= -kPi ? a + 2.0 * kPi : a;
}

double signedAngle(const Vec3& a, const Vec3& b, const Vec3& normal) {
  return std::atan2(normal.dot(a.cross(b)), a.dot(b));
}

GeodesicPath traceGeodesic(const Mesh& mesh, const SurfacePoint& start, const Vec3& dir, double length) {
  if (start.face < 0 || start.face >= mesh.numFaces()) {
    throw Error(ErrorKind::InvalidInput, "trace start face out of range");
  }
  if (!(length >= 0.0)) {
    throw Error(ErrorKind::InvalidInput, "trace length must be non-negative");
  }
  GeodesicPath path;
  Cursor c;
  if (!normalizeStart(mesh, start, dir, c)) {
    path.hitBoundary = true;
    path.points.push_back({start, projectToFace(mesh, start.face, dir).normalized(), 0.0});
    return path;
  }
  path.points.push_back({{c.face, c.bary}, c.dir, 0.0});

  double remaining = length;
  double travelled = 0.0;
  const int maxSteps = 8 * mesh.numFaces() + 1000;
  for (int step = 0;; ++step) {
    if (step > maxSteps) {
      throw Error(ErrorKind::Geometry, "geodesic trace did not terminate");
    }
    const Vec3 db = baryRate(mesh, c.face, c.dir);
    const double rateEps = 1e-12 * db.cwiseAbs().maxCoeff();
    double tExit = std::numeric_limits<double>::infinity();
    int exitCorner = -1;
    for (int i = 0; i < 3; ++i) {
      if (db[i] < -rateEps) {
        const double t = std::max(c.bary[i], 0.0) / -db[i];
        if (t < tExit) {
          tExit = t;
          exitCorner = i;
        }
      }
    }
    if (exitCorner < 0 || tExit >= remaining) {
      Vec3 b = c.bary + remaining * db;
      b = b.cwiseMax(0.0);
      b = cleanBary(b);
      travelled += remaining;
      PathPoint end{{c.face, b}, c.dir, travelled};
      const BaryKind kind = classify(b);
      if (kind.zeros == 2 && remaining > 0.0) {
        // ended exactly on a vertex: report the straight-ahead tangent
        Cursor through;
        if (passVertex(mesh, c.face, kind.vertexCorner, c.dir, through)) {
          end = {{through.face, through.bary}, through.dir, travelled};
        }
      }
      path.points.push_back(end);
      break;
    }
    Vec3 nb = c.bary + tExit * db;
    nb[exitCorner] = 0.0;
    nb = nb.cwiseMax(0.0);
    nb /= nb.sum();
    travelled += tExit;
    remaining -= tExit;

    const int k = (exitCorner + 1) % 3; // edge k runs corner k -> k+1, opposite exitCorner
    const int k1 = (k + 1) % 3;
    int atVertex = -1;
    if (nb[k] < kVertexSnap) {
      atVertex = k1;
    } else if (nb[k1] < kVertexSnap) {
      atVertex = k;
    }
    if (atVertex >= 0) {
      Cursor next;
      if (!passVertex(mesh, c.face, atVertex, c.dir, next)) {
        Vec3 vb = Vec3::Zero();
        vb[atVertex] = 1.0;
        path.hitBoundary = true;
        path.points.push_back({{c.face, vb}, c.dir, travelled});
        break;
      }
      c = next;
      path.points.push_back({{c.face, c.bary}, c.dir, travelled});
      continue;
    }
    const int g = mesh.neighborFace(c.face, k);
    if (g < 0) {
      path.hitBoundary = true;
      path.points.push_back({{c.face, nb}, c.dir, travelled});
      break;
    }
    const int j = mesh.neighborEdge(c.face, k);
    Vec3 gb = Vec3::Zero();
    gb[j] = nb[k1];
    gb[(j + 1) % 3] = nb[k];
    c.dir = hinge(mesh, c.face, k, c.dir).normalized();
    c.face = g;
    c.bary = gb;
    path.points.push_back({{c.face, c.bary}, c.dir, travelled});
  }
  path.length = travelled;
  return path;
}

std::pair<int, Vec3> rotateTangent(const Mesh& mesh, const SurfacePoint& point, const Vec3& dir, double angle) {
  const BaryKind kind = classify(point.bary);
  if (kind.zeros == 2) {
    const VertexFan fan = vertexFan(mesh, mesh.face(point.face)[kind.vertexCorner]);
    const double pos = fanPosition(mesh, fan, point.face, dir) + angle * fanScale(fan);
    std::pair<int, Vec3> out;
    if (!fanDirection(mesh, fan, pos, out.first, out.second)) {
      throw Error(ErrorKind::Geometry, "rotation leaves the surface at a boundary vertex");
    }
    return out;
  }
  const Vec3& n = mesh.faceNormal(point.face);
  return {point.face, rotateInPlane(projectToFace(mesh, point.face, dir).normalized(), angle, n)};
}

double tangentAngle(
    const Mesh& mesh,
    const SurfacePoint& point,
    const std::pair<int, Vec3>& from,
    const std::pair<int, Vec3>& to) {
  const BaryKind kind = classify(point.bary);
  if (kind.zeros == 2) {
    const VertexFan fan = vertexFan(mesh, mesh.face(point.face)[kind.vertexCorner]);
    double diff = fanPosition(mesh, fan, to.first, to.second) - fanPosition(mesh, fan, from.first, from.second);
    if (fan.closed) {
      diff = std::remainder(diff, fan.total);
    }
    return wrapAngle(diff / fanScale(fan));
  }
  Vec3 a = from.second;
  if (from.first != to.first) {
    const int k = sharedEdge(mesh, from.first, to.first);
    if (k < 0) {
      throw Error(ErrorKind::Geometry, "tangents live on non-adjacent faces");
    }
    a = hinge(mesh, from.first, k, a);
  }
  return signedAngle(a, to.second, mesh.faceNormal(to.first));
}

std::pair<int, Vec3> launchDirection(const Mesh& mesh, const TangentFrame& origin, double theta) {
  return rotateTangent(mesh, origin.point, origin.dir, theta);
}

GeodesicPath expmapPath(const Mesh& mesh, const TangentFrame& origin, const LogmapCoord& coord) {
  if (!(coord.r >= 0.0)) {
    throw Error(ErrorKind::InvalidInput, "expmap radius must be non-negative");
  }
  const auto [face, dir] = launchDirection(mesh, origin, coord.theta);
  return traceGeodesic(mesh, pointInFace(mesh, origin.point, face), dir, coord.r);
}

SurfacePoint expmapTrace(const Mesh& mesh, const TangentFrame& origin, const LogmapCoord& coord, bool* hitBoundary) {
  if (coord.r == 0.0) {
    if (hitBoundary) {
      *hitBoundary = false;
    }
    return origin.point;
  }
  const GeodesicPath path = expmapPath(mesh, origin, coord);
  if (hitBoundary) {
    *hitBoundary = path.hitBoundary;
  }
  return path.end().point;
}

Vec3 transportAlongPath(const Mesh& mesh, const GeodesicPath& path, const Vec3& vector) {
  if (path.points.size() < 2 || !(path.length > 0.0)) {
    throw Error(ErrorKind::Geometry, "cannot transport along a zero-length path");
  }
  const PathPoint& s = path.start();
  const PathPoint& e = path.end();
  const Vec3& ns = mesh.faceNormal(s.point.face);
  const Vec3& ne = mesh.faceNormal(e.point.face);
  const Vec3 w = vector - ns * ns.dot(vector);
  const double a = w.dot(s.dir);
  const double b = w.dot(ns.cross(s.dir));
  return a * e.dir + b * ne.cross(e.dir);
}

// ---------------------------------------------------------------------------
// Logmap

LogmapSolver::LogmapSolver(const Mesh& mesh)
    : mesh_(&mesh), component_(vertexComponents(mesh)), scale_(mesh.meanEdgeLength()) {
  centroid_.resize(mesh.numFaces());
  for (int f = 0; f < mesh.numFaces(); ++f) {
    centroid_[f] = (mesh.corner(f, 0) + mesh.corner(f, 1) + mesh.corner(f, 2)) / 3.0;
  }
}

Vec2 LogmapSolver::unfoldedGuess(const TangentFrame& origin, const SurfacePoint& query) const {
  const Mesh& m = *mesh_;
  const int f0 = origin.point.face;
  // shortest face corridor over the dual graph
  std::vector<double> dist(m.numFaces(), std::numeric_limits<double>::infinity());
  std::vector<int> prev(m.numFaces(), -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[f0] = 0.0;
  queue.push({0.0, f0});
  while (!queue.empty()) {
    const auto [d, f] = queue.top();
    queue.pop();
    if (d > dist[f]) {
      continue;
    }
    if (f == query.face) {
      break;
    }
    for (int k = 0; k < 3; ++k) {
      const int g = m.neighborFace(f, k);
      if (g < 0) {
        continue;
      }
      const double nd = d + (centroid_[g] - centroid_[f]).norm();
      if (nd < dist[g]) {
        dist[g] = nd;
        prev[g] = f;
        queue.push({nd, g});
      }
    }
  }
  std::vector<int> corridor;
  for (int f = query.face; f >= 0; f = prev[f]) {
    corridor.push_back(f);
    if (f == f0) {
      break;
    }
  }
  std::reverse(corridor.begin(), corridor.end());
  if (corridor.front() != f0) {
    // not reached through the dual graph (e.g. only via a vertex): fall back to the chord
    const Vec3 d = positionOf(m, query) - positionOf(m, origin.point);
    const Vec3& n = m.faceNormal(f0);
    const Vec3 e2 = n.cross(origin.dir);
    return Vec2(d.dot(origin.dir), d.dot(e2));
  }

  // unfold into the origin plane, frame axes (dir, n x dir), origin at the base point
  const Vec3 x0 = positionOf(m, origin.point);
  const Vec3& n0 = m.faceNormal(f0);
  const Vec3 e1 = projectToFace(m, f0, origin.dir).normalized();
  const Vec3 e2 = n0.cross(e1);
  std::array<Vec2, 3> flat;
  for (int k = 0; k < 3; ++k) {
    const Vec3 p = m.corner(f0, k) - x0;
    flat[k] = Vec2(p.dot(e1), p.dot(e2));
  }
  for (size_t i = 1; i < corridor.size(); ++i) {
    const int f = corridor[i - 1];
    const int g = corridor[i];
    const int k = sharedEdge(m, f, g);
    const int j = m.neighborEdge(f, k);
    std::array<Vec2, 3> next;
    next[j] = flat[(k + 1) % 3];
    next[(j + 1) % 3] = flat[k];
    const Vec2 a = next[j];
    const Vec2 b = next[(j + 1) % 3];
    const double len = (b - a).norm();
    const Vec2 u = (b - a) / len;
    const double la = (m.corner(g, (j + 2) % 3) - m.corner(g, j)).squaredNorm();
    const double lb = (m.corner(g, (j + 2) % 3) - m.corner(g, (j + 1) % 3)).squaredNorm();
    const double x = (la - lb + len * len) / (2.0 * len);
    const double y = std::sqrt(std::max(la - x * x, 0.0));
    next[(j + 2) % 3] = a + x * u + y * Vec2(-u.y(), u.x());
    flat = next;
  }
  Vec2 q = Vec2::Zero();
  for (int k = 0; k < 3; ++k) {
    q += query.bary[k] * flat[k];
  }
  const BaryKind kind = classify(origin.point.bary);
  if (kind.zeros == 2) {
    const VertexFan fan = vertexFan(m, m.face(f0)[kind.vertexCorner]);
    const double theta = std::atan2(q.y(), q.x()) / fanScale(fan);
    return q.norm() * Vec2(std::cos(theta), std::sin(theta));
  }
  return q;
}

LogmapSolver::Result LogmapSolver::solve(const TangentFrame& origin, const SurfacePoint& query) const {
  const Mesh& m = *mesh_;
  if (origin.point.face < 0 || origin.point.face >= m.numFaces() || query.face < 0 || query.face >= m.numFaces()) {
    throw Error(ErrorKind::InvalidInput, "logmap point face out of range");
  }
  const Vec3 target = positionOf(m, query);
  if (component_[m.face(origin.point.face)[0]] != component_[m.face(query.face)[0]]) {
    throw Error(ErrorKind::Geometry, "query lies in a different connected component than the origin");
  }
  const double tol = 1e-10 * scale_;
  if ((target - positionOf(m, origin.point)).norm() <= tol && sharedFaceDistance(m, origin.point, query) >= 0.0) {
    return {{0.0, 0.0}, (target - positionOf(m, origin.point)).norm()};
  }

  auto residual = [&](const Vec2& u) -> Vec3 {
    const LogmapCoord c{u.norm(), std::atan2(u.y(), u.x())};
    return positionOf(m, expmapTrace(m, origin, c)) - target;
  };

  struct Best {
    Vec2 u;
    double err;
  };
  auto levenbergMarquardt = [&](Vec2 u, int maxIter) -> Best {
    Vec3 f = residual(u);
    double cost = f.squaredNorm();
    double mu = 1e-3;
    for (int it = 0; it < maxIter && std::sqrt(cost) > tol; ++it) {
      const double h = 1e-7 * std::max(scale_, u.norm());
      Eigen::Matrix<double, 3, 2> jac;
      for (int a = 0; a < 2; ++a) {
        Vec2 step = Vec2::Zero();
        step[a] = h;
        jac.col(a) = (residual(u + step) - f) / h;
      }
      const Eigen::Matrix2d jtj = jac.transpose() * jac;
      const Vec2 g = jac.transpose() * f;
      bool accepted = false;
      while (mu < 1e10) {
        Eigen::Matrix2d lhs = jtj;
        lhs.diagonal() += mu * jtj.diagonal() + Vec2::Constant(1e-18);
        const Vec2 trial = u - lhs.ldlt().solve(g);
        const Vec3 ft = residual(trial);
        if (ft.squaredNorm() < cost) {
          u = trial;
          f = ft;
          cost = ft.squaredNorm();
          mu = std::max(mu * 0.3, 1e-12);
          accepted = true;
          break;
        }
        mu *= 10.0;
      }
      if (!accepted) {
        break;
      }
    }
    return {u, std::sqrt(cost)};
  };

  const Vec2 guess = unfoldedGuess(origin, query);
  Best best = levenbergMarquardt(guess, 60);
  if (best.err > tol) {
    // restart from a fan of directions at the guessed radius
    const double radius = std::max(guess.norm(), (target - positionOf(m, origin.point)).norm());
    for (int k = 0; k < 16 && best.err > tol; ++k) {
      const double a = 2.0 * kPi * k / 16.0;
      const Best b = levenbergMarquardt(radius * Vec2(std::cos(a), std::sin(a)), 30);
      if (b.err < best.err) {
        best = b;
      }
    }
  }
  return {{best.u.norm(), wrapAngle(std::atan2(best.u.y(), best.u.x()))}, best.err};
}

LogmapCoord logmap(const Mesh& mesh, const TangentFrame& origin, const SurfacePoint& query) {
  return LogmapSolver(mesh).logmap(origin, query);
}

// ---------------------------------------------------------------------------
// Landmarks

double sharedFaceDistance(const Mesh& mesh, const SurfacePoint& a, const SurfacePoint& b) {
  auto onFace = [&](const SurfacePoint& p, int f) {
    for (int k = 0; k < 3; ++k) {
      if (p.bary[k] >= kZeroBary && localCorner(mesh, f, mesh.face(p.face)[k]) < 0) {
        return false;
      }
    }
    return true;
  };
  if (a.face == b.face || onFace(a, b.face) || onFace(b, a.face)) {
    return (positionOf(mesh, a) - positionOf(mesh, b)).norm();
  }
  return -1.0;
}

LandmarkIndex::LandmarkIndex(const Mesh& mesh, std::vector<SurfacePoint> landmarks, DistanceBackend backend)
    : LandmarkIndex(*makeDistanceSolver(mesh, backend), std::move(landmarks)) {}

LandmarkIndex::LandmarkIndex(const DistanceSolver& solver, std::vector<SurfacePoint> landmarks)
    : mesh_(&solver.mesh()), landmarks_(std::move(landmarks)) {
  fields_.reserve(landmarks_.size());
  for (const auto& l : landmarks_) {
    fields_.push_back(solver.distances(l));
  }
}

double LandmarkIndex::distance(int i, const SurfacePoint& query) const {
  const double direct = sharedFaceDistance(*mesh_, landmarks_[i], query);
  return direct >= 0.0 ? direct : interpolate(*mesh_, fields_[i], query);
}

int LandmarkIndex::closest(const SurfacePoint& query) const {
  if (landmarks_.empty()) {
    throw Error(ErrorKind::InvalidInput, "closest landmark needs at least one landmark");
  }
  int best = 0;
  double bestDist = distance(0, query);
  for (int i = 1; i < size(); ++i) {
    const double d = distance(i, query);
    if (d < bestDist) {
      best = i;
      bestDist = d;
    }
  }
  return best;
}

int closestLandmark(const Mesh& mesh, const std::vector<SurfacePoint>& landmarks, const SurfacePoint& query) {
  if (landmarks.empty()) {
    throw Error(ErrorKind::InvalidInput, "closest landmark needs at least one landmark");
  }
  return LandmarkIndex(mesh, landmarks).closest(query);
}

} // namespace hr
