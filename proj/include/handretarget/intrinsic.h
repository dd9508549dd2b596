#pragma once

#include "handretarget/geodesic.h"
#include "handretarget/mesh.h"

#include <vector>

namespace hr {

/// Base point plus the direction that defines angle zero. `dir` is a unit
/// vector in the plane of `point.face`.
struct TangentFrame {
  SurfacePoint point;
  Vec3 dir = Vec3::UnitX();
};

/// Geodesic polar coordinates about a TangentFrame. theta in (-pi, pi].
struct LogmapCoord {
  double r = 0.0;
  double theta = 0.0;
};

/// One sample along a traced geodesic. `point` is expressed in the face the
/// path continues into and `dir` is the path tangent in that face's plane
/// (for the final sample: the arriving tangent).
struct PathPoint {
  SurfacePoint point;
  Vec3 dir;
  double arclength = 0.0;
};

/// Straightest geodesic: start, every edge crossing / vertex pass, end.
struct GeodesicPath {
  std::vector<PathPoint> points;
  double length = 0.0;
  bool hitBoundary = false; // stopped early at an open boundary

  const PathPoint& start() const {
    return points.front();
  }
  const PathPoint& end() const {
    return points.back();
  }
};

/// Wraps an angle to (-pi, pi].
double wrapAngle(double a);

/// Signed angle from `a` to `b` about `normal` (both assumed tangent).
double signedAngle(const Vec3& a, const Vec3& b, const Vec3& normal);

/// Traces the straightest geodesic from `start` along `dir` (a tangent in the
/// plane of start.face) for `length`. Faces are crossed by unfolding; at a
/// vertex the path leaves at half the total angle from the arriving side.
/// Stops and flags at an open boundary.
GeodesicPath traceGeodesic(const Mesh& mesh, const SurfacePoint& start, const Vec3& dir, double length);

/// Direction at `point` rotated by `angle` from `dir` (a tangent in the plane
/// of `face`, which must contain the point). At interior vertices angles are
/// scaled to the vertex's total angle. Returns the face whose plane holds the
/// result. Throws hr::Error(Geometry) when the rotation leaves a boundary fan.
std::pair<int, Vec3> rotateTangent(const Mesh& mesh, const SurfacePoint& point, const Vec3& dir, double angle);

/// Angle that takes tangent `from` (in the plane of from.first) to `to` at the
/// same point; inverse of rotateTangent.
double tangentAngle(
    const Mesh& mesh,
    const SurfacePoint& point,
    const std::pair<int, Vec3>& from,
    const std::pair<int, Vec3>& to);

/// The same location expressed in face g (which must contain it).
SurfacePoint pointInFace(const Mesh& mesh, const SurfacePoint& p, int g);

/// Launch direction for polar angle theta in `origin`.
std::pair<int, Vec3> launchDirection(const Mesh& mesh, const TangentFrame& origin, double theta);

GeodesicPath expmapPath(const Mesh& mesh, const TangentFrame& origin, const LogmapCoord& coord);

/// Endpoint of expmapPath. `hitBoundary` (optional) reports a clamped trace.
SurfacePoint expmapTrace(
    const Mesh& mesh,
    const TangentFrame& origin,
    const LogmapCoord& coord,
    bool* hitBoundary = nullptr);

/// Carries a tangent vector given at the start of a geodesic path to its end,
/// keeping its angle to the path tangent. Throws on a zero-length path.
Vec3 transportAlongPath(const Mesh& mesh, const GeodesicPath& path, const Vec3& vector);

/// Inverse of expmapTrace: solves for the polar coordinates whose traced
/// endpoint is the query. The initial guess unfolds the shortest face
/// corridor into the origin plane; Levenberg-Marquardt shooting on the traced
/// endpoint then drives the residual to ~1e-10 of the mean edge length.
class LogmapSolver {
 public:
  explicit LogmapSolver(const Mesh& mesh);

  struct Result {
    LogmapCoord coord;
    double residual = 0.0; // world distance between traced endpoint and query
  };

  Result solve(const TangentFrame& origin, const SurfacePoint& query) const;

  LogmapCoord logmap(const TangentFrame& origin, const SurfacePoint& query) const {
    return solve(origin, query).coord;
  }

  const Mesh& mesh() const {
    return *mesh_;
  }

 private:
  Vec2 unfoldedGuess(const TangentFrame& origin, const SurfacePoint& query) const;

  const Mesh* mesh_;
  std::vector<int> component_;
  std::vector<Vec3> centroid_;
  double scale_;
};

LogmapCoord logmap(const Mesh& mesh, const TangentFrame& origin, const SurfacePoint& query);

/// Straight-line distance when two points lie on a common face (exact
/// geodesic distance there); negative otherwise.
double sharedFaceDistance(const Mesh& mesh, const SurfacePoint& a, const SurfacePoint& b);

/// Geodesic distance fields of a fixed landmark set, precomputed once.
class LandmarkIndex {
 public:
  LandmarkIndex(const Mesh& mesh, std::vector<SurfacePoint> landmarks, DistanceBackend backend = DistanceBackend::Heat);
  LandmarkIndex(const DistanceSolver& solver, std::vector<SurfacePoint> landmarks);

  /// Distance from landmark i to a surface point: exact within a shared face,
  /// barycentric interpolation of the vertex field otherwise.
  double distance(int i, const SurfacePoint& query) const;

  /// Index of the geodesically nearest landmark; ties go to the lowest index.
  int closest(const SurfacePoint& query) const;

  int size() const {
    return static_cast<int>(landmarks_.size());
  }
  const std::vector<SurfacePoint>& landmarks() const {
    return landmarks_;
  }

 private:
  const Mesh* mesh_;
  std::vector<SurfacePoint> landmarks_;
  std::vector<std::vector<double>> fields_;
};

/// Single-query convenience over LandmarkIndex. Throws on an empty list.
int closestLandmark(const Mesh& mesh, const std::vector<SurfacePoint>& landmarks, const SurfacePoint& query);

} // namespace hr
