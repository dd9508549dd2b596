#include "handretarget/atlas.h"

#include "handretarget/error.h"

#include <cmath>
#include <numeric>

namespace hr {

namespace {

// Any unit tangent of the point's face; only used as a throwaway reference.
Vec3 someTangent(const Mesh& mesh, const SurfacePoint& p) {
  return (mesh.corner(p.face, 1) - mesh.corner(p.face, 0)).normalized();
}

GeodesicPath shortestPath(const Mesh& mesh, const LogmapSolver& solver, const SurfacePoint& a, const SurfacePoint& b) {
  const TangentFrame frame{a, someTangent(mesh, a)};
  const LogmapSolver::Result res = solver.solve(frame, b);
  if (res.residual > 1e-6 * mesh.meanEdgeLength()) {
    throw Error(ErrorKind::Geometry, "no geodesic reaches the next pick");
  }
  return expmapPath(mesh, frame, res.coord);
}

} // namespace

double AxialCurve::length() const {
  return std::accumulate(segments.begin(), segments.end(), 0.0);
}

double AxialCurve::arclength(int i) const {
  return std::accumulate(segments.begin(), segments.begin() + i, 0.0);
}

TangentFrame frameToward(const Mesh& mesh, const SurfacePoint& from, const SurfacePoint& toward) {
  if ((positionOf(mesh, from) - positionOf(mesh, toward)).norm() < 1e-9 * mesh.meanEdgeLength()) {
    throw Error(ErrorKind::InvalidInput, "direction pick coincides with the start pick");
  }
  const GeodesicPath path = shortestPath(mesh, LogmapSolver(mesh), from, toward);
  return {path.start().point, path.start().dir};
}

AxialCurve buildAxialCurve(const Mesh& mesh, const std::vector<SurfacePoint>& picks) {
  if (picks.size() < 2) {
    throw Error(ErrorKind::InvalidInput, "an axial curve needs at least two picks", "picks");
  }
  const LogmapSolver solver(mesh);
  const double tol = 1e-9 * mesh.meanEdgeLength();
  AxialCurve curve;
  std::pair<int, Vec3> arriving;
  for (size_t i = 0; i + 1 < picks.size(); ++i) {
    const SurfacePoint& a = picks[i];
    const SurfacePoint& b = picks[i + 1];
    if ((positionOf(mesh, a) - positionOf(mesh, b)).norm() < tol) {
      throw Error(ErrorKind::InvalidInput, "coincident consecutive picks", "picks[" + std::to_string(i + 1) + "]");
    }
    const GeodesicPath path = shortestPath(mesh, solver, a, b);
    const PathPoint& s = path.start();
    if (i == 0) {
      curve.points.push_back({s.point, s.dir});
      curve.turning.push_back(0.0);
      curve.picks.push_back(0);
    } else {
      curve.turning.back() = tangentAngle(mesh, s.point, arriving, {s.point.face, s.dir});
      curve.points.back() = {s.point, s.dir};
    }
    double last = 0.0;
    for (size_t j = 1; j + 1 < path.points.size(); ++j) {
      const PathPoint& p = path.points[j];
      if (p.arclength - last < tol || path.length - p.arclength < tol) {
        continue;
      }
      curve.segments.push_back(p.arclength - last);
      last = p.arclength;
      curve.points.push_back({p.point, p.dir});
      curve.turning.push_back(0.0);
    }
    curve.segments.push_back(path.length - last);
    const PathPoint& e = path.end();
    curve.points.push_back({e.point, e.dir});
    curve.turning.push_back(0.0);
    curve.picks.push_back(curve.size() - 1);
    arriving = {e.point.face, e.dir};
  }
  curve.flagged.assign(curve.points.size(), false);
  return curve;
}

AxialCurve reconstructCurve(const Mesh& target, const TangentFrame& start, const AxialCurve& source, double lambdaA) {
  if (!(lambdaA > 0.0) || !std::isfinite(lambdaA)) {
    throw Error(ErrorKind::InvalidInput, "lambda_a must be positive and finite", "lambda_a");
  }
  AxialCurve out;
  if (source.empty()) {
    return out;
  }
  const Vec3& n = target.faceNormal(start.point.face);
  TangentFrame cur{start.point, (start.dir - n * n.dot(start.dir)).normalized()};
  out.points.push_back(cur);
  out.flagged.push_back(false);
  out.turning = source.turning;
  out.picks = source.picks;
  bool flag = false;
  for (int i = 0; i + 1 < source.size(); ++i) {
    const GeodesicPath path = traceGeodesic(target, cur.point, cur.dir, lambdaA * source.segments[i]);
    flag = flag || path.hitBoundary;
    out.segments.push_back(path.length);
    const PathPoint& e = path.end();
    if (i + 2 < source.size()) {
      const auto [face, dir] = rotateTangent(target, e.point, e.dir, source.turning[i + 1]);
      cur = {pointInFace(target, e.point, face), dir};
    } else {
      cur = {e.point, e.dir};
    }
    out.points.push_back(cur);
    out.flagged.push_back(flag);
  }
  return out;
}

int correspondingPoint(const AxialCurve& source, int i, const AxialCurve& target) {
  if (target.empty()) {
    throw Error(ErrorKind::InvalidInput, "target curve is empty");
  }
  if (source.size() == target.size()) {
    return i;
  }
  const double ls = source.length();
  const double lt = target.length();
  const double frac = ls > 0.0 ? source.arclength(i) / ls : 0.0;
  int best = 0;
  double bestGap = std::abs(frac);
  double acc = 0.0;
  for (int j = 1; j < target.size(); ++j) {
    acc += target.segments[j - 1];
    const double gap = std::abs((lt > 0.0 ? acc / lt : 0.0) - frac);
    if (gap < bestGap) {
      best = j;
      bestGap = gap;
    }
  }
  return best;
}

SourceAtlas::SourceAtlas(const Mesh& source, const std::vector<AxialCurve>& curves, DistanceBackend backend)
    : mesh_(&source), curves_(curves), logmap_(source) {
  if (curves_.empty()) {
    throw Error(ErrorKind::InvalidInput, "the atlas needs at least one axial curve");
  }
  std::vector<SurfacePoint> landmarks;
  for (int c = 0; c < static_cast<int>(curves_.size()); ++c) {
    if (curves_[c].empty()) {
      throw Error(ErrorKind::InvalidInput, "source curve " + std::to_string(c) + " is empty");
    }
    for (int p = 0; p < curves_[c].size(); ++p) {
      flat_.push_back({c, p});
      landmarks.push_back(curves_[c].points[p].point);
    }
  }
  index_ = std::make_unique<LandmarkIndex>(source, std::move(landmarks), backend);
}

ChartId SourceAtlas::assign(const SurfacePoint& contact) const {
  return flat_[index_->closest(contact)];
}

std::vector<ChartId> SourceAtlas::assign(const std::vector<SurfacePoint>& contacts) const {
  std::vector<ChartId> out;
  out.reserve(contacts.size());
  for (const auto& c : contacts) {
    out.push_back(assign(c));
  }
  return out;
}

LogmapSolver::Result SourceAtlas::parameterize(const SurfacePoint& contact, const ChartId& chart) const {
  return logmap_.solve(curves_.at(chart.curve).points.at(chart.point), contact);
}

SurfacePoint reconstructContact(
    const Mesh& target,
    const CurveCorrespondence& correspondence,
    int sourcePoint,
    const LogmapCoord& coord,
    bool* flagged) {
  const double lambdaS = correspondence.params.lambdaS;
  if (!(lambdaS > 0.0) || !std::isfinite(lambdaS)) {
    throw Error(ErrorKind::InvalidInput, "lambda_s must be positive and finite", "lambda_s");
  }
  const int j = correspondingPoint(correspondence.source, sourcePoint, correspondence.target);
  bool hit = false;
  const SurfacePoint p = expmapTrace(target, correspondence.target.points[j], {lambdaS * coord.r, coord.theta}, &hit);
  if (flagged) {
    *flagged = hit || correspondence.target.flagged[j];
  }
  return p;
}

TransferResult transferFrame(
    const SourceAtlas& atlas,
    const Mesh& target,
    const std::vector<CurveCorrespondence>& correspondences,
    const std::vector<SurfacePoint>& contacts) {
  if (correspondences.size() != atlas.curves().size()) {
    throw Error(ErrorKind::InvalidInput, "correspondence count does not match the atlas curves");
  }
  const double tol = 1e-6 * atlas.mesh().meanEdgeLength();
  TransferResult result;
  for (int i = 0; i < static_cast<int>(contacts.size()); ++i) {
    const ChartId chart = atlas.assign(contacts[i]);
    const CurveCorrespondence& corr = correspondences[chart.curve];
    if (corr.target.empty()) {
      ++result.discarded;
      continue;
    }
    const LogmapSolver::Result param = atlas.parameterize(contacts[i], chart);
    bool flagged = false;
    const SurfacePoint p = reconstructContact(target, corr, chart.point, param.coord, &flagged);
    if (flagged || param.residual > tol) {
      result.flagged.push_back(i);
      continue;
    }
    result.contacts.push_back({i, chart, param.coord, p});
  }
  return result;
}

} // namespace hr
