#pragma once

#include "handretarget/intrinsic.h"

#include <memory>
#include <string>
#include <vector>

namespace hr {

/// Ordered chain of axis points joined by shortest geodesics. Every edge
/// crossing of the joining geodesics is an axis point of its own. Each
/// point's frame direction is the outgoing path tangent (arriving tangent for
/// the last point); turning[i] rotates the arriving tangent at point i onto the
/// outgoing one (zero at both ends and at edge crossings).
struct AxialCurve {
  std::vector<TangentFrame> points;
  std::vector<double> segments; // geodesic length from point i to i+1
  std::vector<double> turning;
  std::vector<int> picks; // indices of user-picked points
  std::vector<bool> flagged; // reconstruction hit an open boundary at/before this point

  int size() const {
    return static_cast<int>(points.size());
  }
  bool empty() const {
    return points.empty();
  }
  double length() const;
  /// Arclength from the first point to point i.
  double arclength(int i) const;
};

struct TransferParams {
  double lambdaA = 1.0; // axis length scale
  double lambdaS = 1.0; // expmap radius scale
};

/// Named source/target curve pair. An empty target discards every contact
/// owned by the source curve.
struct CurveCorrespondence {
  std::string name;
  AxialCurve source;
  AxialCurve target;
  TransferParams params;
};

/// Contact owner: curve index and axis point index within it.
struct ChartId {
  int curve = -1;
  int point = -1;

  bool operator==(const ChartId&) const = default;
};

AxialCurve buildAxialCurve(const Mesh& mesh, const std::vector<SurfacePoint>& picks);

/// Frame at `from` pointing along the shortest geodesic towards `toward`.
TangentFrame frameToward(const Mesh& mesh, const SurfacePoint& from, const SurfacePoint& toward);

/// Replays the source curve's (length x lambdaA, turning angle) program on the
/// target from `start`. Boundary exits are clamped and flagged per point.
AxialCurve reconstructCurve(const Mesh& target, const TangentFrame& start, const AxialCurve& source, double lambdaA);

/// Index on `target` matching point i of `source`: identical when the counts
/// agree, nearest normalized arclength otherwise.
int correspondingPoint(const AxialCurve& source, int i, const AxialCurve& target);

/// Per-contact result of a transfer.
struct TransferredContact {
  int input = -1; // index into the input contact list
  ChartId chart;
  LogmapCoord coord;
  SurfacePoint target;
};

/// Reconstructed contacts in input order. Inputs owned by a discarded curve
/// are counted; inputs whose reconstruction left the target through a
/// boundary (or whose logmap did not converge) are listed and excluded.
struct TransferResult {
  std::vector<TransferredContact> contacts;
  int discarded = 0;
  std::vector<int> flagged;
};

/// Source side of the atlas: one chart per axis point of every source curve.
/// Distance fields and the logmap solver are built once and shared by all
/// frames.
class SourceAtlas {
 public:
  SourceAtlas(const Mesh& source, const std::vector<AxialCurve>& curves, DistanceBackend backend = DistanceBackend::Heat);

  /// Globally nearest axis point over all curves (lowest index on ties).
  ChartId assign(const SurfacePoint& contact) const;
  std::vector<ChartId> assign(const std::vector<SurfacePoint>& contacts) const;

  /// Logmap coordinates in the owning axis point's frame, with the shooting
  /// residual.
  LogmapSolver::Result parameterize(const SurfacePoint& contact, const ChartId& chart) const;

  const Mesh& mesh() const {
    return *mesh_;
  }
  const std::vector<AxialCurve>& curves() const {
    return curves_;
  }

 private:
  const Mesh* mesh_;
  std::vector<AxialCurve> curves_;
  std::vector<ChartId> flat_;
  std::unique_ptr<LandmarkIndex> index_;
  LogmapSolver logmap_;
};

/// Rebuilds one contact on the target: expmap from the corresponding target
/// axis point with radius lambdaS * r and angle theta.
SurfacePoint reconstructContact(
    const Mesh& target,
    const CurveCorrespondence& correspondence,
    int sourcePoint,
    const LogmapCoord& coord,
    bool* flagged = nullptr);

/// assign -> parameterize -> reconstruct for one frame of source contacts.
/// `correspondences` must be in the same order as the atlas curves.
TransferResult transferFrame(
    const SourceAtlas& atlas,
    const Mesh& target,
    const std::vector<CurveCorrespondence>& correspondences,
    const std::vector<SurfacePoint>& contacts);

} // namespace hr
