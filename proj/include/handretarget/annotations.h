#pragma once

#include "handretarget/atlas.h"
#include "handretarget/rig.h"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hr {

/// Artist input for one curve pair: picks on the source hand, and on the
/// target hand a start point plus a second point giving the initial direction.
/// Without a target start the curve's contacts are discarded.
struct CurveAnnotation {
  std::string name;
  std::vector<SurfacePoint> sourcePicks;
  std::optional<SurfacePoint> targetStart;
  std::optional<SurfacePoint> targetToward;
  TransferParams params;

  bool discarded() const {
    return !targetStart.has_value();
  }
};

struct Annotations {
  std::vector<CurveAnnotation> curves;
  MarkerSet markers;
};

/// Rebuilds every source curve and replays it on the target. Correspondences
/// come back in annotation order.
std::vector<CurveCorrespondence> buildCorrespondences(const Annotations& annotations, const Mesh& source, const Mesh& target);

std::vector<AxialCurve> sourceCurves(const std::vector<CurveCorrespondence>& correspondences);

/// {"curves": [{"name", "source_picks", "target_start", "target_toward",
/// "lambda_a", "lambda_s"}], "markers": {"groups": {...}}}
Annotations annotationsFromJson(const Json& j);
Json toJson(const Annotations& annotations);
Annotations loadAnnotations(const std::filesystem::path& path);
void saveAnnotations(const Annotations& annotations, const std::filesystem::path& path);

/// Face ranges checked against the two hands.
void validateAnnotations(const Annotations& annotations, const Mesh& source, const Mesh& target);

Json toJson(const AxialCurve& curve);
AxialCurve axialCurveFromJson(const Json& j, const std::string& path);

} // namespace hr
