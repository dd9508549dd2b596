#include "handretarget/annotations.h"

#include "handretarget/error.h"

namespace hr {

namespace {

std::vector<SurfacePoint> readPointList(const Json& j, const std::string& path) {
  if (!j.is_array()) {
    throw Error(ErrorKind::Schema, "expected an array of surface points", path);
  }
  std::vector<SurfacePoint> out;
  for (size_t i = 0; i < j.size(); ++i) {
    out.push_back(readSurfacePoint(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

Json pointList(const std::vector<SurfacePoint>& points) {
  Json a = Json::array();
  for (const auto& p : points) {
    a.push_back(toJson(p));
  }
  return a;
}

void checkFace(const SurfacePoint& p, const Mesh& mesh, const std::string& path) {
  if (p.face >= mesh.numFaces()) {
    throw Error(ErrorKind::Schema, "face index out of range", path + ".face");
  }
}

} // namespace

std::vector<CurveCorrespondence> buildCorrespondences(const Annotations& annotations, const Mesh& source, const Mesh& target) {
  std::vector<CurveCorrespondence> out;
  for (const CurveAnnotation& a : annotations.curves) {
    CurveCorrespondence c;
    c.name = a.name;
    c.params = a.params;
    c.source = buildAxialCurve(source, a.sourcePicks);
    if (!a.discarded()) {
      if (!a.targetToward) {
        throw Error(ErrorKind::InvalidInput, "curve '" + a.name + "' needs a direction pick on the target", "target_toward");
      }
      const TangentFrame start = frameToward(target, *a.targetStart, *a.targetToward);
      c.target = reconstructCurve(target, start, c.source, a.params.lambdaA);
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<AxialCurve> sourceCurves(const std::vector<CurveCorrespondence>& correspondences) {
  std::vector<AxialCurve> out;
  for (const auto& c : correspondences) {
    out.push_back(c.source);
  }
  return out;
}

Annotations annotationsFromJson(const Json& j) {
  Annotations a;
  const Json& curves = field(j, "curves", "$");
  if (!curves.is_array()) {
    throw Error(ErrorKind::Schema, "expected an array", "$.curves");
  }
  for (size_t i = 0; i < curves.size(); ++i) {
    const std::string path = "$.curves[" + std::to_string(i) + "]";
    const Json& c = curves[i];
    CurveAnnotation ca;
    ca.name = readString(field(c, "name", path), path + ".name");
    ca.sourcePicks = readPointList(field(c, "source_picks", path), path + ".source_picks");
    if (ca.sourcePicks.size() < 2) {
      throw Error(ErrorKind::Schema, "a curve needs at least two source picks", path + ".source_picks");
    }
    if (c.contains("target_start") && !c["target_start"].is_null()) {
      ca.targetStart = readSurfacePoint(c["target_start"], path + ".target_start");
      ca.targetToward = readSurfacePoint(field(c, "target_toward", path), path + ".target_toward");
    }
    if (c.contains("lambda_a")) {
      ca.params.lambdaA = readNumber(c["lambda_a"], path + ".lambda_a");
    }
    if (c.contains("lambda_s")) {
      ca.params.lambdaS = readNumber(c["lambda_s"], path + ".lambda_s");
    }
    if (!(ca.params.lambdaA > 0.0) || !(ca.params.lambdaS > 0.0)) {
      throw Error(ErrorKind::Schema, "lambda_a and lambda_s must be positive", path);
    }
    a.curves.push_back(std::move(ca));
  }
  if (j.contains("markers")) {
    a.markers = markersFromJson(j["markers"]);
  }
  return a;
}

Json toJson(const Annotations& annotations) {
  Json curves = Json::array();
  for (const CurveAnnotation& c : annotations.curves) {
    Json o = {{"name", c.name}, {"source_picks", pointList(c.sourcePicks)}, {"lambda_a", c.params.lambdaA}, {"lambda_s", c.params.lambdaS}};
    if (c.targetStart) {
      o["target_start"] = toJson(*c.targetStart);
      o["target_toward"] = toJson(*c.targetToward);
    } else {
      o["target_start"] = nullptr;
    }
    curves.push_back(std::move(o));
  }
  return {{"curves", std::move(curves)}, {"markers", toJson(annotations.markers)}};
}

Annotations loadAnnotations(const std::filesystem::path& path) {
  return annotationsFromJson(readJsonFile(path));
}

void saveAnnotations(const Annotations& annotations, const std::filesystem::path& path) {
  writeJsonFile(toJson(annotations), path);
}

void validateAnnotations(const Annotations& annotations, const Mesh& source, const Mesh& target) {
  for (size_t i = 0; i < annotations.curves.size(); ++i) {
    const std::string path = "$.curves[" + std::to_string(i) + "]";
    const CurveAnnotation& c = annotations.curves[i];
    for (size_t k = 0; k < c.sourcePicks.size(); ++k) {
      checkFace(c.sourcePicks[k], source, path + ".source_picks[" + std::to_string(k) + "]");
    }
    if (c.targetStart) {
      checkFace(*c.targetStart, target, path + ".target_start");
      checkFace(*c.targetToward, target, path + ".target_toward");
    }
  }
  for (const MarkerGroup& g : annotations.markers.groups) {
    const std::string path = "$.markers.groups." + g.name;
    for (size_t k = 0; k < g.source.size(); ++k) {
      checkFace(g.source[k], source, path + ".source[" + std::to_string(k) + "]");
    }
    for (size_t k = 0; k < g.target.size(); ++k) {
      checkFace(g.target[k], target, path + ".target[" + std::to_string(k) + "]");
    }
  }
}

Json toJson(const AxialCurve& curve) {
  Json points = Json::array();
  for (const TangentFrame& f : curve.points) {
    points.push_back(toJson(f));
  }
  std::vector<bool> flagged = curve.flagged;
  flagged.resize(curve.points.size(), false);
  return {{"points", std::move(points)},
      {"segments", curve.segments},
      {"turning", curve.turning},
      {"picks", curve.picks},
      {"flagged", flagged},
      {"length", curve.length()}};
}

AxialCurve axialCurveFromJson(const Json& j, const std::string& path) {
  AxialCurve c;
  const Json& points = field(j, "points", path);
  if (!points.is_array()) {
    throw Error(ErrorKind::Schema, "expected an array", path + ".points");
  }
  for (size_t i = 0; i < points.size(); ++i) {
    c.points.push_back(readTangentFrame(points[i], path + ".points[" + std::to_string(i) + "]"));
  }
  const size_t n = c.points.size();
  auto numbers = [&](const char* key, size_t expect) {
    const Json& a = field(j, key, path);
    const std::string p = path + "." + key;
    if (!a.is_array() || a.size() != expect) {
      throw Error(ErrorKind::Schema, "array length does not match the point count", p);
    }
    std::vector<double> out;
    for (size_t i = 0; i < a.size(); ++i) {
      out.push_back(readNumber(a[i], p + "[" + std::to_string(i) + "]"));
    }
    return out;
  };
  c.segments = numbers("segments", n ? n - 1 : 0);
  c.turning = numbers("turning", n);
  if (j.contains("picks")) {
    for (size_t i = 0; i < j["picks"].size(); ++i) {
      const int k = readInt(j["picks"][i], path + ".picks[" + std::to_string(i) + "]");
      if (k < 0 || k >= static_cast<int>(n)) {
        throw Error(ErrorKind::Schema, "pick index out of range", path + ".picks[" + std::to_string(i) + "]");
      }
      c.picks.push_back(k);
    }
  }
  c.flagged.assign(n, false);
  if (j.contains("flagged") && j["flagged"].is_array() && j["flagged"].size() == n) {
    for (size_t i = 0; i < n; ++i) {
      c.flagged[i] = j["flagged"][i].get<bool>();
    }
  }
  return c;
}

} // namespace hr
