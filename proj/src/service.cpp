#include "handretarget/service.h"

#include "handretarget/error.h"
#include "handretarget/rig.h"

#include <httplib.h>

#include <fstream>

namespace hr {

namespace {

int statusFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotFound:
      return 404;
    case ErrorKind::Geometry:
    case ErrorKind::NonManifold:
    case ErrorKind::Solver:
      return 422;
    case ErrorKind::InvalidInput:
    case ErrorKind::Schema:
      return 400;
  }
  return 400;
}

Json errorBody(const std::string& kind, const std::string& message, const std::string& where) {
  return {{"error", {{"kind", kind}, {"message", message}, {"where", where}}}};
}

Json meshJson(const std::string& id, const Mesh& mesh) {
  Json vertices = Json::array();
  for (const Vec3& v : mesh.vertices()) {
    vertices.push_back(toJson(v));
  }
  Json faces = Json::array();
  for (int f = 0; f < mesh.numFaces(); ++f) {
    const auto& face = mesh.face(f);
    faces.push_back({face[0], face[1], face[2]});
  }
  return {{"id", id}, {"vertices", vertices}, {"faces", faces}};
}

std::vector<SurfacePoint> readPicks(const Json& j, const std::string& path) {
  if (!j.is_array()) {
    throw Error(ErrorKind::Schema, "expected an array of surface points", path);
  }
  std::vector<SurfacePoint> out;
  for (size_t i = 0; i < j.size(); ++i) {
    out.push_back(readSurfacePoint(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

void checkFace(const Mesh& mesh, const SurfacePoint& p, const std::string& path) {
  if (p.face < 0 || p.face >= mesh.numFaces()) {
    throw Error(ErrorKind::Schema, "face index out of range", path + ".face");
  }
}

} // namespace

ServiceSession loadServiceSession(
    const std::filesystem::path& motion,
    const std::filesystem::path& rig,
    const std::filesystem::path& annotations,
    DistanceBackend backend) {
  const MotionSequence seq = loadMotionSequence(motion);
  if (seq.handMesh.empty()) {
    throw Error(ErrorKind::Schema, "the annotation service needs the source hand mesh", "$.hand_mesh");
  }
  ServiceSession s;
  s.meshes["source"] = loadMesh(resolveBeside(motion, seq.handMesh));
  s.meshes["object"] = loadMesh(resolveBeside(motion, seq.objectMesh));
  s.meshes["target"] = loadSkinnedHand(rig).mesh();
  validateAgainstMeshes(seq, s.meshes["source"], s.meshes["object"]);
  s.frames = seq.frames;
  s.annotationsPath = annotations;
  s.backend = backend;
  return s;
}

AnnotationService::AnnotationService(ServiceSession session) : session_(std::move(session)) {}

AnnotationService::~AnnotationService() = default;

const Mesh& AnnotationService::mesh(const std::string& id) const {
  const auto it = session_.meshes.find(id);
  if (it == session_.meshes.end()) {
    throw Error(ErrorKind::NotFound, "unknown mesh", id);
  }
  return it->second;
}

ServiceResponse AnnotationService::handle(const std::string& method, const std::string& path, const std::string& body) const {
  ServiceResponse res;
  try {
    Json request;
    if (method == "POST") {
      try {
        request = Json::parse(body);
      } catch (const Json::parse_error& e) {
        return {400, errorBody("schema", std::string("malformed JSON: ") + e.what(), "$")};
      }
    }
    res.body = route(method, path, request, &res.status);
  } catch (const Error& e) {
    res.status = statusFor(e.kind());
    res.body = errorBody(toString(e.kind()), e.what(), e.where());
  } catch (const Json::exception& e) {
    res.status = 400;
    res.body = errorBody("schema", e.what(), "$");
  }
  return res;
}

Json AnnotationService::route(const std::string& method, const std::string& path, const Json& req, int* status) const {
  *status = 200;
  if (method == "GET" && path == "/health") {
    return {{"ok", true}};
  }
  if (method == "GET" && path.rfind("/meshes/", 0) == 0) {
    const std::string id = path.substr(8);
    return meshJson(id, mesh(id));
  }
  if (method == "POST" && path == "/pick") {
    const Mesh& m = mesh(readString(field(req, "mesh", "$"), "$.mesh"));
    const Json& ray = field(req, "ray", "$");
    const Vec3 origin = readVec3(field(ray, "origin", "$.ray"), "$.ray.origin");
    const Vec3 dir = readVec3(field(ray, "direction", "$.ray"), "$.ray.direction");
    if (!(dir.norm() > 0.0)) {
      throw Error(ErrorKind::Schema, "ray direction must be non-zero", "$.ray.direction");
    }
    const TriangleBvh bvh(m);
    const auto hit = bvh.raycast(origin, dir.normalized());
    if (!hit) {
      throw Error(ErrorKind::Geometry, "ray misses the mesh", "$.ray");
    }
    return {{"point", toJson(hit->point)}, {"position", toJson(positionOf(m, hit->point))}, {"distance", hit->distance}};
  }
  if (method == "POST" && path == "/curve/build") {
    const Mesh& m = mesh(readString(field(req, "mesh", "$"), "$.mesh"));
    const std::vector<SurfacePoint> picks = readPicks(field(req, "picks", "$"), "$.picks");
    if (picks.size() < 2) {
      throw Error(ErrorKind::Schema, "a curve needs at least two picks", "$.picks");
    }
    for (size_t i = 0; i < picks.size(); ++i) {
      checkFace(m, picks[i], "$.picks[" + std::to_string(i) + "]");
    }
    return {{"curve", toJson(buildAxialCurve(m, picks))}};
  }
  if (method == "POST" && path == "/curve/reconstruct") {
    const AxialCurve source = axialCurveFromJson(field(req, "source_curve", "$"), "$.source_curve");
    const Mesh& target = mesh(req.contains("target") ? readString(req["target"], "$.target") : std::string("target"));
    const SurfacePoint start = readSurfacePoint(field(req, "start", "$"), "$.start");
    const SurfacePoint toward = readSurfacePoint(field(req, "toward", "$"), "$.toward");
    checkFace(target, start, "$.start");
    checkFace(target, toward, "$.toward");
    const double lambdaA = req.contains("lambda_a") ? readNumber(req["lambda_a"], "$.lambda_a") : 1.0;
    if (!(lambdaA > 0.0)) {
      throw Error(ErrorKind::Schema, "lambda_a must be positive", "$.lambda_a");
    }
    const AxialCurve curve = reconstructCurve(target, frameToward(target, start, toward), source, lambdaA);
    const bool flagged = std::find(curve.flagged.begin(), curve.flagged.end(), true) != curve.flagged.end();
    if (flagged) {
      *status = 422;
    }
    return {{"curve", toJson(curve)}, {"flagged", flagged}};
  }
  if (method == "POST" && path == "/transfer/preview") {
    const Annotations ann = annotationsFromJson({{"curves", field(req, "curves", "$")}});
    const Mesh& source = mesh("source");
    const Mesh& target = mesh("target");
    validateAnnotations(ann, source, target);
    if (ann.curves.empty()) {
      throw Error(ErrorKind::Schema, "preview needs at least one curve", "$.curves");
    }
    std::vector<CurveCorrespondence> corr = buildCorrespondences(ann, source, target);
    if (req.contains("lambda_s")) {
      const Json& overrides = req["lambda_s"];
      if (!overrides.is_object()) {
        throw Error(ErrorKind::Schema, "expected an object keyed by curve name", "$.lambda_s");
      }
      for (auto it = overrides.begin(); it != overrides.end(); ++it) {
        const std::string where = "$.lambda_s." + it.key();
        const double v = readNumber(it.value(), where);
        if (!(v > 0.0)) {
          throw Error(ErrorKind::Schema, "lambda_s must be positive", where);
        }
        auto c = std::find_if(corr.begin(), corr.end(), [&](const CurveCorrespondence& x) { return x.name == it.key(); });
        if (c == corr.end()) {
          throw Error(ErrorKind::NotFound, "unknown curve", where);
        }
        c->params.lambdaS = v;
      }
    }
    const int frameId = readInt(field(req, "frame", "$"), "$.frame");
    const auto frame = std::find_if(session_.frames.begin(), session_.frames.end(), [&](const ContactFrame& f) { return f.index == frameId; });
    if (frame == session_.frames.end()) {
      throw Error(ErrorKind::NotFound, "unknown contact frame", "$.frame");
    }
    std::vector<SurfacePoint> points;
    for (const ContactPair& p : frame->pairs) {
      points.push_back(p.hand);
    }
    const SourceAtlas atlas(source, sourceCurves(corr), session_.backend);
    const TransferResult tr = transferFrame(atlas, target, corr, points);
    Json contacts = Json::array();
    for (const TransferredContact& c : tr.contacts) {
      contacts.push_back({{"input", c.input}, {"curve", corr[c.chart.curve].name}, {"axis_point", c.chart.point},
          {"point", toJson(c.target)}, {"position", toJson(positionOf(target, c.target))}});
    }
    if (!tr.flagged.empty()) {
      *status = 422;
    }
    return {{"frame", frameId}, {"contacts", contacts}, {"discarded", tr.discarded}, {"flagged", tr.flagged}};
  }
  if (method == "POST" && path == "/annotations/save") {
    const Annotations ann = annotationsFromJson(req);
    validateAnnotations(ann, mesh("source"), mesh("target"));
    const std::lock_guard lock(fileMutex_);
    saveAnnotations(ann, session_.annotationsPath);
    return {{"ok", true}, {"path", session_.annotationsPath.string()}};
  }
  if (method == "GET" && path == "/annotations/load") {
    const std::lock_guard lock(fileMutex_);
    if (!std::filesystem::exists(session_.annotationsPath)) {
      throw Error(ErrorKind::NotFound, "no annotation file yet", session_.annotationsPath.string());
    }
    return toJson(loadAnnotations(session_.annotationsPath));
  }
  if (method == "POST" && path == "/markers/save") {
    Annotations ann;
    ann.markers = markersFromJson(req);
    validateAnnotations(ann, mesh("source"), mesh("target"));
    const std::lock_guard lock(fileMutex_);
    if (std::filesystem::exists(session_.annotationsPath)) {
      ann.curves = loadAnnotations(session_.annotationsPath).curves;
    }
    saveAnnotations(ann, session_.annotationsPath);
    return {{"ok", true}, {"path", session_.annotationsPath.string()}};
  }
  throw Error(ErrorKind::NotFound, "unknown route", method + " " + path);
}

int AnnotationService::bind(const std::string& host, int port) {
  server_ = std::make_unique<httplib::Server>();
  auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
    const ServiceResponse r = handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(dumpJson(r.body), "application/json");
  };
  server_->Get(".*", dispatch);
  server_->Post(".*", dispatch);
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) {
      throw Error(ErrorKind::InvalidInput, "cannot bind", host);
    }
    return bound;
  }
  if (!server_->bind_to_port(host, port)) {
    throw Error(ErrorKind::InvalidInput, "cannot bind", host + ":" + std::to_string(port));
  }
  return port;
}

void AnnotationService::run() {
  if (!server_) {
    throw Error(ErrorKind::InvalidInput, "bind() before run()");
  }
  server_->listen_after_bind();
}

void AnnotationService::stop() {
  if (server_) {
    server_->stop();
  }
}

} // namespace hr
