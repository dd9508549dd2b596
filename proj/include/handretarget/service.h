#pragma once

#include "handretarget/annotations.h"
#include "handretarget/contacts.h"
#include "handretarget/geodesic.h"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace httplib {
class Server;
}

namespace hr {

/// Scene loaded once per server process. Meshes are keyed "source", "target"
/// and "object"; contact frames are looked up by their `index`.
struct ServiceSession {
  std::map<std::string, Mesh> meshes;
  std::vector<ContactFrame> frames;
  std::filesystem::path annotationsPath;
  DistanceBackend backend = DistanceBackend::Heat;
};

/// Source hand and object from the motion file, target hand from the rig.
ServiceSession loadServiceSession(
    const std::filesystem::path& motion,
    const std::filesystem::path& rig,
    const std::filesystem::path& annotations,
    DistanceBackend backend = DistanceBackend::Heat);

struct ServiceResponse {
  int status = 200;
  Json body;
};

/// JSON-over-HTTP front end for the annotation tools. Every route is a thin
/// wrapper over a library call; `handle` is the whole routing table and is
/// what the HTTP server calls.
///
///   GET  /health                 {"ok": true}
///   GET  /meshes/{id}            {"id", "vertices", "faces"}
///   POST /pick                   {mesh, ray: {origin, direction}}
///   POST /curve/build            {mesh, picks}
///   POST /curve/reconstruct      {source_curve, target?, start, toward, lambda_a?}
///   POST /transfer/preview       {curves, lambda_s?: {name: value}, frame}
///   POST /annotations/save       annotation file body
///   GET  /annotations/load
///   POST /markers/save           {"groups": {...}}
///
/// Errors: 400 for malformed requests, 404 for unknown meshes, frames or
/// routes, 422 for geometric failures.
class AnnotationService {
 public:
  explicit AnnotationService(ServiceSession session);
  ~AnnotationService();

  ServiceResponse handle(const std::string& method, const std::string& path, const std::string& body) const;

  /// Binds host:port (port 0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves on the bound socket until stop() is called from another thread.
  void run();
  void stop();

  const ServiceSession& session() const {
    return session_;
  }

 private:
  Json route(const std::string& method, const std::string& path, const Json& request, int* status) const;
  const Mesh& mesh(const std::string& id) const;

  ServiceSession session_;
  mutable std::mutex fileMutex_;
  std::unique_ptr<httplib::Server> server_;
};

} // namespace hr
