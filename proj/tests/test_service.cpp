#include "handretarget/primitives.h"
#include "handretarget/service.h"

#include <gtest/gtest.h>
#include <httplib.h>

#include <thread>

using namespace hr;

namespace {

SurfacePoint below(const Mesh& mesh, double x, double y) {
  const auto hit = TriangleBvh(mesh).raycast(Vec3(x, y, 1.0), -Vec3::UnitZ());
  EXPECT_TRUE(hit.has_value());
  return hit->point;
}

std::filesystem::path scratchDir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("hr_service_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Source and target are the same flat grid; frame 7 holds a few contacts
// around the middle row.
ServiceSession gridSession(const std::filesystem::path& annotations) {
  const Mesh grid = makeGrid(21, 21, 0.1, Vec3(-1.0, -1.0, 0.0));
  ServiceSession s;
  s.meshes["source"] = grid;
  s.meshes["target"] = grid;
  s.meshes["object"] = makeBoxMesh(Vec3(0, 0, 0.5), Vec3(0.5, 0.5, 0.5));
  ContactFrame f;
  f.index = 7;
  for (double x : {-0.43, -0.12, 0.05, 0.31}) {
    for (double y : {-0.17, 0.08, 0.22}) {
      f.pairs.push_back({below(grid, x, y), {-1, Vec3::Zero()}, 0.0});
    }
  }
  s.frames.push_back(f);
  s.annotationsPath = annotations;
  return s;
}

Json curveRequest(const Mesh& grid) {
  const Json a = toJson(below(grid, -0.6, 0.01));
  const Json b = toJson(below(grid, 0.6, 0.01));
  return {{"name", "mid"}, {"source_picks", {a, b}}, {"target_start", a}, {"target_toward", b}, {"lambda_a", 1.0},
      {"lambda_s", 1.0}};
}

} // namespace

TEST(Service, HealthAndUnknownRoutes) {
  const AnnotationService svc(gridSession(scratchDir("health") / "a.json"));
  const ServiceResponse ok = svc.handle("GET", "/health", "");
  EXPECT_EQ(ok.status, 200);
  EXPECT_EQ(ok.body, Json({{"ok", true}}));
  EXPECT_EQ(svc.handle("GET", "/nope", "").status, 404);
  EXPECT_EQ(svc.handle("GET", "/meshes/elbow", "").status, 404);
  const ServiceResponse m = svc.handle("GET", "/meshes/object", "");
  EXPECT_EQ(m.status, 200);
  EXPECT_EQ(m.body["faces"].size(), 12u);
}

TEST(Service, PickErrors) {
  const AnnotationService svc(gridSession(scratchDir("pick") / "a.json"));
  const ServiceResponse missing = svc.handle("POST", "/pick", R"({"mesh": "source"})");
  EXPECT_EQ(missing.status, 400);
  EXPECT_EQ(missing.body["error"]["where"], "$.ray");
  EXPECT_EQ(svc.handle("POST", "/pick", "{not json").status, 400);
  EXPECT_EQ(svc.handle("POST", "/pick", R"({"mesh": "elbow", "ray": {"origin": [0,0,1], "direction": [0,0,-1]}})").status, 404);
  EXPECT_EQ(svc.handle("POST", "/pick", R"({"mesh": "source", "ray": {"origin": [5,5,1], "direction": [0,0,-1]}})").status, 422);

  const ServiceResponse hit = svc.handle("POST", "/pick", R"({"mesh": "source", "ray": {"origin": [0.23,0.41,1], "direction": [0,0,-2]}})");
  ASSERT_EQ(hit.status, 200);
  EXPECT_NEAR(hit.body["distance"].get<double>(), 1.0, 1e-12);
  EXPECT_NEAR(hit.body["position"][0].get<double>(), 0.23, 1e-12);
}

TEST(Service, StraightCurveOnFlatGrid) {
  const ServiceSession s = gridSession(scratchDir("curve") / "a.json");
  const AnnotationService svc(s);
  const Mesh& grid = s.meshes.at("source");
  const Json req = {{"mesh", "source"}, {"picks", {toJson(below(grid, -0.4, 0.03)), toJson(below(grid, 0.4, 0.03))}}};
  const ServiceResponse r = svc.handle("POST", "/curve/build", req.dump());
  ASSERT_EQ(r.status, 200) << r.body.dump();
  const Json& turning = r.body["curve"]["turning"];
  ASSERT_GT(turning.size(), 2u);
  for (const Json& phi : turning) {
    EXPECT_NEAR(phi.get<double>(), 0.0, 1e-9);
  }

  // Replaying at lambda_a = 2 doubles the arclength.
  const Json rec = {{"source_curve", r.body["curve"]}, {"start", toJson(below(grid, -0.8, -0.5))},
      {"toward", toJson(below(grid, 0.0, -0.5))}, {"lambda_a", 2.0}};
  const ServiceResponse t = svc.handle("POST", "/curve/reconstruct", rec.dump());
  ASSERT_EQ(t.status, 200) << t.body.dump();
  EXPECT_NEAR(t.body["curve"]["length"].get<double>(), 2.0 * r.body["curve"]["length"].get<double>(), 0.01 * 1.6);
  EXPECT_FALSE(t.body["flagged"].get<bool>());

  const ServiceResponse one = svc.handle("POST", "/curve/build", Json({{"mesh", "source"}, {"picks", {toJson(below(grid, 0, 0))}}}).dump());
  EXPECT_EQ(one.status, 400);
}

TEST(Service, IdentityPreview) {
  const ServiceSession s = gridSession(scratchDir("preview") / "a.json");
  const AnnotationService svc(s);
  const Mesh& grid = s.meshes.at("source");
  const Json req = {{"curves", {curveRequest(grid)}}, {"frame", 7}};
  const ServiceResponse r = svc.handle("POST", "/transfer/preview", req.dump());
  ASSERT_EQ(r.status, 200) << r.body.dump();
  const auto& pairs = s.frames[0].pairs;
  ASSERT_EQ(r.body["contacts"].size(), pairs.size());
  for (const Json& c : r.body["contacts"]) {
    const Vec3 in = positionOf(grid, pairs[c["input"].get<int>()].hand);
    EXPECT_LT((readVec3(c["position"], "$") - in).norm(), 1e-3);
  }
  EXPECT_EQ(svc.handle("POST", "/transfer/preview", req.dump()).body, r.body);

  Json bad = req;
  bad["frame"] = 8;
  EXPECT_EQ(svc.handle("POST", "/transfer/preview", bad.dump()).status, 404);
  bad = req;
  bad["lambda_s"] = {{"elsewhere", 2.0}};
  EXPECT_EQ(svc.handle("POST", "/transfer/preview", bad.dump()).status, 404);

  // lambda_s = 1.5 pushes every contact away from the axis.
  Json scaled = req;
  scaled["lambda_s"] = {{"mid", 1.5}};
  const ServiceResponse w = svc.handle("POST", "/transfer/preview", scaled.dump());
  ASSERT_EQ(w.status, 200);
  for (size_t k = 0; k < pairs.size(); ++k) {
    const double y0 = positionOf(grid, pairs[w.body["contacts"][k]["input"].get<int>()].hand).y() - 0.01;
    const double y1 = readVec3(w.body["contacts"][k]["position"], "$").y() - 0.01;
    EXPECT_NEAR(y1, 1.5 * y0, 1e-3);
  }
}

TEST(Service, AnnotationsSaveLoadAndMarkers) {
  const auto dir = scratchDir("save");
  const ServiceSession s = gridSession(dir / "a.json");
  const AnnotationService svc(s);
  const Mesh& grid = s.meshes.at("source");
  EXPECT_EQ(svc.handle("GET", "/annotations/load", "").status, 404);

  const Json ann = {{"curves", {curveRequest(grid)}}};
  ASSERT_EQ(svc.handle("POST", "/annotations/save", ann.dump()).status, 200);
  const Json groups = {{"groups",
      {{"tip", {{"mode", "one_to_one"}, {"source", {toJson(below(grid, 0.5, 0.5))}}, {"target", {toJson(below(grid, 0.5, 0.5))}}}}}}};
  ASSERT_EQ(svc.handle("POST", "/markers/save", groups.dump()).status, 200);

  const ServiceResponse loaded = svc.handle("GET", "/annotations/load", "");
  ASSERT_EQ(loaded.status, 200);
  const Annotations back = annotationsFromJson(loaded.body);
  ASSERT_EQ(back.curves.size(), 1u);
  EXPECT_EQ(back.curves[0].name, "mid");
  ASSERT_EQ(back.markers.groups.size(), 1u);
  EXPECT_EQ(back.markers.groups[0].name, "tip");
  // The file is exactly what the pipeline reads.
  EXPECT_EQ(dumpJson(toJson(loadAnnotations(dir / "a.json"))), dumpJson(loaded.body));

  Json badFace = ann;
  badFace["curves"][0]["source_picks"][0]["face"] = 100000;
  const ServiceResponse r = svc.handle("POST", "/annotations/save", badFace.dump());
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.body["error"]["where"], "$.curves[0].source_picks[0].face");
}

TEST(Service, HttpLoopback) {
  AnnotationService svc(gridSession(scratchDir("http") / "a.json"));
  const int port = svc.bind("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  std::thread server([&] { svc.run(); });
  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(Json::parse(health->body), Json({{"ok", true}}));
  auto pick = client.Post("/pick", R"({"mesh": "source"})", "application/json");
  ASSERT_TRUE(pick);
  EXPECT_EQ(pick->status, 400);
  svc.stop();
  server.join();
}
