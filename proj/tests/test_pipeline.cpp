#include "handretarget/error.h"
#include "handretarget/pipeline.h"
#include "rig_fixtures.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace hr;
using namespace hr::testing;

namespace {

SurfacePoint pickFromAbove(const Mesh& mesh, double x, double y) {
  const TriangleBvh bvh(mesh);
  const auto hit = bvh.raycast(Vec3(x, y, 10.0), -Vec3::UnitZ());
  EXPECT_TRUE(hit.has_value());
  return hit->point;
}

// Plate resting 0.05 above the top of the chain finger.
Mesh plate() {
  return makeBoxMesh(Vec3(2.0, 0.2, 0.6), Vec3(1.6, 0.5, 0.05), 4);
}

BoxSdf farTable() {
  return {Vec3(0, 0, -50), Vec3(100, 100, 1), Mat3::Identity()};
}

DofVector rootShift(const Skeleton& skel, double dx) {
  DofVector t = skel.restPose();
  t[0] = dx;
  return t;
}

// Source and target are the same chain hand; markers sit on a few vertices.
RetargetInputs identityScene(int frames, bool withContacts) {
  RetargetInputs in;
  in.target = chainHand();
  const Mesh& mesh = in.target.mesh();
  in.sourceRest = mesh;
  in.object = plate();
  in.sequence.fps = 30.0;
  in.sequence.table = farTable();
  std::vector<SurfacePoint> contacts;
  if (withContacts) {
    for (double x = 1.0; x <= 3.2; x += 0.2) {
      contacts.push_back(pickFromAbove(mesh, x, 0.2));
      contacts.push_back(pickFromAbove(mesh, x + 0.1, 0.3));
    }
  }
  for (int i = 0; i < frames; ++i) {
    const double dx = 0.01 * i;
    DofVector theta = rootShift(in.target.skeleton(), dx);
    theta[6] = 0.02 * std::sin(0.3 * i);
    ContactFrame f;
    f.index = i;
    f.objectPose.translation = Vec3(dx, 0, 0);
    f.handVertices = in.target.skin(theta);
    for (const SurfacePoint& c : contacts) {
      f.pairs.push_back({c, {-1, Vec3::Zero()}, 0.0});
    }
    in.sequence.frames.push_back(f);
  }
  MarkerGroup tip{"tip", MarkerMode::OneToOne, {}, {}};
  for (int v : {0, mesh.numVertices() / 2, mesh.numVertices() - 1}) {
    tip.source.push_back(pointAtVertex(mesh, v));
    tip.target.push_back(pointAtVertex(mesh, v));
  }
  in.annotations.markers.groups.push_back(tip);
  CurveAnnotation curve;
  curve.name = "top";
  curve.sourcePicks = {pickFromAbove(mesh, 0.9, 0.25), pickFromAbove(mesh, 2.0, 0.25), pickFromAbove(mesh, 3.3, 0.25)};
  curve.targetStart = curve.sourcePicks[0];
  curve.targetToward = curve.sourcePicks[1];
  in.annotations.curves.push_back(curve);
  return in;
}

PipelineConfig fastConfig() {
  PipelineConfig c;
  c.pairEps = 0.2;
  c.controlPoints = 6;
  c.knotSweeps = 1;
  c.solver.maxIterations = 200;
  return c;
}

double maxDiff(const DofVector& a, const DofVector& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

} // namespace

TEST(PipelineConfig, JsonRoundtripAndUnknownKeys) {
  PipelineConfig c;
  c.weights.prior = 12.5;
  c.weights.aggregation = MarkerAggregation::PerElement;
  c.refinement.perDof = {std::nan(""), 90.0};
  c.controlPoints = 9;
  c.disableRootPrepass = true;
  const PipelineConfig back = pipelineConfigFromJson(toJson(c));
  EXPECT_EQ(dumpJson(toJson(back)), dumpJson(toJson(c)));
  EXPECT_EQ(back.weights.aggregation, MarkerAggregation::PerElement);

  const PipelineConfig d = pipelineConfigFromJson(Json::parse(R"({"e_acc": 250, "lambda_c_zero": true})"));
  EXPECT_EQ(d.refinement.eAccAngular, 250.0);
  EXPECT_EQ(d.refinement.eAccLinear, 250.0);
  EXPECT_TRUE(d.lambdaCZero);
  EXPECT_EQ(d.weights.prior, 50.0);

  try {
    pipelineConfigFromJson(Json::parse(R"({"weights": {"priour": 1}})"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Schema);
    EXPECT_EQ(e.where(), "$.weights.priour");
  }
  EXPECT_THROW(pipelineConfigFromJson(Json::parse(R"({"e_acc": -1})")), Error);
  EXPECT_THROW(pipelineConfigFromJson(Json::parse(R"({"control_points": 2})")), Error);
  EXPECT_THROW(pipelineConfigFromJson(Json::parse(R"({"weights": {"table": -1}})")), Error);
}

TEST(Annotations, JsonRoundtrip) {
  const RetargetInputs in = identityScene(2, false);
  Annotations a = in.annotations;
  CurveAnnotation drop;
  drop.name = "drop";
  drop.sourcePicks = {pointAtVertex(in.sourceRest, 3), pointAtVertex(in.sourceRest, 9)};
  drop.params = {1.3, 0.7};
  a.curves.push_back(drop);
  const Annotations back = annotationsFromJson(toJson(a));
  EXPECT_EQ(dumpJson(toJson(back)), dumpJson(toJson(a)));
  EXPECT_TRUE(back.curves[1].discarded());
  EXPECT_EQ(back.curves[1].params.lambdaA, 1.3);

  Json bad = toJson(a);
  bad["curves"][0]["source_picks"][1]["bary"] = {0.5, 0.6, 0.1};
  try {
    annotationsFromJson(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.where(), "$.curves[0].source_picks[1].bary");
  }
  Annotations far = a;
  far.curves[0].sourcePicks[0].face = in.sourceRest.numFaces();
  EXPECT_THROW(validateAnnotations(far, in.sourceRest, in.target.mesh()), Error);
}

TEST(Annotations, AxialCurveJsonRoundtrip) {
  const RetargetInputs in = identityScene(2, false);
  const AxialCurve c = buildAxialCurve(in.sourceRest, in.annotations.curves[0].sourcePicks);
  const AxialCurve back = axialCurveFromJson(toJson(c), "$");
  ASSERT_EQ(back.size(), c.size());
  EXPECT_EQ(back.segments, c.segments);
  EXPECT_EQ(back.turning, c.turning);
  EXPECT_EQ(back.picks, c.picks);
  EXPECT_EQ(back.points.back().point, c.points.back().point);
}

TEST(Transfer, IdentityKeepsContactsAndReusesPoints) {
  RetargetInputs in = identityScene(3, true);
  densifySequence(in.sequence, in.sourceRest, in.object, 0.2);
  const auto corr = buildCorrespondences(in.annotations, in.sourceRest, in.target.mesh());
  const ContactTransfer t = transferContacts(in.sequence, in.sourceRest, in.target.mesh(), corr);
  const int perFrame = static_cast<int>(in.sequence.frames[0].pairs.size());
  ASSERT_GT(perFrame, 10);
  EXPECT_EQ(t.summary.input, 3 * perFrame);
  EXPECT_EQ(t.summary.transferred + t.summary.discarded + t.summary.flagged + t.summary.unpaired, t.summary.input);
  EXPECT_LE(t.summary.unique, perFrame);
  EXPECT_EQ(t.summary.transferred, t.summary.input);
  for (const auto& frame : t.frames) {
    for (const TransferredPair& p : frame) {
      const Vec3 src = positionOf(in.sourceRest, in.sequence.frames[0].pairs[p.input].hand);
      EXPECT_LT((positionOf(in.target.mesh(), p.hand) - src).norm(), 1e-3);
    }
  }
  const ContactTransfer back = contactTransferFromJson(toJson(t));
  EXPECT_EQ(dumpJson(toJson(back)), dumpJson(toJson(t)));

  // Without a target curve every contact is discarded.
  Annotations none = in.annotations;
  none.curves[0].targetStart.reset();
  const auto corrNone = buildCorrespondences(none, in.sourceRest, in.target.mesh());
  const ContactTransfer d = transferContacts(in.sequence, in.sourceRest, in.target.mesh(), corrNone);
  EXPECT_EQ(d.summary.discarded, d.summary.input);
  for (const auto& frame : d.frames) {
    EXPECT_TRUE(frame.empty());
  }
}

TEST(SubstituteObject, AtlasStretchesAlongTheCurve) {
  RetargetInputs in = identityScene(2, true);
  const Mesh oldPlate = makeBoxMesh(Vec3(2.0, 0.2, 0.6), Vec3(1.6, 0.5, 0.05), 16);
  densifySequence(in.sequence, in.sourceRest, oldPlate, 0.2);
  std::vector<Vec3> stretched = oldPlate.vertices();
  for (Vec3& v : stretched) {
    v.x() = 2.0 + 2.0 * (v.x() - 2.0);
  }
  const Mesh newPlate(stretched, oldPlate.faces());
  const auto fromBelow = [](const Mesh& m, double x) {
    const auto hit = TriangleBvh(m).raycast(Vec3(x, 0.2, -10.0), Vec3::UnitZ());
    EXPECT_TRUE(hit.has_value());
    return hit->point;
  };
  Annotations ann;
  CurveAnnotation c;
  c.name = "underside";
  c.sourcePicks = {fromBelow(oldPlate, 0.6), fromBelow(oldPlate, 3.4)};
  c.targetStart = fromBelow(newPlate, -0.8);
  c.targetToward = fromBelow(newPlate, 2.0);
  c.params.lambdaA = 2.0;
  ann.curves.push_back(c);
  const auto corr = buildCorrespondences(ann, oldPlate, newPlate);

  const MotionSequence before = in.sequence;
  const TransferSummary s = substituteObjectByAtlas(in.sequence, in.sourceRest, oldPlate, newPlate, corr);
  ASSERT_GT(s.input, 20);
  EXPECT_EQ(s.transferred, s.input);
  ASSERT_EQ(in.sequence.frames[0].pairs.size(), before.frames[0].pairs.size());
  for (size_t k = 0; k < before.frames[0].pairs.size(); ++k) {
    const Vec3 a = positionOf(oldPlate, before.frames[0].pairs[k].object);
    const Vec3 b = positionOf(newPlate, in.sequence.frames[0].pairs[k].object);
    // Only the axis is stretched: the offset from the nearest axis point
    // (half a 0.2 edge at most) keeps its length.
    EXPECT_NEAR(b.x(), 2.0 + 2.0 * (a.x() - 2.0), 0.1 + 1e-9);
    EXPECT_NEAR(b.y(), a.y(), 0.02);
    EXPECT_NEAR(b.z(), 0.55, 1e-9);
    EXPECT_NEAR(in.sequence.frames[0].pairs[k].gap, std::hypot(b.x() - a.x(), before.frames[0].pairs[k].gap), 0.06);
  }

  Annotations none = ann;
  none.curves[0].targetStart.reset();
  MotionSequence dropped = before;
  const TransferSummary d =
      substituteObjectByAtlas(dropped, in.sourceRest, oldPlate, newPlate, buildCorrespondences(none, oldPlate, newPlate));
  EXPECT_EQ(d.discarded, d.input);
  EXPECT_TRUE(dropped.frames[1].pairs.empty());
}

TEST(Estimate, FreeSpaceRestMarkersGiveRest) {
  RetargetInputs in = identityScene(2, false);
  const Skeleton& skel = in.target.skeleton();
  for (auto& f : in.sequence.frames) {
    f.handVertices = in.sourceRest.vertices();
  }
  ContactTransfer none;
  none.frames.resize(2);
  const auto problems = buildFrameProblems(in.sequence, in.sourceRest, in.object, in.target, in.annotations.markers, none, {});
  EstimateReport rep;
  const Trajectory t = estimateInitialTrajectory(problems, skel, {}, &rep);
  for (int i = 0; i < 2; ++i) {
    EXPECT_LT(maxDiff(t.frames[i], skel.restPose()), 1e-9);
    EXPECT_TRUE(t.valid[i]);
  }
  EXPECT_EQ(rep.failures, 0);
}

TEST(Estimate, StationaryMotionGivesIdenticalFrames) {
  RetargetInputs in = identityScene(5, false);
  const Skeleton& skel = in.target.skeleton();
  DofVector pose = skel.restPose();
  pose << 0.2, -0.1, 0.05, 0.05, -0.04, 0.1, 0.3, -0.2, 0.1, 0.25;
  const auto verts = in.target.skin(pose);
  for (auto& f : in.sequence.frames) {
    f.handVertices = verts;
  }
  ContactTransfer none;
  none.frames.resize(5);
  const auto problems = buildFrameProblems(in.sequence, in.sourceRest, in.object, in.target, in.annotations.markers, none, {});
  const Trajectory t = estimateInitialTrajectory(problems, skel, {});
  for (int i = 1; i < 5; ++i) {
    EXPECT_LT(maxDiff(t.frames[i], t.frames[0]), 1e-4) << "frame " << i;
  }
}

TEST(Estimate, PassTwoIsOrderIndependent) {
  const RetargetInputs in = identityScene(6, false);
  ContactTransfer none;
  none.frames.resize(6);
  const auto problems = buildFrameProblems(in.sequence, in.sourceRest, in.object, in.target, in.annotations.markers, none, {});
  EstimateOptions forward;
  EstimateOptions shuffled;
  shuffled.order = {3, 5, 0, 4, 1, 2};
  const Trajectory a = estimateInitialTrajectory(problems, in.target.skeleton(), forward);
  const Trajectory b = estimateInitialTrajectory(problems, in.target.skeleton(), shuffled);
  for (int i = 0; i < 6; ++i) {
    EXPECT_EQ(a.frames[i], b.frames[i]);
  }
  shuffled.order = {0, 1};
  EXPECT_THROW(estimateInitialTrajectory(problems, in.target.skeleton(), shuffled), Error);
}

TEST(Estimate, SolverFailureMarksFrameInvalid) {
  const RetargetInputs in = identityScene(3, false);
  ContactTransfer none;
  none.frames.resize(3);
  auto problems = buildFrameProblems(in.sequence, in.sourceRest, in.object, in.target, in.annotations.markers, none, {});
  problems[1].markers[0].source[0] = Vec3(std::nan(""), 0, 0);
  EstimateReport rep;
  const Trajectory t = estimateInitialTrajectory(problems, in.target.skeleton(), {}, &rep);
  EXPECT_FALSE(t.valid[1]);
  EXPECT_TRUE(t.valid[0]);
  EXPECT_TRUE(t.valid[2]);
  EXPECT_EQ(rep.failures, 1);
}

TEST(Retarget, EmptyContactsTracksMarkers) {
  const RetargetInputs in = identityScene(12, false);
  const RetargetResult r = retarget(in, fastConfig());
  ASSERT_EQ(r.frames.size(), 12u);
  EXPECT_EQ(r.splines.size(), static_cast<size_t>(in.target.skeleton().numDofs()));
  EXPECT_EQ(r.meanContactDistance, 0.0);
  EXPECT_LT(r.meanMarkerError, 0.05);
  EXPECT_EQ(r.report["transfer"]["input"], 0);
}

TEST(Retarget, IdentityKeepsContactsClose) {
  const RetargetInputs in = identityScene(12, true);
  const PipelineConfig cfg = fastConfig();
  const RetargetResult r = retarget(in, cfg);
  EXPECT_GT(r.report["transfer"]["transferred"].get<int>(), 0);
  EXPECT_LT(r.meanContactDistance, 2 * cfg.pairEps);
  for (const FrameMetrics& m : r.metrics) {
    EXPECT_GT(m.contacts, 0);
  }
  const Skeleton& skel = in.target.skeleton();
  for (const DofVector& f : r.frames) {
    EXPECT_TRUE((f.array() >= skel.lower().array()).all());
    EXPECT_TRUE((f.array() <= skel.upper().array()).all());
  }
}

TEST(Retarget, DeterministicOutput) {
  const RetargetInputs in = identityScene(10, true);
  const std::string a = dumpJson(toJson(retarget(in, fastConfig())));
  const std::string b = dumpJson(toJson(retarget(in, fastConfig())));
  EXPECT_EQ(a, b);
  const RetargetResult back = retargetResultFromJson(Json::parse(a));
  EXPECT_EQ(dumpJson(toJson(back)), a);
}

TEST(Retarget, LambdaCZeroReportsZeroContactTerm) {
  const RetargetInputs in = identityScene(10, true);
  PipelineConfig cfg = fastConfig();
  cfg.lambdaCZero = true;
  const RetargetResult r = retarget(in, cfg);
  for (const Json& f : r.report["frames"]) {
    EXPECT_EQ(f["weighted"]["contact"].get<double>(), 0.0);
  }
}
