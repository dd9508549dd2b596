#include "handretarget/contacts.h"
#include "handretarget/error.h"
#include "handretarget/primitives.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

using namespace hr;

namespace {

Mesh flipped(const Mesh& m) {
  std::vector<Face> faces = m.faces();
  for (Face& f : faces) {
    std::swap(f[1], f[2]);
  }
  return Mesh(m.vertices(), faces);
}

std::vector<SurfacePoint> randomPoints(const Mesh& mesh, int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> face(0, mesh.numFaces() - 1);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<SurfacePoint> out;
  for (int i = 0; i < n; ++i) {
    Vec3 b(u(rng), u(rng), u(rng));
    out.push_back({face(rng), b / b.sum()});
  }
  return out;
}

std::filesystem::path tempPath(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("hr_contacts_" + name);
}

MotionSequence smallSequence() {
  MotionSequence seq;
  seq.fps = 30.0;
  seq.objectMesh = "object.obj";
  seq.handMesh = "hand.obj";
  seq.table = {Vec3(0, 0, -1), Vec3(2, 2, 0.5), Mat3::Identity()};
  for (int i = 0; i < 3; ++i) {
    ContactFrame f;
    f.index = i * 2;
    f.objectPose.rotation = Eigen::AngleAxisd(0.1 * i, Vec3::UnitZ()).toRotationMatrix();
    f.objectPose.translation = Vec3(0.1 * i, 1.0 / 3.0, -0.25);
    f.handVertices = {Vec3(0, 0, 0), Vec3(1, 0.1 * i, 0), Vec3(0, 1, 1e-17)};
    if (i != 1) {
      f.pairs.push_back({{0, Vec3(0.2, 0.3, 0.5)}, {4, Vec3(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)}, 0.0123456789});
      f.pairs.push_back({{0, Vec3(1, 0, 0)}, {-1, Vec3::Zero()}, 0.0});
    }
    seq.frames.push_back(f);
  }
  return seq;
}

void expectSchemaError(const Json& j, const std::string& where) {
  try {
    motionFromJson(j);
    FAIL() << "expected a schema error at " << where;
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Schema);
    EXPECT_EQ(e.where(), where);
  }
}

} // namespace

TEST(Densify, ParallelSquaresPairDirectlyOpposite) {
  const Mesh a = makeGrid(4, 4, 0.25);
  const Mesh b = flipped(makeGrid(5, 5, 0.2, Vec3(0, 0, 0.01)));
  const auto contacts = randomPoints(a, 200, 7);
  DensifySummary s;
  const auto pairs = densifyPairs(contacts, a, b, 0.05, &s);
  ASSERT_EQ(pairs.size(), contacts.size());
  EXPECT_EQ(s.kept, 200);
  EXPECT_EQ(s.retried, 0);
  for (size_t i = 0; i < pairs.size(); ++i) {
    const Vec3 x = positionOf(a, contacts[i]);
    EXPECT_EQ(pairs[i].hand, contacts[i]);
    EXPECT_NEAR(pairs[i].gap, 0.01, 1e-12);
    EXPECT_LT((positionOf(b, pairs[i].object) - (x + Vec3(0, 0, 0.01))).norm(), 1e-12);
  }
}

TEST(Densify, MissIsDiscarded) {
  const Mesh a = makeGrid(2, 2, 0.5);
  const Mesh b = flipped(makeGrid(2, 2, 0.5, Vec3(5, 5, 0.01)));
  DensifySummary s;
  EXPECT_TRUE(densifyPairs(randomPoints(a, 10, 1), a, b, 0.05, &s).empty());
  EXPECT_EQ(s.missed, 10);
}

TEST(Densify, GapBeyondEpsIsDiscarded) {
  const Mesh a = makeGrid(2, 2, 0.5);
  const Mesh b = flipped(makeGrid(2, 2, 0.5, Vec3(0, 0, 0.1)));
  DensifySummary s;
  EXPECT_TRUE(densifyPairs(randomPoints(a, 10, 2), a, b, 0.05, &s).empty());
  EXPECT_EQ(s.tooFar, 10);
  EXPECT_EQ(densifyPairs(randomPoints(a, 10, 2), a, b, 0.1 + 1e-9).size(), 10u);
}

TEST(Densify, PenetratingPointTracesBackwards) {
  const Mesh a = makeGrid(4, 4, 0.25);
  const Mesh b = makeBoxMesh(Vec3(0.5, 0.5, 0.02), Vec3(0.2, 0.2, 0.05), 2);
  // Face centroids under the box.
  std::vector<SurfacePoint> contacts;
  for (int f = 0; f < a.numFaces(); ++f) {
    const Vec3 x = a.corner(f, 0) / 3 + a.corner(f, 1) / 3 + a.corner(f, 2) / 3;
    if (std::abs(x.x() - 0.5) < 0.15 && std::abs(x.y() - 0.5) < 0.15) {
      contacts.push_back({f, Vec3::Constant(1.0 / 3.0)});
    }
  }
  ASSERT_FALSE(contacts.empty());
  DensifySummary s;
  const auto pairs = densifyPairs(contacts, a, b, 0.05, &s);
  ASSERT_EQ(pairs.size(), contacts.size());
  EXPECT_EQ(s.retried, static_cast<int>(contacts.size()));
  for (const auto& p : pairs) {
    EXPECT_NEAR(p.gap, 0.03, 1e-12);
    EXPECT_NEAR(positionOf(b, p.object).z(), -0.03, 1e-12);
  }
}

TEST(Densify, EveryRetainedGapWithinEps) {
  const Mesh a = flipped(makeIcosphere(3, 1.01));
  const Mesh b = makeIcosphere(2, 1.0);
  const double eps = 0.015;
  DensifySummary s;
  const auto pairs = densifyPairs(randomPoints(a, 500, 3), a, b, eps, &s);
  EXPECT_GT(s.kept, 0);
  EXPECT_GT(s.tooFar, 0);
  EXPECT_EQ(s.input, s.kept + s.missed + s.tooFar + s.duplicate);
  for (const auto& p : pairs) {
    EXPECT_LE(p.gap, eps);
  }
}

TEST(Densify, SubdividedObjectGivesSameWorldPoints) {
  const Mesh a = flipped(makeIcosphere(3, 1.01));
  const Mesh b = makeIcosphere(2, 1.0);
  const Mesh fine = subdivide(b);
  const double eps = 0.05;
  const auto contacts = randomPoints(a, 300, 4);
  const auto coarse = densifyPairs(contacts, a, b, eps);
  const auto refined = densifyPairs(contacts, a, fine, eps);
  ASSERT_EQ(coarse.size(), refined.size());
  for (size_t i = 0; i < coarse.size(); ++i) {
    EXPECT_EQ(coarse[i].hand, refined[i].hand);
    EXPECT_LT((positionOf(b, coarse[i].object) - positionOf(fine, refined[i].object)).norm(), eps / 10);
  }
}

TEST(Densify, RepeatedPointsPairOnce) {
  const Mesh a = makeGrid(2, 2, 0.5);
  const Mesh b = flipped(makeGrid(3, 3, 0.4, Vec3(0, 0, 0.01)));
  auto contacts = randomPoints(a, 5, 5);
  contacts.push_back(contacts[2]);
  DensifySummary s;
  const auto pairs = densifyPairs(contacts, a, b, 0.05, &s);
  EXPECT_EQ(pairs.size(), 5u);
  EXPECT_EQ(s.duplicate, 1);
}

TEST(Densify, Deterministic) {
  const Mesh a = flipped(makeIcosphere(2, 1.02));
  const Mesh b = makeIcosphere(3, 1.0);
  const auto contacts = randomPoints(a, 100, 6);
  const auto p1 = densifyPairs(contacts, a, b, 0.05);
  const auto p2 = densifyPairs(contacts, a, b, 0.05);
  ASSERT_EQ(p1.size(), p2.size());
  for (size_t i = 0; i < p1.size(); ++i) {
    EXPECT_EQ(p1[i].object, p2[i].object);
    EXPECT_EQ(p1[i].gap, p2[i].gap);
  }
}

TEST(Densify, SequenceUsesObjectPose) {
  const Mesh hand = makeGrid(3, 3, 1.0 / 3.0);
  const Mesh object = flipped(makeGrid(4, 4, 0.25, Vec3(-0.5, -0.5, 0)));
  MotionSequence seq;
  seq.table = BoxSdf{};
  for (int i = 0; i < 2; ++i) {
    ContactFrame f;
    f.index = i;
    f.objectPose.translation = Vec3(0.5, 0.5, 0.02 * (i + 1));
    f.handVertices = hand.vertices();
    for (int c = 0; c < 4; ++c) {
      f.pairs.push_back({{c, Vec3(0.2, 0.3, 0.5)}});
    }
    seq.frames.push_back(f);
  }
  const DensifySummary s = densifySequence(seq, hand, object, 0.05);
  EXPECT_EQ(s.kept, 8);
  for (int i = 0; i < 2; ++i) {
    const Mesh posed = objectAtFrame(seq, object, i);
    for (const auto& p : seq.frames[i].pairs) {
      ASSERT_TRUE(p.paired());
      EXPECT_NEAR(p.gap, 0.02 * (i + 1), 1e-12);
      EXPECT_LT((positionOf(posed, p.object) - positionOf(hand, p.hand) - Vec3(0, 0, p.gap)).norm(), 1e-12);
    }
  }
}

TEST(MotionJson, RoundtripIsLossless) {
  const MotionSequence seq = smallSequence();
  const auto path = tempPath("roundtrip.json");
  saveMotionSequence(seq, path);
  const MotionSequence back = loadMotionSequence(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.fps, seq.fps);
  EXPECT_EQ(back.objectMesh, seq.objectMesh);
  EXPECT_EQ(back.handMesh, seq.handMesh);
  EXPECT_EQ(back.table.center, seq.table.center);
  EXPECT_EQ(back.table.halfExtents, seq.table.halfExtents);
  EXPECT_EQ(back.table.rotation, seq.table.rotation);
  ASSERT_EQ(back.numFrames(), seq.numFrames());
  for (int i = 0; i < seq.numFrames(); ++i) {
    const auto& a = seq.frames[i];
    const auto& b = back.frames[i];
    EXPECT_EQ(a.index, b.index);
    EXPECT_EQ(a.objectPose.rotation, b.objectPose.rotation);
    EXPECT_EQ(a.objectPose.translation, b.objectPose.translation);
    EXPECT_EQ(a.handVertices, b.handVertices);
    ASSERT_EQ(a.pairs.size(), b.pairs.size());
    for (size_t c = 0; c < a.pairs.size(); ++c) {
      EXPECT_EQ(a.pairs[c].hand, b.pairs[c].hand);
      EXPECT_EQ(a.pairs[c].object, b.pairs[c].object);
      EXPECT_EQ(a.pairs[c].gap, b.pairs[c].gap);
    }
  }
  EXPECT_EQ(dumpJson(toJson(back)), dumpJson(toJson(seq)));
}

TEST(MotionJson, TwoFramesWithoutContactsAreValid) {
  MotionSequence seq = smallSequence();
  seq.frames.resize(2);
  for (auto& f : seq.frames) {
    f.pairs.clear();
  }
  const MotionSequence back = motionFromJson(toJson(seq));
  EXPECT_EQ(back.numFrames(), 2);
  EXPECT_TRUE(back.frames[0].pairs.empty());
}

TEST(MotionJson, MismatchedVertexCountIsSchemaError) {
  Json j = toJson(smallSequence());
  j["frames"][1]["hand_vertices"].push_back(Json::array({0.0, 0.0, 0.0}));
  expectSchemaError(j, "$.frames[1].hand_vertices");
}

TEST(MotionJson, SchemaErrorsCarryFieldPaths) {
  const Json good = toJson(smallSequence());
  Json j = good;
  j.erase("fps");
  expectSchemaError(j, "$.fps");
  j = good;
  j["frames"][2]["contacts"][0]["hand"]["bary"] = Json::array({0.5, 0.6, 0.1});
  expectSchemaError(j, "$.frames[2].contacts[0].hand.bary");
  j = good;
  j["frames"][1]["idx"] = 0;
  expectSchemaError(j, "$.frames[1].idx");
  j = good;
  j["frames"].erase(1);
  j["frames"].erase(1);
  expectSchemaError(j, "$.frames");
  j = good;
  j["frames"][0]["object_pose"].erase("translation");
  expectSchemaError(j, "$.frames[0].object_pose.translation");
  j = good;
  j["table"]["half_extents"][1] = "wide";
  expectSchemaError(j, "$.table.half_extents[1]");
}

TEST(MotionJson, MeshValidationChecksFaceRange) {
  MotionSequence seq = smallSequence();
  const Mesh hand = Mesh({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)}, {Face(0, 1, 2)});
  const Mesh object = makeBoxMesh(Vec3::Zero(), Vec3::Constant(0.5));
  validateAgainstMeshes(seq, hand, object);
  seq.frames[2].pairs[0].object.face = object.numFaces();
  EXPECT_THROW(validateAgainstMeshes(seq, hand, object), Error);
}
