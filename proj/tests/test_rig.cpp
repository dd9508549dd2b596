#include "handretarget/error.h"
#include "handretarget/primitives.h"
#include "handretarget/rig.h"
#include "rig_fixtures.h"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace hr;
using namespace hr::testing;

namespace {

constexpr double kPi = std::numbers::pi;

// Rodrigues matrix, written out independently of Eigen's AngleAxis.
Eigen::Matrix4d oracleDof(const Dof& d, double v) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  if (d.type == DofType::Prismatic) {
    m.topRightCorner<3, 1>() = v * d.axis;
    return m;
  }
  Mat3 k;
  k << 0, -d.axis.z(), d.axis.y(), d.axis.z(), 0, -d.axis.x(), -d.axis.y(), d.axis.x(), 0;
  m.topLeftCorner<3, 3>() = Mat3::Identity() + std::sin(v) * k + (1 - std::cos(v)) * k * k;
  return m;
}

} // namespace

TEST(ForwardKinematics, ZeroPoseGivesBindTransforms) {
  const Skeleton skel = chainSkeleton();
  const Transforms fk = forwardKinematics(skel, DofVector::Zero(skel.numDofs()));
  const Transforms bind = bindTransforms(skel);
  for (int j = 0; j < skel.numJoints(); ++j) {
    EXPECT_EQ(fk[j].matrix(), bind[j].matrix());
  }
  EXPECT_LT((fk[3].translation() - Vec3(2.6, 0.2, 0.3)).norm(), 1e-15);
}

TEST(ForwardKinematics, QuarterTurnMapsXToY) {
  const Skeleton skel(std::vector<Joint>{{"root", -1, Eigen::Isometry3d::Identity(), {revolute(Vec3::UnitZ())}},
      {"child", 0, translation(Vec3(1, 0, 0)), {}}});
  DofVector t(1);
  t << kPi / 2;
  const Transforms fk = forwardKinematics(skel, t);
  EXPECT_LT((fk[1].linear() * Vec3::UnitX() - Vec3::UnitY()).norm(), 1e-15);
  EXPECT_LT((fk[1].translation() - Vec3::UnitY()).norm(), 1e-15);
}

TEST(ForwardKinematics, MatchesMatrixProductOracle) {
  const Skeleton skel = chainSkeleton();
  std::mt19937 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const DofVector t = randomPose(skel, rng);
    const Transforms fk = forwardKinematics(skel, t);
    std::vector<Eigen::Matrix4d> world;
    int d = 0;
    for (const Joint& joint : skel.joints()) {
      Eigen::Matrix4d m = joint.bind.matrix();
      if (joint.parent >= 0) {
        m = world[joint.parent] * m;
      }
      for (const Dof& dof : joint.dofs) {
        m = m * oracleDof(dof, t[d++]);
      }
      world.push_back(m);
    }
    for (int j = 0; j < skel.numJoints(); ++j) {
      EXPECT_LT((fk[j].matrix() - world[j]).norm(), 1e-10);
    }
  }
}

TEST(ForwardKinematics, OutOfRangeValuesAreClamped) {
  const Skeleton skel = chainSkeleton();
  DofVector t = DofVector::Zero(skel.numDofs());
  t[6] = 3.0;
  bool clamped = false;
  const Transforms fk = forwardKinematics(skel, t, &clamped);
  EXPECT_TRUE(clamped);
  DofVector limit = t;
  limit[6] = 1.5;
  const Transforms ref = forwardKinematics(skel, limit, &clamped);
  EXPECT_FALSE(clamped);
  EXPECT_EQ(fk[3].matrix(), ref[3].matrix());
}

TEST(ForwardKinematics, PointJacobianIsRichardsonConsistent) {
  const SkinnedHand hand = chainHand();
  const Skeleton& skel = hand.skeleton();
  std::mt19937 rng(3);
  const std::vector<SurfacePoint> pts = {{5, Vec3(0.2, 0.3, 0.5)}, {hand.mesh().numFaces() - 7, Vec3(0.6, 0.2, 0.2)}};
  for (int trial = 0; trial < 5; ++trial) {
    const DofVector t = randomPose(skel, rng) * 0.8;
    for (int d = 0; d < skel.numDofs(); ++d) {
      auto central = [&](double h) {
        DofVector p = t, m = t;
        p[d] += h;
        m[d] -= h;
        const auto a = evalSurfacePoints(hand, p, pts);
        const auto b = evalSurfacePoints(hand, m, pts);
        Eigen::VectorXd g(6);
        g << (a.positions[0] - b.positions[0]) / (2 * h), (a.positions[1] - b.positions[1]) / (2 * h);
        return g;
      };
      const Eigen::VectorXd g1 = central(1e-4);
      const Eigen::VectorXd g2 = central(5e-5);
      const double scale = std::max(g2.norm(), 1e-8);
      EXPECT_LT((g1 - g2).norm() / scale, 1e-4) << "dof " << d;
    }
  }
}

TEST(Skeleton, RejectsMalformedTrees) {
  EXPECT_THROW(Skeleton(std::vector<Joint>{}), Error);
  EXPECT_THROW(Skeleton(std::vector<Joint>{{"a", -1, {}, {}}, {"b", 2, {}, {}}, {"c", 1, {}, {}}}), Error);
  EXPECT_THROW(Skeleton(std::vector<Joint>{{"a", -1, {}, {}}, {"b", -1, {}, {}}}), Error);
  EXPECT_THROW(Skeleton(std::vector<Joint>{{"a", -1, {}, {{DofType::Revolute, Vec3(1, 1, 0), -1, 1}}}}), Error);
  EXPECT_THROW(Skeleton(std::vector<Joint>{{"a", -1, {}, {{DofType::Revolute, Vec3::UnitX(), 1, -1}}}}), Error);
  EXPECT_THROW(Skeleton(std::vector<Joint>{{"a", -1, {}, {}}, {"a", 0, {}, {}}}), Error);
}

TEST(Skeleton, DofBookkeeping) {
  const Skeleton skel = chainSkeleton();
  EXPECT_EQ(skel.numDofs(), 10);
  EXPECT_EQ(skel.rootDofs(), (std::vector<int>{0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(skel.dofOffset(2), 7);
  EXPECT_EQ(skel.dofJoint(8), 2);
  EXPECT_EQ(skel.jointIndex("c"), 3);
  EXPECT_EQ(skel.jointIndex("missing"), -1);
}

TEST(Skinning, ZeroPoseGivesBindMesh) {
  const SkinnedHand hand = chainHand();
  const auto v = hand.skin(DofVector::Zero(hand.skeleton().numDofs()));
  for (int i = 0; i < hand.mesh().numVertices(); ++i) {
    EXPECT_LT((v[i] - hand.mesh().vertex(i)).norm(), 1e-14);
  }
}

TEST(Skinning, RigidRootMotionMovesEveryVertexRigidly) {
  const SkinnedHand hand = chainHand();
  DofVector t = DofVector::Zero(hand.skeleton().numDofs());
  t.head<6>() << 0.3, -1.2, 0.5, 0.4, -0.7, 1.1;
  const Transforms fk = forwardKinematics(hand.skeleton(), t);
  const Eigen::Isometry3d rigid = fk[0] * bindTransforms(hand.skeleton())[0].inverse();
  const auto v = hand.skin(fk);
  for (int i = 0; i < hand.mesh().numVertices(); ++i) {
    EXPECT_LT((v[i] - rigid * hand.mesh().vertex(i)).norm(), 1e-12);
  }
}

TEST(Skinning, HalfWeightFollowsHalfTranslation) {
  const Mesh tri({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)}, {Face(0, 1, 2)});
  const Skeleton skel(std::vector<Joint>{{"root", -1, Eigen::Isometry3d::Identity(), {}},
      {"slide", 0, Eigen::Isometry3d::Identity(), {prismatic(Vec3(1, 2, 2))}}});
  const SkinnedHand hand(tri, skel, {{{0, 0.5}, {1, 0.5}}, {{0, 1.0}}, {{1, 1.0}}});
  DofVector t(1);
  t << 0.9;
  const Vec3 d = 0.9 * Vec3(1, 2, 2).normalized();
  const auto v = hand.skin(t);
  EXPECT_LT((v[0] - d / 2).norm(), 1e-15);
  EXPECT_LT((v[1] - tri.vertex(1)).norm(), 1e-15);
  EXPECT_LT((v[2] - tri.vertex(2) - d).norm(), 1e-15);
}

TEST(Skinning, RejectsBadWeights) {
  const Mesh tri({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)}, {Face(0, 1, 2)});
  const Skeleton skel(std::vector<Joint>{{"root", -1, Eigen::Isometry3d::Identity(), {}}});
  EXPECT_THROW(SkinnedHand(tri, skel, {{{0, 1.0}}, {{0, 1.0}}}), Error);
  EXPECT_THROW(SkinnedHand(tri, skel, {{{0, 0.9}}, {{0, 1.0}}, {{0, 1.0}}}), Error);
  EXPECT_THROW(SkinnedHand(tri, skel, {{{1, 1.0}}, {{0, 1.0}}, {{0, 1.0}}}), Error);
  EXPECT_THROW(SkinnedHand(tri, skel, {{{0, 1.5}, {0, -0.5}}, {{0, 1.0}}, {{0, 1.0}}}), Error);
}

TEST(SurfaceEval, ZeroPoseMatchesBindMesh) {
  const SkinnedHand hand = chainHand();
  const Mesh& m = hand.mesh();
  const std::vector<SurfacePoint> pts = {{3, Vec3(1, 0, 0)}, {17, Vec3::Constant(1.0 / 3.0)}, {40, Vec3(0.5, 0.5, 0)}};
  const auto s = evalSurfacePoints(hand, DofVector::Zero(hand.skeleton().numDofs()), pts);
  for (size_t i = 0; i < pts.size(); ++i) {
    EXPECT_LT((s.positions[i] - positionOf(m, pts[i])).norm(), 1e-14);
    EXPECT_LT((s.normals[i] - normalAt(m, pts[i])).norm(), 1e-12);
  }
}

TEST(SurfaceEval, NormalsFollowDeformedFaces) {
  const SkinnedHand hand = chainHand();
  std::mt19937 rng(5);
  const DofVector t = randomPose(hand.skeleton(), rng);
  const Mesh posed = hand.posed(t);
  const std::vector<SurfacePoint> pts = {{8, Vec3(0.1, 0.2, 0.7)}, {120, Vec3(0.3, 0.3, 0.4)}};
  const auto s = evalSurfacePoints(hand, t, pts);
  for (size_t i = 0; i < pts.size(); ++i) {
    EXPECT_LT((s.positions[i] - positionOf(posed, pts[i])).norm(), 1e-12);
    EXPECT_LT((s.normals[i] - normalAt(posed, pts[i])).norm(), 1e-12);
  }
}

TEST(RigJson, SkinnedHandRoundtrip) {
  const SkinnedHand hand = chainHand();
  const auto dir = std::filesystem::temp_directory_path() / "hr_rig_roundtrip";
  std::filesystem::create_directories(dir);
  saveMesh(hand.mesh(), dir / "finger.obj");
  saveSkinnedHand(hand, "finger.obj", dir / "rig.json");
  const SkinnedHand back = loadSkinnedHand(dir / "rig.json");
  std::filesystem::remove_all(dir);
  ASSERT_EQ(back.skeleton().numDofs(), hand.skeleton().numDofs());
  ASSERT_EQ(back.mesh().numVertices(), hand.mesh().numVertices());
  std::mt19937 rng(9);
  const DofVector t = randomPose(hand.skeleton(), rng);
  const auto a = hand.skin(t);
  const auto b = back.skin(t);
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_LT((a[i] - b[i]).norm(), 1e-12);
  }
}

TEST(RigJson, SchemaErrorsCarryPaths) {
  Json j = toJson(chainSkeleton());
  j[2]["dofs"][0]["type"] = "screw";
  try {
    skeletonFromJson(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Schema);
    EXPECT_EQ(e.where(), "$.joints[2].dofs[0].type");
  }
  j = toJson(chainSkeleton());
  j[1]["bind"][0][1] = 0.5;
  try {
    skeletonFromJson(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.where(), "$.joints[1].bind");
  }
}

TEST(Markers, JsonRoundtripAndValidation) {
  MarkerSet set;
  set.groups.push_back({"index_tip", MarkerMode::OneToOne, {{1, Vec3(1, 0, 0)}}, {{2, Vec3(0, 1, 0)}}});
  set.groups.push_back({"palm", MarkerMode::AreaToArea, {{1, Vec3(1, 0, 0)}, {3, Vec3(0.5, 0.5, 0)}}, {{2, Vec3(0, 1, 0)}, {4, Vec3(0, 0, 1)}}});
  set.groups.push_back({"thumb", MarkerMode::ManyToOne, {{1, Vec3(1, 0, 0)}}, {{2, Vec3(0, 1, 0)}, {4, Vec3(0, 0, 1)}, {5, Vec3(0, 0, 1)}}});
  const MarkerSet back = markersFromJson(toJson(set));
  ASSERT_EQ(back.groups.size(), 3u);
  for (size_t g = 0; g < 3; ++g) {
    EXPECT_EQ(back.groups[g].name, set.groups[g].name);
    EXPECT_EQ(back.groups[g].mode, set.groups[g].mode);
    EXPECT_EQ(back.groups[g].source, set.groups[g].source);
    EXPECT_EQ(back.groups[g].target, set.groups[g].target);
  }
  Json bad = toJson(set);
  bad["groups"]["palm"]["target"].erase(1);
  EXPECT_THROW(markersFromJson(bad), Error);
  bad = toJson(set);
  bad["groups"]["palm"]["mode"] = "loose";
  EXPECT_THROW(markersFromJson(bad), Error);
}
