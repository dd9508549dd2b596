#include "handretarget/metrics.h"
#include "handretarget/primitives.h"
#include "handretarget/synthetic.h"

#include <gtest/gtest.h>

#include <cmath>

using namespace hr;

namespace {

const SyntheticScene& scene() {
  static const SyntheticScene s = makeSyntheticScene();
  return s;
}

void expectPartitionOfUnity(const SkinnedHand& hand) {
  for (int v = 0; v < hand.mesh().numVertices(); ++v) {
    double sum = 0.0;
    for (const SkinWeight& w : hand.weights(v)) {
      EXPECT_GE(w.weight, 0.0);
      sum += w.weight;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

} // namespace

TEST(Taubin, KeepsFlatPatchesAndConnectivity) {
  const Mesh grid = makeGrid(6, 6, 1.0);
  const Mesh smooth = taubinSmooth(grid, 5);
  EXPECT_EQ(smooth.faces(), grid.faces());
  for (const Vec3& v : smooth.vertices()) {
    EXPECT_NEAR(v.z(), 0.0, 1e-15);
  }
  const Mesh cube = subdivide(makeBoxMesh(Vec3::Zero(), Vec3::Constant(1.0), 4));
  const Mesh round = taubinSmooth(cube, 10);
  EXPECT_NEAR(meshVolume(round), meshVolume(cube), 0.05 * meshVolume(cube));
  for (int v = 0; v < cube.numVertices(); ++v) {
    if (cube.vertex(v).cwiseAbs().minCoeff() == 1.0) {
      EXPECT_LT(round.vertex(v).norm(), cube.vertex(v).norm() - 0.05); // corners pull in
    }
  }
}

TEST(Synthetic, Hands) {
  const SkinnedHand& src = scene().source;
  const SkinnedHand& tgt = scene().target;
  EXPECT_EQ(src.skeleton().numDofs(), 8);
  EXPECT_EQ(tgt.skeleton().numDofs(), 12);
  EXPECT_GT(src.mesh().numFaces(), 2000);
  EXPECT_LT(src.mesh().numFaces(), 4000);
  EXPECT_FALSE(src.mesh().hasBoundary());
  EXPECT_FALSE(tgt.mesh().hasBoundary());
  EXPECT_GT(meshVolume(src.mesh()), 0.0);
  expectPartitionOfUnity(src);
  expectPartitionOfUnity(tgt);
  EXPECT_TRUE(selfPenetratingVertices(src.mesh()).empty());
  EXPECT_TRUE(selfPenetratingVertices(tgt.mesh()).empty());
}

TEST(Synthetic, MotionAndContacts) {
  const MotionSequence& seq = scene().sequence;
  ASSERT_EQ(seq.numFrames(), 120);
  EXPECT_TRUE(seq.frames.front().pairs.empty());
  int contactFrames = 0;
  for (const ContactFrame& f : seq.frames) {
    contactFrames += f.pairs.empty() ? 0 : 1;
    for (const ContactPair& p : f.pairs) {
      EXPECT_TRUE(p.paired());
      EXPECT_LE(p.gap, kDefaultPairEps);
    }
  }
  EXPECT_GE(contactFrames, 60);
  EXPECT_GE(seq.frames.back().pairs.size(), 100u);

  // The box rides with the hand after the grip: its pose relative to the
  // source root stays fixed.
  const Skeleton& skel = scene().source.skeleton();
  const auto rel = [&](int i) {
    return forwardKinematics(skel, scene().sourcePoses[i])[0].inverse() * seq.frames[i].objectPose.isometry();
  };
  EXPECT_LT((rel(119).matrix() - rel(70).matrix()).norm(), 1e-9);
  EXPECT_NEAR(seq.frames[0].objectPose.translation.z(), 3.0, 1e-12);

  // The source hand never enters the box or the table.
  for (int i = 0; i < seq.numFrames(); i += 7) {
    const Mesh hand = handAtFrame(seq, scene().source.mesh(), i);
    const Mesh box = objectAtFrame(seq, scene().object, i);
    EXPECT_TRUE(penetratingVertices(hand, box).empty()) << "frame " << i;
    EXPECT_TRUE(penetratingVertices(hand, seq.table).empty()) << "frame " << i;
  }
}

TEST(Synthetic, AnnotationsTransferCleanly) {
  const SyntheticScene& s = scene();
  validateAnnotations(s.annotations, s.source.mesh(), s.target.mesh());
  ASSERT_EQ(s.annotations.curves.size(), 3u);
  const auto corr = buildCorrespondences(s.annotations, s.source.mesh(), s.target.mesh());
  for (const CurveCorrespondence& c : corr) {
    for (bool f : c.target.flagged) {
      EXPECT_FALSE(f) << c.name;
    }
  }
  MotionSequence last;
  last.frames = {s.sequence.frames.back()};
  const ContactTransfer t = transferContacts(last, s.source.mesh(), s.target.mesh(), corr);
  EXPECT_EQ(t.summary.flagged, 0);
  EXPECT_EQ(t.summary.discarded, 0);
  EXPECT_EQ(t.summary.transferred, t.summary.input);
}

TEST(Synthetic, FilesRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "hr_synthetic_files";
  std::filesystem::remove_all(dir);
  writeSyntheticScene(scene(), dir);
  const RetargetInputs loaded = loadRetargetInputs(dir / "motion.json", dir / "target_rig.json", dir / "annotations.json");
  const RetargetInputs mem = toRetargetInputs(scene());
  EXPECT_EQ(dumpJson(toJson(loaded.sequence)), dumpJson(toJson(mem.sequence)));
  EXPECT_EQ(dumpJson(toJson(loaded.annotations)), dumpJson(toJson(mem.annotations)));
  EXPECT_EQ(loaded.sourceRest.vertices(), mem.sourceRest.vertices());
  EXPECT_EQ(loaded.target.mesh().vertices(), mem.target.mesh().vertices());
  EXPECT_EQ(dumpJson(toJson(loaded.target.skeleton())), dumpJson(toJson(mem.target.skeleton())));
  const SkinnedHand rig = loadSkinnedHand(dir / "source_rig.json");
  EXPECT_EQ(rig.skin(scene().sourcePoses[90]), scene().source.skin(scene().sourcePoses[90]));
  EXPECT_NO_THROW(pipelineConfigFromJson(readJsonFile(dir / "config.json")));
}
