#pragma once

#include "handretarget/pipeline.h"

#include <filesystem>
#include <vector>

namespace hr {

/// Grasp-and-lift scene: a two-finger "paddle hand" (8 DOFs) closes on a box,
/// lifts and turns it, and holds; the target is a three-finger rig (12 DOFs).
/// Lengths are in cm.
struct SyntheticOptions {
  int frames = 120;
  double fps = 30.0;
  double voxelSize = 0.5;
  int smoothingIterations = 8;
  double contactEps = kDefaultPairEps;
};

struct SyntheticScene {
  MotionSequence sequence; // paired contacts, mesh paths set for writeSyntheticScene
  SkinnedHand source;
  std::vector<DofVector> sourcePoses;
  Mesh object; // box, object-local
  SkinnedHand target;
  Annotations annotations;
};

SkinnedHand makePaddleHand(double voxelSize = 0.5, int smoothingIterations = 8);
SkinnedHand makeThreeFingerHand(double voxelSize = 0.5, int smoothingIterations = 8);

SyntheticScene makeSyntheticScene(const SyntheticOptions& options = {});

RetargetInputs toRetargetInputs(const SyntheticScene& scene);

/// Writes source_hand.obj, source_rig.json, target_hand.obj, target_rig.json,
/// box.obj, motion.json, annotations.json and config.json into `dir`.
void writeSyntheticScene(const SyntheticScene& scene, const std::filesystem::path& dir);

} // namespace hr
