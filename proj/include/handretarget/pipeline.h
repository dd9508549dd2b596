#pragma once

#include "handretarget/annotations.h"
#include "handretarget/contacts.h"
#include "handretarget/geodesic.h"
#include "handretarget/spline.h"
#include "handretarget/trajectory.h"

#include <filesystem>
#include <vector>

namespace hr {

struct PipelineConfig {
  ObjectiveWeights weights;
  SolverOptions solver;
  RefinementConfig refinement;
  double pairEps = kDefaultPairEps;
  bool densify = false; // re-pair every contact; unpaired contacts are always paired
  int controlPoints = 0; // per DOF; 0 picks the frame-count default
  int knotSweeps = 3;
  bool disableRootPrepass = false;
  bool lambdaCZero = false;
  DistanceBackend backend = DistanceBackend::Heat;
};

/// Every key is optional; unknown keys are schema errors.
PipelineConfig pipelineConfigFromJson(const Json& j);
Json toJson(const PipelineConfig& config);

/// One source contact carried to the target hand, still paired to its
/// object-local point.
struct TransferredPair {
  int input = -1; // index into the frame's source pairs
  SurfacePoint hand; // on the target hand
  SurfacePoint object;
};

struct TransferSummary {
  int input = 0;
  int transferred = 0;
  int discarded = 0; // owned by a curve without a target
  int flagged = 0; // boundary exit or logmap failure
  int unpaired = 0; // no object point
  int unique = 0; // distinct source hand points actually transferred
};

struct ContactTransfer {
  std::vector<std::vector<TransferredPair>> frames;
  TransferSummary summary;
};

/// Transfers every paired contact of every frame through the atlas built on
/// the canonical (rest) source hand. Each distinct source hand point is
/// transferred once and reused across frames.
ContactTransfer transferContacts(
    const MotionSequence& seq,
    const Mesh& sourceRest,
    const Mesh& target,
    const std::vector<CurveCorrespondence>& correspondences,
    DistanceBackend backend = DistanceBackend::Heat);

/// Replaces the sequence's object by carrying every object-side contact point
/// to `newObject` through an atlas built on `oldObject`. The correspondences
/// run from the old object (source side) to the new one. Pairs whose object
/// point is discarded or flagged are dropped and unpaired contacts are kept.
/// Gaps are re-measured against the posed hand. The summary counts pairs.
TransferSummary substituteObjectByAtlas(
    MotionSequence& seq,
    const Mesh& handRest,
    const Mesh& oldObject,
    const Mesh& newObject,
    const std::vector<CurveCorrespondence>& correspondences,
    DistanceBackend backend = DistanceBackend::Heat);

Json toJson(const ContactTransfer& transfer);
ContactTransfer contactTransferFromJson(const Json& j);

/// Per-frame IK problems: source markers from the frame's hand vertices,
/// contacts paired to the posed object surface, rest-pose prior without the
/// root DOFs, and the scene table.
std::vector<FrameProblem> buildFrameProblems(
    const MotionSequence& seq,
    const Mesh& sourceRest,
    const Mesh& object,
    const SkinnedHand& target,
    const MarkerSet& markers,
    const ContactTransfer& transfer,
    const ObjectiveWeights& weights);

struct EstimateOptions {
  bool rootPrepass = true;
  SolverOptions solver;
  /// Order in which pass-2 frames are solved (identity when empty).
  std::vector<int> order;
};

struct EstimateReport {
  std::vector<int> rootIterations;
  std::vector<int> iterations;
  std::vector<double> objective;
  std::vector<bool> converged;
  int failures = 0;
};

/// Pass 1 solves the root DOFs frame by frame, each seeded from the previous
/// frame's root. Pass 2 solves all DOFs of every frame independently from
/// the pass-1 root and the rest pose. Without pass 1 (ablation), frames are
/// solved in `order`, each seeded from the previous solution. Solver failures
/// mark the frame invalid.
Trajectory estimateInitialTrajectory(
    const std::vector<FrameProblem>& problems,
    const Skeleton& skeleton,
    const EstimateOptions& options,
    EstimateReport* report = nullptr);

struct FrameMetrics {
  Penalties penalties;
  double objective = 0.0;
  double markerError = 0.0; // mean distance, one entry per 1:1 pair or aggregated group
  double contactDistance = 0.0; // mean hand-object point distance
  int contacts = 0;
};

FrameMetrics evaluateFrame(const FrameProblem& problem, const DofVector& theta);

struct RetargetResult {
  double fps = 30.0;
  std::vector<std::string> dofNames;
  std::vector<DofSpline> splines;
  std::vector<DofVector> frames; // sampled splines, clamped to the limits
  std::vector<FrameMetrics> metrics;
  int boundViolations = 0; // (frame, dof) samples that needed clamping
  double meanMarkerError = 0.0;
  double meanContactDistance = 0.0; // over frames with at least one contact
  Json report;
};

struct RetargetInputs {
  MotionSequence sequence;
  Mesh sourceRest;
  Mesh object;
  SkinnedHand target;
  Annotations annotations;
};

/// Loads a motion file (with its hand and object meshes), a rig and an
/// annotation file, and cross-checks face indices.
RetargetInputs loadRetargetInputs(
    const std::filesystem::path& motion,
    const std::filesystem::path& rig,
    const std::filesystem::path& annotations);

/// densify (when needed) -> transfer -> estimate -> refine -> fit -> sample.
RetargetResult retarget(const RetargetInputs& inputs, const PipelineConfig& config);

/// Named DOF labels "joint.k".
std::vector<std::string> dofNames(const Skeleton& skeleton);

Json toJson(const RetargetResult& result);
/// Splines and sampled frames back from a result file (metrics are not read).
RetargetResult retargetResultFromJson(const Json& j);

} // namespace hr
