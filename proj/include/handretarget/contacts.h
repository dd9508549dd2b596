#pragma once

#include "handretarget/bvh.h"
#include "handretarget/serialize.h"

#include <filesystem>
#include <string>
#include <vector>

namespace hr {

/// One hand/object contact. `object.face == -1` marks a one-sided contact that
/// still needs pairing.
struct ContactPair {
  SurfacePoint hand;
  SurfacePoint object{-1, Vec3::Zero()};
  double gap = 0.0;

  bool paired() const {
    return object.face >= 0;
  }
};

struct ContactFrame {
  int index = 0;
  RigidPose objectPose;
  std::vector<Vec3> handVertices; // source hand, world frame
  std::vector<ContactPair> pairs;
};

/// Source motion. Mesh paths are stored as written; resolve them against the
/// sequence file with resolveBeside. `handMesh` supplies the source hand
/// connectivity shared by every frame's vertex positions.
struct MotionSequence {
  double fps = 30.0;
  std::string objectMesh;
  std::string handMesh;
  BoxSdf table;
  std::vector<ContactFrame> frames;

  int numFrames() const {
    return static_cast<int>(frames.size());
  }
};

struct DensifySummary {
  int input = 0;
  int kept = 0;
  int missed = 0; // no surface hit in either direction
  int tooFar = 0; // gap > eps
  int duplicate = 0; // hand or object point already used
  int retried = 0; // direction inverted after a back-face hit

  DensifySummary& operator+=(const DensifySummary& o);
};

constexpr double kDefaultPairEps = 0.5; // cm

/// Traces each point of mesh `a` along its interpolated normal until mesh `b`
/// is hit. A back-face hit means the point sits inside `b`; the trace is then
/// repeated once along the inverted normal. Both meshes must be posed in the
/// same frame. Output order follows input order.
std::vector<ContactPair> densifyPairs(
    const std::vector<SurfacePoint>& contacts,
    const Mesh& a,
    const TriangleBvh& b,
    double eps,
    DensifySummary* summary = nullptr);

std::vector<ContactPair> densifyPairs(
    const std::vector<SurfacePoint>& contacts,
    const Mesh& a,
    const Mesh& b,
    double eps,
    DensifySummary* summary = nullptr);

/// Pairs every frame of `seq` in place (hand points traced onto the posed
/// object). Already paired contacts are re-traced from their hand point.
DensifySummary densifySequence(MotionSequence& seq, const Mesh& handRest, const Mesh& object, double eps);

/// Hand mesh posed at frame i of the sequence.
Mesh handAtFrame(const MotionSequence& seq, const Mesh& handRest, int frame);
/// Object mesh moved by frame i's pose.
Mesh objectAtFrame(const MotionSequence& seq, const Mesh& object, int frame);

MotionSequence motionFromJson(const Json& j);
Json toJson(const MotionSequence& seq);
MotionSequence loadMotionSequence(const std::filesystem::path& path);
void saveMotionSequence(const MotionSequence& seq, const std::filesystem::path& path);

/// Face indices of every contact checked against the meshes, and vertex counts
/// against the hand mesh.
void validateAgainstMeshes(const MotionSequence& seq, const Mesh& handRest, const Mesh& object);

} // namespace hr
