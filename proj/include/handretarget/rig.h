#pragma once

#include "handretarget/serialize.h"

#include <filesystem>
#include <string>
#include <vector>

namespace hr {

using DofVector = Eigen::VectorXd;
using Transforms = std::vector<Eigen::Isometry3d>;

enum class DofType { Revolute, Prismatic };

struct Dof {
  DofType type = DofType::Revolute;
  Vec3 axis = Vec3::UnitZ(); // joint-local, unit length
  double lower = 0.0;
  double upper = 0.0;
};

struct Joint {
  std::string name;
  int parent = -1;
  Eigen::Isometry3d bind = Eigen::Isometry3d::Identity(); // relative to the parent
  std::vector<Dof> dofs; // applied in declared order after `bind`
};

/// Joint tree stored parents-first: joint 0 is the root and every other
/// joint's parent has a smaller index.
class Skeleton {
 public:
  Skeleton() = default;
  explicit Skeleton(std::vector<Joint> joints);

  int numJoints() const {
    return static_cast<int>(joints_.size());
  }
  int numDofs() const {
    return numDofs_;
  }
  const Joint& joint(int j) const {
    return joints_[j];
  }
  const std::vector<Joint>& joints() const {
    return joints_;
  }
  /// Index of joint j's first DOF in a DofVector.
  int dofOffset(int j) const {
    return offsets_[j];
  }
  int dofJoint(int d) const {
    return dofJoint_[d];
  }
  const Dof& dof(int d) const;
  int jointIndex(const std::string& name) const; // -1 when absent

  DofVector lower() const;
  DofVector upper() const;
  /// DOF indices owned by the root joint.
  std::vector<int> rootDofs() const;
  /// Zero clamped into the limits.
  DofVector restPose() const;
  DofVector clamp(const DofVector& theta, bool* clamped = nullptr) const;

 private:
  std::vector<Joint> joints_;
  std::vector<int> offsets_;
  std::vector<int> dofJoint_;
  int numDofs_ = 0;
};

/// World transform of every joint: parent * bind * dof_1 * ... * dof_k.
/// Values outside the limits are clamped first (reported through `clamped`).
Transforms forwardKinematics(const Skeleton& skeleton, const DofVector& theta, bool* clamped = nullptr);

/// World transforms with every DOF at zero, limits ignored.
Transforms bindTransforms(const Skeleton& skeleton);

struct SkinWeight {
  int joint = 0;
  double weight = 0.0;
};

constexpr int kMaxInfluences = 8;

/// Bind-pose mesh driven by a skeleton through linear blend skinning.
class SkinnedHand {
 public:
  SkinnedHand() = default;
  SkinnedHand(Mesh bind, Skeleton skeleton, std::vector<std::vector<SkinWeight>> weights);

  const Mesh& mesh() const {
    return mesh_;
  }
  const Skeleton& skeleton() const {
    return skeleton_;
  }
  const std::vector<SkinWeight>& weights(int v) const {
    return weights_[v];
  }
  const std::vector<std::vector<SkinWeight>>& weights() const {
    return weights_;
  }

  /// Per-joint world transform times inverse bind transform.
  std::vector<Eigen::Isometry3d> skinningMatrices(const Transforms& transforms) const;
  Vec3 skinVertex(const std::vector<Eigen::Isometry3d>& skinning, int v) const;
  std::vector<Vec3> skin(const Transforms& transforms) const;
  std::vector<Vec3> skin(const DofVector& theta) const;
  Mesh posed(const DofVector& theta) const;

 private:
  Mesh mesh_;
  Skeleton skeleton_;
  std::vector<std::vector<SkinWeight>> weights_;
  std::vector<Eigen::Isometry3d> bindInverse_;
};

/// Area-weighted vertex normal of vertex v with `positions` replacing the
/// mesh's own (same rule as Mesh::vertexNormal).
Vec3 vertexNormalWith(const Mesh& mesh, const std::vector<Vec3>& positions, int v);
/// normalAt on a deformed copy of `mesh` without building it.
Vec3 normalAtWith(const Mesh& mesh, const std::vector<Vec3>& positions, const SurfacePoint& p);
Vec3 positionWith(const Mesh& mesh, const std::vector<Vec3>& positions, const SurfacePoint& p);

struct SurfaceSamples {
  std::vector<Vec3> positions;
  std::vector<Vec3> normals;
};

/// World positions and interpolated normals of `points` on the hand posed by theta.
SurfaceSamples evalSurfacePoints(const SkinnedHand& hand, const DofVector& theta, const std::vector<SurfacePoint>& points);

enum class MarkerMode { OneToOne, ManyToOne, AreaToArea };

const char* toString(MarkerMode mode);

/// Source markers live on the source hand, target markers on the target hand.
/// OneToOne and AreaToArea groups pair elements by index.
struct MarkerGroup {
  std::string name;
  MarkerMode mode = MarkerMode::OneToOne;
  std::vector<SurfacePoint> source;
  std::vector<SurfacePoint> target;
};

struct MarkerSet {
  std::vector<MarkerGroup> groups;

  bool empty() const {
    return groups.empty();
  }
};

void validateMarkers(const MarkerSet& markers);

Skeleton skeletonFromJson(const Json& j, const std::string& path = "$.joints");
Json toJson(const Skeleton& skeleton);

/// {"mesh": path, "joints": [...], "weights": [[[joint, w], ...], ...]}; the
/// mesh path is resolved against the rig file.
SkinnedHand loadSkinnedHand(const std::filesystem::path& path);
Json skinnedHandToJson(const SkinnedHand& hand, const std::string& meshPath);
void saveSkinnedHand(const SkinnedHand& hand, const std::string& meshPath, const std::filesystem::path& path);

/// {"groups": {name: {"mode": ..., "source": [...], "target": [...]}}}
MarkerSet markersFromJson(const Json& j);
Json toJson(const MarkerSet& markers);

} // namespace hr
