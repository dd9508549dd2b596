#include "handretarget/rig.h"

#include "handretarget/error.h"

#include <cmath>

namespace hr {

namespace {

Eigen::Isometry3d dofTransform(const Dof& dof, double value) {
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  if (dof.type == DofType::Revolute) {
    t.linear() = Eigen::AngleAxisd(value, dof.axis).toRotationMatrix();
  } else {
    t.translation() = value * dof.axis;
  }
  return t;
}

Transforms composeTransforms(const Skeleton& skeleton, const DofVector& theta) {
  Transforms world(skeleton.numJoints());
  for (int j = 0; j < skeleton.numJoints(); ++j) {
    const Joint& joint = skeleton.joint(j);
    Eigen::Isometry3d t = joint.parent >= 0 ? world[joint.parent] * joint.bind : joint.bind;
    const int off = skeleton.dofOffset(j);
    for (size_t k = 0; k < joint.dofs.size(); ++k) {
      t = t * dofTransform(joint.dofs[k], theta[off + static_cast<int>(k)]);
    }
    world[j] = t;
  }
  return world;
}

Eigen::Isometry3d readIsometry(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 4) {
    throw Error(ErrorKind::Schema, "expected a 4x4 row-major matrix", path);
  }
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].size() != 4) {
      throw Error(ErrorKind::Schema, "expected a row of 4 numbers", rp);
    }
    for (int c = 0; c < 4; ++c) {
      m(r, c) = readNumber(j[r][c], rp + "[" + std::to_string(c) + "]");
    }
  }
  const Mat3 rot = m.topLeftCorner<3, 3>();
  if ((rot.transpose() * rot - Mat3::Identity()).norm() > 1e-6 || rot.determinant() < 0.0 ||
      (m.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).norm() > 1e-12) {
    throw Error(ErrorKind::Schema, "bind transform must be rigid", path);
  }
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.linear() = rot;
  t.translation() = m.topRightCorner<3, 1>();
  return t;
}

Json isometryToJson(const Eigen::Isometry3d& t) {
  const Eigen::Matrix4d m = t.matrix();
  Json rows = Json::array();
  for (int r = 0; r < 4; ++r) {
    rows.push_back(Json::array({m(r, 0), m(r, 1), m(r, 2), m(r, 3)}));
  }
  return rows;
}

MarkerMode markerModeFromString(const std::string& s, const std::string& path) {
  if (s == "one_to_one") {
    return MarkerMode::OneToOne;
  }
  if (s == "many_to_one") {
    return MarkerMode::ManyToOne;
  }
  if (s == "area_to_area") {
    return MarkerMode::AreaToArea;
  }
  throw Error(ErrorKind::Schema, "unknown marker mode '" + s + "'", path);
}

std::vector<SurfacePoint> readPoints(const Json& j, const std::string& path) {
  if (!j.is_array()) {
    throw Error(ErrorKind::Schema, "expected an array", path);
  }
  std::vector<SurfacePoint> out;
  for (size_t i = 0; i < j.size(); ++i) {
    out.push_back(readSurfacePoint(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

} // namespace

Skeleton::Skeleton(std::vector<Joint> joints) : joints_(std::move(joints)) {
  if (joints_.empty()) {
    throw Error(ErrorKind::InvalidInput, "skeleton has no joints", "$.joints");
  }
  for (int j = 0; j < numJoints(); ++j) {
    Joint& joint = joints_[j];
    const std::string path = "$.joints[" + std::to_string(j) + "]";
    if (j == 0 ? joint.parent != -1 : (joint.parent < 0 || joint.parent >= j)) {
      throw Error(ErrorKind::InvalidInput, "joints must be listed parents-first with a single root", path + ".parent");
    }
    for (int k = 0; k < j; ++k) {
      if (joints_[k].name == joint.name) {
        throw Error(ErrorKind::InvalidInput, "duplicate joint name '" + joint.name + "'", path + ".name");
      }
    }
    offsets_.push_back(numDofs_);
    for (size_t k = 0; k < joint.dofs.size(); ++k) {
      Dof& d = joint.dofs[k];
      const std::string dp = path + ".dofs[" + std::to_string(k) + "]";
      if (std::abs(d.axis.norm() - 1.0) > 1e-6) {
        throw Error(ErrorKind::InvalidInput, "DOF axis must be unit length", dp + ".axis");
      }
      d.axis.normalize();
      if (!(d.lower <= d.upper)) {
        throw Error(ErrorKind::InvalidInput, "DOF lower limit exceeds upper limit", dp);
      }
      dofJoint_.push_back(j);
      ++numDofs_;
    }
  }
}

const Dof& Skeleton::dof(int d) const {
  const int j = dofJoint_.at(d);
  return joints_[j].dofs[d - offsets_[j]];
}

int Skeleton::jointIndex(const std::string& name) const {
  for (int j = 0; j < numJoints(); ++j) {
    if (joints_[j].name == name) {
      return j;
    }
  }
  return -1;
}

DofVector Skeleton::lower() const {
  DofVector v(numDofs_);
  for (int d = 0; d < numDofs_; ++d) {
    v[d] = dof(d).lower;
  }
  return v;
}

DofVector Skeleton::upper() const {
  DofVector v(numDofs_);
  for (int d = 0; d < numDofs_; ++d) {
    v[d] = dof(d).upper;
  }
  return v;
}

std::vector<int> Skeleton::rootDofs() const {
  std::vector<int> out;
  for (int d = 0; d < numDofs_ && dofJoint_[d] == 0; ++d) {
    out.push_back(d);
  }
  return out;
}

DofVector Skeleton::restPose() const {
  return clamp(DofVector::Zero(numDofs_));
}

DofVector Skeleton::clamp(const DofVector& theta, bool* clamped) const {
  if (theta.size() != numDofs_) {
    throw Error(ErrorKind::InvalidInput, "DOF vector has " + std::to_string(theta.size()) + " entries, skeleton has " + std::to_string(numDofs_));
  }
  const DofVector out = theta.cwiseMax(lower()).cwiseMin(upper());
  if (clamped) {
    *clamped = out != theta;
  }
  return out;
}

Transforms forwardKinematics(const Skeleton& skeleton, const DofVector& theta, bool* clamped) {
  return composeTransforms(skeleton, skeleton.clamp(theta, clamped));
}

Transforms bindTransforms(const Skeleton& skeleton) {
  return composeTransforms(skeleton, DofVector::Zero(skeleton.numDofs()));
}

SkinnedHand::SkinnedHand(Mesh bind, Skeleton skeleton, std::vector<std::vector<SkinWeight>> weights)
    : mesh_(std::move(bind)), skeleton_(std::move(skeleton)), weights_(std::move(weights)) {
  if (static_cast<int>(weights_.size()) != mesh_.numVertices()) {
    throw Error(ErrorKind::InvalidInput, "one weight list per vertex required", "$.weights");
  }
  for (size_t v = 0; v < weights_.size(); ++v) {
    const std::string path = "$.weights[" + std::to_string(v) + "]";
    if (weights_[v].empty() || weights_[v].size() > kMaxInfluences) {
      throw Error(ErrorKind::InvalidInput, "each vertex needs 1 to 8 influences", path);
    }
    double sum = 0.0;
    for (const SkinWeight& w : weights_[v]) {
      if (w.joint < 0 || w.joint >= skeleton_.numJoints()) {
        throw Error(ErrorKind::InvalidInput, "weight joint index out of range", path);
      }
      if (!(w.weight >= 0.0)) {
        throw Error(ErrorKind::InvalidInput, "weights must be non-negative", path);
      }
      sum += w.weight;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw Error(ErrorKind::InvalidInput, "weights must sum to 1", path);
    }
  }
  for (const auto& t : bindTransforms(skeleton_)) {
    bindInverse_.push_back(t.inverse());
  }
}

std::vector<Eigen::Isometry3d> SkinnedHand::skinningMatrices(const Transforms& transforms) const {
  std::vector<Eigen::Isometry3d> out(transforms.size());
  for (size_t j = 0; j < transforms.size(); ++j) {
    out[j] = transforms[j] * bindInverse_[j];
  }
  return out;
}

Vec3 SkinnedHand::skinVertex(const std::vector<Eigen::Isometry3d>& skinning, int v) const {
  const Vec3& x = mesh_.vertex(v);
  Vec3 p = Vec3::Zero();
  for (const SkinWeight& w : weights_[v]) {
    p += w.weight * (skinning[w.joint] * x);
  }
  return p;
}

std::vector<Vec3> SkinnedHand::skin(const Transforms& transforms) const {
  const auto skinning = skinningMatrices(transforms);
  std::vector<Vec3> out(mesh_.numVertices());
  for (int v = 0; v < mesh_.numVertices(); ++v) {
    out[v] = skinVertex(skinning, v);
  }
  return out;
}

std::vector<Vec3> SkinnedHand::skin(const DofVector& theta) const {
  return skin(forwardKinematics(skeleton_, theta));
}

Mesh SkinnedHand::posed(const DofVector& theta) const {
  return mesh_.withVertices(skin(theta));
}

Vec3 vertexNormalWith(const Mesh& mesh, const std::vector<Vec3>& positions, int v) {
  Vec3 n = Vec3::Zero();
  for (int f : mesh.vertexFaces(v)) {
    const Face& c = mesh.face(f);
    n += (positions[c[1]] - positions[c[0]]).cross(positions[c[2]] - positions[c[0]]);
  }
  const double len = n.norm();
  return len > 0 ? Vec3(n / len) : Vec3::UnitZ();
}

Vec3 normalAtWith(const Mesh& mesh, const std::vector<Vec3>& positions, const SurfacePoint& p) {
  const Face& f = mesh.face(p.face);
  Vec3 n = Vec3::Zero();
  for (int k = 0; k < 3; ++k) {
    n += p.bary[k] * vertexNormalWith(mesh, positions, f[k]);
  }
  const double len = n.norm();
  if (len > 1e-12) {
    return n / len;
  }
  const Vec3 fn = (positions[f[1]] - positions[f[0]]).cross(positions[f[2]] - positions[f[0]]);
  return fn.norm() > 0 ? Vec3(fn.normalized()) : Vec3::UnitZ();
}

Vec3 positionWith(const Mesh& mesh, const std::vector<Vec3>& positions, const SurfacePoint& p) {
  const Face& f = mesh.face(p.face);
  return p.bary[0] * positions[f[0]] + p.bary[1] * positions[f[1]] + p.bary[2] * positions[f[2]];
}

SurfaceSamples evalSurfacePoints(const SkinnedHand& hand, const DofVector& theta, const std::vector<SurfacePoint>& points) {
  const std::vector<Vec3> pos = hand.skin(theta);
  SurfaceSamples out;
  for (const SurfacePoint& p : points) {
    if (p.face < 0 || p.face >= hand.mesh().numFaces()) {
      throw Error(ErrorKind::InvalidInput, "surface point face index out of range", "face " + std::to_string(p.face));
    }
    out.positions.push_back(positionWith(hand.mesh(), pos, p));
    out.normals.push_back(normalAtWith(hand.mesh(), pos, p));
  }
  return out;
}

const char* toString(MarkerMode mode) {
  switch (mode) {
    case MarkerMode::OneToOne:
      return "one_to_one";
    case MarkerMode::ManyToOne:
      return "many_to_one";
    case MarkerMode::AreaToArea:
      return "area_to_area";
  }
  return "?";
}

void validateMarkers(const MarkerSet& markers) {
  for (const MarkerGroup& g : markers.groups) {
    const std::string path = "$.groups." + g.name;
    if (g.source.empty() || g.target.empty()) {
      throw Error(ErrorKind::Schema, "marker group needs source and target points", path);
    }
    switch (g.mode) {
      case MarkerMode::OneToOne:
      case MarkerMode::AreaToArea:
        if (g.source.size() != g.target.size()) {
          throw Error(ErrorKind::Schema, "group requires a 1:1 correspondence", path);
        }
        break;
      case MarkerMode::ManyToOne:
        if (g.source.size() != 1 && g.target.size() != 1) {
          throw Error(ErrorKind::Schema, "many-to-one group needs a single point on one side", path);
        }
        break;
    }
  }
}

Skeleton skeletonFromJson(const Json& j, const std::string& path) {
  if (!j.is_array()) {
    throw Error(ErrorKind::Schema, "expected an array", path);
  }
  std::vector<Joint> joints;
  for (size_t i = 0; i < j.size(); ++i) {
    const std::string jp = path + "[" + std::to_string(i) + "]";
    Joint joint;
    joint.name = readString(field(j[i], "name", jp), jp + ".name");
    joint.parent = readInt(field(j[i], "parent", jp), jp + ".parent");
    joint.bind = readIsometry(field(j[i], "bind", jp), jp + ".bind");
    const Json& dofs = field(j[i], "dofs", jp);
    if (!dofs.is_array()) {
      throw Error(ErrorKind::Schema, "expected an array", jp + ".dofs");
    }
    for (size_t k = 0; k < dofs.size(); ++k) {
      const std::string dp = jp + ".dofs[" + std::to_string(k) + "]";
      Dof d;
      const std::string type = readString(field(dofs[k], "type", dp), dp + ".type");
      if (type == "revolute") {
        d.type = DofType::Revolute;
      } else if (type == "prismatic") {
        d.type = DofType::Prismatic;
      } else {
        throw Error(ErrorKind::Schema, "unknown DOF type '" + type + "'", dp + ".type");
      }
      d.axis = readVec3(field(dofs[k], "axis", dp), dp + ".axis");
      d.lower = readNumber(field(dofs[k], "lo", dp), dp + ".lo");
      d.upper = readNumber(field(dofs[k], "hi", dp), dp + ".hi");
      joint.dofs.push_back(d);
    }
    joints.push_back(std::move(joint));
  }
  try {
    return Skeleton(std::move(joints));
  } catch (const Error& e) {
    throw Error(ErrorKind::Schema, e.what(), e.where());
  }
}

Json toJson(const Skeleton& skeleton) {
  Json out = Json::array();
  for (const Joint& joint : skeleton.joints()) {
    Json dofs = Json::array();
    for (const Dof& d : joint.dofs) {
      dofs.push_back({{"type", d.type == DofType::Revolute ? "revolute" : "prismatic"}, {"axis", toJson(d.axis)}, {"lo", d.lower}, {"hi", d.upper}});
    }
    out.push_back({{"name", joint.name}, {"parent", joint.parent}, {"bind", isometryToJson(joint.bind)}, {"dofs", std::move(dofs)}});
  }
  return out;
}

SkinnedHand loadSkinnedHand(const std::filesystem::path& path) {
  const Json j = readJsonFile(path);
  const Mesh mesh = loadMesh(resolveBeside(path, readString(field(j, "mesh", "$"), "$.mesh")));
  Skeleton skeleton = skeletonFromJson(field(j, "joints", "$"));
  const Json& jw = field(j, "weights", "$");
  if (!jw.is_array()) {
    throw Error(ErrorKind::Schema, "expected an array", "$.weights");
  }
  std::vector<std::vector<SkinWeight>> weights;
  for (size_t v = 0; v < jw.size(); ++v) {
    const std::string vp = "$.weights[" + std::to_string(v) + "]";
    if (!jw[v].is_array()) {
      throw Error(ErrorKind::Schema, "expected an array of [joint, weight] pairs", vp);
    }
    std::vector<SkinWeight> list;
    for (size_t k = 0; k < jw[v].size(); ++k) {
      const std::string kp = vp + "[" + std::to_string(k) + "]";
      if (!jw[v][k].is_array() || jw[v][k].size() != 2) {
        throw Error(ErrorKind::Schema, "expected [joint, weight]", kp);
      }
      list.push_back({readInt(jw[v][k][0], kp + "[0]"), readNumber(jw[v][k][1], kp + "[1]")});
    }
    weights.push_back(std::move(list));
  }
  try {
    return SkinnedHand(mesh, std::move(skeleton), std::move(weights));
  } catch (const Error& e) {
    throw Error(ErrorKind::Schema, e.what(), e.where());
  }
}

Json skinnedHandToJson(const SkinnedHand& hand, const std::string& meshPath) {
  Json weights = Json::array();
  for (const auto& list : hand.weights()) {
    Json jl = Json::array();
    for (const SkinWeight& w : list) {
      jl.push_back(Json::array({w.joint, w.weight}));
    }
    weights.push_back(std::move(jl));
  }
  return {{"mesh", meshPath}, {"joints", toJson(hand.skeleton())}, {"weights", std::move(weights)}};
}

void saveSkinnedHand(const SkinnedHand& hand, const std::string& meshPath, const std::filesystem::path& path) {
  writeJsonFile(skinnedHandToJson(hand, meshPath), path);
}

MarkerSet markersFromJson(const Json& j) {
  const Json& groups = field(j, "groups", "$");
  if (!groups.is_object()) {
    throw Error(ErrorKind::Schema, "expected an object keyed by group name", "$.groups");
  }
  MarkerSet set;
  for (auto it = groups.begin(); it != groups.end(); ++it) {
    const std::string path = "$.groups." + it.key();
    MarkerGroup g;
    g.name = it.key();
    g.mode = markerModeFromString(readString(field(it.value(), "mode", path), path + ".mode"), path + ".mode");
    g.source = readPoints(field(it.value(), "source", path), path + ".source");
    g.target = readPoints(field(it.value(), "target", path), path + ".target");
    set.groups.push_back(std::move(g));
  }
  validateMarkers(set);
  return set;
}

Json toJson(const MarkerSet& markers) {
  Json groups = Json::object();
  for (const MarkerGroup& g : markers.groups) {
    Json src = Json::array();
    Json dst = Json::array();
    for (const auto& p : g.source) {
      src.push_back(toJson(p));
    }
    for (const auto& p : g.target) {
      dst.push_back(toJson(p));
    }
    groups[g.name] = {{"mode", toString(g.mode)}, {"source", std::move(src)}, {"target", std::move(dst)}};
  }
  return {{"groups", std::move(groups)}};
}

} // namespace hr
