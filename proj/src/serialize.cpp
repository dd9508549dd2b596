#include "handretarget/serialize.h"

#include "handretarget/error.h"

#include <fstream>
#include <sstream>

namespace hr {

Eigen::Isometry3d RigidPose::isometry() const {
  Eigen::Isometry3d xf = Eigen::Isometry3d::Identity();
  xf.linear() = rotation;
  xf.translation() = translation;
  return xf;
}

const Json& field(const Json& j, const char* key, const std::string& path) {
  if (!j.is_object()) {
    throw Error(ErrorKind::Schema, "expected an object", path);
  }
  auto it = j.find(key);
  if (it == j.end()) {
    throw Error(ErrorKind::Schema, std::string("missing field '") + key + "'", path + "." + key);
  }
  return *it;
}

double readNumber(const Json& j, const std::string& path) {
  if (!j.is_number()) {
    throw Error(ErrorKind::Schema, "expected a number", path);
  }
  return j.get<double>();
}

int readInt(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) {
    throw Error(ErrorKind::Schema, "expected an integer", path);
  }
  return j.get<int>();
}

std::string readString(const Json& j, const std::string& path) {
  if (!j.is_string()) {
    throw Error(ErrorKind::Schema, "expected a string", path);
  }
  return j.get<std::string>();
}

Vec3 readVec3(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorKind::Schema, "expected an array of 3 numbers", path);
  }
  Vec3 v;
  for (int k = 0; k < 3; ++k) {
    v[k] = readNumber(j[k], path + "[" + std::to_string(k) + "]");
  }
  return v;
}

Mat3 readMat3(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorKind::Schema, "expected a 3x3 row-major matrix", path);
  }
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    m.row(r) = readVec3(j[r], path + "[" + std::to_string(r) + "]").transpose();
  }
  return m;
}

SurfacePoint readSurfacePoint(const Json& j, const std::string& path) {
  SurfacePoint p;
  p.face = readInt(field(j, "face", path), path + ".face");
  p.bary = readVec3(field(j, "bary", path), path + ".bary");
  if (p.face < 0) {
    throw Error(ErrorKind::Schema, "face index must be non-negative", path + ".face");
  }
  if (!isValidBary(p.bary)) {
    throw Error(ErrorKind::Schema, "barycentric weights must be non-negative and sum to 1", path + ".bary");
  }
  return p;
}

TangentFrame readTangentFrame(const Json& j, const std::string& path) {
  TangentFrame f;
  f.point = readSurfacePoint(field(j, "point", path), path + ".point");
  f.dir = readVec3(field(j, "dir", path), path + ".dir");
  if (!(f.dir.norm() > 0.0)) {
    throw Error(ErrorKind::Schema, "frame direction must be non-zero", path + ".dir");
  }
  f.dir.normalize();
  return f;
}

BoxSdf readBoxSdf(const Json& j, const std::string& path) {
  BoxSdf box;
  box.center = readVec3(field(j, "center", path), path + ".center");
  box.halfExtents = readVec3(field(j, "half_extents", path), path + ".half_extents");
  if (j.contains("rotation")) {
    box.rotation = readMat3(j["rotation"], path + ".rotation");
  }
  if (box.halfExtents.minCoeff() <= 0.0) {
    throw Error(ErrorKind::Schema, "half extents must be positive", path + ".half_extents");
  }
  return box;
}

RigidPose readRigidPose(const Json& j, const std::string& path) {
  RigidPose pose;
  pose.rotation = readMat3(field(j, "rotation", path), path + ".rotation");
  pose.translation = readVec3(field(j, "translation", path), path + ".translation");
  return pose;
}

Json toJson(const Vec3& v) {
  return Json::array({v[0], v[1], v[2]});
}

Json toJson(const Mat3& m) {
  return Json::array({toJson(Vec3(m.row(0))), toJson(Vec3(m.row(1))), toJson(Vec3(m.row(2)))});
}

Json toJson(const SurfacePoint& p) {
  return {{"face", p.face}, {"bary", toJson(p.bary)}};
}

Json toJson(const TangentFrame& f) {
  return {{"point", toJson(f.point)}, {"dir", toJson(f.dir)}};
}

Json toJson(const BoxSdf& box) {
  return {{"center", toJson(box.center)}, {"half_extents", toJson(box.halfExtents)}, {"rotation", toJson(box.rotation)}};
}

Json toJson(const RigidPose& pose) {
  return {{"rotation", toJson(pose.rotation)}, {"translation", toJson(pose.translation)}};
}

Json readJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::NotFound, "cannot open " + path.string(), path.string());
  }
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("invalid JSON: ") + e.what(), path.string());
  }
}

void writeJsonFile(const Json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorKind::NotFound, "cannot write " + path.string(), path.string());
  }
  out << dumpJson(j) << "\n";
}

std::string dumpJson(const Json& j) {
  return j.dump(1, ' ');
}

std::filesystem::path resolveBeside(const std::filesystem::path& file, const std::string& relative) {
  const std::filesystem::path p(relative);
  if (p.is_absolute()) {
    return p;
  }
  return file.parent_path() / p;
}

} // namespace hr
