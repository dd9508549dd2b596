#pragma once

#include "handretarget/intrinsic.h"
#include "handretarget/mesh.h"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace hr {

using Json = nlohmann::json;

/// Rigid transform x -> rotation * x + translation.
struct RigidPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& x) const {
    return rotation * x + translation;
  }
  Vec3 applyLinear(const Vec3& v) const {
    return rotation * v;
  }
  Eigen::Isometry3d isometry() const;
};

// Field readers. `path` is the JSON path of `j`, reported in hr::Error(Schema).
const Json& field(const Json& j, const char* key, const std::string& path);
double readNumber(const Json& j, const std::string& path);
int readInt(const Json& j, const std::string& path);
std::string readString(const Json& j, const std::string& path);
Vec3 readVec3(const Json& j, const std::string& path);
Mat3 readMat3(const Json& j, const std::string& path);
SurfacePoint readSurfacePoint(const Json& j, const std::string& path);
TangentFrame readTangentFrame(const Json& j, const std::string& path);
BoxSdf readBoxSdf(const Json& j, const std::string& path);
RigidPose readRigidPose(const Json& j, const std::string& path);

Json toJson(const Vec3& v);
Json toJson(const Mat3& m);
Json toJson(const SurfacePoint& p);
Json toJson(const TangentFrame& f);
Json toJson(const BoxSdf& box);
Json toJson(const RigidPose& pose);

/// Whole-file helpers; parse errors become hr::Error(Schema).
Json readJsonFile(const std::filesystem::path& path);
void writeJsonFile(const Json& j, const std::filesystem::path& path);

/// Deterministic text form (fixed key order, shortest round-trip numbers).
std::string dumpJson(const Json& j);

/// `relative` resolved against the directory holding `file`.
std::filesystem::path resolveBeside(const std::filesystem::path& file, const std::string& relative);

} // namespace hr
