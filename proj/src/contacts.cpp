#include "handretarget/contacts.h"

#include "handretarget/error.h"

#include <set>
#include <tuple>

namespace hr {

namespace {

using PointKey = std::tuple<int, double, double, double>;

PointKey keyOf(const SurfacePoint& p) {
  return {p.face, p.bary[0], p.bary[1], p.bary[2]};
}

std::string framePath(int i) {
  return "$.frames[" + std::to_string(i) + "]";
}

} // namespace

DensifySummary& DensifySummary::operator+=(const DensifySummary& o) {
  input += o.input;
  kept += o.kept;
  missed += o.missed;
  tooFar += o.tooFar;
  duplicate += o.duplicate;
  retried += o.retried;
  return *this;
}

std::vector<ContactPair> densifyPairs(
    const std::vector<SurfacePoint>& contacts,
    const Mesh& a,
    const TriangleBvh& b,
    double eps,
    DensifySummary* summary) {
  if (!(eps >= 0.0)) {
    throw Error(ErrorKind::InvalidInput, "eps must be non-negative", "eps");
  }
  DensifySummary s;
  s.input = static_cast<int>(contacts.size());
  std::set<PointKey> usedHand;
  std::set<PointKey> usedObject;
  std::vector<ContactPair> out;
  for (const SurfacePoint& c : contacts) {
    const Vec3 origin = positionOf(a, c);
    const Vec3 n = normalAt(a, c);
    std::optional<RayHit> hit = b.raycast(origin, n);
    if (hit && !hit->frontFace) {
      ++s.retried;
      hit = b.raycast(origin, -n);
    }
    if (!hit) {
      ++s.missed;
      continue;
    }
    if (hit->distance > eps) {
      ++s.tooFar;
      continue;
    }
    if (!usedHand.insert(keyOf(c)).second || !usedObject.insert(keyOf(hit->point)).second) {
      ++s.duplicate;
      continue;
    }
    out.push_back({c, hit->point, hit->distance});
  }
  s.kept = static_cast<int>(out.size());
  if (summary) {
    *summary = s;
  }
  return out;
}

std::vector<ContactPair> densifyPairs(
    const std::vector<SurfacePoint>& contacts,
    const Mesh& a,
    const Mesh& b,
    double eps,
    DensifySummary* summary) {
  const TriangleBvh bvh(b);
  return densifyPairs(contacts, a, bvh, eps, summary);
}

Mesh handAtFrame(const MotionSequence& seq, const Mesh& handRest, int frame) {
  const ContactFrame& f = seq.frames.at(frame);
  if (static_cast<int>(f.handVertices.size()) != handRest.numVertices()) {
    throw Error(ErrorKind::InvalidInput, "hand vertex count does not match the hand mesh", framePath(frame) + ".hand_vertices");
  }
  return handRest.withVertices(f.handVertices);
}

Mesh objectAtFrame(const MotionSequence& seq, const Mesh& object, int frame) {
  return object.transformed(seq.frames.at(frame).objectPose.isometry());
}

DensifySummary densifySequence(MotionSequence& seq, const Mesh& handRest, const Mesh& object, double eps) {
  DensifySummary total;
  for (int i = 0; i < seq.numFrames(); ++i) {
    ContactFrame& f = seq.frames[i];
    if (f.pairs.empty()) {
      continue;
    }
    std::vector<SurfacePoint> hand;
    hand.reserve(f.pairs.size());
    for (const auto& p : f.pairs) {
      hand.push_back(p.hand);
    }
    const Mesh h = handAtFrame(seq, handRest, i);
    const Mesh o = objectAtFrame(seq, object, i);
    DensifySummary s;
    f.pairs = densifyPairs(hand, h, o, eps, &s);
    total += s;
  }
  return total;
}

MotionSequence motionFromJson(const Json& j) {
  MotionSequence seq;
  seq.fps = readNumber(field(j, "fps", "$"), "$.fps");
  if (!(seq.fps > 0.0)) {
    throw Error(ErrorKind::Schema, "fps must be positive", "$.fps");
  }
  seq.objectMesh = readString(field(j, "object_mesh", "$"), "$.object_mesh");
  if (j.contains("hand_mesh")) {
    seq.handMesh = readString(j["hand_mesh"], "$.hand_mesh");
  }
  seq.table = readBoxSdf(field(j, "table", "$"), "$.table");
  const Json& frames = field(j, "frames", "$");
  if (!frames.is_array()) {
    throw Error(ErrorKind::Schema, "expected an array", "$.frames");
  }
  if (frames.size() < 2) {
    throw Error(ErrorKind::Schema, "a motion needs at least two frames", "$.frames");
  }
  for (size_t i = 0; i < frames.size(); ++i) {
    const std::string path = framePath(static_cast<int>(i));
    const Json& jf = frames[i];
    ContactFrame f;
    f.index = readInt(field(jf, "idx", path), path + ".idx");
    if (!seq.frames.empty() && f.index <= seq.frames.back().index) {
      throw Error(ErrorKind::Schema, "frame indices must be strictly increasing", path + ".idx");
    }
    f.objectPose = readRigidPose(field(jf, "object_pose", path), path + ".object_pose");
    const Json& verts = field(jf, "hand_vertices", path);
    if (!verts.is_array()) {
      throw Error(ErrorKind::Schema, "expected an array", path + ".hand_vertices");
    }
    f.handVertices.reserve(verts.size());
    for (size_t v = 0; v < verts.size(); ++v) {
      f.handVertices.push_back(readVec3(verts[v], path + ".hand_vertices[" + std::to_string(v) + "]"));
    }
    if (!seq.frames.empty() && f.handVertices.size() != seq.frames.front().handVertices.size()) {
      throw Error(
          ErrorKind::Schema,
          "vertex count " + std::to_string(f.handVertices.size()) + " differs from the first frame's " +
              std::to_string(seq.frames.front().handVertices.size()),
          path + ".hand_vertices");
    }
    const Json& contacts = field(jf, "contacts", path);
    if (!contacts.is_array()) {
      throw Error(ErrorKind::Schema, "expected an array", path + ".contacts");
    }
    for (size_t c = 0; c < contacts.size(); ++c) {
      const std::string cp = path + ".contacts[" + std::to_string(c) + "]";
      ContactPair pair;
      pair.hand = readSurfacePoint(field(contacts[c], "hand", cp), cp + ".hand");
      if (contacts[c].contains("object")) {
        pair.object = readSurfacePoint(contacts[c]["object"], cp + ".object");
      }
      if (contacts[c].contains("gap")) {
        pair.gap = readNumber(contacts[c]["gap"], cp + ".gap");
      }
      f.pairs.push_back(pair);
    }
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

Json toJson(const MotionSequence& seq) {
  Json frames = Json::array();
  for (const ContactFrame& f : seq.frames) {
    Json verts = Json::array();
    for (const Vec3& v : f.handVertices) {
      verts.push_back(toJson(v));
    }
    Json contacts = Json::array();
    for (const ContactPair& p : f.pairs) {
      Json c = {{"hand", toJson(p.hand)}};
      if (p.paired()) {
        c["object"] = toJson(p.object);
        c["gap"] = p.gap;
      }
      contacts.push_back(std::move(c));
    }
    frames.push_back({{"idx", f.index}, {"object_pose", toJson(f.objectPose)}, {"hand_vertices", std::move(verts)}, {"contacts", std::move(contacts)}});
  }
  Json j = {{"fps", seq.fps}, {"object_mesh", seq.objectMesh}, {"table", toJson(seq.table)}, {"frames", std::move(frames)}};
  if (!seq.handMesh.empty()) {
    j["hand_mesh"] = seq.handMesh;
  }
  return j;
}

MotionSequence loadMotionSequence(const std::filesystem::path& path) {
  return motionFromJson(readJsonFile(path));
}

void saveMotionSequence(const MotionSequence& seq, const std::filesystem::path& path) {
  writeJsonFile(toJson(seq), path);
}

void validateAgainstMeshes(const MotionSequence& seq, const Mesh& handRest, const Mesh& object) {
  for (int i = 0; i < seq.numFrames(); ++i) {
    const ContactFrame& f = seq.frames[i];
    const std::string path = framePath(i);
    if (static_cast<int>(f.handVertices.size()) != handRest.numVertices()) {
      throw Error(ErrorKind::Schema, "hand vertex count does not match the hand mesh", path + ".hand_vertices");
    }
    for (size_t c = 0; c < f.pairs.size(); ++c) {
      const std::string cp = path + ".contacts[" + std::to_string(c) + "]";
      if (f.pairs[c].hand.face >= handRest.numFaces()) {
        throw Error(ErrorKind::Schema, "hand face index out of range", cp + ".hand.face");
      }
      if (f.pairs[c].object.face >= object.numFaces()) {
        throw Error(ErrorKind::Schema, "object face index out of range", cp + ".object.face");
      }
    }
  }
}

} // namespace hr
