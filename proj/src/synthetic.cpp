#include "handretarget/synthetic.h"

#include "handretarget/error.h"
#include "handretarget/primitives.h"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hr {

namespace {

constexpr double kLimit = 50.0;
constexpr double kBlend = 0.5; // half-width of the skinning blend around a hinge plane

// Finger column hanging below the palm (palm bottom at z = 0).
struct FingerSpec {
  std::string name;
  double xlo, xhi, ylo, yhi;
  double length;
  std::vector<double> hinges; // z of each hinge plane, top first
  double lower, upper; // limits shared by the finger's hinges
};

struct HandSpec {
  double xlo, xhi, ylo, yhi; // palm, z in [0, 2]
  std::vector<FingerSpec> fingers;
};

Dof revoluteDof(const Vec3& axis, double lo, double hi) {
  return {DofType::Revolute, axis, lo, hi};
}

Eigen::Isometry3d translationOf(const Vec3& t) {
  Eigen::Isometry3d x = Eigen::Isometry3d::Identity();
  x.translation() = t;
  return x;
}

void addBlock(std::set<VoxelCell>& cells, const Vec3& lo, const Vec3& hi, double s) {
  const auto idx = [s](double v) { return static_cast<int>(std::lround(v / s)); };
  for (int i = idx(lo.x()); i < idx(hi.x()); ++i) {
    for (int j = idx(lo.y()); j < idx(hi.y()); ++j) {
      for (int k = idx(lo.z()); k < idx(hi.z()); ++k) {
        cells.insert({i, j, k});
      }
    }
  }
}

std::vector<SkinWeight> fingerWeights(const Vec3& v, const FingerSpec& f, int firstJoint) {
  int owner = 0;
  for (size_t h = 0; h < f.hinges.size(); ++h) {
    const double p = f.hinges[h];
    const int below = firstJoint + static_cast<int>(h);
    if (v.z() < p - kBlend) {
      owner = below;
      continue;
    }
    if (v.z() <= p + kBlend) {
      const double t = (p + kBlend - v.z()) / (2.0 * kBlend);
      if (t <= 0.0) {
        return {{owner, 1.0}};
      }
      return {{owner, 1.0 - t}, {below, t}};
    }
    break;
  }
  return {{owner, 1.0}};
}

SkinnedHand buildHand(const HandSpec& spec, double voxelSize, int smoothing) {
  std::set<VoxelCell> cells;
  addBlock(cells, Vec3(spec.xlo, spec.ylo, 0.0), Vec3(spec.xhi, spec.yhi, 2.0), voxelSize);
  for (const FingerSpec& f : spec.fingers) {
    addBlock(cells, Vec3(f.xlo, f.ylo, -f.length), Vec3(f.xhi, f.yhi, 0.0), voxelSize);
  }
  const Mesh blocky = voxelSurface(cells, voxelSize);

  std::vector<Joint> joints;
  joints.push_back({"root", -1, Eigen::Isometry3d::Identity(),
      {{DofType::Prismatic, Vec3::UnitX(), -kLimit, kLimit}, {DofType::Prismatic, Vec3::UnitY(), -kLimit, kLimit},
       {DofType::Prismatic, Vec3::UnitZ(), -kLimit, kLimit},
       revoluteDof(Vec3::UnitX(), -std::numbers::pi, std::numbers::pi),
       revoluteDof(Vec3::UnitY(), -std::numbers::pi, std::numbers::pi),
       revoluteDof(Vec3::UnitZ(), -std::numbers::pi, std::numbers::pi)}});
  std::vector<int> firstJoint;
  for (const FingerSpec& f : spec.fingers) {
    firstJoint.push_back(static_cast<int>(joints.size()));
    const Vec3 base(0.5 * (f.xlo + f.xhi), 0.5 * (f.ylo + f.yhi), 0.0);
    for (size_t h = 0; h < f.hinges.size(); ++h) {
      const int parent = h == 0 ? 0 : static_cast<int>(joints.size()) - 1;
      const Vec3 offset = h == 0 ? Vec3(base.x(), base.y(), f.hinges[0]) : Vec3(0, 0, f.hinges[h] - f.hinges[h - 1]);
      const std::string name = f.hinges.size() == 1 ? f.name : f.name + (h == 0 ? "_base" : "_mid");
      joints.push_back({name, parent, translationOf(offset), {revoluteDof(Vec3::UnitY(), f.lower, f.upper)}});
    }
  }

  const double tol = 1e-9;
  std::vector<std::vector<SkinWeight>> weights;
  for (const Vec3& v : blocky.vertices()) {
    std::vector<SkinWeight> w{{0, 1.0}};
    for (size_t k = 0; k < spec.fingers.size(); ++k) {
      const FingerSpec& f = spec.fingers[k];
      if (v.x() >= f.xlo - tol && v.x() <= f.xhi + tol && v.y() >= f.ylo - tol && v.y() <= f.yhi + tol) {
        w = fingerWeights(v, f, firstJoint[k]);
        break;
      }
    }
    weights.push_back(std::move(w));
  }
  return SkinnedHand(taubinSmooth(blocky, smoothing), Skeleton(std::move(joints)), std::move(weights));
}

double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

SurfacePoint pick(const TriangleBvh& bvh, const Vec3& origin, const Vec3& dir) {
  const auto hit = bvh.raycast(origin, dir.normalized());
  if (!hit) {
    throw Error(ErrorKind::Geometry, "synthetic pick missed the hand");
  }
  return hit->point;
}

Vec3 sdfGradient(const BoxSdf& box, const Vec3& p) {
  const double h = 1e-5;
  Vec3 g;
  for (int a = 0; a < 3; ++a) {
    Vec3 e = Vec3::Zero();
    e[a] = h;
    g[a] = (boxSdf(box, p + e) - boxSdf(box, p - e)) / (2.0 * h);
  }
  return g.normalized();
}

// Geometry shared by generator and annotations (cm).
constexpr double kSourceLength = 7.0;
constexpr double kTargetLength = 7.5;
const Vec3 kBoxHalf(2.4, 3.0, 3.0);

} // namespace

SkinnedHand makePaddleHand(double voxelSize, int smoothingIterations) {
  HandSpec spec{-4.0, 4.0, -3.0, 3.0, {}};
  spec.fingers.push_back({"finger", -4.0, -2.5, -1.0, 1.0, kSourceLength, {0.0}, -0.3, 0.6});
  spec.fingers.push_back({"paddle", 2.5, 4.0, -2.5, 2.5, kSourceLength, {0.0}, -0.6, 0.3});
  return buildHand(spec, voxelSize, smoothingIterations);
}

SkinnedHand makeThreeFingerHand(double voxelSize, int smoothingIterations) {
  const double mid = -0.5 * kTargetLength;
  HandSpec spec{-4.5, 4.5, -3.5, 3.5, {}};
  spec.fingers.push_back({"thumb", -4.5, -3.0, -1.0, 1.0, kTargetLength, {0.0, mid}, -0.9, 0.4});
  spec.fingers.push_back({"index", 3.0, 4.5, -3.0, -0.5, kTargetLength, {0.0, mid}, -0.4, 0.9});
  spec.fingers.push_back({"middle", 3.0, 4.5, 0.5, 3.0, kTargetLength, {0.0, mid}, -0.4, 0.9});
  return buildHand(spec, voxelSize, smoothingIterations);
}

SyntheticScene makeSyntheticScene(const SyntheticOptions& options) {
  if (options.frames < 8 || !(options.fps > 0.0) || !(options.contactEps > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "synthetic scene needs >= 8 frames, positive fps and eps");
  }
  SyntheticScene scene;
  scene.source = makePaddleHand(options.voxelSize, options.smoothingIterations);
  scene.target = makeThreeFingerHand(options.voxelSize, options.smoothingIterations);
  scene.object = makeBoxMesh(Vec3::Zero(), kBoxHalf, 6);

  const int n = options.frames;
  const int reach = n / 3;
  const int grip = n / 2;
  const int hold = (5 * n) / 6;
  const Vec3 start(-0.5, -1.0, 18.0);
  const Vec3 grasp(0.0, 0.0, kSourceLength + 1.0);
  const Vec3 lift(6.0, 0.0, 10.0);
  const double yaw = 0.3;
  const double open = 0.4;

  const Skeleton& skel = scene.source.skeleton();
  auto phase = [](int i, int a, int b) { return smoothstep(static_cast<double>(i - a) / static_cast<double>(b - a)); };
  for (int i = 0; i < n; ++i) {
    DofVector theta = skel.restPose();
    const double s = phase(i, 0, reach);
    const double c = phase(i, reach, grip);
    const double l = phase(i, grip, hold);
    const Vec3 root = start + s * (grasp - start) + l * lift;
    theta.head<3>() = root;
    theta[5] = l * yaw;
    theta[6] = open * (1.0 - c);
    theta[7] = -open * (1.0 - c);
    scene.sourcePoses.push_back(theta);
  }

  const Eigen::Isometry3d boxRest = translationOf(Vec3(0.0, 0.0, kBoxHalf.z()));
  const Eigen::Isometry3d rootAtGrip = forwardKinematics(skel, scene.sourcePoses[grip])[0];
  MotionSequence& seq = scene.sequence;
  seq.fps = options.fps;
  seq.objectMesh = "box.obj";
  seq.handMesh = "source_hand.obj";
  seq.table = {Vec3(0.0, 0.0, -1.0), Vec3(50.0, 50.0, 1.0), Mat3::Identity()};
  const Mesh& rest = scene.source.mesh();
  for (int i = 0; i < n; ++i) {
    Eigen::Isometry3d boxPose = boxRest;
    if (i > grip) {
      boxPose = forwardKinematics(skel, scene.sourcePoses[i])[0] * rootAtGrip.inverse() * boxRest;
    }
    ContactFrame f;
    f.index = i;
    f.objectPose.rotation = boxPose.linear();
    f.objectPose.translation = boxPose.translation();
    f.handVertices = scene.source.skin(scene.sourcePoses[i]);
    const BoxSdf box{f.objectPose.translation, kBoxHalf, f.objectPose.rotation};
    for (int v = 0; v < rest.numVertices(); ++v) {
      const Vec3& p = f.handVertices[v];
      const double d = boxSdf(box, p);
      if (std::abs(d) > options.contactEps) {
        continue;
      }
      if (vertexNormalWith(rest, f.handVertices, v).dot(sdfGradient(box, p)) < -0.5) {
        f.pairs.push_back({pointAtVertex(rest, v), {-1, Vec3::Zero()}, 0.0});
      }
    }
    seq.frames.push_back(std::move(f));
  }
  densifySequence(seq, rest, scene.object, options.contactEps);
  for (ContactFrame& f : seq.frames) {
    std::erase_if(f.pairs, [](const ContactPair& p) { return !p.paired(); });
  }

  // Annotations on the rest poses (root at the origin).
  const Mesh& tgt = scene.target.mesh();
  const TriangleBvh sb(rest);
  const TriangleBvh tb(tgt);
  const double scale = kTargetLength / kSourceLength;
  const auto curve = [&](const std::string& name, double sy, double ty, double dir) {
    CurveAnnotation a;
    a.name = name;
    for (double z : {-0.5, -3.5, -6.5}) {
      a.sourcePicks.push_back(pick(sb, Vec3(0.0, sy, z), Vec3(dir, 0, 0)));
    }
    a.targetStart = pick(tb, Vec3(0.0, ty, -0.5), Vec3(dir, 0, 0));
    a.targetToward = pick(tb, Vec3(0.0, ty, -3.5 * scale), Vec3(dir, 0, 0));
    a.params.lambdaA = scale;
    return a;
  };
  scene.annotations.curves.push_back(curve("thumb", 0.0, 0.0, -1.0));
  scene.annotations.curves.push_back(curve("paddle_left", -1.25, -1.75, 1.0));
  scene.annotations.curves.push_back(curve("paddle_right", 1.25, 1.75, 1.0));

  // Groups in name order, which is the order they load back in.
  const double tipZ = -6.0;
  MarkerGroup paddleTip{"paddle_tip", MarkerMode::ManyToOne, {}, {}};
  paddleTip.source.push_back(pick(sb, Vec3(10.0, 0.0, tipZ), -Vec3::UnitX()));
  for (double y : {-1.75, 1.75}) {
    paddleTip.target.push_back(pick(tb, Vec3(10.0, y, tipZ * scale), -Vec3::UnitX()));
  }
  MarkerGroup palm{"palm", MarkerMode::OneToOne, {}, {}};
  for (const Vec3& xy : {Vec3(-3, -2, 0), Vec3(-3, 2, 0), Vec3(3, -2, 0), Vec3(3, 2, 0), Vec3(0, 0, 0)}) {
    palm.source.push_back(pick(sb, Vec3(xy.x(), xy.y(), 10.0), -Vec3::UnitZ()));
    palm.target.push_back(pick(tb, Vec3(xy.x(), xy.y(), 10.0), -Vec3::UnitZ()));
  }
  MarkerGroup thumbTip{"thumb_tip", MarkerMode::OneToOne, {}, {}};
  thumbTip.source.push_back(pick(sb, Vec3(-3.25, 10.0, tipZ), -Vec3::UnitY()));
  thumbTip.target.push_back(pick(tb, Vec3(-3.75, 10.0, tipZ * scale), -Vec3::UnitY()));
  scene.annotations.markers.groups = {paddleTip, palm, thumbTip};
  return scene;
}

RetargetInputs toRetargetInputs(const SyntheticScene& scene) {
  RetargetInputs in;
  in.sequence = scene.sequence;
  in.sourceRest = scene.source.mesh();
  in.object = scene.object;
  in.target = scene.target;
  in.annotations = scene.annotations;
  return in;
}

void writeSyntheticScene(const SyntheticScene& scene, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  saveMesh(scene.source.mesh(), dir / "source_hand.obj");
  saveSkinnedHand(scene.source, "source_hand.obj", dir / "source_rig.json");
  saveMesh(scene.target.mesh(), dir / "target_hand.obj");
  saveSkinnedHand(scene.target, "target_hand.obj", dir / "target_rig.json");
  saveMesh(scene.object, dir / "box.obj");
  MotionSequence seq = scene.sequence;
  seq.objectMesh = "box.obj";
  seq.handMesh = "source_hand.obj";
  saveMotionSequence(seq, dir / "motion.json");
  saveAnnotations(scene.annotations, dir / "annotations.json");
  writeJsonFile(toJson(PipelineConfig{}), dir / "config.json");
}

} // namespace hr
