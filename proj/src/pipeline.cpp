#include "handretarget/pipeline.h"

#include "handretarget/error.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <type_traits>

namespace hr {

namespace {

using PointKey = std::pair<int, std::array<double, 3>>;

PointKey keyOf(const SurfacePoint& p) {
  return {p.face, {p.bary[0], p.bary[1], p.bary[2]}};
}

const char* toString(MarkerAggregation a) {
  return a == MarkerAggregation::Centroid ? "centroid" : "per_element";
}

Json penaltiesJson(const Penalties& p) {
  return {{"marker", p.marker},
      {"contact", p.contact},
      {"contact_distance", p.contactDistance},
      {"contact_normal", p.contactNormal},
      {"table", p.table},
      {"prior", p.prior}};
}

Json weightedJson(const ObjectiveWeights& w, const Penalties& p) {
  return {{"marker", w.marker * p.marker}, {"contact", w.contact * p.contact}, {"table", w.table * p.table}, {"prior", w.prior * p.prior}};
}

template <typename T>
void readOpt(const Json& j, const char* key, const std::string& path, T& out) {
  if (!j.contains(key)) {
    return;
  }
  const std::string p = path + "." + key;
  if constexpr (std::is_same_v<T, bool>) {
    if (!j[key].is_boolean()) {
      throw Error(ErrorKind::Schema, "expected a boolean", p);
    }
    out = j[key].get<bool>();
  } else if constexpr (std::is_same_v<T, int>) {
    out = readInt(j[key], p);
  } else {
    out = readNumber(j[key], p);
  }
}

void rejectUnknown(const Json& j, const std::set<std::string>& known, const std::string& path) {
  if (!j.is_object()) {
    throw Error(ErrorKind::Schema, "expected an object", path);
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) {
      throw Error(ErrorKind::Schema, "unknown key '" + it.key() + "'", path + "." + it.key());
    }
  }
}

} // namespace

PipelineConfig pipelineConfigFromJson(const Json& j) {
  rejectUnknown(j,
      {"weights", "solver", "e_acc", "e_acc_angular", "e_acc_linear", "e_acc_per_dof", "max_refine_iters", "lowpass_window",
          "hampel_window", "hampel_sigma", "prefilter", "pair_eps", "densify", "control_points", "knot_sweeps",
          "disable_root_prepass", "lambda_c_zero", "distance_backend"},
      "$");
  PipelineConfig c;
  if (j.contains("weights")) {
    const Json& w = j["weights"];
    rejectUnknown(w, {"marker", "contact", "contact_distance", "contact_normal", "table", "prior", "squared", "aggregation"}, "$.weights");
    readOpt(w, "marker", "$.weights", c.weights.marker);
    readOpt(w, "contact", "$.weights", c.weights.contact);
    readOpt(w, "contact_distance", "$.weights", c.weights.contactDistance);
    readOpt(w, "contact_normal", "$.weights", c.weights.contactNormal);
    readOpt(w, "table", "$.weights", c.weights.table);
    readOpt(w, "prior", "$.weights", c.weights.prior);
    readOpt(w, "squared", "$.weights", c.weights.squared);
    if (w.contains("aggregation")) {
      const std::string a = readString(w["aggregation"], "$.weights.aggregation");
      if (a == "centroid") {
        c.weights.aggregation = MarkerAggregation::Centroid;
      } else if (a == "per_element") {
        c.weights.aggregation = MarkerAggregation::PerElement;
      } else {
        throw Error(ErrorKind::Schema, "aggregation must be 'centroid' or 'per_element'", "$.weights.aggregation");
      }
    }
    try {
      validateWeights(c.weights);
    } catch (const Error& e) {
      throw Error(ErrorKind::Schema, e.what(), "$.weights");
    }
  }
  if (j.contains("solver")) {
    const Json& s = j["solver"];
    rejectUnknown(s, {"max_iterations", "relative_tolerance", "fd_step"}, "$.solver");
    readOpt(s, "max_iterations", "$.solver", c.solver.maxIterations);
    readOpt(s, "relative_tolerance", "$.solver", c.solver.relativeTolerance);
    readOpt(s, "fd_step", "$.solver", c.solver.fdStep);
    if (c.solver.maxIterations < 1 || !(c.solver.fdStep > 0.0) || !(c.solver.relativeTolerance >= 0.0)) {
      throw Error(ErrorKind::Schema, "solver settings out of range", "$.solver");
    }
  }
  RefinementConfig& r = c.refinement;
  if (j.contains("e_acc")) {
    r.eAccAngular = r.eAccLinear = readNumber(j["e_acc"], "$.e_acc");
  }
  readOpt(j, "e_acc_angular", "$", r.eAccAngular);
  readOpt(j, "e_acc_linear", "$", r.eAccLinear);
  if (j.contains("e_acc_per_dof")) {
    const Json& a = j["e_acc_per_dof"];
    if (!a.is_array()) {
      throw Error(ErrorKind::Schema, "expected an array", "$.e_acc_per_dof");
    }
    for (size_t i = 0; i < a.size(); ++i) {
      r.perDof.push_back(a[i].is_null() ? std::nan("") : readNumber(a[i], "$.e_acc_per_dof[" + std::to_string(i) + "]"));
    }
  }
  readOpt(j, "max_refine_iters", "$", r.maxIterations);
  readOpt(j, "lowpass_window", "$", r.lowpassWindow);
  readOpt(j, "hampel_window", "$", r.hampelWindow);
  readOpt(j, "hampel_sigma", "$", r.hampelSigma);
  readOpt(j, "prefilter", "$", r.prefilter);
  if (!(r.eAccAngular > 0.0) || !(r.eAccLinear > 0.0)) {
    throw Error(ErrorKind::Schema, "acceleration thresholds must be positive", "$.e_acc");
  }
  if (r.maxIterations < 1) {
    throw Error(ErrorKind::Schema, "at least one refinement iteration is required", "$.max_refine_iters");
  }
  if (r.lowpassWindow < 1 || r.hampelWindow < 1 || !(r.hampelSigma > 0.0)) {
    throw Error(ErrorKind::Schema, "filter windows must be positive", "$");
  }
  readOpt(j, "pair_eps", "$", c.pairEps);
  if (!(c.pairEps > 0.0)) {
    throw Error(ErrorKind::Schema, "pair_eps must be positive", "$.pair_eps");
  }
  readOpt(j, "densify", "$", c.densify);
  readOpt(j, "control_points", "$", c.controlPoints);
  if (c.controlPoints != 0 && c.controlPoints < 4) {
    throw Error(ErrorKind::Schema, "control_points must be 0 (default) or at least 4", "$.control_points");
  }
  readOpt(j, "knot_sweeps", "$", c.knotSweeps);
  readOpt(j, "disable_root_prepass", "$", c.disableRootPrepass);
  readOpt(j, "lambda_c_zero", "$", c.lambdaCZero);
  if (j.contains("distance_backend")) {
    c.backend = parseDistanceBackend(readString(j["distance_backend"], "$.distance_backend"));
  }
  return c;
}

Json toJson(const PipelineConfig& c) {
  const ObjectiveWeights& w = c.weights;
  Json perDof = Json::array();
  for (double v : c.refinement.perDof) {
    perDof.push_back(std::isnan(v) ? Json(nullptr) : Json(v));
  }
  return {{"weights",
              {{"marker", w.marker},
                  {"contact", w.contact},
                  {"contact_distance", w.contactDistance},
                  {"contact_normal", w.contactNormal},
                  {"table", w.table},
                  {"prior", w.prior},
                  {"squared", w.squared},
                  {"aggregation", toString(w.aggregation)}}},
      {"solver", {{"max_iterations", c.solver.maxIterations}, {"relative_tolerance", c.solver.relativeTolerance}, {"fd_step", c.solver.fdStep}}},
      {"e_acc_angular", c.refinement.eAccAngular},
      {"e_acc_linear", c.refinement.eAccLinear},
      {"e_acc_per_dof", std::move(perDof)},
      {"max_refine_iters", c.refinement.maxIterations},
      {"lowpass_window", c.refinement.lowpassWindow},
      {"hampel_window", c.refinement.hampelWindow},
      {"hampel_sigma", c.refinement.hampelSigma},
      {"prefilter", c.refinement.prefilter},
      {"pair_eps", c.pairEps},
      {"densify", c.densify},
      {"control_points", c.controlPoints},
      {"knot_sweeps", c.knotSweeps},
      {"disable_root_prepass", c.disableRootPrepass},
      {"lambda_c_zero", c.lambdaCZero},
      {"distance_backend", toString(c.backend)}};
}

ContactTransfer transferContacts(
    const MotionSequence& seq,
    const Mesh& sourceRest,
    const Mesh& target,
    const std::vector<CurveCorrespondence>& correspondences,
    DistanceBackend backend) {
  ContactTransfer out;
  out.frames.resize(seq.numFrames());
  std::map<PointKey, int> index;
  std::vector<SurfacePoint> unique;
  for (const ContactFrame& f : seq.frames) {
    for (const ContactPair& p : f.pairs) {
      if (p.paired() && index.emplace(keyOf(p.hand), static_cast<int>(unique.size())).second) {
        unique.push_back(p.hand);
      }
    }
  }
  out.summary.unique = static_cast<int>(unique.size());
  enum class Status { Discarded, Flagged, Transferred };
  std::vector<Status> status(unique.size(), Status::Discarded);
  std::vector<SurfacePoint> mapped(unique.size());
  if (!unique.empty() && !correspondences.empty()) {
    const SourceAtlas atlas(sourceRest, sourceCurves(correspondences), backend);
    const TransferResult r = transferFrame(atlas, target, correspondences, unique);
    for (const TransferredContact& c : r.contacts) {
      status[c.input] = Status::Transferred;
      mapped[c.input] = c.target;
    }
    for (int i : r.flagged) {
      status[i] = Status::Flagged;
    }
  }
  TransferSummary& s = out.summary;
  for (int i = 0; i < seq.numFrames(); ++i) {
    const auto& pairs = seq.frames[i].pairs;
    for (int k = 0; k < static_cast<int>(pairs.size()); ++k) {
      ++s.input;
      if (!pairs[k].paired()) {
        ++s.unpaired;
        continue;
      }
      const int u = index.at(keyOf(pairs[k].hand));
      switch (status[u]) {
        case Status::Discarded:
          ++s.discarded;
          break;
        case Status::Flagged:
          ++s.flagged;
          break;
        case Status::Transferred:
          ++s.transferred;
          out.frames[i].push_back({k, mapped[u], pairs[k].object});
          break;
      }
    }
  }
  return out;
}

TransferSummary substituteObjectByAtlas(
    MotionSequence& seq,
    const Mesh& handRest,
    const Mesh& oldObject,
    const Mesh& newObject,
    const std::vector<CurveCorrespondence>& correspondences,
    DistanceBackend backend) {
  validateAgainstMeshes(seq, handRest, oldObject);
  std::map<PointKey, int> index;
  std::vector<SurfacePoint> unique;
  for (const ContactFrame& f : seq.frames) {
    for (const ContactPair& p : f.pairs) {
      if (p.paired() && index.emplace(keyOf(p.object), static_cast<int>(unique.size())).second) {
        unique.push_back(p.object);
      }
    }
  }
  std::vector<int> status(unique.size(), 0); // 0 discarded, 1 flagged, 2 moved
  std::vector<SurfacePoint> mapped(unique.size());
  if (!unique.empty() && !correspondences.empty()) {
    const SourceAtlas atlas(oldObject, sourceCurves(correspondences), backend);
    const TransferResult r = transferFrame(atlas, newObject, correspondences, unique);
    for (const TransferredContact& c : r.contacts) {
      status[c.input] = 2;
      mapped[c.input] = c.target;
    }
    for (int i : r.flagged) {
      status[i] = 1;
    }
  }
  TransferSummary s;
  s.unique = static_cast<int>(unique.size());
  for (ContactFrame& f : seq.frames) {
    const Eigen::Isometry3d pose = f.objectPose.isometry();
    std::vector<ContactPair> kept;
    for (const ContactPair& p : f.pairs) {
      ++s.input;
      if (!p.paired()) {
        ++s.unpaired;
        kept.push_back(p);
        continue;
      }
      const int u = index.at(keyOf(p.object));
      if (status[u] == 0) {
        ++s.discarded;
      } else if (status[u] == 1) {
        ++s.flagged;
      } else {
        ++s.transferred;
        ContactPair q = p;
        q.object = mapped[u];
        const auto& tri = handRest.face(p.hand.face);
        Vec3 hand = Vec3::Zero();
        for (int k = 0; k < 3; ++k) {
          hand += p.hand.bary[k] * f.handVertices[tri[k]];
        }
        q.gap = (pose * positionOf(newObject, q.object) - hand).norm();
        kept.push_back(q);
      }
    }
    f.pairs = std::move(kept);
  }
  return s;
}

Json toJson(const ContactTransfer& transfer) {
  Json frames = Json::array();
  for (const auto& f : transfer.frames) {
    Json a = Json::array();
    for (const TransferredPair& p : f) {
      a.push_back({{"input", p.input}, {"hand", toJson(p.hand)}, {"object", toJson(p.object)}});
    }
    frames.push_back(std::move(a));
  }
  const TransferSummary& s = transfer.summary;
  return {{"frames", std::move(frames)},
      {"summary",
          {{"input", s.input},
              {"transferred", s.transferred},
              {"discarded", s.discarded},
              {"flagged", s.flagged},
              {"unpaired", s.unpaired},
              {"unique", s.unique}}}};
}

ContactTransfer contactTransferFromJson(const Json& j) {
  ContactTransfer t;
  const Json& frames = field(j, "frames", "$");
  if (!frames.is_array()) {
    throw Error(ErrorKind::Schema, "expected an array", "$.frames");
  }
  for (size_t i = 0; i < frames.size(); ++i) {
    const std::string fp = "$.frames[" + std::to_string(i) + "]";
    if (!frames[i].is_array()) {
      throw Error(ErrorKind::Schema, "expected an array", fp);
    }
    std::vector<TransferredPair> f;
    for (size_t k = 0; k < frames[i].size(); ++k) {
      const std::string p = fp + "[" + std::to_string(k) + "]";
      const Json& e = frames[i][k];
      f.push_back({readInt(field(e, "input", p), p + ".input"),
          readSurfacePoint(field(e, "hand", p), p + ".hand"),
          readSurfacePoint(field(e, "object", p), p + ".object")});
    }
    t.frames.push_back(std::move(f));
  }
  if (j.contains("summary")) {
    const Json& s = j["summary"];
    readOpt(s, "input", "$.summary", t.summary.input);
    readOpt(s, "transferred", "$.summary", t.summary.transferred);
    readOpt(s, "discarded", "$.summary", t.summary.discarded);
    readOpt(s, "flagged", "$.summary", t.summary.flagged);
    readOpt(s, "unpaired", "$.summary", t.summary.unpaired);
    readOpt(s, "unique", "$.summary", t.summary.unique);
  }
  return t;
}

std::vector<FrameProblem> buildFrameProblems(
    const MotionSequence& seq,
    const Mesh& sourceRest,
    const Mesh& object,
    const SkinnedHand& target,
    const MarkerSet& markers,
    const ContactTransfer& transfer,
    const ObjectiveWeights& weights) {
  if (static_cast<int>(transfer.frames.size()) != seq.numFrames()) {
    throw Error(ErrorKind::InvalidInput, "transferred contacts do not cover every frame");
  }
  const Skeleton& skel = target.skeleton();
  Eigen::VectorXd mask = Eigen::VectorXd::Ones(skel.numDofs());
  for (int d : skel.rootDofs()) {
    mask[d] = 0.0;
  }
  std::vector<FrameProblem> problems(seq.numFrames());
  for (int i = 0; i < seq.numFrames(); ++i) {
    const ContactFrame& f = seq.frames[i];
    FrameProblem& p = problems[i];
    p.hand = &target;
    p.table = seq.table;
    p.prior = skel.restPose();
    p.priorMask = mask;
    p.weights = weights;
    for (const MarkerGroup& g : markers.groups) {
      MarkerTerm term;
      term.mode = g.mode;
      term.target = g.target;
      for (const SurfacePoint& s : g.source) {
        term.source.push_back(positionWith(sourceRest, f.handVertices, s));
      }
      p.markers.push_back(std::move(term));
    }
    for (const TransferredPair& t : transfer.frames[i]) {
      ContactTarget c;
      c.hand = t.hand;
      c.point = f.objectPose.apply(positionOf(object, t.object));
      c.normal = f.objectPose.applyLinear(normalAt(object, t.object)).normalized();
      p.contacts.push_back(c);
    }
  }
  return problems;
}

Trajectory estimateInitialTrajectory(
    const std::vector<FrameProblem>& problems,
    const Skeleton& skeleton,
    const EstimateOptions& options,
    EstimateReport* report) {
  const int n = static_cast<int>(problems.size());
  const DofVector rest = skeleton.restPose();
  const std::vector<int> rootDofs = skeleton.rootDofs();
  std::vector<bool> rootMask(skeleton.numDofs(), false);
  for (int d : rootDofs) {
    rootMask[d] = true;
  }
  EstimateReport rep;
  rep.rootIterations.assign(n, 0);
  rep.iterations.assign(n, 0);
  rep.objective.assign(n, std::nan(""));
  rep.converged.assign(n, false);
  Trajectory traj;
  traj.frames.assign(n, rest);
  traj.valid.assign(n, true);

  std::vector<DofVector> roots(n, rest);
  if (options.rootPrepass) {
    DofVector seed = rest;
    for (int i = 0; i < n; ++i) {
      try {
        const SolveResult r = solveFrame(problems[i], seed, rootMask, options.solver);
        roots[i] = r.theta;
        rep.rootIterations[i] = r.iterations;
        seed = r.theta;
      } catch (const Error&) {
        roots[i] = seed;
        traj.valid[i] = false;
      }
    }
  }

  std::vector<int> order = options.order;
  if (order.empty()) {
    order.resize(n);
    std::iota(order.begin(), order.end(), 0);
  }
  if (static_cast<int>(order.size()) != n) {
    throw Error(ErrorKind::InvalidInput, "solve order must list every frame once");
  }
  DofVector previous = rest;
  for (int i : order) {
    DofVector seed = rest;
    if (options.rootPrepass) {
      for (int d : rootDofs) {
        seed[d] = roots[i][d];
      }
    } else {
      seed = previous;
    }
    try {
      const SolveResult r = solveFrame(problems[i], seed, {}, options.solver);
      previous = r.theta;
      traj.frames[i] = r.theta;
      rep.iterations[i] = r.iterations;
      rep.objective[i] = r.objective;
      rep.converged[i] = r.converged;
    } catch (const Error&) {
      traj.frames[i] = seed;
      traj.valid[i] = false;
    }
  }
  rep.failures = static_cast<int>(std::count(traj.valid.begin(), traj.valid.end(), false));
  if (report) {
    *report = rep;
  }
  return traj;
}

FrameMetrics evaluateFrame(const FrameProblem& problem, const DofVector& theta) {
  FrameMetrics m;
  const FrameEvaluator eval(problem);
  m.penalties = eval.penalties(theta);
  m.objective = combineObjective(problem.weights, m.penalties);
  const SkinnedHand& hand = *problem.hand;
  double sum = 0.0;
  int count = 0;
  for (const MarkerTerm& term : problem.markers) {
    const std::vector<Vec3> pos = evalSurfacePoints(hand, theta, term.target).positions;
    if (term.mode == MarkerMode::OneToOne) {
      for (size_t k = 0; k < pos.size(); ++k) {
        sum += (pos[k] - term.source[k]).norm();
        ++count;
      }
      continue;
    }
    Vec3 a = Vec3::Zero();
    Vec3 b = Vec3::Zero();
    for (const Vec3& p : pos) {
      a += p;
    }
    for (const Vec3& p : term.source) {
      b += p;
    }
    sum += (a / pos.size() - b / term.source.size()).norm();
    ++count;
  }
  m.markerError = count ? sum / count : 0.0;
  if (!problem.contacts.empty()) {
    std::vector<SurfacePoint> pts;
    for (const ContactTarget& c : problem.contacts) {
      pts.push_back(c.hand);
    }
    const std::vector<Vec3> pos = evalSurfacePoints(hand, theta, pts).positions;
    double d = 0.0;
    for (size_t k = 0; k < pos.size(); ++k) {
      d += (pos[k] - problem.contacts[k].point).norm();
    }
    m.contacts = static_cast<int>(pos.size());
    m.contactDistance = d / m.contacts;
  }
  return m;
}

std::vector<std::string> dofNames(const Skeleton& skeleton) {
  std::vector<std::string> out;
  for (int j = 0; j < skeleton.numJoints(); ++j) {
    for (size_t k = 0; k < skeleton.joint(j).dofs.size(); ++k) {
      out.push_back(skeleton.joint(j).name + "." + std::to_string(k));
    }
  }
  return out;
}

RetargetInputs loadRetargetInputs(
    const std::filesystem::path& motion,
    const std::filesystem::path& rig,
    const std::filesystem::path& annotations) {
  RetargetInputs in;
  in.sequence = loadMotionSequence(motion);
  if (in.sequence.handMesh.empty()) {
    throw Error(ErrorKind::Schema, "retargeting needs the source hand mesh", "$.hand_mesh");
  }
  in.sourceRest = loadMesh(resolveBeside(motion, in.sequence.handMesh));
  in.object = loadMesh(resolveBeside(motion, in.sequence.objectMesh));
  validateAgainstMeshes(in.sequence, in.sourceRest, in.object);
  in.target = loadSkinnedHand(rig);
  in.annotations = loadAnnotations(annotations);
  validateAnnotations(in.annotations, in.sourceRest, in.target.mesh());
  return in;
}

RetargetResult retarget(const RetargetInputs& inputs, const PipelineConfig& config) {
  const SkinnedHand& target = inputs.target;
  const Skeleton& skel = target.skeleton();
  MotionSequence seq = inputs.sequence;
  Json report = Json::object();
  report["config"] = toJson(config);

  bool unpaired = false;
  for (const ContactFrame& f : seq.frames) {
    for (const ContactPair& p : f.pairs) {
      unpaired = unpaired || !p.paired();
    }
  }
  if (config.densify || unpaired) {
    const DensifySummary d = densifySequence(seq, inputs.sourceRest, inputs.object, config.pairEps);
    report["densify"] = {{"input", d.input},
        {"kept", d.kept},
        {"missed", d.missed},
        {"too_far", d.tooFar},
        {"duplicate", d.duplicate},
        {"retried", d.retried}};
  }

  const std::vector<CurveCorrespondence> corr = buildCorrespondences(inputs.annotations, inputs.sourceRest, target.mesh());
  const ContactTransfer transfer = transferContacts(seq, inputs.sourceRest, target.mesh(), corr, config.backend);
  report["transfer"] = toJson(transfer)["summary"];

  ObjectiveWeights weights = config.weights;
  if (config.lambdaCZero) {
    weights.contact = 0.0;
  }
  const std::vector<FrameProblem> problems =
      buildFrameProblems(seq, inputs.sourceRest, inputs.object, target, inputs.annotations.markers, transfer, weights);

  EstimateReport est;
  const Trajectory estimate = estimateInitialTrajectory(problems, skel, {!config.disableRootPrepass, config.solver, {}}, &est);
  report["estimate"] = {{"root_prepass", !config.disableRootPrepass},
      {"root_iterations", std::accumulate(est.rootIterations.begin(), est.rootIterations.end(), 0)},
      {"iterations", std::accumulate(est.iterations.begin(), est.iterations.end(), 0)},
      {"failures", est.failures}};

  RefinementReport ref;
  const FrameResolver resolve = [&](int frame, const DofVector& seed) { return solveFrame(problems[frame], seed, {}, config.solver); };
  const Trajectory refined = refineTrajectory(estimate, skel, seq.fps, config.refinement, resolve, &ref);
  Json flagged = Json::array();
  for (const auto& f : ref.flagged) {
    flagged.push_back(f.size());
  }
  report["refinement"] = {{"iterations", ref.iterations},
      {"violations", ref.violations},
      {"flagged", std::move(flagged)},
      {"unresolved", ref.unresolved},
      {"guard_stopped", ref.guardStopped}};

  RetargetResult result;
  result.fps = seq.fps;
  result.dofNames = dofNames(skel);
  const int n = seq.numFrames();
  std::vector<double> times(n);
  for (int i = 0; i < n; ++i) {
    times[i] = i / seq.fps;
  }
  SplineFitOptions fit;
  fit.controlPoints = config.controlPoints > 0 ? config.controlPoints : defaultControlPoints(n);
  fit.minKnotGap = 1.0 / seq.fps;
  fit.knotSweeps = config.knotSweeps;
  for (int d = 0; d < skel.numDofs(); ++d) {
    result.splines.push_back(fitSpline(times, refined.dofSeries(d), refined.valid, fit));
  }
  report["spline"] = {{"control_points", fit.controlPoints}, {"knot_sweeps", fit.knotSweeps}, {"min_knot_gap", fit.minKnotGap}};

  const DofVector lo = skel.lower();
  const DofVector hi = skel.upper();
  double markerSum = 0.0;
  double contactSum = 0.0;
  int contactFrames = 0;
  Json frames = Json::array();
  for (int i = 0; i < n; ++i) {
    DofVector theta(skel.numDofs());
    for (int d = 0; d < skel.numDofs(); ++d) {
      const double v = result.splines[d].evaluate(times[i]);
      theta[d] = std::clamp(v, lo[d], hi[d]);
      if (theta[d] != v) {
        ++result.boundViolations;
      }
    }
    result.frames.push_back(theta);
    const FrameMetrics m = evaluateFrame(problems[i], theta);
    result.metrics.push_back(m);
    markerSum += m.markerError;
    if (m.contacts > 0) {
      contactSum += m.contactDistance;
      ++contactFrames;
    }
    frames.push_back({{"frame", seq.frames[i].index},
        {"valid", static_cast<bool>(refined.valid[i])},
        {"contacts", m.contacts},
        {"marker_error", m.markerError},
        {"contact_distance", m.contactDistance},
        {"penalties", penaltiesJson(m.penalties)},
        {"weighted", weightedJson(weights, m.penalties)},
        {"objective", m.objective}});
  }
  result.meanMarkerError = n ? markerSum / n : 0.0;
  result.meanContactDistance = contactFrames ? contactSum / contactFrames : 0.0;
  report["sampling"] = {{"bound_violations", result.boundViolations}};
  report["frames"] = std::move(frames);
  result.report = std::move(report);
  return result;
}

Json toJson(const RetargetResult& result) {
  Json splines = Json::array();
  for (size_t d = 0; d < result.splines.size(); ++d) {
    Json s = toJson(result.splines[d]);
    s["name"] = d < result.dofNames.size() ? result.dofNames[d] : std::to_string(d);
    splines.push_back(std::move(s));
  }
  Json frames = Json::array();
  for (const DofVector& f : result.frames) {
    frames.push_back(std::vector<double>(f.data(), f.data() + f.size()));
  }
  return {{"fps", result.fps},
      {"splines", std::move(splines)},
      {"frames", std::move(frames)},
      {"summary",
          {{"mean_marker_error", result.meanMarkerError},
              {"mean_contact_distance", result.meanContactDistance},
              {"bound_violations", result.boundViolations}}},
      {"report", result.report}};
}

RetargetResult retargetResultFromJson(const Json& j) {
  RetargetResult r;
  r.fps = readNumber(field(j, "fps", "$"), "$.fps");
  const Json& splines = field(j, "splines", "$");
  const Json& frames = field(j, "frames", "$");
  if (!splines.is_array() || !frames.is_array()) {
    throw Error(ErrorKind::Schema, "splines and frames must be arrays", "$");
  }
  for (size_t d = 0; d < splines.size(); ++d) {
    const std::string p = "$.splines[" + std::to_string(d) + "]";
    r.splines.push_back(splineFromJson(splines[d], p));
    r.dofNames.push_back(splines[d].contains("name") ? readString(splines[d]["name"], p + ".name") : std::to_string(d));
  }
  for (size_t i = 0; i < frames.size(); ++i) {
    const std::string p = "$.frames[" + std::to_string(i) + "]";
    if (!frames[i].is_array() || frames[i].size() != splines.size()) {
      throw Error(ErrorKind::Schema, "frame length does not match the DOF count", p);
    }
    DofVector v(frames[i].size());
    for (size_t d = 0; d < frames[i].size(); ++d) {
      v[d] = readNumber(frames[i][d], p + "[" + std::to_string(d) + "]");
    }
    r.frames.push_back(v);
  }
  if (j.contains("summary")) {
    readOpt(j["summary"], "mean_marker_error", "$.summary", r.meanMarkerError);
    readOpt(j["summary"], "mean_contact_distance", "$.summary", r.meanContactDistance);
    readOpt(j["summary"], "bound_violations", "$.summary", r.boundViolations);
  }
  if (j.contains("report")) {
    r.report = j["report"];
  }
  return r;
}

} // namespace hr
