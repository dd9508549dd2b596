// Command-line front end: densify, transfer, retarget, metrics,
// substitute-object, serve and synth.

#include "handretarget/error.h"
#include "handretarget/metrics.h"
#include "handretarget/pipeline.h"
#include "handretarget/service.h"
#include "handretarget/synthetic.h"

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace hr;

namespace {

AnnotationService* g_service = nullptr;

void onSignal(int) {
  if (g_service) {
    g_service->stop();
  }
}

void writeText(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) {
    throw Error(ErrorKind::InvalidInput, "cannot write file", out);
  }
  f << text;
}

// Mesh paths in a motion file are relative to the file, so they are
// rewritten when the sequence is saved somewhere else.
std::string rebase(const fs::path& from, const std::string& mesh, const fs::path& to) {
  if (mesh.empty()) {
    return mesh;
  }
  const fs::path abs = fs::absolute(resolveBeside(from, mesh));
  return fs::proximate(abs, fs::absolute(to).parent_path()).generic_string();
}

void rebaseMeshes(MotionSequence& seq, const fs::path& from, const fs::path& to) {
  seq.handMesh = rebase(from, seq.handMesh, to);
  seq.objectMesh = rebase(from, seq.objectMesh, to);
}

struct Paths {
  std::string motion, rig, annotations, out, config, result, object, mode = "raytrace";
  std::string backend = "heat";
  std::string host = "127.0.0.1";
  int port = 8765;
  double eps = kDefaultPairEps;
};

void runDensify(const Paths& p) {
  MotionSequence seq = loadMotionSequence(p.motion);
  const Mesh hand = loadMesh(resolveBeside(p.motion, seq.handMesh));
  const Mesh object = loadMesh(resolveBeside(p.motion, seq.objectMesh));
  validateAgainstMeshes(seq, hand, object);
  const DensifySummary d = densifySequence(seq, hand, object, p.eps);
  rebaseMeshes(seq, p.motion, p.out);
  saveMotionSequence(seq, p.out);
  std::cerr << dumpJson({{"input", d.input}, {"kept", d.kept}, {"missed", d.missed}, {"too_far", d.tooFar},
                   {"duplicate", d.duplicate}, {"retried", d.retried}})
            << "\n";
}

void runTransfer(const Paths& p) {
  const RetargetInputs in = loadRetargetInputs(p.motion, p.rig, p.annotations);
  const auto corr = buildCorrespondences(in.annotations, in.sourceRest, in.target.mesh());
  const ContactTransfer t = transferContacts(in.sequence, in.sourceRest, in.target.mesh(), corr, parseDistanceBackend(p.backend));
  writeText(dumpJson(toJson(t)) + "\n", p.out);
}

void runRetarget(const Paths& p, bool noPrepass, bool noContacts, std::optional<int> controlPoints,
    std::optional<double> eacc, std::optional<int> maxRefine) {
  PipelineConfig config = p.config.empty() ? PipelineConfig{} : pipelineConfigFromJson(readJsonFile(p.config));
  if (noPrepass) {
    config.disableRootPrepass = true;
  }
  if (noContacts) {
    config.lambdaCZero = true;
  }
  if (controlPoints) {
    config.controlPoints = *controlPoints;
  }
  if (eacc) {
    config.refinement.eAccAngular = *eacc;
    config.refinement.eAccLinear = *eacc;
  }
  if (maxRefine) {
    config.refinement.maxIterations = *maxRefine;
  }
  const RetargetInputs in = loadRetargetInputs(p.motion, p.rig, p.annotations);
  const RetargetResult r = retarget(in, config);
  writeText(dumpJson(toJson(r)) + "\n", p.out);
  std::cerr << "mean marker error " << r.meanMarkerError << ", mean contact distance " << r.meanContactDistance
            << ", bound violations " << r.boundViolations << "\n";
}

void runMetrics(const Paths& p) {
  const RetargetResult r = retargetResultFromJson(readJsonFile(p.result));
  const MotionSequence seq = loadMotionSequence(p.motion);
  const Mesh object = loadMesh(resolveBeside(p.motion, seq.objectMesh));
  const SkinnedHand target = loadSkinnedHand(p.rig);
  if (static_cast<int>(r.frames.size()) != seq.numFrames()) {
    throw Error(ErrorKind::InvalidInput, "result and motion have different frame counts", p.result);
  }
  std::vector<Eigen::Isometry3d> poses;
  for (const ContactFrame& f : seq.frames) {
    poses.push_back(f.objectPose.isometry());
  }
  writeText(intersectionCsv(intersectionSeries(target, r.frames, object, poses, seq.table)), p.out);
}

void runSubstitute(const Paths& p) {
  MotionSequence seq = loadMotionSequence(p.motion);
  const Mesh hand = loadMesh(resolveBeside(p.motion, seq.handMesh));
  const Mesh oldObject = loadMesh(resolveBeside(p.motion, seq.objectMesh));
  const Mesh newObject = loadMesh(p.object);
  validateAgainstMeshes(seq, hand, oldObject);
  Json summary;
  if (p.mode == "raytrace") {
    for (ContactFrame& f : seq.frames) {
      for (ContactPair& c : f.pairs) {
        c.object = {-1, Vec3::Zero()};
        c.gap = 0.0;
      }
    }
    const DensifySummary d = densifySequence(seq, hand, newObject, p.eps);
    summary = {{"input", d.input}, {"kept", d.kept}, {"missed", d.missed}, {"too_far", d.tooFar}};
  } else {
    if (p.annotations.empty()) {
      throw Error(ErrorKind::InvalidInput, "atlas mode needs --annotations (old object to new object curves)");
    }
    const Annotations ann = loadAnnotations(p.annotations);
    validateAnnotations(ann, oldObject, newObject);
    const auto corr = buildCorrespondences(ann, oldObject, newObject);
    const TransferSummary s = substituteObjectByAtlas(seq, hand, oldObject, newObject, corr, parseDistanceBackend(p.backend));
    summary = {{"input", s.input}, {"transferred", s.transferred}, {"discarded", s.discarded}, {"flagged", s.flagged},
        {"unpaired", s.unpaired}};
  }
  rebaseMeshes(seq, p.motion, p.out);
  seq.objectMesh = fs::proximate(fs::absolute(p.object), fs::absolute(fs::path(p.out)).parent_path()).generic_string();
  saveMotionSequence(seq, p.out);
  std::cerr << dumpJson(summary) << "\n";
}

void runServe(const Paths& p) {
  AnnotationService svc(loadServiceSession(p.motion, p.rig, p.annotations, parseDistanceBackend(p.backend)));
  const int port = svc.bind(p.host, p.port);
  std::cerr << "listening on http://" << p.host << ":" << port << "\n";
  g_service = &svc;
  std::signal(SIGINT, onSignal);
  std::signal(SIGTERM, onSignal);
  svc.run();
  g_service = nullptr;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hand-object contact retargeting"};
  app.require_subcommand(1);
  Paths p;

  auto* densify = app.add_subcommand("densify", "Pair every hand contact with the object surface");
  densify->add_option("--motion", p.motion)->required();
  densify->add_option("--out", p.out)->required();
  densify->add_option("--eps", p.eps, "Maximum pair gap")->capture_default_str();

  auto* transfer = app.add_subcommand("transfer", "Carry contacts to the target hand");
  transfer->add_option("--motion", p.motion)->required();
  transfer->add_option("--rig", p.rig)->required();
  transfer->add_option("--annotations", p.annotations)->required();
  transfer->add_option("--out", p.out, "Output JSON (stdout when omitted)");
  transfer->add_option("--backend", p.backend)->check(CLI::IsMember({"heat", "exact"}))->capture_default_str();

  auto* retargetCmd = app.add_subcommand("retarget", "Run the full pipeline");
  bool noPrepass = false;
  bool noContacts = false;
  std::optional<int> controlPoints;
  std::optional<double> eacc;
  std::optional<int> maxRefine;
  retargetCmd->add_option("--motion", p.motion)->required();
  retargetCmd->add_option("--rig", p.rig)->required();
  retargetCmd->add_option("--annotations", p.annotations)->required();
  retargetCmd->add_option("--out", p.out, "Output JSON (stdout when omitted)");
  retargetCmd->add_option("--config", p.config, "Pipeline config JSON");
  retargetCmd->add_flag("--disable-root-prepass", noPrepass);
  retargetCmd->add_flag("--no-contacts", noContacts, "Zero the contact weight");
  retargetCmd->add_option("--control-points", controlPoints)->check(CLI::PositiveNumber);
  retargetCmd->add_option("--eacc", eacc, "Acceleration threshold for every DOF")->check(CLI::PositiveNumber);
  retargetCmd->add_option("--max-refine-iters", maxRefine)->check(CLI::NonNegativeNumber);

  auto* metrics = app.add_subcommand("metrics", "Per-frame intersection percentages as CSV");
  metrics->add_option("--result", p.result)->required();
  metrics->add_option("--motion", p.motion)->required();
  metrics->add_option("--rig", p.rig)->required();
  metrics->add_option("--out", p.out, "Output CSV (stdout when omitted)");

  auto* substitute = app.add_subcommand("substitute-object", "Swap the object of a motion file");
  substitute->add_option("--motion", p.motion)->required();
  substitute->add_option("--object", p.object)->required();
  substitute->add_option("--mode", p.mode)->check(CLI::IsMember({"raytrace", "atlas"}))->capture_default_str();
  substitute->add_option("--annotations", p.annotations, "Old-to-new object curves (atlas mode)");
  substitute->add_option("--backend", p.backend)->check(CLI::IsMember({"heat", "exact"}))->capture_default_str();
  substitute->add_option("--eps", p.eps)->capture_default_str();
  substitute->add_option("--out", p.out)->required();

  auto* serve = app.add_subcommand("serve", "Annotation service over HTTP");
  serve->add_option("--motion", p.motion)->required();
  serve->add_option("--rig", p.rig)->required();
  serve->add_option("--annotations", p.annotations)->required();
  serve->add_option("--host", p.host)->capture_default_str();
  serve->add_option("--port", p.port)->capture_default_str();
  serve->add_option("--backend", p.backend)->check(CLI::IsMember({"heat", "exact"}))->capture_default_str();

  auto* synth = app.add_subcommand("synth", "Write the synthetic grasp scene");
  synth->add_option("--out", p.out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*densify) {
      runDensify(p);
    } else if (*transfer) {
      runTransfer(p);
    } else if (*retargetCmd) {
      runRetarget(p, noPrepass, noContacts, controlPoints, eacc, maxRefine);
    } else if (*metrics) {
      runMetrics(p);
    } else if (*substitute) {
      runSubstitute(p);
    } else if (*serve) {
      runServe(p);
    } else if (*synth) {
      writeSyntheticScene(makeSyntheticScene(), p.out);
    }
  } catch (const Error& e) {
    std::cerr << dumpJson({{"error", {{"kind", toString(e.kind())}, {"message", e.what()}, {"where", e.where()}}}}) << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << dumpJson({{"error", {{"kind", "internal"}, {"message", e.what()}, {"where", ""}}}}) << "\n";
    return 3;
  }
  return 0;
}
