#pragma once

#include "handretarget/rig.h"

#include <optional>
#include <string>
#include <vector>

namespace hr {

enum class MarkerAggregation { Centroid, PerElement };

struct ObjectiveWeights {
  double marker = 1.0; // lambda_m
  double contact = 1.0; // lambda_c
  double contactDistance = 1.0; // lambda_cd
  double contactNormal = 1.0; // lambda_cn
  double table = 1.0; // lambda_t
  double prior = 50.0; // lambda_j
  bool squared = true; // squared or plain L2 distances in the marker, contact and prior terms
  MarkerAggregation aggregation = MarkerAggregation::Centroid;
};

void validateWeights(const ObjectiveWeights& w);

/// One marker group resolved for a frame: target-hand points and the source
/// markers' world positions.
struct MarkerTerm {
  MarkerMode mode = MarkerMode::OneToOne;
  std::vector<SurfacePoint> target;
  std::vector<Vec3> source;
};

/// Hand contact point with its object-side world target and object normal.
struct ContactTarget {
  SurfacePoint hand;
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
};

struct FrameProblem {
  const SkinnedHand* hand = nullptr;
  std::vector<MarkerTerm> markers;
  std::vector<ContactTarget> contacts;
  std::optional<BoxSdf> table;
  DofVector prior;
  /// Per-DOF factor on the prior term (1 everywhere when empty).
  Eigen::VectorXd priorMask;
  ObjectiveWeights weights;
};

/// Unweighted penalty values; `contact` already combines lambda_cd and lambda_cn.
struct Penalties {
  double marker = 0.0;
  double contact = 0.0;
  double contactDistance = 0.0;
  double contactNormal = 0.0;
  double table = 0.0;
  double prior = 0.0;
};

/// Skins only the vertices a problem touches (every vertex when a table is
/// present) and evaluates penalties from them.
class FrameEvaluator {
 public:
  explicit FrameEvaluator(const FrameProblem& problem);

  Penalties penalties(const DofVector& theta) const;
  double objective(const DofVector& theta) const;

  const FrameProblem& problem() const {
    return *problem_;
  }

 private:
  void pose(const DofVector& theta) const;

  const FrameProblem* problem_;
  std::vector<int> vertices_;
  mutable std::vector<Vec3> positions_;
};

double markerPenalty(const FrameProblem& problem, const DofVector& theta);
double contactPenalty(const FrameProblem& problem, const DofVector& theta);
double tablePenalty(const FrameProblem& problem, const DofVector& theta);
double priorPenalty(const FrameProblem& problem, const DofVector& theta);
double combineObjective(const ObjectiveWeights& w, const Penalties& p);
double objective(const FrameProblem& problem, const DofVector& theta);

/// Central differences (one-sided within `step` of a bound) over the DOFs
/// where mask is true; other entries are zero.
Eigen::VectorXd finiteDifferenceGradient(
    const FrameEvaluator& eval,
    const DofVector& theta,
    const std::vector<bool>& mask,
    double step = 1e-5);

struct SolverOptions {
  int maxIterations = 500;
  double relativeTolerance = 1e-6;
  double fdStep = 1e-5;
};

struct SolveResult {
  DofVector theta;
  double objective = 0.0;
  double seedObjective = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Method of moving asymptotes with a conservative inner loop, so every
/// accepted iterate lowers the objective. DOFs outside `mask` (all free when
/// empty) stay at the seed. Throws Error(Solver) when the objective at the
/// seed is not finite.
SolveResult solveFrame(
    const FrameProblem& problem,
    const DofVector& seed,
    const std::vector<bool>& mask = {},
    const SolverOptions& options = {});

} // namespace hr
