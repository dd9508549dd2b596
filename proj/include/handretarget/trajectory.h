#pragma once

#include "handretarget/solver.h"

#include <functional>
#include <vector>

namespace hr {

/// Per-frame DOF vectors sampled at a fixed rate.
struct Trajectory {
  std::vector<DofVector> frames;
  std::vector<bool> valid; // false: solver failure or unresolved violation

  int size() const {
    return static_cast<int>(frames.size());
  }
  std::vector<double> dofSeries(int d) const;
  void setDofSeries(int d, const std::vector<double>& values);
};

/// Centered moving average; the window shrinks symmetrically at the ends so
/// linear series pass unchanged.
std::vector<double> movingAverage(const std::vector<double>& x, int window);

/// Hampel filter: samples further than nSigma scaled MADs from the window
/// median are replaced by the median.
std::vector<double> hampelFilter(const std::vector<double>& x, int window, double nSigma);

/// Second differences times fps^2; the end frames reuse their neighbour's stencil.
Eigen::MatrixXd accelerations(const Trajectory& traj, double fps);

struct RefinementConfig {
  double eAccAngular = 500.0; // deg/s^2, revolute DOFs
  double eAccLinear = 500.0; // length/s^2, prismatic DOFs
  std::vector<double> perDof; // optional override per DOF (same units); NaN keeps the default
  int maxIterations = 20;
  int lowpassWindow = 5;
  int hampelWindow = 7;
  double hampelSigma = 3.0;
  bool prefilter = true;
};

/// Per-DOF thresholds in the DOF's own units (rad/s^2 or length/s^2).
std::vector<double> accelerationThresholds(const Skeleton& skeleton, const RefinementConfig& config);

/// (frame, dof) entries above threshold; frame flags include invalid frames.
struct ViolationScan {
  int count = 0;
  std::vector<bool> frames;
};

ViolationScan scanViolations(const Trajectory& traj, double fps, const std::vector<double>& thresholds);

using FrameResolver = std::function<SolveResult(int frame, const DofVector& seed)>;

struct RefinementReport {
  int iterations = 0;
  std::vector<int> violations; // count before each iteration, then the final count
  std::vector<std::vector<int>> flagged; // frames replaced in each iteration
  std::vector<int> unresolved; // frames still violating at the end
  bool guardStopped = false; // an iteration would have raised the count and was undone
};

/// Pre-filter and re-solve every frame, then repeatedly replace violating
/// frames by linear interpolation between the nearest clean frames and
/// re-solve them. Frames left violating are marked invalid.
Trajectory refineTrajectory(
    const Trajectory& estimate,
    const Skeleton& skeleton,
    double fps,
    const RefinementConfig& config,
    const FrameResolver& resolve,
    RefinementReport* report = nullptr);

} // namespace hr
