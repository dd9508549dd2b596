#include "handretarget/trajectory.h"

#include "handretarget/error.h"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hr {

namespace {

double median(std::vector<double> v) {
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) {
    return hi;
  }
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + mid));
}

SolveResult tryResolve(const FrameResolver& resolve, int frame, const DofVector& seed, bool* ok) {
  try {
    *ok = true;
    return resolve(frame, seed);
  } catch (const Error&) {
    *ok = false;
    SolveResult r;
    r.theta = seed;
    return r;
  }
}

} // namespace

std::vector<double> Trajectory::dofSeries(int d) const {
  std::vector<double> out(frames.size());
  for (size_t i = 0; i < frames.size(); ++i) {
    out[i] = frames[i][d];
  }
  return out;
}

void Trajectory::setDofSeries(int d, const std::vector<double>& values) {
  for (size_t i = 0; i < frames.size(); ++i) {
    frames[i][d] = values[i];
  }
}

std::vector<double> movingAverage(const std::vector<double>& x, int window) {
  const int n = static_cast<int>(x.size());
  const int half = std::max(0, window / 2);
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    const int h = std::min({half, i, n - 1 - i});
    double sum = 0.0;
    for (int k = i - h; k <= i + h; ++k) {
      sum += x[k];
    }
    out[i] = sum / (2 * h + 1);
  }
  return out;
}

std::vector<double> hampelFilter(const std::vector<double>& x, int window, double nSigma) {
  const int n = static_cast<int>(x.size());
  const int half = std::max(0, window / 2);
  std::vector<double> out = x;
  for (int i = 0; i < n; ++i) {
    const int a = std::max(0, i - half);
    const int b = std::min(n - 1, i + half);
    std::vector<double> w(x.begin() + a, x.begin() + b + 1);
    const double med = median(w);
    for (double& v : w) {
      v = std::abs(v - med);
    }
    const double mad = 1.4826 * median(w);
    if (std::abs(x[i] - med) > nSigma * mad && mad > 0.0) {
      out[i] = med;
    }
  }
  return out;
}

Eigen::MatrixXd accelerations(const Trajectory& traj, double fps) {
  const int n = traj.size();
  const int nd = n ? static_cast<int>(traj.frames[0].size()) : 0;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, nd);
  if (n < 3) {
    return acc;
  }
  for (int i = 0; i < n; ++i) {
    const int c = std::clamp(i, 1, n - 2);
    acc.row(i) = ((traj.frames[c + 1] - 2 * traj.frames[c] + traj.frames[c - 1]) * fps * fps).transpose();
  }
  return acc;
}

std::vector<double> accelerationThresholds(const Skeleton& skeleton, const RefinementConfig& config) {
  if (!(config.eAccAngular > 0.0) || !(config.eAccLinear > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "acceleration thresholds must be positive", "e_acc");
  }
  if (config.maxIterations < 1) {
    throw Error(ErrorKind::InvalidInput, "refinement needs at least one iteration", "max_refine_iters");
  }
  std::vector<double> out(skeleton.numDofs());
  for (int d = 0; d < skeleton.numDofs(); ++d) {
    const bool angular = skeleton.dof(d).type == DofType::Revolute;
    double t = angular ? config.eAccAngular : config.eAccLinear;
    if (d < static_cast<int>(config.perDof.size()) && !std::isnan(config.perDof[d])) {
      t = config.perDof[d];
    }
    out[d] = angular ? t * std::numbers::pi / 180.0 : t;
  }
  return out;
}

ViolationScan scanViolations(const Trajectory& traj, double fps, const std::vector<double>& thresholds) {
  const Eigen::MatrixXd acc = accelerations(traj, fps);
  ViolationScan scan;
  scan.frames.assign(traj.size(), false);
  for (int i = 0; i < traj.size(); ++i) {
    if (!traj.valid.empty() && !traj.valid[i]) {
      scan.frames[i] = true;
      ++scan.count;
    }
    for (int d = 0; d < acc.cols(); ++d) {
      if (std::abs(acc(i, d)) > thresholds[d]) {
        scan.frames[i] = true;
        ++scan.count;
      }
    }
  }
  return scan;
}

Trajectory refineTrajectory(
    const Trajectory& estimate,
    const Skeleton& skeleton,
    double fps,
    const RefinementConfig& config,
    const FrameResolver& resolve,
    RefinementReport* report) {
  const std::vector<double> thresholds = accelerationThresholds(skeleton, config);
  RefinementReport rep;
  Trajectory cur = estimate;
  if (cur.valid.empty()) {
    cur.valid.assign(cur.size(), true);
  }
  const int n = cur.size();
  if (config.prefilter && n >= 3) {
    Trajectory filtered = cur;
    for (int d = 0; d < skeleton.numDofs(); ++d) {
      filtered.setDofSeries(d, movingAverage(hampelFilter(cur.dofSeries(d), config.hampelWindow, config.hampelSigma), config.lowpassWindow));
    }
    for (int i = 0; i < n; ++i) {
      bool ok = true;
      const SolveResult r = tryResolve(resolve, i, skeleton.clamp(filtered.frames[i]), &ok);
      cur.frames[i] = r.theta;
      cur.valid[i] = ok;
    }
  }
  ViolationScan scan = scanViolations(cur, fps, thresholds);
  rep.violations.push_back(scan.count);
  for (int iter = 0; iter < config.maxIterations && scan.count > 0; ++iter) {
    Trajectory next = cur;
    std::vector<int> flagged;
    for (int i = 0; i < n; ++i) {
      if (!scan.frames[i]) {
        continue;
      }
      flagged.push_back(i);
      int a = i - 1;
      while (a >= 0 && scan.frames[a]) {
        --a;
      }
      int b = i + 1;
      while (b < n && scan.frames[b]) {
        ++b;
      }
      if (a >= 0 && b < n) {
        const double s = static_cast<double>(i - a) / (b - a);
        next.frames[i] = (1 - s) * cur.frames[a] + s * cur.frames[b];
      } else if (a >= 0) {
        next.frames[i] = cur.frames[a];
      } else if (b < n) {
        next.frames[i] = cur.frames[b];
      }
    }
    for (int i : flagged) {
      bool ok = true;
      const SolveResult r = tryResolve(resolve, i, skeleton.clamp(next.frames[i]), &ok);
      next.frames[i] = r.theta;
      next.valid[i] = ok;
    }
    const ViolationScan nextScan = scanViolations(next, fps, thresholds);
    rep.iterations = iter + 1;
    rep.flagged.push_back(flagged);
    if (nextScan.count > scan.count) {
      rep.guardStopped = true;
      break;
    }
    cur = std::move(next);
    scan = nextScan;
    rep.violations.push_back(scan.count);
  }
  for (int i = 0; i < n; ++i) {
    if (scan.frames[i]) {
      rep.unresolved.push_back(i);
      cur.valid[i] = false;
    }
  }
  if (report) {
    *report = rep;
  }
  return cur;
}

} // namespace hr
