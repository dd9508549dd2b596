#include "handretarget/solver.h"

#include "handretarget/error.h"

#include <algorithm>
#include <cmath>
#include <set>

namespace hr {

namespace {

double dist(const Vec3& a, const Vec3& b, bool squared) {
  return squared ? (a - b).squaredNorm() : (a - b).norm();
}

template <typename Points>
Vec3 centroid(const Points& pts) {
  Vec3 c = Vec3::Zero();
  for (const Vec3& p : pts) {
    c += p;
  }
  return c / static_cast<double>(pts.size());
}

double markerTermValue(const MarkerTerm& term, const std::vector<Vec3>& target, const ObjectiveWeights& w) {
  const std::vector<Vec3>& source = term.source;
  if (term.mode == MarkerMode::OneToOne) {
    double sum = 0.0;
    for (size_t i = 0; i < target.size(); ++i) {
      sum += dist(target[i], source[i], w.squared);
    }
    return sum;
  }
  if (w.aggregation == MarkerAggregation::Centroid) {
    return dist(centroid(target), centroid(source), w.squared);
  }
  double sum = 0.0;
  if (target.size() == source.size()) {
    for (size_t i = 0; i < target.size(); ++i) {
      sum += dist(target[i], source[i], w.squared);
    }
    return sum / static_cast<double>(target.size());
  }
  const bool manyTargets = target.size() > source.size();
  const std::vector<Vec3>& many = manyTargets ? target : source;
  const Vec3 one = centroid(manyTargets ? source : target);
  for (const Vec3& p : many) {
    sum += dist(p, one, w.squared);
  }
  return sum / static_cast<double>(many.size());
}

void checkProblem(const FrameProblem& p) {
  if (!p.hand) {
    throw Error(ErrorKind::InvalidInput, "frame problem has no hand");
  }
  const int nd = p.hand->skeleton().numDofs();
  if (p.prior.size() != nd) {
    throw Error(ErrorKind::InvalidInput, "prior has the wrong DOF count", "prior");
  }
  if (p.priorMask.size() != 0 && p.priorMask.size() != nd) {
    throw Error(ErrorKind::InvalidInput, "prior mask has the wrong DOF count", "prior_mask");
  }
  validateWeights(p.weights);
  const int nf = p.hand->mesh().numFaces();
  for (const MarkerTerm& m : p.markers) {
    if (m.target.empty() || m.source.empty()) {
      throw Error(ErrorKind::InvalidInput, "empty marker term");
    }
    if ((m.mode == MarkerMode::OneToOne || m.mode == MarkerMode::AreaToArea) && m.target.size() != m.source.size()) {
      throw Error(ErrorKind::InvalidInput, "marker term needs a 1:1 correspondence");
    }
    for (const SurfacePoint& s : m.target) {
      if (s.face < 0 || s.face >= nf) {
        throw Error(ErrorKind::InvalidInput, "marker face out of range", "face " + std::to_string(s.face));
      }
    }
  }
  for (const ContactTarget& c : p.contacts) {
    if (c.hand.face < 0 || c.hand.face >= nf) {
      throw Error(ErrorKind::InvalidInput, "contact face out of range", "face " + std::to_string(c.hand.face));
    }
  }
}

} // namespace

void validateWeights(const ObjectiveWeights& w) {
  for (double v : {w.marker, w.contact, w.contactDistance, w.contactNormal, w.table, w.prior}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::InvalidInput, "objective weights must be finite and non-negative", "weights");
    }
  }
}

FrameEvaluator::FrameEvaluator(const FrameProblem& problem) : problem_(&problem) {
  checkProblem(problem);
  const Mesh& mesh = problem.hand->mesh();
  positions_ = mesh.vertices();
  if (problem.table) {
    vertices_.resize(mesh.numVertices());
    for (int v = 0; v < mesh.numVertices(); ++v) {
      vertices_[v] = v;
    }
    return;
  }
  std::set<int> needed;
  for (const MarkerTerm& m : problem.markers) {
    for (const SurfacePoint& s : m.target) {
      for (int k = 0; k < 3; ++k) {
        needed.insert(mesh.face(s.face)[k]);
      }
    }
  }
  for (const ContactTarget& c : problem.contacts) {
    for (int k = 0; k < 3; ++k) {
      const int v = mesh.face(c.hand.face)[k];
      for (int f : mesh.vertexFaces(v)) {
        for (int j = 0; j < 3; ++j) {
          needed.insert(mesh.face(f)[j]);
        }
      }
    }
  }
  vertices_.assign(needed.begin(), needed.end());
}

void FrameEvaluator::pose(const DofVector& theta) const {
  const SkinnedHand& hand = *problem_->hand;
  const auto skinning = hand.skinningMatrices(forwardKinematics(hand.skeleton(), theta));
  for (int v : vertices_) {
    positions_[v] = hand.skinVertex(skinning, v);
  }
}

Penalties FrameEvaluator::penalties(const DofVector& theta) const {
  const FrameProblem& p = *problem_;
  const ObjectiveWeights& w = p.weights;
  const Mesh& mesh = p.hand->mesh();
  pose(theta);
  Penalties out;
  std::vector<Vec3> target;
  for (const MarkerTerm& m : p.markers) {
    target.clear();
    for (const SurfacePoint& s : m.target) {
      target.push_back(positionWith(mesh, positions_, s));
    }
    out.marker += markerTermValue(m, target, w);
  }
  for (const ContactTarget& c : p.contacts) {
    out.contactDistance += dist(positionWith(mesh, positions_, c.hand), c.point, w.squared);
    out.contactNormal += (normalAtWith(mesh, positions_, c.hand) + c.normal).squaredNorm();
  }
  out.contact = w.contactDistance * out.contactDistance + w.contactNormal * out.contactNormal;
  if (p.table) {
    for (const Vec3& x : positions_) {
      out.table += std::max(0.0, -boxSdf(*p.table, x));
    }
  }
  const DofVector clamped = p.hand->skeleton().clamp(theta);
  for (int d = 0; d < clamped.size(); ++d) {
    const double m = p.priorMask.size() ? p.priorMask[d] : 1.0;
    const double delta = clamped[d] - p.prior[d];
    out.prior += m * (w.squared ? delta * delta : std::abs(delta));
  }
  return out;
}

double FrameEvaluator::objective(const DofVector& theta) const {
  return combineObjective(problem_->weights, penalties(theta));
}

double combineObjective(const ObjectiveWeights& w, const Penalties& p) {
  return w.marker * p.marker + w.contact * p.contact + w.table * p.table + w.prior * p.prior;
}

double markerPenalty(const FrameProblem& problem, const DofVector& theta) {
  return FrameEvaluator(problem).penalties(theta).marker;
}

double contactPenalty(const FrameProblem& problem, const DofVector& theta) {
  return FrameEvaluator(problem).penalties(theta).contact;
}

double tablePenalty(const FrameProblem& problem, const DofVector& theta) {
  return FrameEvaluator(problem).penalties(theta).table;
}

double priorPenalty(const FrameProblem& problem, const DofVector& theta) {
  return FrameEvaluator(problem).penalties(theta).prior;
}

double objective(const FrameProblem& problem, const DofVector& theta) {
  return FrameEvaluator(problem).objective(theta);
}

Eigen::VectorXd finiteDifferenceGradient(
    const FrameEvaluator& eval,
    const DofVector& theta,
    const std::vector<bool>& mask,
    double step) {
  const Skeleton& skel = eval.problem().hand->skeleton();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(theta.size());
  double f0 = std::numeric_limits<double>::quiet_NaN();
  for (int d = 0; d < theta.size(); ++d) {
    if (!mask.empty() && !mask[d]) {
      continue;
    }
    const Dof& dof = skel.dof(d);
    const bool up = theta[d] + step <= dof.upper;
    const bool down = theta[d] - step >= dof.lower;
    DofVector t = theta;
    if (up && down) {
      t[d] = theta[d] + step;
      const double fp = eval.objective(t);
      t[d] = theta[d] - step;
      g[d] = (fp - eval.objective(t)) / (2 * step);
      continue;
    }
    if (!up && !down) {
      continue;
    }
    if (std::isnan(f0)) {
      f0 = eval.objective(theta);
    }
    t[d] = up ? theta[d] + step : theta[d] - step;
    g[d] = up ? (eval.objective(t) - f0) / step : (f0 - eval.objective(t)) / step;
  }
  return g;
}

SolveResult solveFrame(const FrameProblem& problem, const DofVector& seed, const std::vector<bool>& mask, const SolverOptions& options) {
  const FrameEvaluator eval(problem);
  const Skeleton& skel = problem.hand->skeleton();
  if (seed.size() != skel.numDofs()) {
    throw Error(ErrorKind::InvalidInput, "seed has the wrong DOF count", "seed");
  }
  if (!mask.empty() && static_cast<int>(mask.size()) != skel.numDofs()) {
    throw Error(ErrorKind::InvalidInput, "mask has the wrong DOF count", "mask");
  }
  const DofVector lo = skel.lower();
  const DofVector hi = skel.upper();
  SolveResult res;
  res.theta = skel.clamp(seed);
  double f = eval.objective(res.theta);
  if (!std::isfinite(f)) {
    throw Error(ErrorKind::Solver, "objective is not finite at the seed");
  }
  res.seedObjective = f;
  res.objective = f;

  std::vector<int> free;
  for (int d = 0; d < skel.numDofs(); ++d) {
    if ((mask.empty() || mask[d]) && hi[d] > lo[d]) {
      free.push_back(d);
    }
  }
  const int n = static_cast<int>(free.size());
  if (n == 0) {
    res.converged = true;
    return res;
  }
  std::vector<bool> gradMask(skel.numDofs(), false);
  for (int d : free) {
    gradMask[d] = true;
  }
  Eigen::VectorXd x(n), xmin(n), xmax(n), range(n);
  for (int i = 0; i < n; ++i) {
    x[i] = res.theta[free[i]];
    xmin[i] = lo[free[i]];
    xmax[i] = hi[free[i]];
  }
  range = xmax - xmin;
  auto full = [&](const Eigen::VectorXd& v) {
    DofVector t = res.theta;
    for (int i = 0; i < n; ++i) {
      t[free[i]] = v[i];
    }
    return t;
  };
  auto gradient = [&](const Eigen::VectorXd& v) {
    const Eigen::VectorXd gf = finiteDifferenceGradient(eval, full(v), gradMask, options.fdStep);
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) {
      g[i] = gf[free[i]];
    }
    return g;
  };

  Eigen::VectorXd g = gradient(x);
  Eigen::VectorXd low = x, upp = x, xold1 = x, xold2 = x;
  double rho = 1e-5;
  for (int k = 1; k <= options.maxIterations; ++k) {
    res.iterations = k;
    if (k <= 2) {
      low = x - 0.5 * range;
      upp = x + 0.5 * range;
    } else {
      for (int i = 0; i < n; ++i) {
        const double s = (x[i] - xold1[i]) * (xold1[i] - xold2[i]);
        const double gamma = s > 0 ? 1.2 : (s < 0 ? 0.7 : 1.0);
        low[i] = x[i] - gamma * (xold1[i] - low[i]);
        upp[i] = x[i] + gamma * (upp[i] - xold1[i]);
        low[i] = std::clamp(low[i], x[i] - 10 * range[i], x[i] - 0.01 * range[i]);
        upp[i] = std::clamp(upp[i], x[i] + 0.01 * range[i], x[i] + 10 * range[i]);
      }
    }
    Eigen::VectorXd alpha(n), beta(n);
    for (int i = 0; i < n; ++i) {
      alpha[i] = std::max({xmin[i], low[i] + 0.1 * (x[i] - low[i]), x[i] - 0.5 * range[i]});
      beta[i] = std::min({xmax[i], upp[i] - 0.1 * (upp[i] - x[i]), x[i] + 0.5 * range[i]});
    }
    Eigen::VectorXd xnew(n);
    double fnew = f;
    for (int inner = 0; inner < 60; ++inner) {
      double approx = f;
      for (int i = 0; i < n; ++i) {
        const double gp = std::max(g[i], 0.0);
        const double gm = std::max(-g[i], 0.0);
        const double p = (upp[i] - x[i]) * (upp[i] - x[i]) * (1.001 * gp + 0.001 * gm + rho / range[i]);
        const double q = (x[i] - low[i]) * (x[i] - low[i]) * (0.001 * gp + 1.001 * gm + rho / range[i]);
        const double sp = std::sqrt(p);
        const double sq = std::sqrt(q);
        xnew[i] = std::clamp((low[i] * sp + upp[i] * sq) / (sp + sq), alpha[i], beta[i]);
        approx += p / (upp[i] - xnew[i]) + q / (xnew[i] - low[i]) - p / (upp[i] - x[i]) - q / (x[i] - low[i]);
      }
      fnew = eval.objective(full(xnew));
      if (std::isfinite(fnew) && fnew <= approx + 1e-14 * std::abs(f)) {
        break;
      }
      double dsum = 0.0;
      for (int i = 0; i < n; ++i) {
        const double dx = xnew[i] - x[i];
        dsum += (upp[i] - low[i]) * dx * dx / ((upp[i] - xnew[i]) * (xnew[i] - low[i]) * range[i]);
      }
      if (!(dsum > 0.0) || !std::isfinite(fnew)) {
        rho *= 10;
        continue;
      }
      const double delta = (fnew - approx) / dsum;
      rho = std::min(1.1 * (rho + delta), 10 * rho);
    }
    if (!(fnew < f)) {
      res.converged = true;
      break;
    }
    const double decrease = (f - fnew) / std::max(std::abs(f), 1e-300);
    xold2 = xold1;
    xold1 = x;
    x = xnew;
    f = fnew;
    if (decrease < options.relativeTolerance || f <= 0.0) {
      res.converged = true;
      break;
    }
    g = gradient(x);
    rho = std::max(0.1 * rho, 1e-5);
  }
  res.theta = full(x);
  res.objective = f;
  return res;
}

} // namespace hr
