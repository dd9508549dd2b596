#include "handretarget/geodesic.h"

#include "handretarget/error.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <queue>

namespace hr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double cross2(const Vec2& a, const Vec2& b) {
  return a.x() * b.y() - a.y() * b.x();
}

} // namespace

DistanceBackend parseDistanceBackend(const std::string& name) {
  if (name == "heat") {
    return DistanceBackend::Heat;
  }
  if (name == "exact") {
    return DistanceBackend::Exact;
  }
  throw Error(ErrorKind::Schema, "unknown distance backend '" + name + "'", "distance_backend");
}

std::string toString(DistanceBackend backend) {
  return backend == DistanceBackend::Heat ? "heat" : "exact";
}

std::vector<int> vertexComponents(const Mesh& mesh) {
  std::vector<int> comp(mesh.numVertices(), -1);
  int next = 0;
  for (int seed = 0; seed < mesh.numVertices(); ++seed) {
    if (comp[seed] >= 0) {
      continue;
    }
    std::vector<int> stack{seed};
    comp[seed] = next;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int w : mesh.vertexNeighbors(v)) {
        if (comp[w] < 0) {
          comp[w] = next;
          stack.push_back(w);
        }
      }
    }
    ++next;
  }
  return comp;
}

double interpolate(const Mesh& mesh, const std::vector<double>& field, const SurfacePoint& p) {
  const Face& f = mesh.face(p.face);
  double value = 0.0;
  for (int k = 0; k < 3; ++k) {
    if (p.bary[k] != 0.0) {
      value += p.bary[k] * field[f[k]];
    }
  }
  return value;
}

// ---------------------------------------------------------------------------
// Heat method

HeatDistanceSolver::HeatDistanceSolver(const Mesh& mesh, double timeScale) : DistanceSolver(mesh) {
  const int nv = mesh.numVertices();
  const int nf = mesh.numFaces();
  component_ = vertexComponents(mesh);

  std::vector<Eigen::Triplet<double>> lap;
  lap.reserve(nf * 12);
  mass_ = Eigen::VectorXd::Zero(nv);
  cotangents_.resize(nf);
  for (int f = 0; f < nf; ++f) {
    for (int k = 0; k < 3; ++k) {
      const Vec3 a = mesh.corner(f, (k + 1) % 3) - mesh.corner(f, k);
      const Vec3 b = mesh.corner(f, (k + 2) % 3) - mesh.corner(f, k);
      cotangents_[f][k] = a.dot(b) / a.cross(b).norm();
    }
    for (int k = 0; k < 3; ++k) {
      const int i = mesh.face(f)[(k + 1) % 3];
      const int j = mesh.face(f)[(k + 2) % 3];
      const double w = 0.5 * cotangents_[f][k];
      lap.emplace_back(i, j, -w);
      lap.emplace_back(j, i, -w);
      lap.emplace_back(i, i, w);
      lap.emplace_back(j, j, w);
      mass_[mesh.face(f)[k]] += mesh.faceArea(f) / 3.0;
    }
  }
  laplacian_.resize(nv, nv);
  laplacian_.setFromTriplets(lap.begin(), lap.end());

  const double h = mesh.meanEdgeLength();
  const double t = timeScale * h * h;
  SparseMatrix massMatrix(nv, nv);
  {
    std::vector<Eigen::Triplet<double>> m;
    for (int v = 0; v < nv; ++v) {
      m.emplace_back(v, v, mass_[v]);
    }
    massMatrix.setFromTriplets(m.begin(), m.end());
  }

  heat_ = massMatrix + t * laplacian_;
  const SparseMatrix& heat = heat_;
  heatFactor_ = std::make_unique<Factor>(heat);
  if (heatFactor_->info() != Eigen::Success) {
    throw Error(ErrorKind::Solver, "heat operator factorization failed");
  }

  if (mesh.hasBoundary()) {
    interiorIndex_.assign(nv, -1);
    int ni = 0;
    for (int v = 0; v < nv; ++v) {
      if (!mesh.isBoundaryVertex(v)) {
        interiorIndex_[v] = ni++;
      }
    }
    if (ni > 0) {
      std::vector<Eigen::Triplet<double>> trip;
      for (int k = 0; k < heat.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(heat, k); it; ++it) {
          const int r = interiorIndex_[it.row()];
          const int c = interiorIndex_[it.col()];
          if (r >= 0 && c >= 0) {
            trip.emplace_back(r, c, it.value());
          }
        }
      }
      SparseMatrix interior(ni, ni);
      interior.setFromTriplets(trip.begin(), trip.end());
      heatDirichletFactor_ = std::make_unique<Factor>(interior);
    }
  }

  // tiny mass shift makes the Neumann Laplacian definite; the result is re-zeroed at the source
  const double shift = 1e-10 / std::max(h * h, 1e-300);
  SparseMatrix poisson = laplacian_ + shift * massMatrix;
  poissonFactor_ = std::make_unique<Factor>(poisson);
  if (poissonFactor_->info() != Eigen::Success) {
    throw Error(ErrorKind::Solver, "Poisson operator factorization failed");
  }
}

std::vector<double> HeatDistanceSolver::distances(const SurfacePoint& source) const {
  const Mesh& m = mesh();
  const int nv = m.numVertices();
  const int nf = m.numFaces();
  if (source.face < 0 || source.face >= nf) {
    throw Error(ErrorKind::InvalidInput, "source face out of range");
  }
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(nv);
  for (int k = 0; k < 3; ++k) {
    delta[m.face(source.face)[k]] += source.bary[k];
  }
  Eigen::VectorXd u = heatFactor_->solve(delta);
  if (m.hasBoundary()) {
    bool touchesBoundary = false;
    for (int k = 0; k < 3; ++k) {
      touchesBoundary = touchesBoundary || m.isBoundaryVertex(m.face(source.face)[k]);
    }
    // Dirichlet variant: u = 0 on the boundary, except on the source's own face
    // (otherwise a boundary source would have no heat at all).
    std::vector<int> freeIndex;
    const std::vector<int>* index = &interiorIndex_;
    std::unique_ptr<Factor> local;
    const Factor* factor = heatDirichletFactor_.get();
    if (touchesBoundary) {
      freeIndex = interiorIndex_;
      int next = 0;
      for (int v = 0; v < nv; ++v) {
        const bool onSourceFace = (m.face(source.face).array() == v).any();
        freeIndex[v] = (interiorIndex_[v] >= 0 || onSourceFace) ? next++ : -1;
      }
      std::vector<Eigen::Triplet<double>> trip;
      for (int k = 0; k < heat_.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(heat_, k); it; ++it) {
          const int r = freeIndex[it.row()];
          const int c = freeIndex[it.col()];
          if (r >= 0 && c >= 0) {
            trip.emplace_back(r, c, it.value());
          }
        }
      }
      SparseMatrix sub(next, next);
      sub.setFromTriplets(trip.begin(), trip.end());
      local = std::make_unique<Factor>(sub);
      factor = local.get();
      index = &freeIndex;
    }
    if (factor) {
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(factor->rows());
      for (int v = 0; v < nv; ++v) {
        if ((*index)[v] >= 0) {
          rhs[(*index)[v]] = delta[v];
        }
      }
      Eigen::VectorXd ui = factor->solve(rhs);
      Eigen::VectorXd full = Eigen::VectorXd::Zero(nv);
      for (int v = 0; v < nv; ++v) {
        if ((*index)[v] >= 0) {
          full[v] = ui[(*index)[v]];
        }
      }
      u = 0.5 * (u + full);
    }
  }

  Eigen::VectorXd div = Eigen::VectorXd::Zero(nv);
  for (int f = 0; f < nf; ++f) {
    const Vec3& n = m.faceNormal(f);
    Vec3 grad = Vec3::Zero();
    for (int k = 0; k < 3; ++k) {
      const Vec3 e = m.corner(f, (k + 2) % 3) - m.corner(f, (k + 1) % 3);
      grad += u[m.face(f)[k]] * n.cross(e);
    }
    const double len = grad.norm();
    if (!(len > 0.0)) {
      continue;
    }
    const Vec3 x = -grad / len;
    for (int k = 0; k < 3; ++k) {
      const Vec3 e1 = m.corner(f, (k + 1) % 3) - m.corner(f, k);
      const Vec3 e2 = m.corner(f, (k + 2) % 3) - m.corner(f, k);
      div[m.face(f)[k]] +=
          0.5 * (cotangents_[f][(k + 2) % 3] * e1.dot(x) + cotangents_[f][(k + 1) % 3] * e2.dot(x));
    }
  }
  Eigen::VectorXd phi = poissonFactor_->solve(-div);

  const int comp = component_[m.face(source.face)[0]];
  // the source face is flat, so its corners sit at their straight-line distance
  const Vec3 x = positionOf(m, source);
  double offset = 0.0;
  for (int k = 0; k < 3; ++k) {
    offset += source.bary[k] * (phi[m.face(source.face)[k]] - (m.corner(source.face, k) - x).norm());
  }
  std::vector<double> result(nv, kInf);
  for (int v = 0; v < nv; ++v) {
    if (component_[v] == comp) {
      result[v] = std::max(phi[v] - offset, 0.0);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Exact window propagation

namespace {

struct Window {
  int face = -1; // face being entered
  int edge = -1; // local edge of `face`: corner edge -> corner edge+1
  double b0 = 0.0;
  double b1 = 0.0;
  Vec2 src = Vec2::Zero(); // pseudo-source in the edge frame (y <= 0)
  double sigma = 0.0;
};

struct QueueEntry {
  double key;
  int vertex; // >= 0: vertex event; -1: window
  size_t window;
  bool operator>(const QueueEntry& o) const {
    return key > o.key || (key == o.key && vertex < o.vertex);
  }
};

struct EdgeFrame {
  double length;
  Vec2 third; // the face's opposite corner, y > 0
};

EdgeFrame edgeFrame(const Mesh& mesh, int face, int edge) {
  const Vec3 a = mesh.corner(face, edge);
  const Vec3 b = mesh.corner(face, (edge + 1) % 3);
  const Vec3 c = mesh.corner(face, (edge + 2) % 3);
  const double len = (b - a).norm();
  const Vec3 u = (b - a) / len;
  const double cx = (c - a).dot(u);
  const double cy = std::sqrt(std::max((c - a).squaredNorm() - cx * cx, 0.0));
  return {len, Vec2(cx, cy)};
}

// t-interval in [0,1] where a + m t <= 0
std::pair<double, double> nonPositiveInterval(double a, double m) {
  if (std::abs(m) < 1e-300) {
    return a <= 0.0 ? std::make_pair(0.0, 1.0) : std::make_pair(1.0, 0.0);
  }
  const double root = -a / m;
  if (m > 0) {
    return {0.0, std::min(root, 1.0)};
  }
  return {std::max(root, 0.0), 1.0};
}

class WindowPropagation {
 public:
  WindowPropagation(const Mesh& mesh, const std::vector<bool>& pseudoSource)
      : mesh_(mesh), pseudoSource_(pseudoSource), dist_(mesh.numVertices(), kInf) {}

  std::vector<double> run(const SurfacePoint& source) {
    const Vec3 x = positionOf(mesh_, source);
    int atVertex = -1;
    for (int k = 0; k < 3; ++k) {
      if (source.bary[k] > 1.0 - 1e-12) {
        atVertex = mesh_.face(source.face)[k];
      }
    }
    if (atVertex >= 0) {
      dist_[atVertex] = 0.0;
      queue_.push({0.0, atVertex, 0});
    } else {
      std::vector<int> containing{source.face};
      int onEdge = -1;
      for (int k = 0; k < 3; ++k) {
        if (source.bary[k] < 1e-12) {
          onEdge = (k + 1) % 3; // edge opposite corner k
        }
      }
      if (onEdge >= 0 && mesh_.neighborFace(source.face, onEdge) >= 0) {
        containing.push_back(mesh_.neighborFace(source.face, onEdge));
      }
      for (int f : containing) {
        for (int k = 0; k < 3; ++k) {
          relax(mesh_.face(f)[k], (mesh_.corner(f, k) - x).norm());
        }
        for (int e = 0; e < 3; ++e) {
          const int g = mesh_.neighborFace(f, e);
          if (g < 0 || std::find(containing.begin(), containing.end(), g) != containing.end()) {
            continue;
          }
          emitAcross(f, e, x, 0.0);
        }
      }
    }

    while (!queue_.empty()) {
      const QueueEntry top = queue_.top();
      queue_.pop();
      if (top.vertex >= 0) {
        if (top.key > dist_[top.vertex]) {
          continue; // stale
        }
        emitFromVertex(top.vertex);
      } else {
        const Window w = windows_[top.window];
        if (!dominated(w)) {
          propagate(w);
        }
      }
      if (windows_.size() > 50'000'000) {
        throw Error(ErrorKind::Solver, "exact geodesic window count exceeded");
      }
    }
    return dist_;
  }

 private:
  void relax(int v, double d) {
    if (d < dist_[v]) {
      dist_[v] = d;
      if (pseudoSource_[v]) {
        queue_.push({d, v, 0});
      }
    }
  }

  // Window on local edge `e` of face f, entering the neighbor, from a 3D source point lying on f's side.
  void emitAcross(int f, int e, const Vec3& source, double sigma) {
    const int g = mesh_.neighborFace(f, e);
    const int m = mesh_.neighborEdge(f, e);
    const Vec3 q = mesh_.corner(g, m); // == f corner e+1
    const Vec3 p = mesh_.corner(g, (m + 1) % 3);
    const double len = (p - q).norm();
    const Vec3 u = (p - q) / len;
    const double sx = (source - q).dot(u);
    const double sy = -std::sqrt(std::max((source - q).squaredNorm() - sx * sx, 0.0));
    if (sy > -1e-14 * len) {
      return;
    }
    push({g, m, 0.0, len, Vec2(sx, sy), sigma});
  }

  void emitFromVertex(int v) {
    for (int f : mesh_.vertexFaces(v)) {
      int k = 0;
      while (mesh_.face(f)[k] != v) {
        ++k;
      }
      const int e = (k + 1) % 3;
      relax(mesh_.face(f)[(k + 1) % 3], dist_[v] + (mesh_.corner(f, (k + 1) % 3) - mesh_.vertex(v)).norm());
      relax(mesh_.face(f)[(k + 2) % 3], dist_[v] + (mesh_.corner(f, (k + 2) % 3) - mesh_.vertex(v)).norm());
      if (mesh_.neighborFace(f, e) >= 0) {
        emitAcross(f, e, mesh_.vertex(v), dist_[v]);
      }
    }
  }

  bool dominated(const Window& w) const {
    const EdgeFrame fr = edgeFrame(mesh_, w.face, w.edge);
    const double dStart = dist_[mesh_.face(w.face)[w.edge]];
    const double dEnd = dist_[mesh_.face(w.face)[(w.edge + 1) % 3]];
    const double fFar = w.sigma + (w.src - Vec2(w.b1, 0.0)).norm();
    const double fNear = w.sigma + (w.src - Vec2(w.b0, 0.0)).norm();
    const double tol = 1e-10 * (fFar + fr.length);
    // distance along the edge grows with slope 1, the window's with slope <= 1
    return fFar > dStart + w.b1 + tol || fNear > dEnd + (fr.length - w.b0) + tol;
  }

  void push(const Window& w) {
    if (w.b1 - w.b0 <= 1e-12 * edgeFrame(mesh_, w.face, w.edge).length || dominated(w)) {
      return;
    }
    const double cx = std::clamp(w.src.x(), w.b0, w.b1);
    const double key = w.sigma + (w.src - Vec2(cx, 0.0)).norm();
    windows_.push_back(w);
    queue_.push({key, -1, windows_.size() - 1});
  }

  void propagate(const Window& w) {
    const EdgeFrame fr = edgeFrame(mesh_, w.face, w.edge);
    const Vec2& s = w.src;
    const Vec2 corners[3] = {Vec2::Zero(), Vec2(fr.length, 0.0), fr.third};
    const Vec2 d0 = Vec2(w.b0, 0.0) - s;
    const Vec2 d1 = Vec2(w.b1, 0.0) - s;
    const int ia = mesh_.face(w.face)[w.edge];
    const int ib = mesh_.face(w.face)[(w.edge + 1) % 3];
    const int ic = mesh_.face(w.face)[(w.edge + 2) % 3];

    const Vec2 toC = fr.third - s;
    const double tolC = 1e-12 * toC.norm();
    if (cross2(d0, toC) <= tolC * d0.norm() && cross2(d1, toC) >= -tolC * d1.norm()) {
      relax(ic, w.sigma + toC.norm());
    }
    if (w.b0 <= 1e-12 * fr.length) {
      relax(ia, w.sigma + s.norm());
    }
    if (w.b1 >= fr.length * (1.0 - 1e-12)) {
      relax(ib, w.sigma + (corners[1] - s).norm());
    }

    // children on the two far edges: local (edge+1) runs B->C, (edge+2) runs C->A
    for (int step = 1; step <= 2; ++step) {
      const int j = (w.edge + step) % 3;
      const int g = mesh_.neighborFace(w.face, j);
      if (g < 0) {
        continue;
      }
      const Vec2 p = corners[step];
      const Vec2 q = corners[(step + 1) % 3];
      // f0 = cross(d0, x - s) <= 0 and f1 = cross(d1, x - s) >= 0 along x = p + t (q - p)
      const double a0 = cross2(d0, p - s);
      const double m0 = cross2(d0, q - p);
      const double a1 = -cross2(d1, p - s);
      const double m1 = -cross2(d1, q - p);
      auto [lo0, hi0] = nonPositiveInterval(a0, m0);
      auto [lo1, hi1] = nonPositiveInterval(a1, m1);
      const double tlo = std::max(lo0, lo1);
      const double thi = std::min(hi0, hi1);
      if (!(thi - tlo > 1e-12)) {
        continue;
      }
      const double len = (q - p).norm();
      const Vec2 u = (p - q) / len;
      const Vec2 rel = s - q;
      const Vec2 child(rel.dot(u), cross2(u, rel));
      if (child.y() > -1e-14 * len) {
        continue;
      }
      push({g, mesh_.neighborEdge(w.face, j), len * (1.0 - thi), len * (1.0 - tlo), child, w.sigma});
    }
    (void)ia;
  }

  const Mesh& mesh_;
  const std::vector<bool>& pseudoSource_;
  std::vector<double> dist_;
  std::vector<Window> windows_;
  std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>> queue_;
};

} // namespace

ExactDistanceSolver::ExactDistanceSolver(const Mesh& mesh) : DistanceSolver(mesh) {
  pseudoSource_.resize(mesh.numVertices());
  for (int v = 0; v < mesh.numVertices(); ++v) {
    // geodesics only bend at saddle (or flat) and boundary vertices
    pseudoSource_[v] = mesh.isBoundaryVertex(v) || mesh.angleSum(v) >= 2.0 * std::numbers::pi - 1e-9;
  }
}

std::vector<double> ExactDistanceSolver::distances(const SurfacePoint& source) const {
  if (source.face < 0 || source.face >= mesh().numFaces()) {
    throw Error(ErrorKind::InvalidInput, "source face out of range");
  }
  std::vector<bool> pseudo = pseudoSource_;
  // the source vertex itself always emits
  for (int k = 0; k < 3; ++k) {
    if (source.bary[k] > 1.0 - 1e-12) {
      pseudo[mesh().face(source.face)[k]] = true;
    }
  }
  WindowPropagation prop(mesh(), pseudo);
  return prop.run(source);
}

std::unique_ptr<DistanceSolver> makeDistanceSolver(const Mesh& mesh, DistanceBackend backend, double heatTimeScale) {
  if (backend == DistanceBackend::Exact) {
    return std::make_unique<ExactDistanceSolver>(mesh);
  }
  return std::make_unique<HeatDistanceSolver>(mesh, heatTimeScale);
}

} // namespace hr
