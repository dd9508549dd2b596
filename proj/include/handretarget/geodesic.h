#pragma once

#include "handretarget/mesh.h"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hr {

enum class DistanceBackend {
  Heat, // heat-method solve, fast, approximate
  Exact, // polyhedral window propagation, exact, used as an oracle
};

DistanceBackend parseDistanceBackend(const std::string& name);
std::string toString(DistanceBackend backend);

/// Geodesic distance from a surface point to every vertex. Implementations
/// do their expensive setup in the constructor; `distances` is const and may
/// be called from several threads at once.
class DistanceSolver {
 public:
  virtual ~DistanceSolver() = default;

  /// Per-vertex distances; +inf for vertices not connected to the source.
  virtual std::vector<double> distances(const SurfacePoint& source) const = 0;

  const Mesh& mesh() const {
    return *mesh_;
  }

 protected:
  explicit DistanceSolver(const Mesh& mesh) : mesh_(&mesh) {}
  const Mesh* mesh_;
};

/// Heat method: one backward-Euler heat step, normalized gradient, Poisson
/// solve. Time step t = timeScale * (mean edge length)^2. Meshes with a
/// boundary average the Neumann and Dirichlet heat solutions.
class HeatDistanceSolver final : public DistanceSolver {
 public:
  explicit HeatDistanceSolver(const Mesh& mesh, double timeScale = 1.0);

  std::vector<double> distances(const SurfacePoint& source) const override;

 private:
  using SparseMatrix = Eigen::SparseMatrix<double>;
  using Factor = Eigen::SimplicialLDLT<SparseMatrix>;

  std::vector<int> component_; // connected component id per vertex
  Eigen::VectorXd mass_;
  SparseMatrix laplacian_;
  SparseMatrix heat_;
  std::unique_ptr<Factor> heatFactor_;
  std::unique_ptr<Factor> heatDirichletFactor_;
  std::vector<int> interiorIndex_; // -1 for boundary vertices
  std::unique_ptr<Factor> poissonFactor_;
  std::vector<Eigen::Vector3d> cotangents_; // per face, cot of corner k
};

/// Exact polyhedral geodesic distances by window propagation over edges with
/// vertex pseudo-sources and vertex-distance filtering.
class ExactDistanceSolver final : public DistanceSolver {
 public:
  explicit ExactDistanceSolver(const Mesh& mesh);

  std::vector<double> distances(const SurfacePoint& source) const override;

 private:
  std::vector<bool> pseudoSource_; // vertices through which geodesics may bend
};

std::unique_ptr<DistanceSolver> makeDistanceSolver(
    const Mesh& mesh,
    DistanceBackend backend,
    double heatTimeScale = 1.0);

/// Barycentric interpolation of a per-vertex field at a surface point.
double interpolate(const Mesh& mesh, const std::vector<double>& field, const SurfacePoint& p);

/// Connected component id for every vertex.
std::vector<int> vertexComponents(const Mesh& mesh);

} // namespace hr
