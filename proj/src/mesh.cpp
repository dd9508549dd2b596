#include "handretarget/mesh.h"

#include "handretarget/error.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

namespace hr {

bool isValidBary(const Vec3& bary, double tol) {
  return bary.minCoeff() >= -tol && std::abs(bary.sum() - 1.0) <= tol;
}

namespace {

std::shared_ptr<const MeshTopology> buildTopology(int numVertices, std::vector<Face> faces) {
  auto topo = std::make_shared<MeshTopology>();
  topo->numVertices = numVertices;
  const int nf = static_cast<int>(faces.size());
  for (int f = 0; f < nf; ++f) {
    for (int k = 0; k < 3; ++k) {
      if (faces[f][k] < 0 || faces[f][k] >= numVertices) {
        throw Error(ErrorKind::InvalidInput, "face index out of range", "face " + std::to_string(f));
      }
    }
    if (faces[f][0] == faces[f][1] || faces[f][1] == faces[f][2] || faces[f][0] == faces[f][2]) {
      throw Error(ErrorKind::InvalidInput, "degenerate face (repeated vertex)", "face " + std::to_string(f));
    }
  }

  // directed edge -> (face, local edge)
  std::map<std::pair<int, int>, std::pair<int, int>> directed;
  std::map<std::pair<int, int>, int> undirectedCount;
  for (int f = 0; f < nf; ++f) {
    for (int k = 0; k < 3; ++k) {
      const int a = faces[f][k];
      const int b = faces[f][(k + 1) % 3];
      const auto key = std::minmax(a, b);
      if (++undirectedCount[{key.first, key.second}] > 2) {
        throw Error(
            ErrorKind::NonManifold,
            "edge (" + std::to_string(key.first) + "," + std::to_string(key.second) + ") has more than 2 faces",
            "face " + std::to_string(f));
      }
      if (!directed.emplace(std::make_pair(a, b), std::make_pair(f, k)).second) {
        throw Error(ErrorKind::NonManifold, "inconsistent face orientation", "face " + std::to_string(f));
      }
    }
  }
  topo->numEdges = static_cast<int>(undirectedCount.size());

  topo->faceNeighbor.assign(nf, Eigen::Vector3i::Constant(-1));
  topo->neighborEdge.assign(nf, Eigen::Vector3i::Constant(-1));
  topo->vertexFaces.assign(numVertices, {});
  topo->vertexNeighbors.assign(numVertices, {});
  topo->boundaryVertex.assign(numVertices, false);
  for (int f = 0; f < nf; ++f) {
    for (int k = 0; k < 3; ++k) {
      const int a = faces[f][k];
      const int b = faces[f][(k + 1) % 3];
      topo->vertexFaces[a].push_back(f);
      auto it = directed.find({b, a});
      if (it == directed.end()) {
        topo->boundaryVertex[a] = true;
        topo->boundaryVertex[b] = true;
      } else {
        topo->faceNeighbor[f][k] = it->second.first;
        topo->neighborEdge[f][k] = it->second.second;
      }
    }
  }
  for (const auto& [edge, count] : undirectedCount) {
    topo->vertexNeighbors[edge.first].push_back(edge.second);
    topo->vertexNeighbors[edge.second].push_back(edge.first);
  }
  for (auto& nbrs : topo->vertexNeighbors) {
    std::sort(nbrs.begin(), nbrs.end());
  }
  topo->faces = std::move(faces);
  return topo;
}

} // namespace

Mesh::Mesh(std::vector<Vec3> vertices, std::vector<Face> faces)
    : vertices_(std::move(vertices)) {
  topology_ = buildTopology(static_cast<int>(vertices_.size()), std::move(faces));
  computeGeometry();
  double diag = boundingDiagonal();
  const double minArea = 1e-14 * std::max(diag * diag, 1e-300);
  for (int f = 0; f < numFaces(); ++f) {
    if (!(faceAreas_[f] > minArea)) {
      throw Error(ErrorKind::InvalidInput, "zero-area face", "face " + std::to_string(f));
    }
  }
}

Mesh::Mesh(std::vector<Vec3> vertices, std::shared_ptr<const MeshTopology> topology)
    : vertices_(std::move(vertices)), topology_(std::move(topology)) {
  computeGeometry();
}

Mesh Mesh::withVertices(std::vector<Vec3> vertices) const {
  if (static_cast<int>(vertices.size()) != numVertices()) {
    throw Error(ErrorKind::InvalidInput, "vertex count mismatch");
  }
  return Mesh(std::move(vertices), topology_);
}

Mesh Mesh::transformed(const Eigen::Isometry3d& xf) const {
  std::vector<Vec3> moved(vertices_.size());
  for (size_t i = 0; i < moved.size(); ++i) {
    moved[i] = xf * vertices_[i];
  }
  return withVertices(std::move(moved));
}

void Mesh::computeGeometry() {
  const int nf = numFaces();
  faceNormals_.resize(nf);
  faceAreas_.resize(nf);
  vertexNormals_.assign(vertices_.size(), Vec3::Zero());
  for (int f = 0; f < nf; ++f) {
    const Vec3 n = (corner(f, 1) - corner(f, 0)).cross(corner(f, 2) - corner(f, 0));
    const double len = n.norm();
    faceAreas_[f] = 0.5 * len;
    faceNormals_[f] = len > 0 ? Vec3(n / len) : Vec3::UnitZ();
    for (int k = 0; k < 3; ++k) {
      vertexNormals_[face(f)[k]] += n; // area weighted
    }
  }
  for (auto& n : vertexNormals_) {
    const double len = n.norm();
    n = len > 0 ? Vec3(n / len) : Vec3::UnitZ();
  }
}

bool Mesh::hasBoundary() const {
  return std::any_of(topology_->boundaryVertex.begin(), topology_->boundaryVertex.end(), [](bool b) { return b; });
}

double Mesh::meanEdgeLength() const {
  double sum = 0.0;
  int count = 0;
  for (int f = 0; f < numFaces(); ++f) {
    for (int k = 0; k < 3; ++k) {
      sum += edgeLength(f, k);
      ++count;
    }
  }
  return count ? sum / count : 0.0;
}

double Mesh::boundingDiagonal() const {
  if (vertices_.empty()) {
    return 0.0;
  }
  Vec3 lo = vertices_.front();
  Vec3 hi = lo;
  for (const auto& v : vertices_) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return (hi - lo).norm();
}

double Mesh::angleSum(int v) const {
  double sum = 0.0;
  for (int f : vertexFaces(v)) {
    int k = 0;
    while (face(f)[k] != v) {
      ++k;
    }
    const Vec3 a = corner(f, (k + 1) % 3) - corner(f, k);
    const Vec3 b = corner(f, (k + 2) % 3) - corner(f, k);
    sum += std::atan2(a.cross(b).norm(), a.dot(b));
  }
  return sum;
}

Mesh parseObj(std::istream& in) {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) {
      continue;
    }
    if (tag == "v") {
      Vec3 p;
      if (!(ss >> p.x() >> p.y() >> p.z())) {
        throw Error(ErrorKind::InvalidInput, "malformed vertex record", "line " + std::to_string(lineNo));
      }
      vertices.push_back(p);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ss >> tok) {
        // accept v, v/vt, v/vt/vn, v//vn
        const int raw = std::stoi(tok.substr(0, tok.find('/')));
        idx.push_back(raw > 0 ? raw - 1 : static_cast<int>(vertices.size()) + raw);
      }
      if (idx.size() != 3) {
        throw Error(
            ErrorKind::InvalidInput,
            "non-triangle face with " + std::to_string(idx.size()) + " vertices",
            "face " + std::to_string(faces.size()));
      }
      faces.emplace_back(idx[0], idx[1], idx[2]);
    }
  }
  return Mesh(std::move(vertices), std::move(faces));
}

Mesh loadMesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::NotFound, "cannot open mesh file", path.string());
  }
  return parseObj(in);
}

void saveMesh(const Mesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorKind::InvalidInput, "cannot write mesh file", path.string());
  }
  out << std::setprecision(17);
  for (const auto& v : mesh.vertices()) {
    out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  }
  for (const auto& f : mesh.faces()) {
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  }
}

Vec3 positionOf(const Mesh& mesh, const SurfacePoint& p) {
  if (p.face < 0 || p.face >= mesh.numFaces()) {
    throw Error(ErrorKind::InvalidInput, "surface point face index out of range", "face " + std::to_string(p.face));
  }
  return p.bary[0] * mesh.corner(p.face, 0) + p.bary[1] * mesh.corner(p.face, 1) + p.bary[2] * mesh.corner(p.face, 2);
}

Vec3 normalAt(const Mesh& mesh, const SurfacePoint& p) {
  if (p.face < 0 || p.face >= mesh.numFaces()) {
    throw Error(ErrorKind::InvalidInput, "surface point face index out of range", "face " + std::to_string(p.face));
  }
  const Face& f = mesh.face(p.face);
  Vec3 n = p.bary[0] * mesh.vertexNormal(f[0]) + p.bary[1] * mesh.vertexNormal(f[1]) +
      p.bary[2] * mesh.vertexNormal(f[2]);
  const double len = n.norm();
  return len > 1e-12 ? Vec3(n / len) : mesh.faceNormal(p.face);
}

SurfacePoint pointAtVertex(const Mesh& mesh, int v) {
  const int f = mesh.vertexFaces(v).front();
  SurfacePoint p{f, Vec3::Zero()};
  for (int k = 0; k < 3; ++k) {
    if (mesh.face(f)[k] == v) {
      p.bary[k] = 1.0;
    }
  }
  return p;
}

Vec3 barycentricOf(const Mesh& mesh, int f, const Vec3& x) {
  const Vec3 a = mesh.corner(f, 0);
  const Vec3 e1 = mesh.corner(f, 1) - a;
  const Vec3 e2 = mesh.corner(f, 2) - a;
  const Vec3 d = x - a;
  const double g11 = e1.dot(e1);
  const double g12 = e1.dot(e2);
  const double g22 = e2.dot(e2);
  const double r1 = d.dot(e1);
  const double r2 = d.dot(e2);
  const double det = g11 * g22 - g12 * g12;
  const double b1 = (g22 * r1 - g12 * r2) / det;
  const double b2 = (g11 * r2 - g12 * r1) / det;
  return {1.0 - b1 - b2, b1, b2};
}

double boxSdf(const BoxSdf& box, const Vec3& point) {
  const Vec3 q = box.rotation.transpose() * (point - box.center);
  const Vec3 d = q.cwiseAbs() - box.halfExtents;
  const double outside = d.cwiseMax(0.0).norm();
  const double inside = std::min(d.maxCoeff(), 0.0);
  return outside + inside;
}

} // namespace hr
