#pragma once

#include "handretarget/mesh.h"

#include <array>
#include <set>

namespace hr {

/// Flat grid in the z=0 plane with nx*ny square cells of side `spacing`,
/// each cell split along the same diagonal. Normals point +z.
Mesh makeGrid(int nx, int ny, double spacing = 1.0, const Vec3& origin = Vec3::Zero());

/// Icosahedron refined `subdivisions` times, projected to the sphere.
Mesh makeIcosphere(int subdivisions, double radius = 1.0);

/// Closed axis-aligned box split into n*n quads per side.
Mesh makeBoxMesh(const Vec3& center, const Vec3& halfExtents, int divisions = 1);

/// 1-to-4 midpoint subdivision; the surface itself is unchanged.
Mesh subdivide(const Mesh& mesh);

using VoxelCell = std::array<int, 3>;

/// Boundary surface of a union of unit voxels scaled by `voxelSize` and
/// offset by `origin`. The occupancy must not contain cells that touch only
/// along an edge or a corner (the result would be non-manifold).
Mesh voxelSurface(const std::set<VoxelCell>& cells, double voxelSize, const Vec3& origin = Vec3::Zero());

/// Taubin lambda|mu umbrella smoothing; connectivity is kept and the volume
/// shrinks far less than with plain Laplacian steps.
Mesh taubinSmooth(const Mesh& mesh, int iterations, double lambda = 0.5, double mu = -0.53);

} // namespace hr
