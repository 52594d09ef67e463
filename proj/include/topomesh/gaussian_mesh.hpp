#pragma once

#include <memory>
#include <vector>

#include "topomesh/adjacency.hpp"
#include "topomesh/topology.hpp"
#include "topomesh/types.hpp"

namespace topomesh {

// One Gaussian per mesh vertex, attribute arrays in topological order.
struct GaussianMesh {
  std::vector<Vec3> positions;   // mu, world space
  std::vector<Quat> rotations;   // unit quaternions
  std::vector<Vec3> scales;      // strictly positive components
  std::vector<Vec3> colors;      // RGB in [0,1]
  std::vector<double> opacities; // in (0,1]
  std::shared_ptr<const Topology> topology;
  int frame_index = 0;

  int size() const { return static_cast<int>(positions.size()); }
};

// Unnormalized quad normal (Newell); equals the sum of the two fixed-diagonal
// triangle cross products, so it is consistent with face_triangles().
Vec3 face_normal_unnormalized(const std::vector<Vec3>& positions, const QuadFace& f);

// Area-weighted vertex normals. A vertex whose incident faces sum to a
// zero-length normal falls back to the previous frame's normal when given,
// else +z.
std::vector<Vec3> vertex_normals(const std::vector<Vec3>& positions, const Topology& topo,
                                 const std::vector<Vec3>* previous = nullptr);

inline std::vector<Vec3> vertex_normals(const GaussianMesh& mesh,
                                        const std::vector<Vec3>* previous = nullptr) {
  return vertex_normals(mesh.positions, *mesh.topology, previous);
}

// Angle in [0, pi] between the two face normals sharing each interior edge.
// `valid[k]` is false (and the angle 0) when either incident face is
// degenerate; `n_invalid` counts those edges.
struct DihedralAngles {
  std::vector<double> angles;  // aligned with Adjacency::interior_edges
  std::vector<bool> valid;
  int n_invalid = 0;
};

DihedralAngles dihedral_angles(const std::vector<Vec3>& positions, const Topology& topo,
                               const Adjacency& adj);

inline DihedralAngles dihedral_angles(const GaussianMesh& mesh, const Adjacency& adj) {
  return dihedral_angles(mesh.positions, *mesh.topology, adj);
}

// Angle of one interior edge together with its gradient w.r.t. the vertices
// of the two incident faces. Gradients are accumulated into `grad`
// (size n_v) scaled by `coeff`. Returns false for degenerate faces.
bool accumulate_dihedral_gradient(const std::vector<Vec3>& positions, const Topology& topo,
                                  int face_a, int face_b, double coeff,
                                  std::vector<Vec3>& grad);

}  // namespace topomesh
