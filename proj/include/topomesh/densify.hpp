#pragma once

#include <array>
#include <memory>
#include <vector>

#include "topomesh/adjacency.hpp"
#include "topomesh/gaussian_mesh.hpp"
#include "topomesh/types.hpp"

namespace topomesh {

// Bilinear lattice sample over one quad: A(i,j) from the four corner values,
// (i,j) on the (N-1)-subdivided grid. Throws for N < 2.
double bilinear_sample(double a00, double a0n, double an0, double ann, int i, int j, int n);

// Corner weights (v0..v3 order) of lattice site (i,j); i runs v0->v1, j runs v0->v3.
std::array<double, 4> bilinear_weights(int i, int j, int n);

// Densified Gaussian set: one lattice of N x N sites per base quad, shared
// edge/corner sites deduplicated so each physical sample exists once. The
// first n_v dense Gaussians alias the base vertices in order.
struct DenseGaussianMesh {
  std::shared_ptr<const Topology> base;
  int n = 0;  // lattice resolution per quad

  std::vector<std::array<int, 4>> corner_index;   // base vertices per dense gaussian
  std::vector<std::array<double, 4>> weights;     // bilinear weights, sum to 1

  std::vector<Vec3> positions;
  std::vector<Quat> rotations;
  std::vector<Vec3> scales;
  std::vector<Vec3> colors;
  std::vector<double> opacities;
  std::vector<Vec2> uv;

  std::vector<QuadFace> quads;                    // dense connectivity
  std::vector<std::vector<int>> one_ring;

  int size() const { return static_cast<int>(positions.size()); }
};

// Builds the dense lattice once; interpolation weights are stored so later
// frames refresh positions without re-densifying.
DenseGaussianMesh densify_uv(const GaussianMesh& base, int n);

// Recomputes dense positions from the current base positions through the
// stored weights; scale becomes the minimum one-ring lattice distance
// (isotropic) and opacity 1. Colors and rotations are left untouched.
void refresh_dense_positions(DenseGaussianMesh& dense, const GaussianMesh& base_t);

}  // namespace topomesh
