#pragma once

#include <array>
#include <utility>
#include <vector>

#include "topomesh/topology.hpp"
#include "topomesh/types.hpp"

namespace topomesh {

// Precomputed neighborhood structure plus the frame-0 edge weights
// w_ij = exp(-lambda_w * |mu_j0 - mu_i0|^2) used by every edge-weighted loss.
struct Adjacency {
  std::vector<std::vector<int>> one_ring;       // sorted neighbor indices per vertex
  std::vector<std::pair<int, int>> edges;       // unique (i,j), i < j, lexicographic
  std::vector<std::array<int, 2>> edge_faces;   // per edge: incident faces, -1 if absent
  std::vector<int> interior_edges;              // indices into `edges` with two faces
  std::vector<double> edge_weight;              // w_ij per edge, in (0,1]

  int edge_index(int i, int j) const;           // -1 if not an edge
  double weight(int i, int j) const;
};

// lambda_w >= 0; weights come from frame-0 edge lengths.
Adjacency build_adjacency(const Topology& topo, const std::vector<Vec3>& frame0_positions,
                          double lambda_w);

// Default lambda_w: inverse squared mean frame-0 edge length (an average
// edge then gets weight e^-1), scale-free across scene units.
double default_lambda_w(const Topology& topo, const std::vector<Vec3>& frame0_positions);

double mean_edge_length(const Topology& topo, const std::vector<Vec3>& positions);

}  // namespace topomesh
