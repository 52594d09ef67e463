#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "topomesh/types.hpp"

namespace topomesh {

using QuadFace = std::array<int, 4>;
using TriFace = std::array<int, 3>;

// Fixed quad connectivity plus a per-vertex UV chart, shared by every frame.
// Vertex order is the topological order all attribute arrays follow.
struct Topology {
  std::vector<QuadFace> quad_faces;
  std::vector<Vec2> uv;  // one UV per vertex, components in [0,1]
  int n_v = 0;
  int n_f = 0;
  int n_e = 0;  // unique undirected edges

  // Fixed diagonal rule: (v0,v1,v2) + (v0,v2,v3).
  std::array<TriFace, 2> face_triangles(int f) const {
    const QuadFace& q = quad_faces[static_cast<std::size_t>(f)];
    return {TriFace{q[0], q[1], q[2]}, TriFace{q[0], q[2], q[3]}};
  }
};

// Builds a Topology and checks its structural invariants:
// indices in range, no repeated vertex within a face, every edge on <= 2
// faces, UV count matching the vertex count with components in [0,1].
// Throws ValidationError naming the offending face/edge otherwise.
Topology make_topology(std::vector<QuadFace> faces, std::vector<Vec2> uv, int n_v);

}  // namespace topomesh
