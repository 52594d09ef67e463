#pragma once

#include <vector>

#include "topomesh/densify.hpp"
#include "topomesh/gaussian_mesh.hpp"
#include "topomesh/image.hpp"
#include "topomesh/types.hpp"

namespace topomesh {

// Moves each Gaussian center outward along its vertex normal by the distance
// from the center to the ellipsoid surface in that direction:
//   n' = R^-1 n,  mu' = mu + sqrt(1 / sum(n'_k^2 / s_k^2)) * n.
// Zero-length normals leave the vertex in place (counted in n_skipped).
struct NormalExpansionResult {
  std::vector<Vec3> positions;
  int n_skipped = 0;
};
NormalExpansionResult normal_expansion(const GaussianMesh& mesh, const std::vector<Vec3>& normals);

// UV-space texture with texel (x,y) centered at ((x+0.5)/R, (y+0.5)/R),
// v measured from the bottom.
struct TextureMap {
  int resolution = 0;
  Image rgb;                   // resolution x resolution
  std::vector<bool> coverage;  // texels actually written by a triangle
  int overlap_count = 0;       // texels a later triangle tried to rewrite
  int degenerate_triangles = 0;

  bool covered(int x, int y) const {
    return coverage[static_cast<std::size_t>(y) * resolution + x];
  }
};

// Rasterizes the fixed-diagonal triangulation of the dense quads into UV
// space, writing barycentrically interpolated colors. Triangles are
// processed in index order; the first write to a texel wins. Texels outside
// the chart are filled by 8 dilation passes, then a constant pad.
TextureMap bake_texture(const DenseGaussianMesh& dense, int resolution);

}  // namespace topomesh
