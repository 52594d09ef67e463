#pragma once

#include <string>

#include "topomesh/densify.hpp"
#include "topomesh/gaussian_mesh.hpp"

namespace topomesh {

// Binary checkpoint, little-endian, versioned:
//   magic "TPGM" | u32 version | i64 frame_index | u64 n_v
//   | f64 positions[3 n] | f64 rotations[4 n] | f64 scales[3 n]
//   | f64 colors[3 n] | f64 opacities[n]
// Topology is not stored; the caller re-attaches it on load.
void save_checkpoint(const std::string& path, const GaussianMesh& mesh);
GaussianMesh load_checkpoint(const std::string& path, std::shared_ptr<const Topology> topology);

// Dense-state checkpoint (the attributes that persist across frames):
//   magic "TPGD" | u32 version | i32 lattice N | u64 count
//   | f64 colors[3 count] | f64 rotations[4 count]
void save_dense_checkpoint(const std::string& path, const DenseGaussianMesh& dense);
void load_dense_checkpoint(const std::string& path, DenseGaussianMesh& dense);

}  // namespace topomesh
