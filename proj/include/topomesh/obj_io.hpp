#pragma once

#include <optional>
#include <string>
#include <vector>

#include "topomesh/topology.hpp"
#include "topomesh/types.hpp"

namespace topomesh {

// Quad-only OBJ with one UV per vertex. Vertex order in the file defines
// the topological order.
struct ObjMesh {
  std::vector<Vec3> positions;
  std::vector<Vec2> uvs;  // empty when the file has no vt records
  std::vector<QuadFace> faces;

  Topology topology() const;  // requires UVs
};

// Rejects non-quad faces and per-corner UV indices that disagree at a shared
// vertex, naming the offending line.
ObjMesh load_obj(const std::string& path);

void save_obj(const std::string& path, const std::vector<Vec3>& positions,
              const std::vector<Vec2>& uvs, const std::vector<QuadFace>& faces);

}  // namespace topomesh
