#include "topomesh/topology.hpp"

#include <map>
#include <sstream>

#include "topomesh/error.hpp"

namespace topomesh {

Topology make_topology(std::vector<QuadFace> faces, std::vector<Vec2> uv, int n_v) {
  Topology t;
  t.n_v = n_v;
  t.n_f = static_cast<int>(faces.size());

  for (std::size_t f = 0; f < faces.size(); ++f) {
    const QuadFace& q = faces[f];
    for (int k = 0; k < 4; ++k) {
      if (q[k] < 0 || q[k] >= n_v) {
        std::ostringstream os;
        os << "face " << f << " references vertex " << q[k] << " outside [0," << n_v << ")";
        throw ValidationError(os.str());
      }
      for (int l = k + 1; l < 4; ++l) {
        if (q[k] == q[l]) {
          std::ostringstream os;
          os << "face " << f << " repeats vertex " << q[k];
          throw ValidationError(os.str());
        }
      }
    }
  }

  if (static_cast<int>(uv.size()) != n_v) {
    std::ostringstream os;
    os << "uv count " << uv.size() << " does not match vertex count " << n_v;
    throw ValidationError(os.str());
  }
  for (std::size_t i = 0; i < uv.size(); ++i) {
    if (!(uv[i].x() >= 0.0 && uv[i].x() <= 1.0 && uv[i].y() >= 0.0 && uv[i].y() <= 1.0)) {
      std::ostringstream os;
      os << "uv of vertex " << i << " outside [0,1]^2: (" << uv[i].x() << ", " << uv[i].y() << ")";
      throw ValidationError(os.str());
    }
  }

  std::map<std::pair<int, int>, int> edge_count;
  for (const QuadFace& q : faces) {
    for (int k = 0; k < 4; ++k) {
      const int a = q[k], b = q[(k + 1) % 4];
      edge_count[{std::min(a, b), std::max(a, b)}]++;
    }
  }
  for (const auto& [e, c] : edge_count) {
    if (c > 2) {
      std::ostringstream os;
      os << "non-manifold edge (" << e.first << "," << e.second << ") shared by " << c << " faces";
      throw ValidationError(os.str());
    }
  }

  t.n_e = static_cast<int>(edge_count.size());
  t.quad_faces = std::move(faces);
  t.uv = std::move(uv);
  return t;
}

}  // namespace topomesh
