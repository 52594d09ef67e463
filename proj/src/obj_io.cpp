#include "topomesh/obj_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "topomesh/error.hpp"

namespace topomesh {

Topology ObjMesh::topology() const {
  if (uvs.size() != positions.size())
    throw ValidationError("mesh has no per-vertex UV chart");
  return make_topology(faces, uvs, static_cast<int>(positions.size()));
}

ObjMesh load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open OBJ file: " + path);

  ObjMesh mesh;
  std::vector<Vec2> vt;
  // uv index bound to each vertex (0 = unbound); -1 after a conflict.
  std::vector<long> vertex_uv;

  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ss >> x >> y >> z))
        throw ValidationError(path + ":" + std::to_string(line_no) + ": malformed vertex");
      mesh.positions.emplace_back(x, y, z);
      vertex_uv.push_back(0);
    } else if (tag == "vt") {
      double u, v;
      if (!(ss >> u >> v))
        throw ValidationError(path + ":" + std::to_string(line_no) + ": malformed texture coord");
      vt.emplace_back(u, v);
    } else if (tag == "f") {
      std::vector<std::pair<long, long>> corners;  // vertex, uv (1-based; 0 = none)
      std::string corner;
      while (ss >> corner) {
        long vi = 0, ti = 0;
        const std::size_t slash = corner.find('/');
        try {
          vi = std::stol(corner.substr(0, slash));
          if (slash != std::string::npos) {
            const std::string rest = corner.substr(slash + 1);
            const std::size_t slash2 = rest.find('/');
            const std::string tpart = rest.substr(0, slash2);
            if (!tpart.empty()) ti = std::stol(tpart);
          }
        } catch (const std::exception&) {
          throw ValidationError(path + ":" + std::to_string(line_no) + ": malformed face corner '" +
                                corner + "'");
        }
        corners.emplace_back(vi, ti);
      }
      if (corners.size() != 4)
        throw ValidationError(path + ":" + std::to_string(line_no) + ": face has " +
                              std::to_string(corners.size()) + " corners, quads required");
      QuadFace q;
      for (int k = 0; k < 4; ++k) {
        const auto [vi, ti] = corners[static_cast<std::size_t>(k)];
        if (vi < 1 || vi > static_cast<long>(mesh.positions.size()))
          throw ValidationError(path + ":" + std::to_string(line_no) + ": vertex index " +
                                std::to_string(vi) + " out of range");
        q[k] = static_cast<int>(vi - 1);
        if (ti != 0) {
          if (ti < 1 || ti > static_cast<long>(vt.size()))
            throw ValidationError(path + ":" + std::to_string(line_no) + ": uv index " +
                                  std::to_string(ti) + " out of range");
          long& bound = vertex_uv[static_cast<std::size_t>(vi - 1)];
          if (bound == 0) {
            bound = ti;
          } else if (bound != ti) {
            throw ValidationError(path + ":" + std::to_string(line_no) + ": vertex " +
                                  std::to_string(vi) +
                                  " referenced with conflicting uv indices (one UV per vertex)");
          }
        }
      }
      mesh.faces.push_back(q);
    }
  }

  const bool any_uv = std::any_of(vertex_uv.begin(), vertex_uv.end(), [](long t) { return t > 0; });
  if (any_uv) {
    mesh.uvs.resize(mesh.positions.size());
    for (std::size_t i = 0; i < vertex_uv.size(); ++i) {
      if (vertex_uv[i] == 0)
        throw ValidationError(path + ": vertex " + std::to_string(i + 1) +
                              " has no uv assignment while others do");
      mesh.uvs[i] = vt[static_cast<std::size_t>(vertex_uv[i] - 1)];
    }
  }
  return mesh;
}

void save_obj(const std::string& path, const std::vector<Vec3>& positions,
              const std::vector<Vec2>& uvs, const std::vector<QuadFace>& faces) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write OBJ file: " + path);
  char buf[256];
  for (const Vec3& p : positions) {
    std::snprintf(buf, sizeof buf, "v %.9g %.9g %.9g\n", p.x(), p.y(), p.z());
    out << buf;
  }
  const bool with_uv = !uvs.empty();
  for (const Vec2& t : uvs) {
    std::snprintf(buf, sizeof buf, "vt %.9g %.9g\n", t.x(), t.y());
    out << buf;
  }
  for (const QuadFace& f : faces) {
    if (with_uv) {
      std::snprintf(buf, sizeof buf, "f %d/%d %d/%d %d/%d %d/%d\n", f[0] + 1, f[0] + 1, f[1] + 1,
                    f[1] + 1, f[2] + 1, f[2] + 1, f[3] + 1, f[3] + 1);
    } else {
      std::snprintf(buf, sizeof buf, "f %d %d %d %d\n", f[0] + 1, f[1] + 1, f[2] + 1, f[3] + 1);
    }
    out << buf;
  }
  if (!out) throw Error("failed while writing OBJ file: " + path);
}

}  // namespace topomesh
