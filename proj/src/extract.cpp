#include "topomesh/extract.hpp"

#include <algorithm>
#include <cmath>

#include "topomesh/error.hpp"

namespace topomesh {

NormalExpansionResult normal_expansion(const GaussianMesh& mesh,
                                       const std::vector<Vec3>& normals) {
  if (normals.size() != mesh.positions.size())
    throw ValidationError("normal expansion: normal count does not match vertices");
  NormalExpansionResult res;
  res.positions = mesh.positions;
  for (std::size_t i = 0; i < mesh.positions.size(); ++i) {
    const Vec3& n = normals[i];
    const double len = n.norm();
    if (len <= 0.0) {
      ++res.n_skipped;
      continue;
    }
    const Vec3 unit = n / len;
    const Mat3 r = rotation_from_unit_quat(quat_normalized(mesh.rotations[i]));
    const Vec3 local = r.transpose() * unit;
    const Vec3& s = mesh.scales[i];
    const double denom = local.x() * local.x() / (s.x() * s.x()) +
                         local.y() * local.y() / (s.y() * s.y()) +
                         local.z() * local.z() / (s.z() * s.z());
    res.positions[i] += std::sqrt(1.0 / denom) * unit;
  }
  return res;
}

TextureMap bake_texture(const DenseGaussianMesh& dense, int resolution) {
  if (resolution < 1) throw ValidationError("texture resolution must be >= 1");
  TextureMap map;
  map.resolution = resolution;
  map.rgb = Image(resolution, resolution, Vec3::Zero());
  map.coverage.assign(static_cast<std::size_t>(resolution) * resolution, false);

  const double res = resolution;
  auto rasterize = [&](int i0, int i1, int i2) {
    const Vec2& a = dense.uv[static_cast<std::size_t>(i0)];
    const Vec2& b = dense.uv[static_cast<std::size_t>(i1)];
    const Vec2& c = dense.uv[static_cast<std::size_t>(i2)];
    const Vec2 e1 = b - a, e2 = c - a;
    const double denom = e1.x() * e2.y() - e1.y() * e2.x();
    if (std::abs(denom) < 1e-14) {
      ++map.degenerate_triangles;
      return;
    }
    const double u_min = std::min({a.x(), b.x(), c.x()});
    const double u_max = std::max({a.x(), b.x(), c.x()});
    const double v_min = std::min({a.y(), b.y(), c.y()});
    const double v_max = std::max({a.y(), b.y(), c.y()});
    const int x0 = std::max(0, static_cast<int>(std::floor(u_min * res - 0.5)));
    const int x1 = std::min(resolution - 1, static_cast<int>(std::ceil(u_max * res - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::floor(v_min * res - 0.5)));
    const int y1 = std::min(resolution - 1, static_cast<int>(std::ceil(v_max * res - 0.5)));

    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const Vec2 p((x + 0.5) / res, (y + 0.5) / res);
        const Vec2 d = p - a;
        const double w1 = (d.x() * e2.y() - d.y() * e2.x()) / denom;
        const double w2 = (e1.x() * d.y() - e1.y() * d.x()) / denom;
        const double w0 = 1.0 - w1 - w2;
        constexpr double kEps = -1e-9;
        if (w0 < kEps || w1 < kEps || w2 < kEps) continue;
        const std::size_t idx = static_cast<std::size_t>(y) * resolution + x;
        if (map.coverage[idx]) {
          ++map.overlap_count;
          continue;
        }
        map.coverage[idx] = true;
        // Texel row y maps v from the bottom; Image::at counts rows from the top.
        map.rgb.at(x, resolution - 1 - y) = w0 * dense.colors[static_cast<std::size_t>(i0)] +
                                            w1 * dense.colors[static_cast<std::size_t>(i1)] +
                                            w2 * dense.colors[static_cast<std::size_t>(i2)];
      }
    }
  };

  for (const QuadFace& q : dense.quads) {
    rasterize(q[0], q[1], q[2]);
    rasterize(q[0], q[2], q[3]);
  }

  // Fill the surrounding void: 8 nearest-neighbor dilation passes, then a
  // constant pad.
  std::vector<bool> filled = map.coverage;
  for (int pass = 0; pass < 8; ++pass) {
    std::vector<bool> next = filled;
    bool changed = false;
    for (int y = 0; y < resolution; ++y) {
      for (int x = 0; x < resolution; ++x) {
        const std::size_t idx = static_cast<std::size_t>(y) * resolution + x;
        if (filled[idx]) continue;
        Vec3 acc = Vec3::Zero();
        int count = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= resolution || ny >= resolution) continue;
            const std::size_t nidx = static_cast<std::size_t>(ny) * resolution + nx;
            if (!filled[nidx]) continue;
            acc += map.rgb.at(nx, resolution - 1 - ny);
            ++count;
          }
        }
        if (count > 0) {
          map.rgb.at(x, resolution - 1 - y) = acc / count;
          next[idx] = true;
          changed = true;
        }
      }
    }
    filled.swap(next);
    if (!changed) break;
  }
  const Vec3 pad(0.5, 0.5, 0.5);
  for (int y = 0; y < resolution; ++y)
    for (int x = 0; x < resolution; ++x)
      if (!filled[static_cast<std::size_t>(y) * resolution + x])
        map.rgb.at(x, resolution - 1 - y) = pad;

  return map;
}

}  // namespace topomesh
