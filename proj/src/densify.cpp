#include "topomesh/densify.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>

#include "topomesh/error.hpp"

namespace topomesh {

double bilinear_sample(double a00, double a0n, double an0, double ann, int i, int j, int n) {
  if (n < 2) throw ValidationError("bilinear sample requires N >= 2");
  const auto w = bilinear_weights(i, j, n);
  return w[0] * a00 + w[1] * an0 + w[2] * ann + w[3] * a0n;
}

std::array<double, 4> bilinear_weights(int i, int j, int n) {
  if (n < 2) throw ValidationError("bilinear weights require N >= 2");
  const double d = static_cast<double>(n - 1) * static_cast<double>(n - 1);
  const double fi = i, fj = j, ri = n - 1 - i, rj = n - 1 - j;
  // Order matches quad corners (v0, v1, v2, v3): v1 is reached along i, v3 along j.
  return {ri * rj / d, fi * rj / d, fi * fj / d, ri * fj / d};
}

namespace {

// Canonical identity of a lattice site so shared corners/edges deduplicate
// across quads: corner -> base vertex; edge site -> (sorted vertex pair,
// fraction from the smaller index); interior -> (quad, i, j).
struct SiteKey {
  int kind;  // 0 corner, 1 edge, 2 interior
  long a, b, c;
  bool operator<(const SiteKey& o) const {
    return std::tie(kind, a, b, c) < std::tie(o.kind, o.a, o.b, o.c);
  }
};

SiteKey classify_site(const QuadFace& q, int i, int j, int n) {
  const int last = n - 1;
  const bool i0 = i == 0, i1 = i == last, j0 = j == 0, j1 = j == last;
  if (i0 && j0) return {0, q[0], 0, 0};
  if (i1 && j0) return {0, q[1], 0, 0};
  if (i1 && j1) return {0, q[2], 0, 0};
  if (i0 && j1) return {0, q[3], 0, 0};
  auto edge_key = [&](int va, int vb, int step) -> SiteKey {
    if (va < vb) return {1, va, vb, step};
    return {1, vb, va, last - step};
  };
  if (j0) return edge_key(q[0], q[1], i);
  if (j1) return edge_key(q[3], q[2], i);
  if (i0) return edge_key(q[0], q[3], j);
  if (i1) return edge_key(q[1], q[2], j);
  return {2, 0, 0, 0};  // caller substitutes the quad-local id
}

Quat interpolate_rotation(const std::array<const Quat*, 4>& corners,
                          const std::array<double, 4>& w) {
  // Hemisphere-align to the first corner before the componentwise blend.
  const Quat& ref = *corners[0];
  Quat acc = Quat::Zero();
  for (int k = 0; k < 4; ++k) {
    const Quat& q = *corners[static_cast<std::size_t>(k)];
    acc += w[static_cast<std::size_t>(k)] * (ref.dot(q) < 0.0 ? Quat(-q) : q);
  }
  return quat_normalized(acc);
}

}  // namespace

DenseGaussianMesh densify_uv(const GaussianMesh& base, int n) {
  if (n < 2) throw ValidationError("densification requires N >= 2");
  const Topology& topo = *base.topology;
  if (static_cast<int>(topo.uv.size()) != topo.n_v)
    throw ValidationError("densification requires per-vertex UVs");

  DenseGaussianMesh dense;
  dense.base = base.topology;
  dense.n = n;

  // Base vertices keep their indices; new sites are appended on first visit.
  std::map<SiteKey, int> site_index;
  for (int v = 0; v < topo.n_v; ++v) site_index[{0, v, 0, 0}] = v;

  auto append_site = [&](const QuadFace& q, const std::array<double, 4>& w) {
    dense.corner_index.push_back({q[0], q[1], q[2], q[3]});
    dense.weights.push_back(w);
    std::array<const Quat*, 4> rot_corners{};
    Vec3 pos = Vec3::Zero(), col = Vec3::Zero();
    Vec2 uv = Vec2::Zero();
    for (int k = 0; k < 4; ++k) {
      const std::size_t v = static_cast<std::size_t>(q[k]);
      pos += w[static_cast<std::size_t>(k)] * base.positions[v];
      col += w[static_cast<std::size_t>(k)] * base.colors[v];
      uv += w[static_cast<std::size_t>(k)] * topo.uv[v];
      rot_corners[static_cast<std::size_t>(k)] = &base.rotations[v];
    }
    dense.positions.push_back(pos);
    dense.colors.push_back(col);
    dense.uv.push_back(uv);
    dense.rotations.push_back(interpolate_rotation(rot_corners, w));
    dense.scales.push_back(Vec3::Ones());  // set by refresh below
    dense.opacities.push_back(1.0);
  };

  // Seed the base-aliased sites in vertex order.
  dense.positions = base.positions;
  dense.colors = base.colors;
  dense.rotations = base.rotations;
  dense.scales = base.scales;
  dense.opacities.assign(static_cast<std::size_t>(topo.n_v), 1.0);
  dense.uv = topo.uv;
  dense.corner_index.resize(static_cast<std::size_t>(topo.n_v));
  dense.weights.resize(static_cast<std::size_t>(topo.n_v));
  for (int v = 0; v < topo.n_v; ++v) {
    dense.corner_index[static_cast<std::size_t>(v)] = {v, v, v, v};
    dense.weights[static_cast<std::size_t>(v)] = {1.0, 0.0, 0.0, 0.0};
  }

  long interior_counter = 0;
  std::vector<int> lattice(static_cast<std::size_t>(n) * n);
  for (int f = 0; f < topo.n_f; ++f) {
    const QuadFace& q = topo.quad_faces[static_cast<std::size_t>(f)];
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        SiteKey key = classify_site(q, i, j, n);
        if (key.kind == 2) key = {2, interior_counter++, 0, 0};
        auto [it, inserted] = site_index.try_emplace(key, dense.size());
        if (inserted) append_site(q, bilinear_weights(i, j, n));
        lattice[static_cast<std::size_t>(i) * n + j] = it->second;
      }
    }
    for (int i = 0; i + 1 < n; ++i) {
      for (int j = 0; j + 1 < n; ++j) {
        dense.quads.push_back({lattice[static_cast<std::size_t>(i) * n + j],
                               lattice[static_cast<std::size_t>(i + 1) * n + j],
                               lattice[static_cast<std::size_t>(i + 1) * n + j + 1],
                               lattice[static_cast<std::size_t>(i) * n + j + 1]});
      }
    }
  }

  // One-ring over the dense lattice edges.
  std::vector<std::set<int>> rings(static_cast<std::size_t>(dense.size()));
  for (const QuadFace& q : dense.quads) {
    for (int k = 0; k < 4; ++k) {
      const int a = q[k], b = q[(k + 1) % 4];
      rings[static_cast<std::size_t>(a)].insert(b);
      rings[static_cast<std::size_t>(b)].insert(a);
    }
  }
  dense.one_ring.resize(rings.size());
  for (std::size_t v = 0; v < rings.size(); ++v)
    dense.one_ring[v].assign(rings[v].begin(), rings[v].end());

  refresh_dense_positions(dense, base);
  return dense;
}

void refresh_dense_positions(DenseGaussianMesh& dense, const GaussianMesh& base_t) {
  const std::size_t n = static_cast<std::size_t>(dense.size());
  for (std::size_t d = 0; d < n; ++d) {
    Vec3 pos = Vec3::Zero();
    for (int k = 0; k < 4; ++k)
      pos += dense.weights[d][static_cast<std::size_t>(k)] *
             base_t.positions[static_cast<std::size_t>(dense.corner_index[d][static_cast<std::size_t>(k)])];
    dense.positions[d] = pos;
  }
  for (std::size_t d = 0; d < n; ++d) {
    double dmin = std::numeric_limits<double>::infinity();
    for (int j : dense.one_ring[d])
      dmin = std::min(dmin, (dense.positions[static_cast<std::size_t>(j)] - dense.positions[d]).norm());
    if (!std::isfinite(dmin)) dmin = 1.0;
    dense.scales[d] = Vec3(dmin, dmin, dmin);
    dense.opacities[d] = 1.0;
  }
}

}  // namespace topomesh
