#include "topomesh/gaussian_mesh.hpp"

#include <cmath>

namespace topomesh {

namespace {
constexpr double kDegenerateNormal2 = 1e-30;
}

Vec3 face_normal_unnormalized(const std::vector<Vec3>& positions, const QuadFace& f) {
  // Newell formula over the cyclic vertex list.
  Vec3 n = Vec3::Zero();
  for (int k = 0; k < 4; ++k) {
    const Vec3& a = positions[static_cast<std::size_t>(f[k])];
    const Vec3& b = positions[static_cast<std::size_t>(f[(k + 1) % 4])];
    n += a.cross(b);
  }
  return n;
}

std::vector<Vec3> vertex_normals(const std::vector<Vec3>& positions, const Topology& topo,
                                 const std::vector<Vec3>* previous) {
  std::vector<Vec3> acc(static_cast<std::size_t>(topo.n_v), Vec3::Zero());
  for (const QuadFace& f : topo.quad_faces) {
    const Vec3 n = face_normal_unnormalized(positions, f);  // length = 2 * area
    for (int k = 0; k < 4; ++k) acc[static_cast<std::size_t>(f[k])] += n;
  }
  std::vector<Vec3> out(static_cast<std::size_t>(topo.n_v));
  for (int i = 0; i < topo.n_v; ++i) {
    const std::size_t si = static_cast<std::size_t>(i);
    const double n2 = acc[si].squaredNorm();
    if (n2 > kDegenerateNormal2) {
      out[si] = acc[si] / std::sqrt(n2);
    } else if (previous && si < previous->size() && (*previous)[si].squaredNorm() > 0.0) {
      out[si] = (*previous)[si].normalized();
    } else {
      out[si] = Vec3(0.0, 0.0, 1.0);
    }
  }
  return out;
}

DihedralAngles dihedral_angles(const std::vector<Vec3>& positions, const Topology& topo,
                               const Adjacency& adj) {
  DihedralAngles result;
  result.angles.assign(adj.interior_edges.size(), 0.0);
  result.valid.assign(adj.interior_edges.size(), true);
  for (std::size_t k = 0; k < adj.interior_edges.size(); ++k) {
    const auto& faces = adj.edge_faces[static_cast<std::size_t>(adj.interior_edges[k])];
    const Vec3 na = face_normal_unnormalized(positions, topo.quad_faces[static_cast<std::size_t>(faces[0])]);
    const Vec3 nb = face_normal_unnormalized(positions, topo.quad_faces[static_cast<std::size_t>(faces[1])]);
    if (na.squaredNorm() <= kDegenerateNormal2 || nb.squaredNorm() <= kDegenerateNormal2) {
      result.valid[k] = false;
      ++result.n_invalid;
      continue;
    }
    result.angles[k] = std::atan2(na.cross(nb).norm(), na.dot(nb));
  }
  return result;
}

bool accumulate_dihedral_gradient(const std::vector<Vec3>& positions, const Topology& topo,
                                  int face_a, int face_b, double coeff,
                                  std::vector<Vec3>& grad) {
  const QuadFace& fa = topo.quad_faces[static_cast<std::size_t>(face_a)];
  const QuadFace& fb = topo.quad_faces[static_cast<std::size_t>(face_b)];
  const Vec3 na = face_normal_unnormalized(positions, fa);
  const Vec3 nb = face_normal_unnormalized(positions, fb);
  if (na.squaredNorm() <= kDegenerateNormal2 || nb.squaredNorm() <= kDegenerateNormal2)
    return false;

  // theta = atan2(|na x nb|, na . nb)
  const Vec3 c = na.cross(nb);
  const double y = c.norm();
  const double x = na.dot(nb);
  const double denom = x * x + y * y;
  const double dtheta_dx = -y / denom;
  const double dtheta_dy = x / denom;
  // Coplanar faces: |na x nb| is not differentiable at 0; use subgradient 0.
  const Vec3 dL_dc = (y > 0.0) ? Vec3(coeff * dtheta_dy * c / y) : Vec3(Vec3::Zero());

  const Vec3 dL_dna = coeff * dtheta_dx * nb + nb.cross(dL_dc);
  const Vec3 dL_dnb = coeff * dtheta_dx * na + dL_dc.cross(na);

  // Newell normal: dN/dv_k pairs each vertex with its cyclic neighbors.
  auto accumulate_face = [&](const QuadFace& f, const Vec3& dL_dn) {
    for (int k = 0; k < 4; ++k) {
      const Vec3& next = positions[static_cast<std::size_t>(f[(k + 1) % 4])];
      const Vec3& prev = positions[static_cast<std::size_t>(f[(k + 3) % 4])];
      grad[static_cast<std::size_t>(f[k])] += (next - prev).cross(dL_dn);
    }
  };
  accumulate_face(fa, dL_dna);
  accumulate_face(fb, dL_dnb);
  return true;
}

}  // namespace topomesh
