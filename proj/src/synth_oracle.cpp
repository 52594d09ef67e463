// Reference compositing for oracle comparisons. This file intentionally
// re-derives projection, covariance, and sorting from scratch instead of
// calling into the renderer.

#include <algorithm>
#include <cmath>
#include <vector>

#include "topomesh/synth.hpp"

namespace topomesh {

namespace {

// Quaternion (w,x,y,z) to rotation matrix, written out independently.
void quat_to_matrix(const double q_in[4], double r[3][3]) {
  double q[4] = {q_in[0], q_in[1], q_in[2], q_in[3]};
  const double norm = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  for (double& v : q) v /= norm;
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  r[0][0] = 1 - 2 * (y * y + z * z);
  r[0][1] = 2 * (x * y - w * z);
  r[0][2] = 2 * (x * z + w * y);
  r[1][0] = 2 * (x * y + w * z);
  r[1][1] = 1 - 2 * (x * x + z * z);
  r[1][2] = 2 * (y * z - w * x);
  r[2][0] = 2 * (x * z - w * y);
  r[2][1] = 2 * (y * z + w * x);
  r[2][2] = 1 - 2 * (x * x + y * y);
}

}  // namespace

Vec3 brute_force_composite(const GaussianArrays& g, const Camera& cam, int px, int py,
                           const Vec3& background) {
  struct Entry {
    double depth;
    std::size_t index;
    double alpha;
  };
  std::vector<Entry> entries;
  entries.reserve(g.size());

  for (std::size_t i = 0; i < g.size(); ++i) {
    // World -> camera.
    double t[3] = {0, 0, 0};
    for (int r = 0; r < 3; ++r) {
      t[r] = cam.translation[r];
      for (int c = 0; c < 3; ++c) t[r] += cam.rotation(r, c) * g.positions[i][c];
    }
    if (!(t[2] > 0.0)) continue;

    // Sigma = R S S^T R^T.
    double rot[3][3];
    double q[4] = {g.rotations[i][0], g.rotations[i][1], g.rotations[i][2], g.rotations[i][3]};
    quat_to_matrix(q, rot);
    double sigma[3][3] = {};
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        for (int k = 0; k < 3; ++k)
          sigma[r][c] += rot[r][k] * g.scales[i][k] * g.scales[i][k] * rot[c][k];

    // M = J W (2x3), cov2 = M sigma M^T.
    double j[2][3] = {{cam.fx / t[2], 0.0, -cam.fx * t[0] / (t[2] * t[2])},
                      {0.0, cam.fy / t[2], -cam.fy * t[1] / (t[2] * t[2])}};
    double m[2][3] = {};
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 3; ++c)
        for (int k = 0; k < 3; ++k) m[r][c] += j[r][k] * cam.rotation(k, c);
    double cov[2][2] = {};
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c)
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) cov[r][c] += m[r][a] * sigma[a][b] * m[c][b];

    const double det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
    const double inv[2][2] = {{cov[1][1] / det, -cov[0][1] / det},
                              {-cov[1][0] / det, cov[0][0] / det}};

    const double cx = cam.fx * t[0] / t[2] + cam.cx;
    const double cy = cam.fy * t[1] / t[2] + cam.cy;
    const double dx = (px + 0.5) - cx;
    const double dy = (py + 0.5) - cy;
    const double rho = dx * (inv[0][0] * dx + inv[0][1] * dy) + dy * (inv[1][0] * dx + inv[1][1] * dy);
    entries.push_back({t[2], i, g.opacities[i] * std::exp(-0.5 * rho)});
  }

  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.depth != b.depth ? a.depth < b.depth : a.index < b.index;
  });

  Vec3 color = Vec3::Zero();
  double transmittance = 1.0;
  for (const Entry& e : entries) {
    color += g.colors[e.index] * (e.alpha * transmittance);
    transmittance *= 1.0 - e.alpha;
  }
  return color + background * transmittance;
}

}  // namespace topomesh
