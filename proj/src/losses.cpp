#include "topomesh/losses.hpp"

#include <algorithm>
#include <cmath>

#include "topomesh/error.hpp"

namespace topomesh {

void LossConfig::validate() const {
  if (lambda_image < 0.0 || lambda_image > 1.0)
    throw ValidationError("lambda_image must lie in [0,1]");
  for (double v : {lambda_scale, lambda_rigid, lambda_rot, lambda_iso, lambda_pos, lambda_flat})
    if (v < 0.0) throw ValidationError("loss weights must be >= 0");
  if (scale_cap <= 0.0) throw ValidationError("scale cap must be positive");
  if (ssim_window < 3 || ssim_window % 2 == 0)
    throw ValidationError("ssim window must be odd and >= 3");
}

namespace {

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(size));
  const int half = size / 2;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - half;
    w[static_cast<std::size_t>(i)] = std::exp(-0.5 * d * d / (sigma * sigma));
    sum += w[static_cast<std::size_t>(i)];
  }
  for (double& v : w) v /= sum;
  return w;
}

constexpr double kSsimC1 = 0.01 * 0.01;
constexpr double kSsimC2 = 0.03 * 0.03;

struct Scalar2D {
  int width = 0, height = 0;
  std::vector<double> v;
  Scalar2D() = default;
  Scalar2D(int w, int h) : width(w), height(h), v(static_cast<std::size_t>(w) * h, 0.0) {}
  double& at(int x, int y) { return v[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return v[static_cast<std::size_t>(y) * width + x]; }
};

}  // namespace

ImageLossResult image_loss(const Image& rendered, const Image& target,
                           const std::vector<double>* mask, const LossConfig& cfg) {
  if (rendered.width != target.width || rendered.height != target.height)
    throw ValidationError("image loss: rendered and target sizes differ");
  if (mask && mask->size() != rendered.size())
    throw ValidationError("image loss: mask size does not match the images");
  const int w = rendered.width, h = rendered.height;
  const int win = cfg.ssim_window;
  if (win > std::min(w, h))
    throw ValidationError("ssim window exceeds the image size");

  ImageLossResult res;
  res.d_rendered = Image(w, h, Vec3::Zero());

  auto mask_at = [&](int x, int y) {
    return mask ? (*mask)[static_cast<std::size_t>(y) * w + x] : 1.0;
  };

  // L1 term: mask-weighted mean absolute difference over pixels and channels.
  double mask_sum = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) mask_sum += mask_at(x, y);
  if (mask_sum > 0.0) {
    const double inv = 1.0 / (3.0 * mask_sum);
    double l1 = 0.0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double m = mask_at(x, y);
        if (m == 0.0) continue;
        const Vec3 diff = rendered.at(x, y) - target.at(x, y);
        for (int ch = 0; ch < 3; ++ch) {
          l1 += m * std::abs(diff[ch]) * inv;
          const double sign = diff[ch] > 0.0 ? 1.0 : (diff[ch] < 0.0 ? -1.0 : 0.0);
          res.d_rendered.at(x, y)[ch] += (1.0 - cfg.lambda_image) * m * sign * inv;
        }
      }
    }
    res.l1 = l1;
  }

  // D-SSIM term over window-complete centers.
  const int half = win / 2;
  const int cx0 = half, cx1 = w - half - 1;
  const int cy0 = half, cy1 = h - half - 1;
  const std::vector<double> kernel = gaussian_window(win, 1.5);

  double center_weight_sum = 0.0;
  for (int y = cy0; y <= cy1; ++y)
    for (int x = cx0; x <= cx1; ++x) center_weight_sum += mask_at(x, y);

  if (center_weight_sum > 0.0) {
    double ssim_mean = 0.0;
    // Per-center coefficient fields for the adjoint correlation.
    std::array<Scalar2D, 3> ca, cb, cc;
    for (int ch = 0; ch < 3; ++ch) {
      ca[static_cast<std::size_t>(ch)] = Scalar2D(w, h);
      cb[static_cast<std::size_t>(ch)] = Scalar2D(w, h);
      cc[static_cast<std::size_t>(ch)] = Scalar2D(w, h);
    }
    const double norm = 1.0 / (3.0 * center_weight_sum);

    for (int y = cy0; y <= cy1; ++y) {
      for (int x = cx0; x <= cx1; ++x) {
        const double m = mask_at(x, y);
        if (m == 0.0) continue;
        for (int ch = 0; ch < 3; ++ch) {
          double mu_x = 0, mu_y = 0, xx = 0, yy = 0, xy = 0;
          for (int dy = -half; dy <= half; ++dy) {
            for (int dx = -half; dx <= half; ++dx) {
              const double k = kernel[static_cast<std::size_t>(dy + half)] *
                               kernel[static_cast<std::size_t>(dx + half)];
              const double xv = rendered.at(x + dx, y + dy)[ch];
              const double yv = target.at(x + dx, y + dy)[ch];
              mu_x += k * xv;
              mu_y += k * yv;
              xx += k * xv * xv;
              yy += k * yv * yv;
              xy += k * xv * yv;
            }
          }
          const double var_x = xx - mu_x * mu_x;
          const double var_y = yy - mu_y * mu_y;
          const double cov = xy - mu_x * mu_y;
          const double a1 = 2.0 * mu_x * mu_y + kSsimC1;
          const double a2 = 2.0 * cov + kSsimC2;
          const double b1 = mu_x * mu_x + mu_y * mu_y + kSsimC1;
          const double b2 = var_x + var_y + kSsimC2;
          const double s = (a1 * a2) / (b1 * b2);
          ssim_mean += m * norm * s;

          const double ds_dmu = (2.0 * mu_y * a2) / (b1 * b2) - s * 2.0 * mu_x / b1;
          const double ds_dvar = -s / b2;
          const double ds_dcov = 2.0 * a1 / (b1 * b2);
          const double wgt = m * norm;
          ca[static_cast<std::size_t>(ch)].at(x, y) =
              wgt * (ds_dmu - 2.0 * ds_dvar * mu_x - ds_dcov * mu_y);
          cb[static_cast<std::size_t>(ch)].at(x, y) = wgt * 2.0 * ds_dvar;
          cc[static_cast<std::size_t>(ch)].at(x, y) = wgt * ds_dcov;
        }
      }
    }
    res.dssim = (1.0 - ssim_mean) / 2.0;

    // d(mean ssim)/dx_k = corr(ca) + x_k corr(cb) + y_k corr(cc); the D-SSIM
    // gradient carries the factor -lambda/2.
    const double outer = -cfg.lambda_image * 0.5;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int ch = 0; ch < 3; ++ch) {
          double acc_a = 0, acc_b = 0, acc_c = 0;
          const int py0 = std::max(cy0, y - half), py1 = std::min(cy1, y + half);
          const int px0 = std::max(cx0, x - half), px1 = std::min(cx1, x + half);
          for (int py = py0; py <= py1; ++py) {
            for (int px = px0; px <= px1; ++px) {
              const double k = kernel[static_cast<std::size_t>(y - py + half)] *
                               kernel[static_cast<std::size_t>(x - px + half)];
              acc_a += k * ca[static_cast<std::size_t>(ch)].at(px, py);
              acc_b += k * cb[static_cast<std::size_t>(ch)].at(px, py);
              acc_c += k * cc[static_cast<std::size_t>(ch)].at(px, py);
            }
          }
          res.d_rendered.at(x, y)[ch] +=
              outer * (acc_a + rendered.at(x, y)[ch] * acc_b + target.at(x, y)[ch] * acc_c);
        }
      }
    }
  } else {
    res.dssim = 0.0;
  }

  res.value = (1.0 - cfg.lambda_image) * res.l1 + cfg.lambda_image * res.dssim;
  return res;
}

ScaleLossResult scale_loss(const std::vector<Vec3>& s, const std::vector<Vec3>& s_init,
                           double cap) {
  if (s.size() != s_init.size()) throw ValidationError("scale loss: array sizes differ");
  ScaleLossResult res;
  res.d_scale.assign(s.size(), Vec3::Zero());
  for (std::size_t i = 0; i < s.size(); ++i) {
    int argmin = 0;
    for (int k = 1; k < 3; ++k)
      if (s[i][k] < s[i][argmin]) argmin = k;
    res.value += s[i][argmin];
    res.d_scale[i][argmin] += 1.0;
    for (int k = 0; k < 3; ++k) {
      const double excess = s[i][k] - cap * s_init[i][k];
      if (excess > 0.0) {
        res.value += excess;
        res.d_scale[i][k] += 1.0;
      }
    }
  }
  return res;
}

namespace {

// Iterates the double loop over i and j in ORN_i; each undirected edge is
// visited twice, matching the 1/(2 n_e) normalization.
template <typename Fn>
void for_directed_pairs(const Adjacency& adj, Fn&& fn) {
  for (std::size_t i = 0; i < adj.one_ring.size(); ++i)
    for (int j : adj.one_ring[i]) fn(static_cast<int>(i), j);
}

}  // namespace

PairLossResult rigid_loss(const std::vector<Vec3>& pos_prev, const std::vector<Quat>& rot_prev,
                          const std::vector<Vec3>& pos_cur, const std::vector<Quat>& rot_cur,
                          const Adjacency& adj) {
  const std::size_t n = pos_cur.size();
  PairLossResult res;
  res.d_position.assign(n, Vec3::Zero());
  res.d_rotation.assign(n, Quat::Zero());
  const double norm = 1.0 / (2.0 * static_cast<double>(adj.edges.size()));

  // Per-vertex rotation data reused across the ring.
  std::vector<Mat3> r_prev(n), r_cur(n);
  std::vector<Quat> q_cur_n(n);
  for (std::size_t i = 0; i < n; ++i) {
    r_prev[i] = rotation_from_unit_quat(quat_normalized(rot_prev[i]));
    q_cur_n[i] = quat_normalized(rot_cur[i]);
    r_cur[i] = rotation_from_unit_quat(q_cur_n[i]);
  }

  for_directed_pairs(adj, [&](int i, int j) {
    const std::size_t si = static_cast<std::size_t>(i), sj = static_cast<std::size_t>(j);
    const double w = adj.weight(i, j) * norm;
    const Vec3 e_prev = pos_prev[sj] - pos_prev[si];
    const Vec3 e_cur = pos_cur[sj] - pos_cur[si];
    const Mat3 a = r_prev[si] * r_cur[si].transpose();
    const Vec3 r = e_prev - a * e_cur;
    const double len = r.norm();
    res.value += w * len;
    if (len <= 0.0) return;  // subgradient 0 at the kink
    const Vec3 rhat = r / len;

    const Vec3 d_ecur = -w * a.transpose() * rhat;
    res.d_position[sj] += d_ecur;
    res.d_position[si] -= d_ecur;

    // dL/dA = -w rhat e_curᵀ ; A = R_prev R_curᵀ so dL/dR_cur = dL/dAᵀ R_prev.
    const Mat3 d_a = -w * rhat * e_cur.transpose();
    const Mat3 d_rcur = d_a.transpose() * r_prev[si];
    const auto dr_dq = rotation_quat_jacobian(q_cur_n[si]);
    Quat d_qhat;
    for (int k = 0; k < 4; ++k)
      d_qhat[k] = dr_dq[static_cast<std::size_t>(k)].cwiseProduct(d_rcur).sum();
    res.d_rotation[si] += quat_normalize_jacobian(rot_cur[si]).transpose() * d_qhat;
  });
  return res;
}

PairLossResult rot_loss(const std::vector<Quat>& rot_prev, const std::vector<Quat>& rot_cur,
                        const Adjacency& adj) {
  const std::size_t n = rot_cur.size();
  PairLossResult res;
  res.d_position.assign(n, Vec3::Zero());
  res.d_rotation.assign(n, Quat::Zero());
  const double norm = 1.0 / (2.0 * static_cast<double>(adj.edges.size()));

  // Relative rotation per vertex: rel = q̂_t ⊗ q̂_{t-1}^{-1}, plus the
  // Jacobian of rel w.r.t. the raw current quaternion.
  std::vector<Quat> rel(n);
  std::vector<Mat4> d_rel(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Quat qp = quat_normalized(rot_prev[i]);
    const Quat qc = quat_normalized(rot_cur[i]);
    rel[i] = quat_mul(qc, quat_conjugate(qp));
    d_rel[i] = quat_right_matrix(quat_conjugate(qp)) * quat_normalize_jacobian(rot_cur[i]);
  }

  for_directed_pairs(adj, [&](int i, int j) {
    const std::size_t si = static_cast<std::size_t>(i), sj = static_cast<std::size_t>(j);
    const double w = adj.weight(i, j) * norm;
    // Sign-align to stay on one sheet of the double cover.
    const double sign = rel[si].dot(rel[sj]) < 0.0 ? -1.0 : 1.0;
    const Quat diff = sign * rel[sj] - rel[si];
    const double len = diff.norm();
    res.value += w * len;
    if (len <= 0.0) return;
    const Quat dhat = diff / len;
    res.d_rotation[sj] += d_rel[sj].transpose() * (w * sign * dhat);
    res.d_rotation[si] -= d_rel[si].transpose() * (w * dhat);
  });
  return res;
}

PairLossResult iso_loss(const std::vector<Vec3>& pos0, const std::vector<Vec3>& pos_cur,
                        const Adjacency& adj) {
  const std::size_t n = pos_cur.size();
  PairLossResult res;
  res.d_position.assign(n, Vec3::Zero());
  const double norm = 1.0 / (2.0 * static_cast<double>(adj.edges.size()));

  for_directed_pairs(adj, [&](int i, int j) {
    const std::size_t si = static_cast<std::size_t>(i), sj = static_cast<std::size_t>(j);
    const double w = adj.weight(i, j) * norm;
    const double len0 = (pos0[sj] - pos0[si]).norm();
    const Vec3 e = pos_cur[sj] - pos_cur[si];
    const double len = e.norm();
    res.value += w * std::abs(len0 - len);
    if (len <= 0.0) return;
    const double sign = len > len0 ? 1.0 : (len < len0 ? -1.0 : 0.0);
    const Vec3 d = (w * sign / len) * e;
    res.d_position[sj] += d;
    res.d_position[si] -= d;
  });
  return res;
}

PosLossResult pos_loss(const std::vector<Vec3>& positions, const Adjacency& adj) {
  const std::size_t n = positions.size();
  PosLossResult res;
  res.d_position.assign(n, Vec3::Zero());
  const double inv_nv = 1.0 / static_cast<double>(n);

  for (std::size_t i = 0; i < n; ++i) {
    const auto& ring = adj.one_ring[i];
    if (ring.empty()) {
      ++res.n_isolated;
      continue;
    }
    Vec3 centroid = Vec3::Zero();
    for (int j : ring) centroid += positions[static_cast<std::size_t>(j)];
    centroid /= static_cast<double>(ring.size());
    const Vec3 dev = positions[i] - centroid;
    res.value += inv_nv * dev.squaredNorm();
    const Vec3 d = 2.0 * inv_nv * dev;
    res.d_position[i] += d;
    const Vec3 dn = d / static_cast<double>(ring.size());
    for (int j : ring) res.d_position[static_cast<std::size_t>(j)] -= dn;
  }
  return res;
}

FlatLossResult flat_loss(const std::vector<Vec3>& positions, const Topology& topo,
                         const Adjacency& adj, const std::vector<double>& theta0,
                         const std::vector<bool>& valid0) {
  if (theta0.size() != adj.interior_edges.size() || valid0.size() != theta0.size())
    throw ValidationError("flat loss: frame-0 angle arrays do not match the interior edges");
  FlatLossResult res;
  res.d_position.assign(positions.size(), Vec3::Zero());

  const DihedralAngles cur = dihedral_angles(positions, topo, adj);
  for (std::size_t k = 0; k < adj.interior_edges.size(); ++k) {
    if (!valid0[k] || !cur.valid[k]) {
      ++res.n_excluded;
      continue;
    }
    const double delta = cur.angles[k] - theta0[k];
    res.value += 1.0 - std::cos(delta);
    const double d_theta = std::sin(delta);
    const auto& faces = adj.edge_faces[static_cast<std::size_t>(adj.interior_edges[k])];
    accumulate_dihedral_gradient(positions, topo, faces[0], faces[1], d_theta, res.d_position);
  }
  return res;
}

LossBreakdown geo_loss(const std::vector<Vec3>& pos_cur, const std::vector<Quat>& rot_cur,
                       const std::vector<Vec3>& pos_prev, const std::vector<Quat>& rot_prev,
                       const Frame0Reference& ref, const Topology& topo, const Adjacency& adj,
                       const ImageTermGradients& image_term, const LossConfig& cfg) {
  const std::size_t n = pos_cur.size();
  LossBreakdown out;
  out.d_position.assign(n, Vec3::Zero());
  out.d_rotation.assign(n, Quat::Zero());
  out.d_color.assign(n, Vec3::Zero());
  out.d_scale.assign(n, Vec3::Zero());
  out.d_opacity.assign(n, 0.0);

  out.image = image_term.value;
  if (!image_term.d_position.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      out.d_position[i] += image_term.d_position[i];
      out.d_rotation[i] += image_term.d_rotation[i];
      out.d_color[i] += image_term.d_color[i];
      out.d_scale[i] += image_term.d_scale[i];
      out.d_opacity[i] += image_term.d_opacity[i];
    }
  }

  auto add_pair = [&](const PairLossResult& r, double lambda) {
    if (lambda == 0.0) return;
    for (std::size_t i = 0; i < n; ++i) {
      out.d_position[i] += lambda * r.d_position[i];
      if (!r.d_rotation.empty()) out.d_rotation[i] += lambda * r.d_rotation[i];
    }
  };

  {
    const PairLossResult r = rigid_loss(pos_prev, rot_prev, pos_cur, rot_cur, adj);
    out.rigid = r.value;
    add_pair(r, cfg.lambda_rigid);
  }
  {
    const PairLossResult r = rot_loss(rot_prev, rot_cur, adj);
    out.rot = r.value;
    add_pair(r, cfg.lambda_rot);
  }
  {
    const PairLossResult r = iso_loss(ref.positions, pos_cur, adj);
    out.iso = r.value;
    add_pair(r, cfg.lambda_iso);
  }
  {
    const PosLossResult r = pos_loss(pos_cur, adj);
    out.pos = r.value;
    if (cfg.lambda_pos > 0.0)
      for (std::size_t i = 0; i < n; ++i) out.d_position[i] += cfg.lambda_pos * r.d_position[i];
  }
  {
    const FlatLossResult r = flat_loss(pos_cur, topo, adj, ref.theta0, ref.theta0_valid);
    out.flat = r.value;
    if (cfg.lambda_flat > 0.0)
      for (std::size_t i = 0; i < n; ++i) out.d_position[i] += cfg.lambda_flat * r.d_position[i];
  }

  out.phy = cfg.lambda_rigid * out.rigid + cfg.lambda_rot * out.rot + cfg.lambda_iso * out.iso;
  out.topo = cfg.lambda_pos * out.pos + cfg.lambda_flat * out.flat;
  out.total = out.image + out.phy + out.topo;
  return out;
}

}  // namespace topomesh
