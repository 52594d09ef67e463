#include "topomesh/render.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "topomesh/error.hpp"
#include "topomesh/threads.hpp"

namespace topomesh {

namespace {

constexpr double kEigenFloor = 1e-12;  // px^2, keeps the 2D covariance invertible
constexpr std::size_t kRowChunk = 8;   // rows per deterministic work chunk

Mat2 floor_eigenvalues(const Mat2& m) {
  // Symmetric 2x2 eigenvalues.
  const double a = m(0, 0), b = m(0, 1), d = m(1, 1);
  const double mean = 0.5 * (a + d);
  const double disc = std::sqrt(std::max(0.0, 0.25 * (a - d) * (a - d) + b * b));
  const double lo = mean - disc;
  if (lo >= kEigenFloor) return m;  // untouched in the regular case
  const double hi = std::max(mean + disc, kEigenFloor);
  // Eigenvector for the low eigenvalue.
  Vec2 v;
  if (std::abs(b) > 1e-300) {
    v = Vec2(lo - d, b).normalized();
  } else {
    v = (a <= d) ? Vec2(1, 0) : Vec2(0, 1);
  }
  const Vec2 w(-v.y(), v.x());
  return kEigenFloor * (v * v.transpose()) + hi * (w * w.transpose());
}

// Screen-space footprint of one Gaussian prepared for compositing.
struct Splat {
  int index = -1;
  double depth = 0.0;
  Vec2 center = Vec2::Zero();
  Mat2 inv_cov = Mat2::Zero();
  Vec3 color = Vec3::Zero();
  double opacity = 0.0;
  int x0 = 0, x1 = -1, y0 = 0, y1 = -1;  // inclusive pixel bounds

  // Cached geometry for the backward pass.
  Vec3 t_cam = Vec3::Zero();
  Mat2 cov = Mat2::Zero();
};

struct Frustum {
  std::vector<Splat> splats;  // sorted by (depth, index)
};

Mat23 projection_jacobian(const Camera& cam, const Vec3& t) {
  Mat23 j;
  const double iz = 1.0 / t.z();
  const double iz2 = iz * iz;
  j << cam.fx * iz, 0.0, -cam.fx * t.x() * iz2,
       0.0, cam.fy * iz, -cam.fy * t.y() * iz2;
  return j;
}

Frustum prepare_splats(const GaussianArrays& g, const Camera& cam, const RenderOptions& opts) {
  Frustum fr;
  fr.splats.reserve(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec3 t = cam.to_camera(g.positions[i]);
    if (!(t.z() > 0.0)) continue;  // culled

    Splat s;
    s.index = static_cast<int>(i);
    s.depth = t.z();
    s.t_cam = t;
    s.center = Vec2(cam.fx * t.x() / t.z() + cam.cx, cam.fy * t.y() / t.z() + cam.cy);
    s.color = g.colors[i];
    s.opacity = g.opacities[i];

    const Mat3 sigma = covariance_from(g.rotations[i], g.scales[i]);
    const Mat23 m = projection_jacobian(cam, t) * cam.rotation;
    Mat2 cov = m * sigma * m.transpose();
    cov(0, 0) += opts.lowpass;
    cov(1, 1) += opts.lowpass;
    cov = floor_eigenvalues(cov);
    s.cov = cov;
    const double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
    s.inv_cov << cov(1, 1) / det, -cov(0, 1) / det, -cov(1, 0) / det, cov(0, 0) / det;

    if (opts.alpha_min > 0.0) {
      if (s.opacity < opts.alpha_min) continue;  // can never pass the cut
      // Conservative radius: alpha >= alpha_min requires d^2 <= 2 lmax ln(opacity/alpha_min).
      const double mean = 0.5 * (cov(0, 0) + cov(1, 1));
      const double disc =
          std::sqrt(std::max(0.0, 0.25 * (cov(0, 0) - cov(1, 1)) * (cov(0, 0) - cov(1, 1)) +
                                      cov(0, 1) * cov(0, 1)));
      const double lmax = mean + disc;
      const double r = std::sqrt(std::max(0.0, 2.0 * lmax * std::log(s.opacity / opts.alpha_min)));
      s.x0 = std::max(0, static_cast<int>(std::floor(s.center.x() - r - 0.5)));
      s.x1 = std::min(cam.width - 1, static_cast<int>(std::ceil(s.center.x() + r - 0.5)));
      s.y0 = std::max(0, static_cast<int>(std::floor(s.center.y() - r - 0.5)));
      s.y1 = std::min(cam.height - 1, static_cast<int>(std::ceil(s.center.y() + r - 0.5)));
      if (s.x0 > s.x1 || s.y0 > s.y1) continue;
    } else {
      s.x0 = 0;
      s.x1 = cam.width - 1;
      s.y0 = 0;
      s.y1 = cam.height - 1;
    }
    fr.splats.push_back(s);
  }
  std::sort(fr.splats.begin(), fr.splats.end(), [](const Splat& a, const Splat& b) {
    return a.depth != b.depth ? a.depth < b.depth : a.index < b.index;
  });
  return fr;
}

// Splat ids (positions in the depth-sorted array) covering each pixel of a
// row range, CSR layout. Lists inherit the depth order.
struct PixelLists {
  std::vector<std::uint32_t> offsets;  // (rows*width + 1)
  std::vector<std::uint32_t> ids;
};

PixelLists bin_splats(const Frustum& fr, int width, int row_begin, int row_end) {
  const std::size_t n_px = static_cast<std::size_t>(row_end - row_begin) * width;
  PixelLists lists;
  lists.offsets.assign(n_px + 1, 0);
  for (const Splat& s : fr.splats) {
    const int y0 = std::max(s.y0, row_begin), y1 = std::min(s.y1, row_end - 1);
    for (int y = y0; y <= y1; ++y) {
      const std::size_t row = static_cast<std::size_t>(y - row_begin) * width;
      for (int x = s.x0; x <= s.x1; ++x) ++lists.offsets[row + x + 1];
    }
  }
  std::partial_sum(lists.offsets.begin(), lists.offsets.end(), lists.offsets.begin());
  lists.ids.resize(lists.offsets.back());
  std::vector<std::uint32_t> cursor(lists.offsets.begin(), lists.offsets.end() - 1);
  for (std::uint32_t sid = 0; sid < fr.splats.size(); ++sid) {
    const Splat& s = fr.splats[sid];
    const int y0 = std::max(s.y0, row_begin), y1 = std::min(s.y1, row_end - 1);
    for (int y = y0; y <= y1; ++y) {
      const std::size_t row = static_cast<std::size_t>(y - row_begin) * width;
      for (int x = s.x0; x <= s.x1; ++x) lists.ids[cursor[row + x]++] = sid;
    }
  }
  return lists;
}

inline double gaussian_weight(const Splat& s, const Vec2& d) {
  const double rho = d.dot(s.inv_cov * d);
  return std::exp(-0.5 * rho);
}

}  // namespace

Mat3 covariance_from(const Quat& q, const Vec3& s) {
  const Mat3 r = rotation_from_unit_quat(quat_normalized(q));
  const Mat3 a = r * s.asDiagonal();
  return a * a.transpose();
}

std::optional<Mat2> project_covariance(const Mat3& sigma, const Vec3& mu, const Camera& cam,
                                       double lowpass) {
  const Vec3 t = cam.to_camera(mu);
  if (!(t.z() > 0.0)) return std::nullopt;
  const Mat23 m = projection_jacobian(cam, t) * cam.rotation;
  Mat2 cov = m * sigma * m.transpose();
  cov(0, 0) += lowpass;
  cov(1, 1) += lowpass;
  return floor_eigenvalues(cov);
}

RenderedImage render(const GaussianArrays& g, const Camera& cam, const RenderOptions& opts) {
  cam.validate();
  const Frustum fr = prepare_splats(g, cam, opts);

  RenderedImage out;
  out.rgb = Image(cam.width, cam.height, Vec3::Zero());
  out.alpha.assign(static_cast<std::size_t>(cam.width) * cam.height, 0.0);

  parallel_chunks(static_cast<std::size_t>(cam.height), kRowChunk,
                  [&](std::size_t, std::size_t row_begin, std::size_t row_end) {
    const PixelLists lists = bin_splats(fr, cam.width, static_cast<int>(row_begin),
                                        static_cast<int>(row_end));
    for (std::size_t y = row_begin; y < row_end; ++y) {
      for (int x = 0; x < cam.width; ++x) {
        const std::size_t px = (y - row_begin) * cam.width + x;
        const Vec2 pix(x + 0.5, y + 0.5);
        Vec3 color = Vec3::Zero();
        double alpha_acc = 0.0;
        double transmittance = 1.0;
        for (std::uint32_t k = lists.offsets[px]; k < lists.offsets[px + 1]; ++k) {
          const Splat& s = fr.splats[lists.ids[k]];
          const double alpha = s.opacity * gaussian_weight(s, pix - s.center);
          if (alpha < opts.alpha_min) continue;
          color += s.color * (alpha * transmittance);
          alpha_acc += alpha * transmittance;
          transmittance *= 1.0 - alpha;
          if (transmittance < opts.t_min) break;
        }
        color += opts.background * transmittance;
        out.rgb.at(x, static_cast<int>(y)) = color;
        out.alpha[static_cast<std::size_t>(y) * cam.width + x] = alpha_acc;
      }
    }
  });
  return out;
}

RenderGradients render_backward(const GaussianArrays& g, const Camera& cam, const Image& upstream,
                                const RenderOptions& opts) {
  cam.validate();
  if (upstream.width != cam.width || upstream.height != cam.height)
    throw ValidationError("upstream gradient image size does not match the camera");
  const Frustum fr = prepare_splats(g, cam, opts);
  const std::size_t n = g.size();

  // Per-splat accumulators gathered per chunk, reduced in chunk order.
  struct SplatGrad {
    Vec2 d_center = Vec2::Zero();
    Mat2 d_cov = Mat2::Zero();
    Vec3 d_color = Vec3::Zero();
    double d_opacity = 0.0;
  };
  const std::size_t n_chunks = (static_cast<std::size_t>(cam.height) + kRowChunk - 1) / kRowChunk;
  std::vector<std::vector<SplatGrad>> chunk_grads(n_chunks);

  parallel_chunks(static_cast<std::size_t>(cam.height), kRowChunk,
                  [&](std::size_t chunk, std::size_t row_begin, std::size_t row_end) {
    auto& grads = chunk_grads[chunk];
    grads.assign(fr.splats.size(), SplatGrad{});
    const PixelLists lists = bin_splats(fr, cam.width, static_cast<int>(row_begin),
                                        static_cast<int>(row_end));
    struct Contribution {
      std::uint32_t sid;
      double alpha;
      double weight;  // exp term
      double transmittance_before;
    };
    std::vector<Contribution> stack;
    for (std::size_t y = row_begin; y < row_end; ++y) {
      for (int x = 0; x < cam.width; ++x) {
        const std::size_t px = (y - row_begin) * cam.width + x;
        if (lists.offsets[px] == lists.offsets[px + 1]) continue;
        const Vec3 dL_dC = upstream.at(x, static_cast<int>(y));
        if (dL_dC.isZero(0.0)) continue;
        const Vec2 pix(x + 0.5, y + 0.5);

        stack.clear();
        double transmittance = 1.0;
        for (std::uint32_t k = lists.offsets[px]; k < lists.offsets[px + 1]; ++k) {
          const Splat& s = fr.splats[lists.ids[k]];
          const double w = gaussian_weight(s, pix - s.center);
          const double alpha = s.opacity * w;
          if (alpha < opts.alpha_min) continue;
          stack.push_back({lists.ids[k], alpha, w, transmittance});
          transmittance *= 1.0 - alpha;
          if (transmittance < opts.t_min) break;
        }

        // Back-to-front: `behind` composites everything after the current
        // contribution over the background, so dC/dalpha = T * (c - behind).
        Vec3 behind = opts.background;
        for (std::size_t k = stack.size(); k-- > 0;) {
          const Contribution& c = stack[k];
          const Splat& s = fr.splats[c.sid];
          SplatGrad& sg = grads[c.sid];

          sg.d_color += dL_dC * (c.alpha * c.transmittance_before);
          const double d_alpha = dL_dC.dot(c.transmittance_before * (s.color - behind));
          sg.d_opacity += d_alpha * c.weight;
          const double d_rho = -0.5 * c.weight * s.opacity * d_alpha;
          const Vec2 d = pix - s.center;
          const Vec2 qd = s.inv_cov * d;
          sg.d_center += -(d_rho * 2.0) * qd;
          sg.d_cov += -d_rho * (qd * qd.transpose());

          behind = c.alpha * s.color + (1.0 - c.alpha) * behind;
        }
      }
    }
  });

  RenderGradients out;
  out.d_position.assign(n, Vec3::Zero());
  out.d_rotation.assign(n, Quat::Zero());
  out.d_scale.assign(n, Vec3::Zero());
  out.d_color.assign(n, Vec3::Zero());
  out.d_opacity.assign(n, 0.0);

  // Deterministic reduction, then the per-splat chain through projection.
  std::vector<SplatGrad> total(fr.splats.size());
  for (const auto& grads : chunk_grads) {
    for (std::size_t sid = 0; sid < grads.size(); ++sid) {
      total[sid].d_center += grads[sid].d_center;
      total[sid].d_cov += grads[sid].d_cov;
      total[sid].d_color += grads[sid].d_color;
      total[sid].d_opacity += grads[sid].d_opacity;
    }
  }

  for (std::size_t sid = 0; sid < fr.splats.size(); ++sid) {
    const Splat& s = fr.splats[sid];
    const SplatGrad& sg = total[sid];
    const std::size_t i = static_cast<std::size_t>(s.index);

    out.d_color[i] += sg.d_color;
    out.d_opacity[i] += sg.d_opacity;

    const Quat q_raw = g.rotations[i];
    const Quat q = quat_normalized(q_raw);
    const Mat3 r = rotation_from_unit_quat(q);
    const Vec3 scale = g.scales[i];
    const Mat3 a = r * scale.asDiagonal();
    const Mat3 sigma = a * a.transpose();

    const Mat23 j = projection_jacobian(cam, s.t_cam);
    const Mat23 m = j * cam.rotation;

    const Mat2 d_cov = 0.5 * (sg.d_cov + sg.d_cov.transpose());
    const Mat3 d_sigma = m.transpose() * d_cov * m;
    const Mat23 d_m = 2.0 * d_cov * m * sigma;
    const Mat23 d_j = d_m * cam.rotation.transpose();

    // J entries depend on the camera-space point.
    const double tx = s.t_cam.x(), ty = s.t_cam.y(), tz = s.t_cam.z();
    const double iz2 = 1.0 / (tz * tz), iz3 = iz2 / tz;
    Vec3 d_t = Vec3::Zero();
    d_t.x() += d_j(0, 2) * (-cam.fx * iz2);
    d_t.y() += d_j(1, 2) * (-cam.fy * iz2);
    d_t.z() += d_j(0, 0) * (-cam.fx * iz2) + d_j(1, 1) * (-cam.fy * iz2) +
               d_j(0, 2) * (2.0 * cam.fx * tx * iz3) + d_j(1, 2) * (2.0 * cam.fy * ty * iz3);
    // Projected center also moves with the point.
    d_t += j.transpose() * sg.d_center;
    out.d_position[i] += cam.rotation.transpose() * d_t;

    // Sigma = A A^T, A = R diag(s).
    const Mat3 d_a = 2.0 * d_sigma * a;
    const Mat3 rt_da = r.transpose() * d_a;
    out.d_scale[i] += Vec3(rt_da(0, 0), rt_da(1, 1), rt_da(2, 2));

    const Mat3 d_r = d_a * scale.asDiagonal();
    const auto dr_dq = rotation_quat_jacobian(q);
    Quat d_qhat;
    for (int k = 0; k < 4; ++k) d_qhat[k] = dr_dq[static_cast<std::size_t>(k)].cwiseProduct(d_r).sum();
    out.d_rotation[i] += quat_normalize_jacobian(q_raw).transpose() * d_qhat;
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!out.d_position[i].allFinite() || !out.d_rotation[i].allFinite() ||
        !out.d_scale[i].allFinite() || !out.d_color[i].allFinite() ||
        !std::isfinite(out.d_opacity[i]))
      throw Error("non-finite render gradient for gaussian " + std::to_string(i));
  }
  return out;
}

}  // namespace topomesh
