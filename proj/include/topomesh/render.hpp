#pragma once

#include <optional>
#include <span>
#include <vector>

#include "topomesh/camera.hpp"
#include "topomesh/gaussian_mesh.hpp"
#include "topomesh/image.hpp"
#include "topomesh/types.hpp"

namespace topomesh {

struct RenderOptions {
  double alpha_min = 1.0 / 255.0;  // contributions below this are skipped
  double t_min = 1e-4;             // stop compositing once transmittance drops below
  double lowpass = 0.3;            // px^2 added to the 2D covariance diagonal
  Vec3 background = Vec3::Zero();

  // Exact-compositing mode for oracle comparisons: no culling thresholds,
  // no anti-alias floor.
  static RenderOptions oracle() {
    RenderOptions o;
    o.alpha_min = 0.0;
    o.t_min = 0.0;
    o.lowpass = 0.0;
    return o;
  }
};

struct RenderedImage {
  Image rgb;
  std::vector<double> alpha;  // accumulated opacity per pixel
};

struct RenderGradients {
  std::vector<Vec3> d_position;
  std::vector<Quat> d_rotation;
  std::vector<Vec3> d_scale;
  std::vector<Vec3> d_color;
  std::vector<double> d_opacity;
};

// Attribute views so both the base and the densified Gaussians render
// through the same path.
struct GaussianArrays {
  std::span<const Vec3> positions;
  std::span<const Quat> rotations;
  std::span<const Vec3> scales;
  std::span<const Vec3> colors;
  std::span<const double> opacities;

  GaussianArrays() = default;
  GaussianArrays(std::span<const Vec3> p, std::span<const Quat> q, std::span<const Vec3> s,
                 std::span<const Vec3> c, std::span<const double> o)
      : positions(p), rotations(q), scales(s), colors(c), opacities(o) {}
  GaussianArrays(const GaussianMesh& m)
      : positions(m.positions), rotations(m.rotations), scales(m.scales), colors(m.colors),
        opacities(m.opacities) {}

  std::size_t size() const { return positions.size(); }
};

// Sigma = R S S^T R^T for the (normalized) quaternion and positive scales.
Mat3 covariance_from(const Quat& q, const Vec3& s);

// Upper-left 2x2 of J W Sigma W^T J^T with eigenvalues floored to keep the
// matrix invertible. Empty when the point is behind the camera (culled).
std::optional<Mat2> project_covariance(const Mat3& sigma, const Vec3& mu, const Camera& cam,
                                       double lowpass = 0.0);

// Depth-sorted alpha compositing of all Gaussians (ties broken by index).
RenderedImage render(const GaussianArrays& g, const Camera& cam,
                     const RenderOptions& opts = RenderOptions());

// Analytic adjoint of render() for the given per-pixel dLoss/dC.
// Gradients are produced for all five attribute groups; stage freezing is
// the optimizer's concern.
RenderGradients render_backward(const GaussianArrays& g, const Camera& cam,
                                const Image& upstream, const RenderOptions& opts = RenderOptions());

}  // namespace topomesh
