#pragma once

#include <optional>
#include <vector>

#include "topomesh/adjacency.hpp"
#include "topomesh/gaussian_mesh.hpp"
#include "topomesh/image.hpp"
#include "topomesh/types.hpp"

namespace topomesh {

struct LossConfig {
  double lambda_image = 0.2;     // L1 / D-SSIM mix inside the image term
  double lambda_scale = 10.0;
  double lambda_rigid = 0.0;     // off by default; enable for the rigidity variant
  double lambda_rot = 20.0;
  double lambda_iso = 20.0;
  double lambda_pos = 1e3;
  double lambda_flat = 2e-4;
  double scale_cap = 1.5;        // penalize scales above cap * initial
  double lambda_w = -1.0;        // <0: use default_lambda_w at adjacency build time
  int ssim_window = 11;

  void validate() const;  // throws ValidationError
};

// Scalar term plus its gradient w.r.t. the rendered image.
struct ImageLossResult {
  double value = 0.0;
  double l1 = 0.0;
  double dssim = 0.0;
  Image d_rendered;
};

// (1-lambda) L1 + lambda (1-SSIM)/2, SSIM per channel with a Gaussian
// window, averaged over channels and window-complete centers. An optional
// mask weights pixels multiplicatively in both terms.
ImageLossResult image_loss(const Image& rendered, const Image& target,
                           const std::vector<double>* mask, const LossConfig& cfg);

// Per-vertex sums of the minimum scale component plus hinge violations
// above cap * s_init. Gradient flows to the argmin component (lowest index
// on ties) and to every violating component.
struct ScaleLossResult {
  double value = 0.0;
  std::vector<Vec3> d_scale;
};
ScaleLossResult scale_loss(const std::vector<Vec3>& s, const std::vector<Vec3>& s_init, double cap);

// Shared gradient carrier for the pairwise (edge) losses.
struct PairLossResult {
  double value = 0.0;
  std::vector<Vec3> d_position;
  std::vector<Quat> d_rotation;  // only filled by terms touching rotations
};

// Short-term local rigidity between consecutive frames; gradients w.r.t.
// the frame-t attributes only.
PairLossResult rigid_loss(const std::vector<Vec3>& pos_prev, const std::vector<Quat>& rot_prev,
                          const std::vector<Vec3>& pos_cur, const std::vector<Quat>& rot_cur,
                          const Adjacency& adj);

// Rotation-similarity of relative rotations between consecutive frames.
PairLossResult rot_loss(const std::vector<Quat>& rot_prev, const std::vector<Quat>& rot_cur,
                        const Adjacency& adj);

// Long-term local isometry against frame-0 edge lengths.
PairLossResult iso_loss(const std::vector<Vec3>& pos0, const std::vector<Vec3>& pos_cur,
                        const Adjacency& adj);

// Squared deviation of each vertex from its one-ring centroid.
struct PosLossResult {
  double value = 0.0;
  std::vector<Vec3> d_position;
  int n_isolated = 0;  // vertices skipped for lack of neighbors
};
PosLossResult pos_loss(const std::vector<Vec3>& positions, const Adjacency& adj);

// sum_e (1 - cos(theta_t - theta_0)) over interior edges valid in both
// frames; gradients flow through the dihedral angles to positions.
struct FlatLossResult {
  double value = 0.0;
  std::vector<Vec3> d_position;
  int n_excluded = 0;
};
FlatLossResult flat_loss(const std::vector<Vec3>& positions, const Topology& topo,
                         const Adjacency& adj, const std::vector<double>& theta0,
                         const std::vector<bool>& valid0);

// Weighted sum of the geometry-stage terms with per-term values retained.
struct LossBreakdown {
  double image = 0.0;
  double rigid = 0.0;
  double rot = 0.0;
  double iso = 0.0;
  double pos = 0.0;
  double flat = 0.0;
  double phy = 0.0;   // lambda-weighted physical aggregate
  double topo = 0.0;  // lambda-weighted topological aggregate
  double total = 0.0;
  std::vector<Vec3> d_position;
  std::vector<Quat> d_rotation;
  std::vector<Vec3> d_color;
  std::vector<Vec3> d_scale;
  std::vector<double> d_opacity;
};

// Image-term contribution already pulled back to gaussian attributes.
struct ImageTermGradients {
  double value = 0.0;
  std::vector<Vec3> d_position;
  std::vector<Quat> d_rotation;
  std::vector<Vec3> d_color;
  std::vector<Vec3> d_scale;
  std::vector<double> d_opacity;
};

struct Frame0Reference {
  std::vector<Vec3> positions;
  std::vector<double> theta0;
  std::vector<bool> theta0_valid;
  std::vector<Vec3> s_init;
};

LossBreakdown geo_loss(const std::vector<Vec3>& pos_cur, const std::vector<Quat>& rot_cur,
                       const std::vector<Vec3>& pos_prev, const std::vector<Quat>& rot_prev,
                       const Frame0Reference& ref, const Topology& topo, const Adjacency& adj,
                       const ImageTermGradients& image_term, const LossConfig& cfg);

}  // namespace topomesh
