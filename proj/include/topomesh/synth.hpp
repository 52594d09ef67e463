#pragma once

#include <functional>
#include <string>
#include <vector>

#include "topomesh/camera.hpp"
#include "topomesh/gaussian_mesh.hpp"
#include "topomesh/image.hpp"
#include "topomesh/render.hpp"
#include "topomesh/types.hpp"

namespace topomesh {

// Cube-to-sphere quad mesh: 6*s^2 faces, 6*s^2+2 vertices, unit radius.
// The UV chart is a planar projection of (x,y); the two hemispheres overlap
// in UV by construction, which texture baking resolves first-write.
struct QuadSphere {
  Topology topology;
  std::vector<Vec3> positions;
};
QuadSphere make_quad_sphere(int subdivision);

enum class DeformPreset { RigidRotation, Bump, Stretch };

DeformPreset deform_preset_from_string(const std::string& name);
std::string to_string(DeformPreset preset);

// Deterministic smooth deformations with frame 0 equal to the base mesh.
//  rigid-rotation: magnitude = degrees per frame about +z
//  bump:           magnitude = peak displacement of a geodesic patch along
//                  frame-0 normals under a sin^2 temporal envelope
//  stretch:        magnitude = peak relative x-axis stretch
std::vector<std::vector<Vec3>> deform_sequence(const QuadSphere& base, DeformPreset preset,
                                               int frames, double magnitude);

// Procedural UV textures. The checkerboard is a bandlimited sinusoidal
// pattern; mottle adds seeded smooth value noise; the adversarial preset is
// a flat color that defeats photometric tracking on purpose.
using TextureFn = std::function<Vec3(double, double)>;
TextureFn checker_texture(int cycles, unsigned seed, double mottle_amplitude = 0.08);
TextureFn flat_texture(const Vec3& color);
Image rasterize_texture(const TextureFn& fn, int resolution);

// Cameras on a hemisphere ring looking at the origin.
std::vector<Camera> camera_ring(int count, double distance, double elevation_deg, int width,
                                int height, double fov_deg);

// Ground-truth Gaussians bound to a deformed frame: flat ellipses aligned
// with the frame's vertex normals, colors sampled from the texture.
GaussianMesh ground_truth_gaussians(const std::vector<Vec3>& positions,
                                    std::shared_ptr<const Topology> topology,
                                    const std::vector<double>& frame0_min_dist,
                                    const TextureFn& texture, int frame_index);

std::vector<double> min_one_ring_distances(const std::vector<Vec3>& positions,
                                           const Adjacency& adj);

struct SyntheticSequence {
  std::shared_ptr<const Topology> topology;
  std::vector<std::vector<Vec3>> frames;        // ground-truth vertices
  std::vector<Camera> cameras;
  Image texture;
  std::vector<std::vector<Image>> images;       // [frame][camera]
};

// Tracking quality vs. ground truth; errors are fractions of the mean
// frame-0 edge length.
struct TrackingReport {
  std::vector<double> mean_error;
  std::vector<double> median_error;
  std::vector<double> max_error;
  std::vector<double> adjacent_rmse;        // tracked vertices, frame t vs t-1
  std::vector<double> texture_psnr;         // optional, adjacent baked textures
  double mean_edge_length = 0.0;
};

TrackingReport tracking_error(const std::vector<std::vector<Vec3>>& tracked,
                              const std::vector<std::vector<Vec3>>& ground_truth,
                              const Topology& topo);

// Central finite differences of a scalar function; throws Error naming the
// component if an evaluation is non-finite.
std::vector<double> finite_diff_gradient(const std::function<double(const std::vector<double>&)>& f,
                                         std::vector<double> params, double h);

// Literal evaluation of the depth-sorted compositing sum for one pixel with
// no culling, truncation, or anti-alias floor. Independent of render():
// shares none of its projection or sorting code.
Vec3 brute_force_composite(const GaussianArrays& g, const Camera& cam, int px, int py,
                           const Vec3& background = Vec3::Zero());

}  // namespace topomesh
