#pragma once

#include <memory>
#include <vector>

#include "topomesh/camera.hpp"
#include "topomesh/densify.hpp"
#include "topomesh/gaussian_mesh.hpp"
#include "topomesh/image.hpp"
#include "topomesh/losses.hpp"
#include "topomesh/optimizer.hpp"
#include "topomesh/render.hpp"
#include "topomesh/schedule.hpp"

namespace topomesh {

struct PipelineConfig {
  LossConfig loss;
  StageSchedule schedule;
  RenderOptions render;
  bool release_color_in_geometry = true;   // model shading changes while tracking
  bool optimize_rotation_in_texture = false;
  double scale_floor_factor = 1e-7;        // times scene scale, clamps scales positive
  AdamParams adam;                         // betas/epsilon; lr comes from the schedule
};

struct FrameDiagnostics {
  int frame_index = 0;
  std::vector<double> loss_curve;
  LossBreakdown final_breakdown;
};

// Per-sequence optimization state. The frame-0 reference (positions, rest
// dihedrals, initial scales, edge weights) is fixed for the whole run.
struct SequenceState {
  std::shared_ptr<const Topology> topology;
  Adjacency adjacency;
  Frame0Reference frame0;
  double scene_scale = 1.0;  // frame-0 bounding box diagonal
  GaussianMesh current;
  GaussianMesh previous;
  std::vector<Vec3> last_normals;
  std::vector<FrameDiagnostics> diagnostics;
};

// Builds and optimizes the first-frame Gaussian mesh from a registered mesh
// plus its texture, then snapshots the frame-0 reference quantities.
SequenceState init_first_frame(const std::vector<Vec3>& vertices,
                               std::shared_ptr<const Topology> topology, const Image& texture,
                               const std::vector<Camera>& cameras,
                               const std::vector<Image>& images, const PipelineConfig& cfg);

// Rebuilds a SequenceState around an already-optimized frame (for resume).
SequenceState restore_state(GaussianMesh mesh, const std::vector<Vec3>& frame0_positions,
                            const std::vector<Vec3>& frame0_scales, const PipelineConfig& cfg);

// Advances the state to frame t by optimizing position/rotation (and color,
// when released) against the frame-t images. Per-camera masks are optional.
void track_frame(SequenceState& state, const std::vector<Image>& images_t,
                 const std::vector<Camera>& cameras, const PipelineConfig& cfg,
                 const std::vector<std::vector<double>>* masks = nullptr);

// Refreshes the dense mesh from the current geometry and optimizes its
// colors (and optionally rotations) against the frame-t images.
void optimize_texture_frame(SequenceState& state, DenseGaussianMesh& dense,
                            const std::vector<Image>& images_t,
                            const std::vector<Camera>& cameras, const PipelineConfig& cfg,
                            std::vector<double>* loss_curve = nullptr);

// Image term of the loss for the given camera, pulled back to attributes.
ImageTermGradients image_term_gradients(const GaussianArrays& g, const Camera& cam,
                                        const Image& target, const std::vector<double>* mask,
                                        const LossConfig& loss_cfg, const RenderOptions& render_opts);

}  // namespace topomesh
