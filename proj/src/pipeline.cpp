#include "topomesh/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "topomesh/error.hpp"
#include "topomesh/synth.hpp"

namespace topomesh {

namespace {

double bounding_box_diagonal(const std::vector<Vec3>& pts) {
  if (pts.empty()) return 1.0;
  Vec3 lo = pts[0], hi = pts[0];
  for (const Vec3& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double d = (hi - lo).norm();
  return d > 0.0 ? d : 1.0;
}

// Flat double views over attribute arrays for the optimizer.
std::span<double> flat(std::vector<Vec3>& v) {
  return {v.empty() ? nullptr : v[0].data(), v.size() * 3};
}
std::span<double> flat(std::vector<Quat>& v) {
  return {v.empty() ? nullptr : v[0].data(), v.size() * 4};
}
std::span<const double> cflat(const std::vector<Vec3>& v) {
  return {v.empty() ? nullptr : v[0].data(), v.size() * 3};
}
std::span<const double> cflat(const std::vector<Quat>& v) {
  return {v.empty() ? nullptr : v[0].data(), v.size() * 4};
}

struct AttributeOptimizer {
  AdamState position, rotation, scale, color;

  explicit AttributeOptimizer(std::size_t n)
      : position(n * 3), rotation(n * 4), scale(n * 3), color(n * 3) {}
};

void apply_constraints(GaussianMesh& mesh, double scale_floor) {
  for (Quat& q : mesh.rotations) q = quat_normalized(q);
  for (Vec3& s : mesh.scales) s = s.cwiseMax(scale_floor);
  for (Vec3& c : mesh.colors) c = c.cwiseMax(0.0).cwiseMin(1.0);
}

}  // namespace

ImageTermGradients image_term_gradients(const GaussianArrays& g, const Camera& cam,
                                        const Image& target, const std::vector<double>* mask,
                                        const LossConfig& loss_cfg,
                                        const RenderOptions& render_opts) {
  const RenderedImage rendered = render(g, cam, render_opts);
  const ImageLossResult il = image_loss(rendered.rgb, target, mask, loss_cfg);
  const RenderGradients rg = render_backward(g, cam, il.d_rendered, render_opts);
  ImageTermGradients out;
  out.value = il.value;
  out.d_position = rg.d_position;
  out.d_rotation = rg.d_rotation;
  out.d_scale = rg.d_scale;
  out.d_color = rg.d_color;
  out.d_opacity = rg.d_opacity;
  return out;
}

namespace {

// Image term averaged over every camera. Evaluating the full rig each
// iteration keeps the descent direction consistent; per-view residual biases
// largely cancel in the mean.
ImageTermGradients accumulated_image_term(const GaussianArrays& g,
                                          const std::vector<Camera>& cameras,
                                          const std::vector<Image>& targets,
                                          const std::vector<std::vector<double>>* masks,
                                          const LossConfig& loss_cfg,
                                          const RenderOptions& render_opts) {
  const std::size_t n = g.size();
  ImageTermGradients total;
  total.d_position.assign(n, Vec3::Zero());
  total.d_rotation.assign(n, Quat::Zero());
  total.d_scale.assign(n, Vec3::Zero());
  total.d_color.assign(n, Vec3::Zero());
  total.d_opacity.assign(n, 0.0);
  const double inv = 1.0 / static_cast<double>(cameras.size());
  for (std::size_t c = 0; c < cameras.size(); ++c) {
    const std::vector<double>* mask = masks ? &(*masks)[c] : nullptr;
    const ImageTermGradients term =
        image_term_gradients(g, cameras[c], targets[c], mask, loss_cfg, render_opts);
    total.value += inv * term.value;
    for (std::size_t i = 0; i < n; ++i) {
      total.d_position[i] += inv * term.d_position[i];
      total.d_rotation[i] += inv * term.d_rotation[i];
      total.d_scale[i] += inv * term.d_scale[i];
      total.d_color[i] += inv * term.d_color[i];
      total.d_opacity[i] += inv * term.d_opacity[i];
    }
  }
  return total;
}

}  // namespace

SequenceState init_first_frame(const std::vector<Vec3>& vertices,
                               std::shared_ptr<const Topology> topology, const Image& texture,
                               const std::vector<Camera>& cameras,
                               const std::vector<Image>& images, const PipelineConfig& cfg) {
  if (cameras.empty() || images.size() != cameras.size())
    throw ValidationError("init: images must match cameras");
  cfg.loss.validate();
  cfg.schedule.validate();

  SequenceState state;
  state.topology = topology;
  const double lw = cfg.loss.lambda_w >= 0.0 ? cfg.loss.lambda_w
                                             : default_lambda_w(*topology, vertices);
  state.adjacency = build_adjacency(*topology, vertices, lw);
  state.scene_scale = bounding_box_diagonal(vertices);

  GaussianMesh mesh;
  mesh.topology = topology;
  mesh.frame_index = 0;
  mesh.positions = vertices;
  const std::size_t n = vertices.size();

  state.last_normals = vertex_normals(vertices, *topology);
  const std::vector<double> dmin = min_one_ring_distances(vertices, state.adjacency);
  mesh.rotations.resize(n);
  mesh.scales.resize(n);
  mesh.colors.resize(n);
  mesh.opacities.assign(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(dmin[i] > 0.0))
      throw Error("degenerate mesh: vertex " + std::to_string(i) +
                  " has zero distance to its one-ring");
    mesh.rotations[i] = quat_from_z_to(state.last_normals[i]);
    const double s0 = 0.5 * dmin[i];
    mesh.scales[i] = Vec3(s0, s0, s0);
    const Vec2& uv = topology->uv[i];
    mesh.colors[i] = sample_bilinear_uv(texture, uv.x(), uv.y());
  }

  const std::vector<Vec3> s_init = mesh.scales;
  const double scale_floor = cfg.scale_floor_factor * state.scene_scale;

  // First-frame optimization: rotation and scale under image + scale loss.
  AttributeOptimizer opt(n);
  FrameDiagnostics diag;
  diag.frame_index = 0;
  const auto& flags = cfg.schedule.flags(Stage::Init);
  for (int it = 0; it < cfg.schedule.init_iterations; ++it) {
    ImageTermGradients img = accumulated_image_term(GaussianArrays(mesh), cameras, images, nullptr,
                                                    cfg.loss, cfg.render);
    const ScaleLossResult sl = scale_loss(mesh.scales, s_init, cfg.loss.scale_cap);
    const double loss = img.value + cfg.loss.lambda_scale * sl.value;
    if (!std::isfinite(loss)) throw Error("init: non-finite loss at iteration " + std::to_string(it));
    diag.loss_curve.push_back(loss);

    const int total = cfg.schedule.init_iterations;
    if (flags.rotation) {
      adam_step(flat(mesh.rotations), cflat(img.d_rotation), opt.rotation,
                {cfg.schedule.decayed(cfg.schedule.lr_rotation, it, total), cfg.adam.beta1,
                 cfg.adam.beta2, cfg.adam.epsilon},
                "rotation");
    }
    if (flags.scale) {
      std::vector<Vec3> ds = img.d_scale;
      for (std::size_t i = 0; i < n; ++i) ds[i] += cfg.loss.lambda_scale * sl.d_scale[i];
      adam_step(flat(mesh.scales), cflat(ds), opt.scale,
                {cfg.schedule.decayed(cfg.schedule.lr_scale, it, total), cfg.adam.beta1,
                 cfg.adam.beta2, cfg.adam.epsilon},
                "scale");
    }
    apply_constraints(mesh, scale_floor);
  }

  state.frame0.positions = mesh.positions;
  state.frame0.s_init = s_init;
  const DihedralAngles rest = dihedral_angles(mesh, state.adjacency);
  state.frame0.theta0 = rest.angles;
  state.frame0.theta0_valid = rest.valid;

  state.current = mesh;
  state.previous = mesh;
  state.diagnostics.push_back(std::move(diag));
  return state;
}

SequenceState restore_state(GaussianMesh mesh, const std::vector<Vec3>& frame0_positions,
                            const std::vector<Vec3>& frame0_scales, const PipelineConfig& cfg) {
  SequenceState state;
  state.topology = mesh.topology;
  const double lw = cfg.loss.lambda_w >= 0.0 ? cfg.loss.lambda_w
                                             : default_lambda_w(*state.topology, frame0_positions);
  state.adjacency = build_adjacency(*state.topology, frame0_positions, lw);
  state.scene_scale = bounding_box_diagonal(frame0_positions);
  state.frame0.positions = frame0_positions;
  state.frame0.s_init = frame0_scales;
  const DihedralAngles rest = dihedral_angles(frame0_positions, *state.topology, state.adjacency);
  state.frame0.theta0 = rest.angles;
  state.frame0.theta0_valid = rest.valid;
  state.last_normals = vertex_normals(mesh.positions, *state.topology);
  state.current = std::move(mesh);
  state.previous = state.current;
  return state;
}

void track_frame(SequenceState& state, const std::vector<Image>& images_t,
                 const std::vector<Camera>& cameras, const PipelineConfig& cfg,
                 const std::vector<std::vector<double>>* masks) {
  if (cameras.empty() || images_t.size() != cameras.size())
    throw ValidationError("track: images must match cameras");
  if (masks && masks->size() != cameras.size())
    throw ValidationError("track: masks must match cameras");

  state.previous = state.current;
  GaussianMesh& mesh = state.current;
  mesh.frame_index = state.previous.frame_index + 1;
  const std::size_t n = static_cast<std::size_t>(mesh.size());
  const double scale_floor = cfg.scale_floor_factor * state.scene_scale;

  StageSchedule::Flags flags = cfg.schedule.flags(Stage::Geometry);
  flags.color = flags.color && cfg.release_color_in_geometry;

  AttributeOptimizer opt(n);
  FrameDiagnostics diag;
  diag.frame_index = mesh.frame_index;

  for (int it = 0; it < cfg.schedule.geometry_iterations; ++it) {
    ImageTermGradients img = accumulated_image_term(GaussianArrays(mesh), cameras, images_t, masks,
                                                    cfg.loss, cfg.render);
    LossBreakdown breakdown =
        geo_loss(mesh.positions, mesh.rotations, state.previous.positions,
                 state.previous.rotations, state.frame0, *state.topology, state.adjacency, img,
                 cfg.loss);
    if (!std::isfinite(breakdown.total)) {
      diag.final_breakdown = std::move(breakdown);
      state.diagnostics.push_back(std::move(diag));
      throw Error("track: non-finite loss at frame " + std::to_string(mesh.frame_index) +
                  ", iteration " + std::to_string(it));
    }
    diag.loss_curve.push_back(breakdown.total);

    const AdamParams base = cfg.adam;
    const int total = cfg.schedule.geometry_iterations;
    if (flags.position) {
      adam_step(flat(mesh.positions), cflat(breakdown.d_position), opt.position,
                {cfg.schedule.decayed(cfg.schedule.lr_position * state.scene_scale, it, total),
                 base.beta1, base.beta2, base.epsilon},
                "position");
    }
    if (flags.rotation) {
      adam_step(flat(mesh.rotations), cflat(breakdown.d_rotation), opt.rotation,
                {cfg.schedule.decayed(cfg.schedule.lr_rotation, it, total), base.beta1, base.beta2,
                 base.epsilon},
                "rotation");
    }
    if (flags.color) {
      adam_step(flat(mesh.colors), cflat(breakdown.d_color), opt.color,
                {cfg.schedule.decayed(cfg.schedule.lr_color, it, total), base.beta1, base.beta2,
                 base.epsilon},
                "color");
    }
    apply_constraints(mesh, scale_floor);

    if (it + 1 == cfg.schedule.geometry_iterations) diag.final_breakdown = std::move(breakdown);
  }
  state.last_normals = vertex_normals(mesh.positions, *state.topology, &state.last_normals);
  state.diagnostics.push_back(std::move(diag));
}

void optimize_texture_frame(SequenceState& state, DenseGaussianMesh& dense,
                            const std::vector<Image>& images_t,
                            const std::vector<Camera>& cameras, const PipelineConfig& cfg,
                            std::vector<double>* loss_curve) {
  if (cameras.empty() || images_t.size() != cameras.size())
    throw ValidationError("texture: images must match cameras");

  refresh_dense_positions(dense, state.current);
  const std::size_t n = static_cast<std::size_t>(dense.size());

  AdamState color_state(n * 3), rotation_state(n * 4);
  const bool opt_rotation = cfg.optimize_rotation_in_texture;

  GaussianArrays arrays{dense.positions, dense.rotations, dense.scales, dense.colors,
                        dense.opacities};

  for (int it = 0; it < cfg.schedule.texture_iterations; ++it) {
    const ImageTermGradients img =
        accumulated_image_term(arrays, cameras, images_t, nullptr, cfg.loss, cfg.render);
    if (!std::isfinite(img.value))
      throw Error("texture: non-finite loss at frame " + std::to_string(state.current.frame_index) +
                  ", iteration " + std::to_string(it));
    if (loss_curve) loss_curve->push_back(img.value);

    const int total = cfg.schedule.texture_iterations;
    adam_step(flat(dense.colors), cflat(img.d_color), color_state,
              {cfg.schedule.decayed(cfg.schedule.lr_color, it, total), cfg.adam.beta1,
               cfg.adam.beta2, cfg.adam.epsilon},
              "color");
    if (opt_rotation) {
      adam_step(flat(dense.rotations), cflat(img.d_rotation), rotation_state,
                {cfg.schedule.decayed(cfg.schedule.lr_rotation, it, total), cfg.adam.beta1,
                 cfg.adam.beta2, cfg.adam.epsilon},
                "rotation");
      for (Quat& q : dense.rotations) q = quat_normalized(q);
    }
    for (Vec3& c : dense.colors) c = c.cwiseMax(0.0).cwiseMin(1.0);
  }
}

}  // namespace topomesh
