#include "topomesh/config.hpp"

#include <fstream>

#include "json.hpp"
#include "topomesh/error.hpp"

namespace topomesh {

using nlohmann::json;

void RunConfig::validate() const {
  if (densify_n < 2) throw ValidationError("densify_n must be >= 2");
  if (texture_resolution < 1) throw ValidationError("texture_resolution must be >= 1");
  if (geometry_downscale < 1) throw ValidationError("geometry_downscale must be >= 1");
  pipeline.loss.validate();
  pipeline.schedule.validate();
  if (pipeline.render.alpha_min < 0.0 || pipeline.render.t_min < 0.0 ||
      pipeline.render.lowpass < 0.0)
    throw ValidationError("render thresholds must be >= 0");
  if (synth.subdivision < 1 || synth.frames < 1 || synth.cameras < 1 || synth.image_size < 1)
    throw ValidationError("synth settings must be positive");
}

namespace {

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void parse_loss(const json& j, LossConfig& loss) {
  maybe(j, "lambda_image", loss.lambda_image);
  maybe(j, "lambda_scale", loss.lambda_scale);
  maybe(j, "lambda_rigid", loss.lambda_rigid);
  maybe(j, "lambda_rot", loss.lambda_rot);
  maybe(j, "lambda_iso", loss.lambda_iso);
  maybe(j, "lambda_pos", loss.lambda_pos);
  maybe(j, "lambda_flat", loss.lambda_flat);
  maybe(j, "scale_cap", loss.scale_cap);
  maybe(j, "lambda_w", loss.lambda_w);
  maybe(j, "ssim_window", loss.ssim_window);
}

void parse_schedule(const json& j, PipelineConfig& p) {
  StageSchedule& s = p.schedule;
  maybe(j, "lr_position", s.lr_position);
  maybe(j, "lr_rotation", s.lr_rotation);
  maybe(j, "lr_scale", s.lr_scale);
  maybe(j, "lr_color", s.lr_color);
  maybe(j, "lr_decay", s.lr_decay);
  maybe(j, "init_iterations", s.init_iterations);
  maybe(j, "geometry_iterations", s.geometry_iterations);
  maybe(j, "texture_iterations", s.texture_iterations);
  maybe(j, "geometry_optimizes_color", p.release_color_in_geometry);
  maybe(j, "texture_optimizes_rotation", p.optimize_rotation_in_texture);
}

void parse_render(const json& j, RenderOptions& r) {
  maybe(j, "alpha_min", r.alpha_min);
  maybe(j, "t_min", r.t_min);
  maybe(j, "lowpass", r.lowpass);
  if (j.contains("background")) {
    const auto& b = j.at("background");
    if (b.size() != 3) throw ValidationError("render.background must have 3 components");
    r.background = Vec3(b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>());
  }
}

void parse_synth(const json& j, SynthConfig& s) {
  maybe(j, "preset", s.preset);
  maybe(j, "subdivision", s.subdivision);
  maybe(j, "frames", s.frames);
  maybe(j, "magnitude", s.magnitude);
  maybe(j, "cameras", s.cameras);
  maybe(j, "image_size", s.image_size);
  maybe(j, "camera_distance", s.camera_distance);
  maybe(j, "elevation_deg", s.elevation_deg);
  maybe(j, "fov_deg", s.fov_deg);
  maybe(j, "texture", s.texture);
  maybe(j, "texture_cycles", s.texture_cycles);
  maybe(j, "texture_resolution", s.texture_resolution);
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ValidationError("invalid config JSON in " + path + ": " + e.what());
  }

  RunConfig cfg;
  try {
    maybe(doc, "sequence_dir", cfg.sequence_dir);
    maybe(doc, "output_dir", cfg.output_dir);
    maybe(doc, "cameras", cfg.cameras_path);
    maybe(doc, "masks", cfg.masks);
    maybe(doc, "seed", cfg.seed);
    maybe(doc, "densify_n", cfg.densify_n);
    maybe(doc, "texture_resolution", cfg.texture_resolution);
    maybe(doc, "geometry_downscale", cfg.geometry_downscale);
    if (doc.contains("loss")) parse_loss(doc.at("loss"), cfg.pipeline.loss);
    if (doc.contains("schedule")) parse_schedule(doc.at("schedule"), cfg.pipeline);
    if (doc.contains("render")) parse_render(doc.at("render"), cfg.pipeline.render);
    if (doc.contains("synth")) parse_synth(doc.at("synth"), cfg.synth);
  } catch (const json::exception& e) {
    throw ValidationError("invalid config value in " + path + ": " + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
  const LossConfig& l = cfg.pipeline.loss;
  const StageSchedule& s = cfg.pipeline.schedule;
  const RenderOptions& r = cfg.pipeline.render;
  json doc = {
      {"sequence_dir", cfg.sequence_dir},
      {"output_dir", cfg.output_dir},
      {"cameras", cfg.cameras_path},
      {"masks", cfg.masks},
      {"seed", cfg.seed},
      {"densify_n", cfg.densify_n},
      {"texture_resolution", cfg.texture_resolution},
      {"geometry_downscale", cfg.geometry_downscale},
      {"loss",
       {{"lambda_image", l.lambda_image},
        {"lambda_scale", l.lambda_scale},
        {"lambda_rigid", l.lambda_rigid},
        {"lambda_rot", l.lambda_rot},
        {"lambda_iso", l.lambda_iso},
        {"lambda_pos", l.lambda_pos},
        {"lambda_flat", l.lambda_flat},
        {"scale_cap", l.scale_cap},
        {"lambda_w", l.lambda_w},
        {"ssim_window", l.ssim_window}}},
      {"schedule",
       {{"lr_position", s.lr_position},
        {"lr_rotation", s.lr_rotation},
        {"lr_scale", s.lr_scale},
        {"lr_color", s.lr_color},
        {"lr_decay", s.lr_decay},
        {"init_iterations", s.init_iterations},
        {"geometry_iterations", s.geometry_iterations},
        {"texture_iterations", s.texture_iterations},
        {"geometry_optimizes_color", cfg.pipeline.release_color_in_geometry},
        {"texture_optimizes_rotation", cfg.pipeline.optimize_rotation_in_texture}}},
      {"render",
       {{"alpha_min", r.alpha_min},
        {"t_min", r.t_min},
        {"lowpass", r.lowpass},
        {"background", {r.background.x(), r.background.y(), r.background.z()}}}},
      {"synth",
       {{"preset", cfg.synth.preset},
        {"subdivision", cfg.synth.subdivision},
        {"frames", cfg.synth.frames},
        {"magnitude", cfg.synth.magnitude},
        {"cameras", cfg.synth.cameras},
        {"image_size", cfg.synth.image_size},
        {"camera_distance", cfg.synth.camera_distance},
        {"elevation_deg", cfg.synth.elevation_deg},
        {"fov_deg", cfg.synth.fov_deg},
        {"texture", cfg.synth.texture},
        {"texture_cycles", cfg.synth.texture_cycles},
        {"texture_resolution", cfg.synth.texture_resolution}}},
  };
  return doc.dump(2);
}

void save_run_config(const std::string& path, const RunConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write config: " + path);
  out << run_config_to_json(cfg) << "\n";
}

}  // namespace topomesh
