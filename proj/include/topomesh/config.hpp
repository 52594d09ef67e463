#pragma once

#include <string>
#include <vector>

#include "topomesh/pipeline.hpp"

namespace topomesh {

// Synthetic-sequence generation settings (the `synth` verb).
struct SynthConfig {
  std::string preset = "bump";
  int subdivision = 3;
  int frames = 10;
  double magnitude = 0.1;
  int cameras = 6;
  int image_size = 64;
  double camera_distance = 3.0;
  double elevation_deg = 35.0;
  double fov_deg = 45.0;
  std::string texture = "checker";  // or "flat" (adversarial)
  int texture_cycles = 4;
  int texture_resolution = 512;
};

struct RunConfig {
  std::string sequence_dir;
  std::string output_dir;
  std::string cameras_path;          // defaults to sequence_dir/cameras.json
  std::vector<std::string> masks;    // optional per-camera mask PNGs
  unsigned seed = 1;
  int densify_n = 30;
  int texture_resolution = 1024;
  int geometry_downscale = 1;
  PipelineConfig pipeline;
  SynthConfig synth;

  std::string cameras_file() const {
    return cameras_path.empty() ? sequence_dir + "/cameras.json" : cameras_path;
  }

  void validate() const;  // value ranges only; path checks happen per verb
};

RunConfig load_run_config(const std::string& path);
void save_run_config(const std::string& path, const RunConfig& cfg);
std::string run_config_to_json(const RunConfig& cfg);

}  // namespace topomesh
