#pragma once

#include <cmath>

#include "topomesh/error.hpp"

namespace topomesh {

enum class Stage { Init, Geometry, Texture };

// Which attributes a stage optimizes, the per-attribute learning rates,
// and the iteration budget. Opacity is never optimized anywhere.
struct StageSchedule {
  struct Flags {
    bool position = false;
    bool rotation = false;
    bool scale = false;
    bool color = false;
  };

  Flags init{false, true, true, false};       // first-frame: rotation + scale
  Flags geometry{true, true, false, true};    // tracking: position + rotation (+color)
  Flags texture{false, false, false, true};   // dense stage: color only

  // Learning rates; position is scaled by the scene extent at run time.
  double lr_position = 1.6e-4;
  double lr_rotation = 1e-3;
  double lr_scale = 5e-3;
  double lr_color = 2.5e-3;

  // Exponential decay across each stage: the last iteration runs at
  // lr * lr_decay. Damps the step-sized dither Adam keeps on L1 objectives.
  double lr_decay = 0.1;

  int init_iterations = 200;
  int geometry_iterations = 300;
  int texture_iterations = 150;

  double decayed(double lr, int iteration, int total) const {
    if (total <= 1 || lr_decay >= 1.0) return lr;
    const double t = static_cast<double>(iteration) / static_cast<double>(total - 1);
    return lr * std::pow(lr_decay, t);
  }

  const Flags& flags(Stage s) const {
    switch (s) {
      case Stage::Init: return init;
      case Stage::Geometry: return geometry;
      default: return texture;
    }
  }

  void validate() const {
    if (init.position || init.color)
      throw ValidationError("init stage may only optimize rotation and scale");
    if (geometry.scale) throw ValidationError("geometry stage must keep scale frozen");
    if (texture.position || texture.scale)
      throw ValidationError("texture stage may only optimize color (and optionally rotation)");
    if (init_iterations < 0 || geometry_iterations < 0 || texture_iterations < 0)
      throw ValidationError("iteration counts must be >= 0");
    for (double lr : {lr_position, lr_rotation, lr_scale, lr_color})
      if (!(lr > 0.0)) throw ValidationError("learning rates must be positive");
    if (!(lr_decay > 0.0) || lr_decay > 1.0)
      throw ValidationError("lr_decay must lie in (0, 1]");
  }
};

}  // namespace topomesh
