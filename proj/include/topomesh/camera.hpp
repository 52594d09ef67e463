#pragma once

#include <string>
#include <vector>

#include "topomesh/types.hpp"

namespace topomesh {

// Calibrated pinhole view. World-to-camera is rigid: x_cam = R x + t,
// +z looking into the scene, pixels x = fx X/Z + cx, y = fy Y/Z + cy.
struct Camera {
  double fx = 0.0, fy = 0.0;
  double cx = 0.0, cy = 0.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  int width = 0, height = 0;

  Vec3 to_camera(const Vec3& p) const { return rotation * p + translation; }

  // Intrinsics downscaled by an integer factor (for coarse optimization).
  Camera scaled(int factor) const;

  void validate() const;  // throws ValidationError
};

Camera look_at_camera(const Vec3& position, const Vec3& target, const Vec3& up, double focal_px,
                      int width, int height);

std::vector<Camera> load_cameras_json(const std::string& path);
void save_cameras_json(const std::string& path, const std::vector<Camera>& cameras);

}  // namespace topomesh
