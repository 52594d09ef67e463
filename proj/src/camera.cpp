#include "topomesh/camera.hpp"

#include <fstream>

#include "json.hpp"
#include "topomesh/error.hpp"

namespace topomesh {

using nlohmann::json;

Camera Camera::scaled(int factor) const {
  if (factor <= 0 || width % factor != 0 || height % factor != 0)
    throw ValidationError("downscale factor must divide the image size");
  Camera c = *this;
  const double f = static_cast<double>(factor);
  c.fx /= f;
  c.fy /= f;
  c.cx /= f;
  c.cy /= f;
  c.width /= factor;
  c.height /= factor;
  return c;
}

void Camera::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw ValidationError("camera focal lengths must be positive");
  if (width <= 0 || height <= 0) throw ValidationError("camera image size must be positive");
  if (cx < 0.0 || cx > width || cy < 0.0 || cy > height)
    throw ValidationError("principal point outside image bounds");
}

Camera look_at_camera(const Vec3& position, const Vec3& target, const Vec3& up, double focal_px,
                      int width, int height) {
  const Vec3 forward = (target - position).normalized();
  Vec3 right = up.cross(forward);
  if (right.squaredNorm() < 1e-12) right = Vec3(1.0, 0.0, 0.0);
  right.normalize();
  const Vec3 down = forward.cross(right);

  Camera cam;
  cam.rotation.row(0) = right.transpose();
  cam.rotation.row(1) = down.transpose();
  cam.rotation.row(2) = forward.transpose();
  cam.translation = -cam.rotation * position;
  cam.fx = cam.fy = focal_px;
  cam.cx = width * 0.5;
  cam.cy = height * 0.5;
  cam.width = width;
  cam.height = height;
  return cam;
}

std::vector<Camera> load_cameras_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open camera file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ValidationError("invalid camera JSON in " + path + ": " + e.what());
  }
  if (!doc.is_array()) throw ValidationError("camera file must hold a JSON array: " + path);

  std::vector<Camera> cams;
  for (const auto& c : doc) {
    Camera cam;
    cam.fx = c.at("focal").at(0).get<double>();
    cam.fy = c.at("focal").at(1).get<double>();
    cam.cx = c.at("principal_point").at(0).get<double>();
    cam.cy = c.at("principal_point").at(1).get<double>();
    const auto& m = c.at("world_to_cam");
    if (m.size() != 16) throw ValidationError("world_to_cam must hold 16 row-major entries");
    Mat4 w;
    for (int r = 0; r < 4; ++r)
      for (int col = 0; col < 4; ++col) w(r, col) = m.at(static_cast<std::size_t>(r * 4 + col)).get<double>();
    cam.rotation = w.topLeftCorner<3, 3>();
    cam.translation = w.topRightCorner<3, 1>();
    cam.width = c.at("width").get<int>();
    cam.height = c.at("height").get<int>();
    cam.validate();
    cams.push_back(cam);
  }
  return cams;
}

void save_cameras_json(const std::string& path, const std::vector<Camera>& cameras) {
  json doc = json::array();
  for (const Camera& cam : cameras) {
    Mat4 w = Mat4::Identity();
    w.topLeftCorner<3, 3>() = cam.rotation;
    w.topRightCorner<3, 1>() = cam.translation;
    std::vector<double> flat;
    flat.reserve(16);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) flat.push_back(w(r, c));
    doc.push_back({{"focal", {cam.fx, cam.fy}},
                   {"principal_point", {cam.cx, cam.cy}},
                   {"world_to_cam", flat},
                   {"width", cam.width},
                   {"height", cam.height}});
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write camera file: " + path);
  out << doc.dump(2) << "\n";
}

}  // namespace topomesh
