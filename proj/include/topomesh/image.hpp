#pragma once

#include <string>
#include <vector>

#include "topomesh/types.hpp"

namespace topomesh {

// Row-major RGB image, double precision, values nominally in [0,1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<Vec3> pixels;

  Image() = default;
  Image(int w, int h, const Vec3& fill = Vec3::Zero())
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  Vec3& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  const Vec3& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return pixels.size(); }
};

// 8-bit PNG I/O. Alpha, when given, is written as a straight (unassociated)
// fourth channel.
void save_png(const std::string& path, const Image& img, const std::vector<double>* alpha = nullptr);
Image load_png(const std::string& path);

// Bilinear sample with (0,0) at the lower-left corner of the image, matching
// the UV convention; u,v clamped to [0,1].
Vec3 sample_bilinear_uv(const Image& img, double u, double v);

// Integer box downscale; width/height must divide evenly.
Image downscale(const Image& img, int factor);

double psnr(const Image& a, const Image& b);

}  // namespace topomesh
