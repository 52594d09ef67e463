#include "topomesh/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "topomesh/error.hpp"

namespace topomesh {

namespace {
inline uint8_t to_byte(double v) {
  return static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}
}  // namespace

void save_png(const std::string& path, const Image& img, const std::vector<double>* alpha) {
  if (img.width <= 0 || img.height <= 0) throw Error("cannot save empty image: " + path);
  const int channels = alpha ? 4 : 3;
  cv::Mat mat(img.height, img.width, alpha ? CV_8UC4 : CV_8UC3);
  for (int y = 0; y < img.height; ++y) {
    uint8_t* row = mat.ptr<uint8_t>(y);
    for (int x = 0; x < img.width; ++x) {
      const Vec3& p = img.at(x, y);
      // OpenCV stores BGR(A).
      row[x * channels + 0] = to_byte(p.z());
      row[x * channels + 1] = to_byte(p.y());
      row[x * channels + 2] = to_byte(p.x());
      if (alpha)
        row[x * channels + 3] = to_byte((*alpha)[static_cast<std::size_t>(y) * img.width + x]);
    }
  }
  if (!cv::imwrite(path, mat)) throw Error("failed to write PNG: " + path);
}

Image load_png(const std::string& path) {
  cv::Mat mat = cv::imread(path, cv::IMREAD_COLOR);
  if (mat.empty()) throw ValidationError("cannot read image: " + path);
  Image img(mat.cols, mat.rows);
  for (int y = 0; y < mat.rows; ++y) {
    const uint8_t* row = mat.ptr<uint8_t>(y);
    for (int x = 0; x < mat.cols; ++x) {
      img.at(x, y) = Vec3(row[x * 3 + 2], row[x * 3 + 1], row[x * 3 + 0]) / 255.0;
    }
  }
  return img;
}

Vec3 sample_bilinear_uv(const Image& img, double u, double v) {
  u = std::clamp(u, 0.0, 1.0);
  v = std::clamp(v, 0.0, 1.0);
  // v = 0 is the bottom row; image row 0 is the top.
  const double fx = u * (img.width - 1);
  const double fy = (1.0 - v) * (img.height - 1);
  const int x0 = static_cast<int>(std::floor(fx));
  const int y0 = static_cast<int>(std::floor(fy));
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double tx = fx - x0;
  const double ty = fy - y0;
  return (1 - tx) * (1 - ty) * img.at(x0, y0) + tx * (1 - ty) * img.at(x1, y0) +
         (1 - tx) * ty * img.at(x0, y1) + tx * ty * img.at(x1, y1);
}

Image downscale(const Image& img, int factor) {
  if (factor == 1) return img;
  if (factor <= 0 || img.width % factor != 0 || img.height % factor != 0)
    throw ValidationError("downscale factor must divide the image size");
  Image out(img.width / factor, img.height / factor);
  const double inv = 1.0 / (factor * factor);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      Vec3 acc = Vec3::Zero();
      for (int dy = 0; dy < factor; ++dy)
        for (int dx = 0; dx < factor; ++dx) acc += img.at(x * factor + dx, y * factor + dy);
      out.at(x, y) = acc * inv;
    }
  }
  return out;
}

double psnr(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height) throw ValidationError("psnr: image sizes differ");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) mse += (a.pixels[i] - b.pixels[i]).squaredNorm();
  mse /= 3.0 * static_cast<double>(a.pixels.size());
  if (mse <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace topomesh
