#include "topomesh/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>

#include "topomesh/error.hpp"

namespace topomesh {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kUvMargin = 1.0 / 64.0;

// Integer lattice point on the cube surface, units of 1/s, used as the weld key.
struct CubeKey {
  int x, y, z;
  bool operator<(const CubeKey& o) const {
    return std::tie(x, y, z) < std::tie(o.x, o.y, o.z);
  }
};

}  // namespace

QuadSphere make_quad_sphere(int subdivision) {
  if (subdivision < 1) throw ValidationError("sphere subdivision must be >= 1");
  const int s = subdivision;

  // Face basis vectors chosen so a-cross-b points outward.
  struct FaceBasis {
    Vec3 origin, da, db;
  };
  const std::vector<FaceBasis> faces = {
      {{1, -1, -1}, {0, 2, 0}, {0, 0, 2}},    // +x
      {{-1, -1, -1}, {0, 0, 2}, {0, 2, 0}},   // -x
      {{-1, 1, -1}, {0, 0, 2}, {2, 0, 0}},    // +y
      {{-1, -1, -1}, {2, 0, 0}, {0, 0, 2}},   // -y
      {{-1, -1, 1}, {2, 0, 0}, {0, 2, 0}},    // +z
      {{-1, -1, -1}, {0, 2, 0}, {2, 0, 0}},   // -z
  };

  std::map<CubeKey, int> index;
  std::vector<Vec3> positions;
  std::vector<QuadFace> quads;

  auto vertex_at = [&](const FaceBasis& fb, int a, int b) {
    const Vec3 cube = fb.origin + fb.da * (static_cast<double>(a) / s) +
                      fb.db * (static_cast<double>(b) / s);
    const CubeKey key{static_cast<int>(std::lround(cube.x() * s)),
                      static_cast<int>(std::lround(cube.y() * s)),
                      static_cast<int>(std::lround(cube.z() * s))};
    auto [it, inserted] = index.try_emplace(key, static_cast<int>(positions.size()));
    if (inserted) {
      // equal-angle warp evens out the quads before the sphere projection
      const Vec3 warped(std::tan(kPi / 4.0 * cube.x()), std::tan(kPi / 4.0 * cube.y()),
                        std::tan(kPi / 4.0 * cube.z()));
      positions.push_back(warped.normalized());
    }
    return it->second;
  };

  for (const FaceBasis& fb : faces) {
    for (int a = 0; a < s; ++a) {
      for (int b = 0; b < s; ++b) {
        quads.push_back({vertex_at(fb, a, b), vertex_at(fb, a + 1, b),
                         vertex_at(fb, a + 1, b + 1), vertex_at(fb, a, b + 1)});
      }
    }
  }

  std::vector<Vec2> uv(positions.size());
  const double span = 1.0 - 2.0 * kUvMargin;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    uv[i] = Vec2(kUvMargin + (positions[i].x() + 1.0) * 0.5 * span,
                 kUvMargin + (positions[i].y() + 1.0) * 0.5 * span);
  }

  QuadSphere sphere;
  sphere.topology = make_topology(std::move(quads), std::move(uv),
                                  static_cast<int>(positions.size()));
  sphere.positions = std::move(positions);
  return sphere;
}

DeformPreset deform_preset_from_string(const std::string& name) {
  if (name == "rigid-rotation" || name == "rigid") return DeformPreset::RigidRotation;
  if (name == "bump") return DeformPreset::Bump;
  if (name == "stretch") return DeformPreset::Stretch;
  throw ValidationError("unknown deformation preset: " + name);
}

std::string to_string(DeformPreset preset) {
  switch (preset) {
    case DeformPreset::RigidRotation: return "rigid-rotation";
    case DeformPreset::Bump: return "bump";
    default: return "stretch";
  }
}

std::vector<std::vector<Vec3>> deform_sequence(const QuadSphere& base, DeformPreset preset,
                                               int frames, double magnitude) {
  if (frames < 1) throw ValidationError("deformation needs at least one frame");
  switch (preset) {
    case DeformPreset::RigidRotation:
      if (std::abs(magnitude) > 45.0)
        throw ValidationError("rigid preset limited to 45 degrees per frame");
      break;
    case DeformPreset::Bump:
      if (magnitude < 0.0 || magnitude > 0.3)
        throw ValidationError("bump preset limited to displacement in [0, 0.3]");
      break;
    case DeformPreset::Stretch:
      if (magnitude < 0.0 || magnitude > 0.5)
        throw ValidationError("stretch preset limited to [0, 0.5]");
      break;
  }

  auto envelope = [&](int f) {
    if (frames == 1) return 0.0;
    const double t = static_cast<double>(f) / (frames - 1);
    const double s = std::sin(kPi * t);
    return s * s;
  };

  std::vector<std::vector<Vec3>> out(static_cast<std::size_t>(frames));
  out[0] = base.positions;

  if (preset == DeformPreset::RigidRotation) {
    for (int f = 1; f < frames; ++f) {
      const double angle = magnitude * f * kPi / 180.0;
      Mat3 r;
      r << std::cos(angle), -std::sin(angle), 0.0,
           std::sin(angle), std::cos(angle), 0.0,
           0.0, 0.0, 1.0;
      auto& frame = out[static_cast<std::size_t>(f)];
      frame.resize(base.positions.size());
      for (std::size_t i = 0; i < base.positions.size(); ++i) frame[i] = r * base.positions[i];
    }
    return out;
  }

  if (preset == DeformPreset::Stretch) {
    for (int f = 1; f < frames; ++f) {
      const double k = 1.0 + magnitude * envelope(f);
      auto& frame = out[static_cast<std::size_t>(f)];
      frame = base.positions;
      for (Vec3& p : frame) p.x() *= k;
    }
    return out;
  }

  // Bump: raised-cosine bell over graph (geodesic) distance from the vertex
  // closest to +z, displaced along frame-0 normals.
  const std::vector<Vec3> normals = vertex_normals(base.positions, base.topology);
  int seed = 0;
  for (std::size_t i = 1; i < base.positions.size(); ++i)
    if (base.positions[i].z() > base.positions[static_cast<std::size_t>(seed)].z())
      seed = static_cast<int>(i);

  const Adjacency adj = build_adjacency(base.topology, base.positions, 0.0);
  std::vector<double> dist(base.positions.size(), std::numeric_limits<double>::infinity());
  using HeapItem = std::pair<double, int>;
  std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>> heap;
  dist[static_cast<std::size_t>(seed)] = 0.0;
  heap.push({0.0, seed});
  while (!heap.empty()) {
    const auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[static_cast<std::size_t>(v)]) continue;
    for (int w : adj.one_ring[static_cast<std::size_t>(v)]) {
      const double nd =
          d + (base.positions[static_cast<std::size_t>(w)] - base.positions[static_cast<std::size_t>(v)]).norm();
      if (nd < dist[static_cast<std::size_t>(w)]) {
        dist[static_cast<std::size_t>(w)] = nd;
        heap.push({nd, w});
      }
    }
  }

  const double radius = 0.8;
  std::vector<double> bell(base.positions.size(), 0.0);
  for (std::size_t i = 0; i < bell.size(); ++i) {
    const double x = std::min(dist[i] / radius, 1.0);
    const double c = std::cos(0.5 * kPi * x);
    bell[i] = c * c;
  }

  for (int f = 1; f < frames; ++f) {
    const double amp = magnitude * envelope(f);
    auto& frame = out[static_cast<std::size_t>(f)];
    frame = base.positions;
    for (std::size_t i = 0; i < frame.size(); ++i) frame[i] += amp * bell[i] * normals[i];
  }
  return out;
}

namespace {

// Seeded smooth value noise on a coarse lattice, bilinear interpolation.
double value_noise(double u, double v, int cells, unsigned seed) {
  auto hash01 = [seed](int x, int y) {
    unsigned h = seed;
    h ^= static_cast<unsigned>(x) * 0x9E3779B9u;
    h = (h ^ (h >> 16)) * 0x85EBCA6Bu;
    h ^= static_cast<unsigned>(y) * 0xC2B2AE35u;
    h = (h ^ (h >> 13)) * 0x27D4EB2Fu;
    h ^= h >> 16;
    return static_cast<double>(h & 0xFFFFFFu) / static_cast<double>(0xFFFFFFu);
  };
  const double fu = u * cells, fv = v * cells;
  const int x0 = static_cast<int>(std::floor(fu)), y0 = static_cast<int>(std::floor(fv));
  const double tu = fu - x0, tv = fv - y0;
  auto smooth = [](double t) { return t * t * (3.0 - 2.0 * t); };
  const double su = smooth(tu), sv = smooth(tv);
  const double a = hash01(x0, y0), b = hash01(x0 + 1, y0);
  const double c = hash01(x0, y0 + 1), d = hash01(x0 + 1, y0 + 1);
  return (1 - su) * (1 - sv) * a + su * (1 - sv) * b + (1 - su) * sv * c + su * sv * d;
}

}  // namespace

TextureFn checker_texture(int cycles, unsigned seed, double mottle_amplitude) {
  return [cycles, seed, mottle_amplitude](double u, double v) {
    const double cu = std::sin(2.0 * kPi * cycles * u);
    const double cv = std::sin(2.0 * kPi * cycles * v);
    const double checker = cu * cv;  // bandlimited checkerboard
    Vec3 color(0.55 + 0.35 * checker, 0.5 - 0.3 * checker, 0.45 + 0.25 * cu * 0.5 + 0.1 * cv);
    if (mottle_amplitude > 0.0) {
      color.x() += mottle_amplitude * (value_noise(u, v, 7, seed) - 0.5);
      color.y() += mottle_amplitude * (value_noise(u, v, 11, seed + 1) - 0.5);
      color.z() += mottle_amplitude * (value_noise(u, v, 5, seed + 2) - 0.5);
    }
    return Vec3(std::clamp(color.x(), 0.0, 1.0), std::clamp(color.y(), 0.0, 1.0),
                std::clamp(color.z(), 0.0, 1.0));
  };
}

TextureFn flat_texture(const Vec3& color) {
  return [color](double, double) { return color; };
}

Image rasterize_texture(const TextureFn& fn, int resolution) {
  Image img(resolution, resolution);
  for (int y = 0; y < resolution; ++y) {
    for (int x = 0; x < resolution; ++x) {
      const double u = (x + 0.5) / resolution;
      const double v = (y + 0.5) / resolution;
      img.at(x, resolution - 1 - y) = fn(u, v);  // v from the bottom
    }
  }
  return img;
}

std::vector<Camera> camera_ring(int count, double distance, double elevation_deg, int width,
                                int height, double fov_deg) {
  if (count < 1) throw ValidationError("camera ring needs at least one camera");
  std::vector<Camera> cams;
  const double el = elevation_deg * kPi / 180.0;
  const double focal = 0.5 * width / std::tan(0.5 * fov_deg * kPi / 180.0);
  for (int k = 0; k < count; ++k) {
    const double az = 2.0 * kPi * k / count;
    const Vec3 pos(distance * std::cos(el) * std::cos(az), distance * std::cos(el) * std::sin(az),
                   distance * std::sin(el));
    cams.push_back(look_at_camera(pos, Vec3::Zero(), Vec3(0, 0, 1), focal, width, height));
  }
  return cams;
}

std::vector<double> min_one_ring_distances(const std::vector<Vec3>& positions,
                                           const Adjacency& adj) {
  std::vector<double> out(positions.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (int j : adj.one_ring[i])
      out[i] = std::min(out[i], (positions[static_cast<std::size_t>(j)] - positions[i]).norm());
    if (!std::isfinite(out[i])) out[i] = 0.0;
  }
  return out;
}

GaussianMesh ground_truth_gaussians(const std::vector<Vec3>& positions,
                                    std::shared_ptr<const Topology> topology,
                                    const std::vector<double>& frame0_min_dist,
                                    const TextureFn& texture, int frame_index) {
  GaussianMesh g;
  g.topology = topology;
  g.frame_index = frame_index;
  g.positions = positions;
  const std::vector<Vec3> normals = vertex_normals(positions, *topology);
  const std::size_t n = positions.size();
  g.rotations.resize(n);
  g.scales.resize(n);
  g.colors.resize(n);
  g.opacities.assign(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    g.rotations[i] = quat_from_z_to(normals[i]);
    // flat ellipses aligned with the surface, matching the regime the
    // scale loss drives the optimizer toward (thickness well under a pixel)
    const double d = frame0_min_dist[i];
    g.scales[i] = Vec3(0.4 * d, 0.4 * d, 0.002 * d);
    const Vec2& uv = topology->uv[i];
    g.colors[i] = texture(uv.x(), uv.y());
  }
  return g;
}

TrackingReport tracking_error(const std::vector<std::vector<Vec3>>& tracked,
                              const std::vector<std::vector<Vec3>>& ground_truth,
                              const Topology& topo) {
  if (tracked.size() != ground_truth.size())
    throw ValidationError("tracking report: frame counts differ");
  TrackingReport rep;
  if (tracked.empty()) return rep;
  rep.mean_edge_length = mean_edge_length(topo, ground_truth[0]);
  const double scale = rep.mean_edge_length > 0.0 ? rep.mean_edge_length : 1.0;

  for (std::size_t f = 0; f < tracked.size(); ++f) {
    if (tracked[f].size() != ground_truth[f].size())
      throw ValidationError("tracking report: vertex counts differ");
    std::vector<double> errs(tracked[f].size());
    double sum = 0.0, maxe = 0.0;
    for (std::size_t i = 0; i < tracked[f].size(); ++i) {
      errs[i] = (tracked[f][i] - ground_truth[f][i]).norm() / scale;
      sum += errs[i];
      maxe = std::max(maxe, errs[i]);
    }
    std::sort(errs.begin(), errs.end());
    rep.mean_error.push_back(sum / errs.size());
    rep.median_error.push_back(errs[errs.size() / 2]);
    rep.max_error.push_back(maxe);

    if (f == 0) {
      rep.adjacent_rmse.push_back(0.0);
    } else {
      double acc = 0.0;
      for (std::size_t i = 0; i < tracked[f].size(); ++i)
        acc += (tracked[f][i] - tracked[f - 1][i]).squaredNorm();
      rep.adjacent_rmse.push_back(std::sqrt(acc / tracked[f].size()));
    }
  }
  return rep;
}

std::vector<double> finite_diff_gradient(const std::function<double(const std::vector<double>&)>& f,
                                         std::vector<double> params, double h) {
  std::vector<double> grad(params.size(), 0.0);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double orig = params[i];
    params[i] = orig + h;
    const double fp = f(params);
    params[i] = orig - h;
    const double fm = f(params);
    params[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw Error("finite differences: non-finite evaluation at component " + std::to_string(i));
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

}  // namespace topomesh
