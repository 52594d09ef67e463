#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "test_helpers.hpp"
#include "topomesh/error.hpp"
#include "topomesh/synth.hpp"

using namespace topomesh;

TEST_CASE("quad sphere counts and radius") {
  SUBCASE("subdivision 1 is the cube") {
    const QuadSphere s = make_quad_sphere(1);
    CHECK(s.topology.n_f == 6);
    CHECK(s.topology.n_v == 8);
  }
  SUBCASE("subdivision 3 has 54 faces and 56 vertices") {
    const QuadSphere s = make_quad_sphere(3);
    CHECK(s.topology.n_f == 54);
    CHECK(s.topology.n_v == 56);
    CHECK(s.topology.n_e == 54 + 56 - 2);  // Euler: E = F + V - 2 on a sphere
  }
  SUBCASE("all vertices lie on the unit sphere") {
    const QuadSphere s = make_quad_sphere(4);
    for (const Vec3& p : s.positions) CHECK(std::abs(p.norm() - 1.0) < 1e-9);
  }
  SUBCASE("every edge borders exactly two faces") {
    const QuadSphere s = make_quad_sphere(2);
    const Adjacency adj = build_adjacency(s.topology, s.positions, 0.0);
    CHECK(adj.interior_edges.size() == adj.edges.size());
  }
}

TEST_CASE("deform presets") {
  const QuadSphere base = make_quad_sphere(2);

  SUBCASE("rigid at zero magnitude keeps all frames identical") {
    const auto frames = deform_sequence(base, DeformPreset::RigidRotation, 5, 0.0);
    for (const auto& f : frames)
      for (std::size_t i = 0; i < f.size(); ++i) CHECK((f[i] - base.positions[i]).norm() == 0.0);
  }

  SUBCASE("rigid 2 degrees per frame lands at exactly 18 degrees on frame 9") {
    const auto frames = deform_sequence(base, DeformPreset::RigidRotation, 10, 2.0);
    const double a = 18.0 * M_PI / 180.0;
    Mat3 r;
    r << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
    for (std::size_t i = 0; i < base.positions.size(); ++i)
      CHECK((frames[9][i] - r * base.positions[i]).norm() < 1e-12);
  }

  SUBCASE("bump peaks at the configured displacement") {
    const double magnitude = 0.1;
    const int n_frames = 10;
    const auto frames = deform_sequence(base, DeformPreset::Bump, n_frames, magnitude);
    // envelope maximum over the sampled frames
    double env_max = 0.0;
    for (int f = 0; f < n_frames; ++f) {
      const double s = std::sin(M_PI * f / (n_frames - 1));
      env_max = std::max(env_max, s * s);
    }
    double disp_max = 0.0;
    for (int f = 0; f < n_frames; ++f)
      for (std::size_t i = 0; i < base.positions.size(); ++i)
        disp_max = std::max(disp_max, (frames[static_cast<std::size_t>(f)][i] - base.positions[i]).norm());
    CHECK(disp_max == doctest::Approx(magnitude * env_max).epsilon(1e-9));
    // frame 0 is the registration input
    for (std::size_t i = 0; i < base.positions.size(); ++i)
      CHECK((frames[0][i] - base.positions[i]).norm() == 0.0);
  }

  SUBCASE("magnitudes outside the safe range are rejected") {
    CHECK_THROWS_AS(deform_sequence(base, DeformPreset::Bump, 5, 0.5), ValidationError);
    CHECK_THROWS_AS(deform_sequence(base, DeformPreset::RigidRotation, 5, 90.0), ValidationError);
    CHECK_THROWS_AS(deform_sequence(base, DeformPreset::Stretch, 5, 0.9), ValidationError);
  }

  SUBCASE("stretch scales only the x axis") {
    const auto frames = deform_sequence(base, DeformPreset::Stretch, 5, 0.2);
    for (std::size_t i = 0; i < base.positions.size(); ++i) {
      CHECK(frames[2][i].y() == base.positions[i].y());
      CHECK(frames[2][i].z() == base.positions[i].z());
    }
  }
}

TEST_CASE("deformations preserve finiteness and topology") {
  const QuadSphere base = make_quad_sphere(2);
  for (const auto preset : {DeformPreset::RigidRotation, DeformPreset::Bump, DeformPreset::Stretch}) {
    const double magnitude = preset == DeformPreset::RigidRotation ? 5.0 : 0.2;
    const auto frames = deform_sequence(base, preset, 6, magnitude);
    CHECK(frames.size() == 6);
    for (const auto& f : frames) {
      CHECK(f.size() == base.positions.size());
      for (const Vec3& p : f) CHECK(p.allFinite());
    }
  }
}

TEST_CASE("brute-force compositing basics") {
  const Camera cam = look_at_camera(Vec3(0, 0, -3), Vec3::Zero(), Vec3(0, 1, 0), 40.0, 9, 9);

  SUBCASE("no gaussians -> background") {
    GaussianArrays empty;
    CHECK((brute_force_composite(empty, cam, 3, 5, Vec3(0.1, 0.2, 0.3)) - Vec3(0.1, 0.2, 0.3))
              .norm() < 1e-15);
  }

  SUBCASE("one opaque gaussian at the pixel center -> its color") {
    std::vector<Vec3> pos{Vec3::Zero()}, scale{Vec3(0.2, 0.2, 0.2)}, color{Vec3(0.4, 0.1, 0.8)};
    std::vector<Quat> rot{quat_identity()};
    std::vector<double> opa{1.0};
    const GaussianArrays g{pos, rot, scale, color, opa};
    CHECK((brute_force_composite(g, cam, 4, 4) - color[0]).norm() < 1e-12);
  }
}

TEST_CASE("finite differences") {
  SUBCASE("x^2 at 3") {
    auto f = [](const std::vector<double>& p) { return p[0] * p[0]; };
    const auto g = finite_diff_gradient(f, {3.0}, 1e-4);
    CHECK(g[0] == doctest::Approx(6.0).epsilon(1e-6));
  }
  SUBCASE("constants have zero gradient") {
    auto f = [](const std::vector<double>&) { return 42.0; };
    const auto g = finite_diff_gradient(f, {1.0, 2.0, 3.0}, 1e-4);
    for (double v : g) CHECK(v == 0.0);
  }
  SUBCASE("non-finite evaluations name the component") {
    auto f = [](const std::vector<double>& p) { return std::sqrt(p[0]); };  // nan for p[0] < 0
    try {
      finite_diff_gradient(f, {0.0}, 1e-4);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("0") != std::string::npos);
    }
  }
}

TEST_CASE("tracking error report") {
  const QuadSphere base = make_quad_sphere(2);
  const auto frames = deform_sequence(base, DeformPreset::Bump, 4, 0.1);

  SUBCASE("perfect tracking reports zeros") {
    const TrackingReport rep = tracking_error(frames, frames, base.topology);
    for (double e : rep.mean_error) CHECK(e == 0.0);
    for (double e : rep.max_error) CHECK(e == 0.0);
    CHECK(rep.adjacent_rmse[0] == 0.0);
    CHECK(rep.adjacent_rmse[1] > 0.0);  // true motion shows up frame to frame
  }

  SUBCASE("uniform offset reports d / mean edge length") {
    const Vec3 offset(0.02, 0.0, 0.0);
    auto tracked = frames;
    for (auto& f : tracked)
      for (Vec3& p : f) p += offset;
    const TrackingReport rep = tracking_error(tracked, frames, base.topology);
    const double expect = offset.norm() / rep.mean_edge_length;
    for (double e : rep.mean_error) CHECK(e == doctest::Approx(expect).epsilon(1e-12));
    for (double e : rep.median_error) CHECK(e == doctest::Approx(expect).epsilon(1e-12));
  }

  SUBCASE("frame-count mismatch is rejected") {
    auto tracked = frames;
    tracked.pop_back();
    CHECK_THROWS_AS(tracking_error(tracked, frames, base.topology), ValidationError);
  }
}

TEST_CASE("procedural textures") {
  SUBCASE("checker stays in gamut and varies") {
    const TextureFn f = checker_texture(4, 9);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 50; ++i) {
      for (int j = 0; j < 50; ++j) {
        const Vec3 c = f((i + 0.5) / 50, (j + 0.5) / 50);
        CHECK(c.minCoeff() >= 0.0);
        CHECK(c.maxCoeff() <= 1.0);
        lo = std::min(lo, c.x());
        hi = std::max(hi, c.x());
      }
    }
    CHECK(hi - lo > 0.3);  // trackable contrast
  }
  SUBCASE("flat texture is constant everywhere") {
    const TextureFn f = flat_texture(Vec3(0.6, 0.5, 0.4));
    CHECK((f(0.1, 0.2) - f(0.9, 0.7)).norm() == 0.0);
  }
  SUBCASE("rasterized texture round-trips through UV sampling") {
    const TextureFn f = checker_texture(2, 3, 0.0);
    const Image img = rasterize_texture(f, 256);
    for (double u = 0.1; u < 0.95; u += 0.17) {
      for (double v = 0.1; v < 0.95; v += 0.13) {
        CHECK((sample_bilinear_uv(img, u, v) - f(u, v)).cwiseAbs().maxCoeff() < 0.02);
      }
    }
  }
}

TEST_CASE("camera ring looks at the origin") {
  const auto cams = camera_ring(6, 3.0, 35.0, 64, 64, 30.0);
  CHECK(cams.size() == 6);
  for (const Camera& cam : cams) {
    const Vec3 origin_cam = cam.to_camera(Vec3::Zero());
    CHECK(origin_cam.x() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(origin_cam.y() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(origin_cam.z() == doctest::Approx(3.0).epsilon(1e-9));
  }
}
