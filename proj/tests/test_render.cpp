#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "test_helpers.hpp"
#include "topomesh/render.hpp"
#include "topomesh/synth.hpp"

using namespace topomesh;

namespace {

struct Scene {
  std::vector<Vec3> positions, scales, colors;
  std::vector<Quat> rotations;
  std::vector<double> opacities;

  GaussianArrays arrays() const { return {positions, rotations, scales, colors, opacities}; }

  void push(const Vec3& p, const Quat& q, const Vec3& s, const Vec3& c, double o) {
    positions.push_back(p);
    rotations.push_back(q);
    scales.push_back(s);
    colors.push_back(c);
    opacities.push_back(o);
  }
};

Scene random_scene(std::mt19937& rng, int count) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Scene s;
  for (int i = 0; i < count; ++i) {
    s.push(Vec3(u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5),
           topomesh::testing::random_unit_quat(rng),
           Vec3(0.1 + 0.3 * u(rng), 0.1 + 0.3 * u(rng), 0.1 + 0.3 * u(rng)),
           Vec3(u(rng), u(rng), u(rng)), 0.2 + 0.7 * u(rng));
  }
  return s;
}

Camera front_camera(double focal, int size, double distance = 3.0) {
  return look_at_camera(Vec3(0, 0, -distance), Vec3::Zero(), Vec3(0, 1, 0), focal, size, size);
}

}  // namespace

TEST_CASE("covariance_from matches the factorization") {
  SUBCASE("isotropic") {
    const Mat3 sigma = covariance_from(quat_identity(), Vec3(1, 1, 1));
    CHECK((sigma - Mat3::Identity()).norm() < 1e-12);
  }
  SUBCASE("axis-aligned") {
    const Mat3 sigma = covariance_from(quat_identity(), Vec3(2, 1, 1));
    Mat3 expect = Vec3(4, 1, 1).asDiagonal();
    CHECK((sigma - expect).norm() < 1e-12);
  }
  SUBCASE("90 degrees about z swaps the x and y variances") {
    const double c = std::cos(M_PI / 4.0), s = std::sin(M_PI / 4.0);
    const Quat q(c, 0.0, 0.0, s);
    const Mat3 sigma = covariance_from(q, Vec3(2, 1, 1));
    // explicit R S S^T R^T with R = rot(z, 90deg)
    Mat3 r;
    r << 0, -1, 0, 1, 0, 0, 0, 0, 1;
    const Mat3 expect = r * Vec3(4, 1, 1).asDiagonal() * r.transpose();
    CHECK((sigma - expect).norm() < 1e-9);
    CHECK(sigma(0, 0) == doctest::Approx(1.0));
    CHECK(sigma(1, 1) == doctest::Approx(4.0));
    CHECK(sigma(2, 2) == doctest::Approx(1.0));
  }
  SUBCASE("positive definite with eigenvalues s^2 for random inputs") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    for (int k = 0; k < 20; ++k) {
      const Vec3 s(u(rng), u(rng), u(rng));
      const Mat3 sigma = covariance_from(topomesh::testing::random_unit_quat(rng), s);
      CHECK((sigma - sigma.transpose()).norm() < 1e-12);
      Eigen::SelfAdjointEigenSolver<Mat3> es(sigma);
      Vec3 expect(s.x() * s.x(), s.y() * s.y(), s.z() * s.z());
      std::sort(expect.data(), expect.data() + 3);
      CHECK((es.eigenvalues() - expect).norm() < 1e-9);
    }
  }
}

TEST_CASE("project_covariance") {
  SUBCASE("on-axis isotropic gaussian lands at (f sigma / d)^2 I") {
    const double f = 50.0, d = 2.0, s = 0.3;
    const Camera cam = front_camera(f, 64, d);
    const Mat3 sigma = covariance_from(quat_identity(), Vec3(s, s, s));
    const auto cov = project_covariance(sigma, Vec3::Zero(), cam);
    REQUIRE(cov.has_value());
    const double expect = (f * s / d) * (f * s / d);
    CHECK((*cov)(0, 0) == doctest::Approx(expect).epsilon(1e-9));
    CHECK((*cov)(1, 1) == doctest::Approx(expect).epsilon(1e-9));
    CHECK(std::abs((*cov)(0, 1)) < 1e-9);
  }
  SUBCASE("doubling the depth quarters the footprint") {
    const Camera cam = front_camera(50.0, 64, 2.0);
    const Mat3 sigma = covariance_from(quat_identity(), Vec3(0.3, 0.3, 0.3));
    const auto near = project_covariance(sigma, Vec3::Zero(), cam);
    const auto far = project_covariance(sigma, Vec3(0, 0, 2.0), cam);  // depth 2d
    REQUIRE(near.has_value());
    REQUIRE(far.has_value());
    CHECK((*far)(0, 0) == doctest::Approx((*near)(0, 0) / 4.0).epsilon(1e-9));
  }
  SUBCASE("points behind the camera are culled") {
    const Camera cam = front_camera(50.0, 64, 2.0);
    const Mat3 sigma = Mat3::Identity();
    CHECK_FALSE(project_covariance(sigma, Vec3(0, 0, -5.0), cam).has_value());
  }
}

TEST_CASE("render basics") {
  const Camera cam = front_camera(40.0, 9, 3.0);
  const RenderOptions oracle = RenderOptions::oracle();

  SUBCASE("zero gaussians give a black image with zero alpha") {
    const RenderedImage img = render(Scene{}.arrays(), cam, oracle);
    for (const Vec3& p : img.rgb.pixels) CHECK(p.norm() == 0.0);
    for (double a : img.alpha) CHECK(a == 0.0);
  }

  SUBCASE("opaque gaussian recovers its color at the center pixel") {
    // principal point 4.5 px -> center of pixel (4,4)
    Scene s;
    s.push(Vec3::Zero(), quat_identity(), Vec3(0.2, 0.2, 0.2), Vec3(0.3, 0.7, 0.2), 1.0);
    const RenderedImage img = render(s.arrays(), cam, oracle);
    CHECK((img.rgb.at(4, 4) - Vec3(0.3, 0.7, 0.2)).norm() < 1e-12);
    CHECK(img.alpha[4 * 9 + 4] == doctest::Approx(1.0));
  }

  SUBCASE("a fully opaque front gaussian occludes a coincident back one") {
    Scene s;
    s.push(Vec3(0, 0, -0.2), quat_identity(), Vec3(0.2, 0.2, 0.2), Vec3(1, 0, 0), 1.0);
    s.push(Vec3::Zero(), quat_identity(), Vec3(0.2, 0.2, 0.2), Vec3(0, 1, 0), 1.0);
    const RenderedImage img = render(s.arrays(), cam, oracle);
    CHECK(img.rgb.at(4, 4).x() == doctest::Approx(1.0));
    CHECK(img.rgb.at(4, 4).y() == doctest::Approx(0.0));
  }

  SUBCASE("background shows through transmittance") {
    RenderOptions opts = RenderOptions::oracle();
    opts.background = Vec3(0.25, 0.5, 0.75);
    const RenderedImage img = render(Scene{}.arrays(), cam, opts);
    CHECK((img.rgb.at(0, 0) - Vec3(0.25, 0.5, 0.75)).norm() < 1e-12);
  }
}

TEST_CASE("render matches the brute-force compositing oracle") {
  std::mt19937 rng(17);
  const Camera cam = front_camera(9.0, 8, 3.0);
  const RenderOptions oracle = RenderOptions::oracle();
  for (int trial = 0; trial < 10; ++trial) {
    const Scene s = random_scene(rng, 3 + static_cast<int>(rng() % 8));
    const RenderedImage img = render(s.arrays(), cam, oracle);
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) {
        const Vec3 expect = brute_force_composite(s.arrays(), cam, x, y);
        CHECK((img.rgb.at(x, y) - expect).cwiseAbs().maxCoeff() < 1e-6);
      }
    }
  }
}

TEST_CASE("render is deterministic with depth ties broken by index") {
  std::mt19937 rng(23);
  Scene s = random_scene(rng, 6);
  // force two gaussians to the exact same depth
  s.positions[1] = Vec3(0.1, 0.0, s.positions[0].z());
  const Camera cam = front_camera(12.0, 16, 3.0);
  const RenderedImage a = render(s.arrays(), cam);
  const RenderedImage b = render(s.arrays(), cam);
  CHECK(a.rgb.pixels == b.rgb.pixels);
  CHECK(a.alpha == b.alpha);
}

TEST_CASE("pixel colors stay within the contributing color hull over black") {
  std::mt19937 rng(31);
  const Camera cam = front_camera(10.0, 8, 3.0);
  for (int trial = 0; trial < 5; ++trial) {
    const Scene s = random_scene(rng, 6);
    Vec3 cmax = Vec3::Zero();
    for (const Vec3& c : s.colors) cmax = cmax.cwiseMax(c);
    const RenderedImage img = render(s.arrays(), cam, RenderOptions::oracle());
    for (const Vec3& p : img.rgb.pixels) {
      CHECK(p.x() <= cmax.x() + 1e-12);
      CHECK(p.y() <= cmax.y() + 1e-12);
      CHECK(p.z() <= cmax.z() + 1e-12);
      CHECK(p.minCoeff() >= -1e-15);
    }
  }
}

TEST_CASE("alpha is monotone in the number of contributing gaussians") {
  std::mt19937 rng(41);
  const Camera cam = front_camera(10.0, 8, 3.0);
  const Scene s = random_scene(rng, 8);
  std::vector<double> prev_alpha(64, 0.0);
  for (int k = 1; k <= 8; ++k) {
    Scene head;
    for (int i = 0; i < k; ++i)
      head.push(s.positions[static_cast<std::size_t>(i)], s.rotations[static_cast<std::size_t>(i)],
                s.scales[static_cast<std::size_t>(i)], s.colors[static_cast<std::size_t>(i)],
                s.opacities[static_cast<std::size_t>(i)]);
    const RenderedImage img = render(head.arrays(), cam, RenderOptions::oracle());
    for (std::size_t p = 0; p < img.alpha.size(); ++p) {
      CHECK(img.alpha[p] >= prev_alpha[p] - 1e-12);
    }
    prev_alpha = img.alpha;
  }
}

TEST_CASE("translating scene and camera together leaves the image bit-identical") {
  // dyadic values keep the arithmetic exact under an axis-aligned camera
  Scene s;
  s.push(Vec3(0.25, -0.5, 0.5), quat_identity(), Vec3(0.25, 0.25, 0.125), Vec3(0.5, 0.25, 0.75),
         0.75);
  s.push(Vec3(-0.5, 0.125, 0.0), quat_identity(), Vec3(0.5, 0.25, 0.25), Vec3(1.0, 0.5, 0.0), 0.5);

  Camera cam;
  cam.rotation = Mat3::Identity();
  cam.translation = Vec3(0.0, 0.0, 4.0);
  cam.fx = cam.fy = 16.0;
  cam.cx = cam.cy = 8.0;
  cam.width = cam.height = 16;

  const Vec3 shift(0.5, -2.0, 1.0);
  Scene moved = s;
  for (Vec3& p : moved.positions) p += shift;
  Camera cam_moved = cam;
  cam_moved.translation = cam.translation - cam.rotation * shift;

  const RenderedImage a = render(s.arrays(), cam);
  const RenderedImage b = render(moved.arrays(), cam_moved);
  CHECK(a.rgb.pixels == b.rgb.pixels);
  CHECK(a.alpha == b.alpha);
}

TEST_CASE("render_backward spec examples") {
  const Camera cam = front_camera(40.0, 9, 3.0);
  const RenderOptions oracle = RenderOptions::oracle();

  SUBCASE("zero upstream gives zero gradients") {
    std::mt19937 rng(5);
    const Scene s = random_scene(rng, 4);
    const Image zero(9, 9, Vec3::Zero());
    const RenderGradients g = render_backward(s.arrays(), cam, zero, oracle);
    for (const Vec3& v : g.d_position) CHECK(v.norm() == 0.0);
    for (const Quat& v : g.d_rotation) CHECK(v.norm() == 0.0);
    for (const Vec3& v : g.d_scale) CHECK(v.norm() == 0.0);
    for (const Vec3& v : g.d_color) CHECK(v.norm() == 0.0);
    for (double v : g.d_opacity) CHECK(v == 0.0);
  }

  SUBCASE("loss = red channel at the center pixel is linear in color") {
    Scene s;
    s.push(Vec3::Zero(), quat_identity(), Vec3(0.2, 0.2, 0.2), Vec3(0.3, 0.7, 0.2), 1.0);
    Image upstream(9, 9, Vec3::Zero());
    upstream.at(4, 4) = Vec3(1.0, 0.0, 0.0);
    const RenderGradients g = render_backward(s.arrays(), cam, upstream, oracle);
    CHECK(g.d_color[0].x() == doctest::Approx(1.0));
    CHECK(g.d_color[0].y() == doctest::Approx(0.0));
    CHECK(g.d_color[0].z() == doctest::Approx(0.0));
  }
}
