#include "topomesh/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "topomesh/losses.hpp"
#include "topomesh/pipeline.hpp"
#include "topomesh/render.hpp"
#include "topomesh/synth.hpp"

namespace topomesh {

double max_relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  double gmax = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i)
    gmax = std::max({gmax, std::abs(analytic[i]), std::abs(numeric[i])});
  const double floor = 1e-3 * gmax + 1e-12;
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

bool all_pass(const std::vector<GradCheckRow>& rows) {
  return std::all_of(rows.begin(), rows.end(), [](const GradCheckRow& r) { return r.pass; });
}

namespace {

struct Patch {
  std::shared_ptr<Topology> topology;
  Adjacency adjacency;
  std::vector<Vec3> positions;
};

// 3x3 vertex grid (4 quads) with a random out-of-plane bend.
Patch make_random_patch(std::mt19937& rng, double bend) {
  std::uniform_real_distribution<double> noise(-bend, bend);
  std::vector<Vec3> pos;
  std::vector<Vec2> uv;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      pos.emplace_back(c + 0.1 * noise(rng), r + 0.1 * noise(rng), noise(rng));
      uv.emplace_back(c / 2.0, r / 2.0);
    }
  }
  std::vector<QuadFace> faces;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      faces.push_back({r * 3 + c, r * 3 + c + 1, (r + 1) * 3 + c + 1, (r + 1) * 3 + c});
  Patch p;
  p.topology = std::make_shared<Topology>(make_topology(faces, uv, 9));
  p.positions = std::move(pos);
  p.adjacency = build_adjacency(*p.topology, p.positions, 0.7);
  return p;
}

std::vector<Quat> random_rotations(std::mt19937& rng, std::size_t n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Quat> out(n);
  for (Quat& q : out) q = quat_normalized(Quat(1.0 + 0.3 * g(rng), 0.3 * g(rng), 0.3 * g(rng), 0.3 * g(rng)));
  return out;
}

std::vector<double> pack3(const std::vector<Vec3>& v) {
  std::vector<double> out;
  out.reserve(v.size() * 3);
  for (const Vec3& p : v)
    for (int k = 0; k < 3; ++k) out.push_back(p[k]);
  return out;
}

std::vector<Vec3> unpack3(const std::vector<double>& v) {
  std::vector<Vec3> out(v.size() / 3);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = Vec3(v[3 * i], v[3 * i + 1], v[3 * i + 2]);
  return out;
}

std::vector<double> pack4(const std::vector<Quat>& v) {
  std::vector<double> out;
  out.reserve(v.size() * 4);
  for (const Quat& q : v)
    for (int k = 0; k < 4; ++k) out.push_back(q[k]);
  return out;
}

std::vector<Quat> unpack4(const std::vector<double>& v) {
  std::vector<Quat> out(v.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = Quat(v[4 * i], v[4 * i + 1], v[4 * i + 2], v[4 * i + 3]);
  return out;
}

GradCheckRow check(const std::string& name, const std::vector<double>& analytic,
                   const std::function<double(const std::vector<double>&)>& f,
                   const std::vector<double>& params, double h) {
  GradCheckRow row;
  row.name = name;
  const std::vector<double> numeric = finite_diff_gradient(f, params, h);
  row.max_rel_error = max_relative_error(analytic, numeric);
  row.pass = row.max_rel_error < row.tolerance;
  return row;
}

}  // namespace

std::vector<GradCheckRow> run_gradient_suite(unsigned seed) {
  std::mt19937 rng(seed);
  std::vector<GradCheckRow> rows;
  LossConfig cfg;

  // image loss on a random 16x16 pair
  {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Image rendered(16, 16), target(16, 16);
    for (auto& p : rendered.pixels) p = Vec3(u(rng), u(rng), u(rng));
    for (auto& p : target.pixels) p = Vec3(u(rng), u(rng), u(rng));
    const ImageLossResult res = image_loss(rendered, target, nullptr, cfg);
    std::vector<double> analytic = pack3(res.d_rendered.pixels);
    auto f = [&](const std::vector<double>& params) {
      Image img(16, 16);
      img.pixels = unpack3(params);
      return image_loss(img, target, nullptr, cfg).value;
    };
    rows.push_back(check("image_loss", analytic, f, pack3(rendered.pixels), 1e-5));
  }

  // scale loss away from its kinks
  {
    std::uniform_real_distribution<double> u(0.2, 1.0);
    std::vector<Vec3> s_init(6), s(6);
    for (std::size_t i = 0; i < s.size(); ++i) {
      s_init[i] = Vec3(u(rng), u(rng), u(rng));
      s[i] = Vec3(u(rng), u(rng), u(rng));
      s[i][static_cast<int>(i) % 3] *= 2.5;  // some components above the cap
    }
    const ScaleLossResult res = scale_loss(s, s_init, cfg.scale_cap);
    auto f = [&](const std::vector<double>& params) {
      return scale_loss(unpack3(params), s_init, cfg.scale_cap).value;
    };
    rows.push_back(check("scale_loss", pack3(res.d_scale), f, pack3(s), 1e-6));
  }

  const Patch patch = make_random_patch(rng, 0.3);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);

  // rigid loss wrt frame-t positions and rotations
  {
    const std::vector<Quat> rot_prev = random_rotations(rng, 9);
    std::vector<Quat> rot_cur = random_rotations(rng, 9);
    std::vector<Vec3> pos_cur = patch.positions;
    for (Vec3& p : pos_cur) p += Vec3(jitter(rng), jitter(rng), jitter(rng));
    const PairLossResult res =
        rigid_loss(patch.positions, rot_prev, pos_cur, rot_cur, patch.adjacency);
    auto fp = [&](const std::vector<double>& params) {
      return rigid_loss(patch.positions, rot_prev, unpack3(params), rot_cur, patch.adjacency).value;
    };
    rows.push_back(check("rigid_loss/position", pack3(res.d_position), fp, pack3(pos_cur), 1e-6));
    auto fq = [&](const std::vector<double>& params) {
      return rigid_loss(patch.positions, rot_prev, pos_cur, unpack4(params), patch.adjacency).value;
    };
    rows.push_back(check("rigid_loss/rotation", pack4(res.d_rotation), fq, pack4(rot_cur), 1e-6));
  }

  // rotation-similarity loss wrt frame-t rotations
  {
    const std::vector<Quat> rot_prev = random_rotations(rng, 9);
    std::vector<Quat> rot_cur = random_rotations(rng, 9);
    const PairLossResult res = rot_loss(rot_prev, rot_cur, patch.adjacency);
    auto f = [&](const std::vector<double>& params) {
      return rot_loss(rot_prev, unpack4(params), patch.adjacency).value;
    };
    rows.push_back(check("rot_loss", pack4(res.d_rotation), f, pack4(rot_cur), 1e-6));
  }

  // isometry loss wrt frame-t positions
  {
    std::vector<Vec3> pos_cur = patch.positions;
    for (Vec3& p : pos_cur) p += Vec3(jitter(rng), jitter(rng), jitter(rng));
    const PairLossResult res = iso_loss(patch.positions, pos_cur, patch.adjacency);
    auto f = [&](const std::vector<double>& params) {
      return iso_loss(patch.positions, unpack3(params), patch.adjacency).value;
    };
    rows.push_back(check("iso_loss", pack3(res.d_position), f, pack3(pos_cur), 1e-6));
  }

  // neighbor-centroid loss
  {
    const PosLossResult res = pos_loss(patch.positions, patch.adjacency);
    auto f = [&](const std::vector<double>& params) {
      return pos_loss(unpack3(params), patch.adjacency).value;
    };
    rows.push_back(check("pos_loss", pack3(res.d_position), f, pack3(patch.positions), 1e-6));
  }

  // flattening loss wrt positions, rest angles from a different bend
  {
    const Patch rest = make_random_patch(rng, 0.25);
    const DihedralAngles theta0 = dihedral_angles(rest.positions, *patch.topology, patch.adjacency);
    const FlatLossResult res =
        flat_loss(patch.positions, *patch.topology, patch.adjacency, theta0.angles, theta0.valid);
    auto f = [&](const std::vector<double>& params) {
      return flat_loss(unpack3(params), *patch.topology, patch.adjacency, theta0.angles,
                       theta0.valid)
          .value;
    };
    rows.push_back(check("flat_loss", pack3(res.d_position), f, pack3(patch.positions), 1e-6));
  }

  // full geometry objective (priors only; the image term is exercised via
  // the render adjoint below)
  {
    const std::vector<Quat> rot_prev = random_rotations(rng, 9);
    std::vector<Quat> rot_cur = random_rotations(rng, 9);
    std::vector<Vec3> pos_cur = patch.positions;
    for (Vec3& p : pos_cur) p += Vec3(jitter(rng), jitter(rng), jitter(rng));
    Frame0Reference ref;
    ref.positions = patch.positions;
    const DihedralAngles theta0 =
        dihedral_angles(patch.positions, *patch.topology, patch.adjacency);
    ref.theta0 = theta0.angles;
    ref.theta0_valid = theta0.valid;
    LossConfig geo_cfg = cfg;
    geo_cfg.lambda_rigid = 5.0;  // include the rigidity variant in the check
    const ImageTermGradients no_image;
    const LossBreakdown res = geo_loss(pos_cur, rot_cur, patch.positions, rot_prev, ref,
                                       *patch.topology, patch.adjacency, no_image, geo_cfg);
    auto f = [&](const std::vector<double>& params) {
      return geo_loss(unpack3(params), rot_cur, patch.positions, rot_prev, ref, *patch.topology,
                      patch.adjacency, no_image, geo_cfg)
          .total;
    };
    rows.push_back(check("geo_loss/position", pack3(res.d_position), f, pack3(pos_cur), 1e-6));
  }

  // render adjoint: random scene, loss = sum of weighted pixel channels
  {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n_g = 3;
    std::vector<Vec3> positions(n_g), scales(n_g), colors(n_g);
    std::vector<Quat> rotations = random_rotations(rng, n_g);
    std::vector<double> opacities(n_g);
    for (int i = 0; i < n_g; ++i) {
      positions[static_cast<std::size_t>(i)] = Vec3(u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5);
      scales[static_cast<std::size_t>(i)] = Vec3(0.1 + 0.3 * u(rng), 0.1 + 0.3 * u(rng), 0.1 + 0.3 * u(rng));
      colors[static_cast<std::size_t>(i)] = Vec3(u(rng), u(rng), u(rng));
      opacities[static_cast<std::size_t>(i)] = 0.3 + 0.6 * u(rng);
    }
    const Camera cam = look_at_camera(Vec3(0.4, -0.3, -3.0), Vec3::Zero(), Vec3(0, 0, 1), 9.0, 8, 8);
    const RenderOptions opts = RenderOptions::oracle();
    Image weights(8, 8);
    for (auto& p : weights.pixels) p = Vec3(u(rng) - 0.5, u(rng) - 0.5, u(rng) - 0.5);

    auto loss_of = [&](const GaussianArrays& arrays) {
      const RenderedImage img = render(arrays, cam, opts);
      double acc = 0.0;
      for (std::size_t p = 0; p < img.rgb.pixels.size(); ++p)
        acc += weights.pixels[p].dot(img.rgb.pixels[p]);
      return acc;
    };
    const GaussianArrays arrays{positions, rotations, scales, colors, opacities};
    const RenderGradients rg = render_backward(arrays, cam, weights, opts);

    auto with_positions = [&](const std::vector<double>& params) {
      const std::vector<Vec3> p = unpack3(params);
      return loss_of(GaussianArrays{p, rotations, scales, colors, opacities});
    };
    rows.push_back(check("render_backward/position", pack3(rg.d_position), with_positions,
                         pack3(positions), 1e-4));

    auto with_rotations = [&](const std::vector<double>& params) {
      const std::vector<Quat> q = unpack4(params);
      return loss_of(GaussianArrays{positions, q, scales, colors, opacities});
    };
    rows.push_back(check("render_backward/rotation", pack4(rg.d_rotation), with_rotations,
                         pack4(rotations), 1e-4));

    auto with_scales = [&](const std::vector<double>& params) {
      const std::vector<Vec3> s = unpack3(params);
      return loss_of(GaussianArrays{positions, rotations, s, colors, opacities});
    };
    rows.push_back(
        check("render_backward/scale", pack3(rg.d_scale), with_scales, pack3(scales), 1e-5));

    auto with_colors = [&](const std::vector<double>& params) {
      const std::vector<Vec3> c = unpack3(params);
      return loss_of(GaussianArrays{positions, rotations, scales, c, opacities});
    };
    rows.push_back(
        check("render_backward/color", pack3(rg.d_color), with_colors, pack3(colors), 1e-5));

    auto with_opacities = [&](const std::vector<double>& params) {
      return loss_of(GaussianArrays{positions, rotations, scales, colors, params});
    };
    rows.push_back(
        check("render_backward/opacity", rg.d_opacity, with_opacities, opacities, 1e-5));
  }

  return rows;
}

}  // namespace topomesh
