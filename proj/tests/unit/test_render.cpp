#include <doctest.h>

#include "support.hpp"
#include "voxedit/parallel.hpp"

using namespace voxedit;
using testing::kPi;

namespace {

CameraPose front_pose(int size, double fov = 0.8726646259971648) {
  return look_at(Vec3(0, 0, 3), Vec3::Zero(), Vec3(0, 1, 0), fov, size, size);
}

// 1-D transmittance quadrature along a straight chord of constant density: the accumulated
// opacity is the integral of sigma * exp(-sigma * s) over [0, L], done with composite Simpson.
double opacity_quadrature(double sigma, double length) {
  const int n = 2000;
  const double h = length / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double s = i * h;
    const double f = sigma * std::exp(-sigma * s);
    acc += f * (i == 0 || i == n ? 1.0 : (i % 2 ? 4.0 : 2.0));
  }
  return acc * h / 3.0;
}

}  // namespace

TEST_CASE("center pixel of an on-axis camera looks down -z") {
  const CameraPose pose = front_pose(3);
  const Ray r = pixel_ray(pose, Bounds{}, 1.5, 1.5);
  CHECK(r.direction.isApprox(Vec3(0, 0, -1), 1e-12));
  CHECK(r.hit);
  CHECK(r.t_near == doctest::Approx(2.0));
  CHECK(r.t_far == doctest::Approx(4.0));
}

TEST_CASE("corner pixel follows the pinhole construction") {
  CameraPose pose;
  pose.camera_to_world = Mat4::Identity();
  pose.fov_x = kPi / 2;
  pose.width = pose.height = 4;
  const auto rays = generate_rays(pose, Bounds{});
  REQUIRE(rays.size() == 16u);
  // Pixel (0,0) center sits at normalized device x = -0.75, y = +0.75 with tan(fov/2) = 1.
  const double t = std::tan(pose.fov_x / 2);
  const Vec3 expect = Vec3((2 * 0.5 / 4 - 1) * t, (1 - 2 * 0.5 / 4) * t, -1).normalized();
  CHECK((rays[0].direction - expect).norm() <= 1e-6);
  for (const Ray& r : rays) CHECK(std::abs(r.direction.norm() - 1.0) <= 1e-6);
}

TEST_CASE("invalid poses are rejected") {
  CameraPose pose = front_pose(4);
  pose.camera_to_world(0, 0) = 2.0;
  CHECK_THROWS_AS(generate_rays(pose, Bounds{}), std::invalid_argument);
  pose = front_pose(4);
  pose.fov_x = kPi;
  CHECK_THROWS_AS(generate_rays(pose, Bounds{}), std::invalid_argument);
  pose = front_pose(4);
  pose.camera_to_world.block<3, 3>(0, 0).setZero();
  CHECK_THROWS_AS(generate_rays(pose, Bounds{}), std::invalid_argument);
}

TEST_CASE("rays missing the box render background") {
  FeatureGrid g(4, Bounds{}, 5.0f);
  const CameraPose pose = look_at(Vec3(0, 3, 3), Vec3(0, 3, 0), Vec3(0, 1, 0), 0.3, 4, 4);
  const Ray r = pixel_ray(pose, Bounds{}, 2, 2);
  CHECK_FALSE(r.hit);
  const auto img = render(g, pose, RenderConfig{});
  for (double v : img.rgb.data) CHECK(v == 1.0);
  for (double v : img.opacity.data) CHECK(v == 0.0);
  const auto grad = render_backward(g, pose, RenderConfig{}, Image(4, 4, 3, 1.0));
  for (float v : grad.data()) CHECK(v == 0.0f);
}

TEST_CASE("empty grid renders white with zero opacity") {
  FeatureGrid g(4, Bounds{}, 0.0f);
  const auto img = render(g, front_pose(8), RenderConfig{});
  for (double v : img.rgb.data) CHECK(v == 1.0);
  for (double v : img.opacity.data) CHECK(v == 0.0);
}

TEST_CASE("saturated density shows the activated color") {
  FeatureGrid g(4, Bounds{}, 0.0f);
  for (std::size_t v = 0; v < g.voxel_count(); ++v) {
    g.at(v, 0) = 1e4f;
    g.at(v, 1) = 0.7f;
    g.at(v, 2) = -1.2f;
    g.at(v, 3) = 2.0f;
  }
  const auto img = render(g, front_pose(5), RenderConfig{});
  CHECK(img.rgb.at(2, 2, 0) == doctest::Approx(sigmoid(0.7f)).epsilon(1e-3));
  CHECK(img.rgb.at(2, 2, 1) == doctest::Approx(sigmoid(-1.2f)).epsilon(1e-3));
  CHECK(img.rgb.at(2, 2, 2) == doctest::Approx(sigmoid(2.0f)).epsilon(1e-3));
}

TEST_CASE("uniform density opacity matches transmittance quadrature") {
  const double sigma = 0.8;
  FeatureGrid g(8, Bounds{}, 0.0f);
  for (std::size_t v = 0; v < g.voxel_count(); ++v) g.at(v, 0) = static_cast<float>(sigma);
  RenderConfig cfg;
  cfg.samples_per_ray = 256;
  const CameraPose pose = front_pose(3);
  const auto img = render(g, pose, cfg);
  const Ray r = pixel_ray(pose, Bounds{}, 1.5, 1.5);
  const double chord = r.t_far - r.t_near;
  CHECK(std::abs(img.opacity.at(1, 1, 0) - opacity_quadrature(float(sigma), chord)) <= 1e-3);
}

TEST_CASE("compositing weights sum to one") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const FeatureGrid g = testing::random_grid<4>(rng, 5, -2.0, 6.0);
    const CameraPose pose = testing::random_orbit(rng, 6);
    for (const Ray& r : generate_rays(pose, g.bounds())) {
      for (bool jitter : {false, true}) {
        RenderConfig cfg;
        cfg.jitter = jitter;
        const RayWeights w = ray_weights(g, r, cfg, 7);
        double sum = w.final_transmittance;
        for (double x : w.weights) sum += x;
        CHECK(std::abs(sum - 1.0) <= 1e-5);
      }
    }
  }
}

TEST_CASE("raising a density feature never lowers opacity") {
  std::mt19937_64 rng(9);
  FeatureGrid g = testing::random_grid<4>(rng, 4, -1.0, 3.0);
  const CameraPose pose = testing::random_orbit(rng, 8);
  const auto before = render(g, pose, RenderConfig{});
  std::uniform_int_distribution<std::size_t> pick(0, g.voxel_count() - 1);
  for (int k = 0; k < 10; ++k) g.at(pick(rng), 0) += 1.0f;
  const auto after = render(g, pose, RenderConfig{});
  for (std::size_t i = 0; i < before.opacity.data.size(); ++i) CHECK(after.opacity.data[i] >= before.opacity.data[i]);
}

TEST_CASE("doubling the sample count converges") {
  std::mt19937_64 rng(4);
  FeatureGrid g = testing::random_positive_grid(rng, 4, 0.5, 2.0);
  const CameraPose pose = testing::random_orbit(rng, 6);
  double prev = 1e9;
  Image last;
  for (int s : {16, 32, 64, 128, 256}) {
    RenderConfig cfg;
    cfg.samples_per_ray = s;
    const Image img = render(g, pose, cfg).rgb;
    if (!last.data.empty()) {
      double diff = 0.0;
      for (std::size_t i = 0; i < img.data.size(); ++i) diff = std::max(diff, std::abs(img.data[i] - last.data[i]));
      CHECK(diff < prev);
      prev = diff;
    }
    last = img;
  }
}

TEST_CASE("backward matches finite differences on a 2^3 grid") {
  std::mt19937_64 rng(31);
  FeatureGrid g = testing::random_positive_grid(rng, 2, 0.3, 2.0);
  RenderConfig cfg;
  cfg.samples_per_ray = 16;
  const CameraPose pose = testing::random_orbit(rng, 3);
  Image up(3, 3, 3);
  up.at(1, 1, 0) = 0.7;
  up.at(1, 1, 1) = -0.4;
  up.at(1, 1, 2) = 1.1;
  const FeatureGrid grad = render_backward(g, pose, cfg, up);
  for (std::size_t v = 0; v < g.voxel_count(); ++v) {
    for (int c = 0; c < 4; ++c) {
      const double fd = testing::fd_feature(g, v, c, 1e-3, up, [&](const FeatureGrid& x) { return render(x, pose, cfg).rgb; });
      CHECK(testing::close_rel(grad.at(v, c), fd, 1e-4, 1e-6));
    }
  }
}

TEST_CASE("zero upstream gives zero gradient") {
  std::mt19937_64 rng(3);
  const FeatureGrid g = testing::random_positive_grid(rng, 4, 0.3, 2.0);
  const auto grad = render_backward(g, front_pose(6), RenderConfig{}, Image(6, 6, 3));
  for (float v : grad.data()) CHECK(v == 0.0f);
  CHECK_THROWS_AS(render_backward(g, front_pose(6), RenderConfig{}, Image(5, 6, 3)), std::invalid_argument);
}

TEST_CASE("attention render and backward") {
  std::mt19937_64 rng(12);
  FeatureGrid src(4, Bounds{}, 0.0f);
  for (std::size_t v = 0; v < src.voxel_count(); ++v) src.at(v, 0) = 1e4f;
  AttentionGrid opaque = make_attention_grid(src, 0.0f);
  const Image luma = render_attention(opaque, front_pose(5), RenderConfig{});
  CHECK(luma.channels == 1);
  CHECK(luma.at(2, 2, 0) == doctest::Approx(0.5).epsilon(1e-3));

  AttentionGrid empty(4, Bounds{}, 0.0f);
  RenderConfig bg;
  bg.attention_background = 0.25;
  for (double v : render_attention(empty, front_pose(5), bg).data) CHECK(v == 0.25);

  AttentionGrid a = make_attention_grid(testing::random_positive_grid(rng, 2, 0.3, 2.0), 0.0f);
  for (std::size_t v = 0; v < a.voxel_count(); ++v) a.at(v, 1) = static_cast<float>(std::uniform_real_distribution<>(-2, 2)(rng));
  RenderConfig cfg;
  cfg.samples_per_ray = 16;
  const CameraPose pose = testing::random_orbit(rng, 3);
  const Image up = testing::random_image(rng, 3, 3, 1);
  const AttentionGrid grad = render_attention_backward(a, pose, cfg, up);
  for (std::size_t v = 0; v < a.voxel_count(); ++v) {
    CHECK(grad.at(v, 0) == 0.0f);
    const double fd = testing::fd_feature(a, v, 1, 1e-3, up, [&](const AttentionGrid& x) { return render_attention(x, pose, cfg); });
    CHECK(testing::close_rel(grad.at(v, 1), fd, 1e-4, 1e-6));
  }
}

TEST_CASE("render is deterministic across thread counts") {
  std::mt19937_64 rng(77);
  const FeatureGrid g = testing::random_positive_grid(rng, 6, 0.1, 3.0);
  const CameraPose pose = testing::random_orbit(rng, 12);
  const Image up = testing::random_image(rng, 12, 12, 3);
  const int saved = num_threads();
  set_num_threads(1);
  const auto a = render(g, pose, RenderConfig{});
  const auto ga = render_backward(g, pose, RenderConfig{}, up);
  set_num_threads(3);
  const auto b = render(g, pose, RenderConfig{});
  const auto gb = render_backward(g, pose, RenderConfig{}, up);
  const auto gb2 = render_backward(g, pose, RenderConfig{}, up);
  set_num_threads(saved);
  CHECK(a.rgb == b.rgb);
  CHECK(gb == gb2);
  for (std::size_t i = 0; i < ga.data().size(); ++i) CHECK(std::abs(ga.data()[i] - gb.data()[i]) <= 1e-6f);
}
