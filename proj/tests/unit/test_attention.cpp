#include <doctest.h>

#include <bit>

#include "support.hpp"
#include "voxedit/attention.hpp"
#include "voxedit/guidance.hpp"
#include "voxedit/segment.hpp"

using namespace voxedit;

namespace {

LiftConfig small_lift(int size, int iterations) {
  LiftConfig cfg;
  cfg.iterations = iterations;
  cfg.poses.width = cfg.poses.height = size;
  cfg.poses.elevation_min_deg = -60;  // see the fixture from below as well
  cfg.poses.elevation_max_deg = 60;
  return cfg;
}

FeatureGrid solid_cube(int n, float density) {
  FeatureGrid g(n, Bounds{}, 0.0f);
  for (int z = 0; z < n; ++z)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        const bool inside = x >= n / 4 && x < n - n / 4 && y >= n / 4 && y < n - n / 4 && z >= n / 4 && z < n - n / 4;
        g.at(g.voxel_index(x, y, z), 0) = inside ? density : -1.0f;
      }
  return g;
}

AttentionMapSet maps_from(const AttentionGrid& truth, AttentionRole role, int n_views, int size) {
  AttentionMapSet set;
  set.role = role;
  std::mt19937_64 rng(123);
  for (int k = 0; k < n_views; ++k) {
    const CameraPose pose = testing::random_orbit(rng, size);
    set.poses.push_back(pose);
    set.maps.push_back(render_attention(truth, pose, RenderConfig{}));
  }
  return set;
}

}  // namespace

TEST_CASE("constant maps fit to constant luma") {
  const FeatureGrid ge = solid_cube(8, 40.0f);
  MockBackend::Options opt;
  opt.attention_constant = 0.5;
  MockBackend b(opt);
  LiftConfig cfg = small_lift(12, 60);
  const AttentionGrid a = lift_attention(ge, b, AttentionRole::kEdit, cfg);
  std::mt19937_64 rng(1);
  const CameraPose pose = testing::random_orbit(rng, 12);
  const Image luma = render_attention(a, pose, cfg.render);
  const Image opacity = render(ge, pose, cfg.render).opacity;
  double l1 = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < luma.data.size(); ++i) {
    if (opacity.data[i] < 0.99) continue;
    l1 += std::abs(luma.data[i] - 0.5);
    ++count;
  }
  REQUIRE(count > 0);
  CHECK(l1 / count < 0.02);
}

TEST_CASE("density stays frozen and zero iterations change nothing") {
  std::mt19937_64 rng(2);
  const FeatureGrid ge = testing::random_positive_grid(rng, 4, 0.0, 3.0);
  MockBackend b(MockBackend::Options{});
  LiftConfig cfg = small_lift(8, 0);
  cfg.attn_init = 0.25f;
  CHECK(lift_attention(ge, b, AttentionRole::kObject, cfg) == make_attention_grid(ge, 0.25f));
  cfg.iterations = 20;
  MockBackend::Options opt;
  opt.attention_constant = 0.9;
  MockBackend b2(opt);
  const AttentionGrid a = lift_attention(ge, b2, AttentionRole::kEdit, cfg);
  for (std::size_t v = 0; v < ge.voxel_count(); ++v) {
    CHECK(std::bit_cast<std::uint32_t>(a.at(v, 0)) == std::bit_cast<std::uint32_t>(ge.at(v, 0)));
  }
  const Image luma = render_attention(a, testing::random_orbit(rng, 8), cfg.render);
  for (double l : luma.data) {
    CHECK(l >= 0.0);
    CHECK(l < 1.0);
  }
}

TEST_CASE("octant attention survives a render and refit round trip") {
  const int n = 6;
  std::mt19937_64 rng(3);
  FeatureGrid ge(n, Bounds{}, 0.0f);
  for (std::size_t v = 0; v < ge.voxel_count(); ++v) ge.at(v, 0) = 0.8f;
  AttentionGrid truth = make_attention_grid(ge, -2.5f);
  for (int z = 0; z < n / 2; ++z)
    for (int y = 0; y < n / 2; ++y)
      for (int x = 0; x < n / 2; ++x) truth.at(truth.voxel_index(x, y, z), 1) = 2.5f;
  const AttentionMapSet set = maps_from(truth, AttentionRole::kEdit, 20, 16);
  LiftConfig cfg = small_lift(16, 600);
  const AttentionGrid fit = lift_attention(ge, set, cfg);
  double worst = 0.0;
  for (std::size_t v = 0; v < ge.voxel_count(); ++v) {
    worst = std::max(worst, std::abs(sigmoid(fit.at(v, 1)) - sigmoid(truth.at(v, 1))));
  }
  CHECK(worst < 0.1);
}

TEST_CASE("conflicting views settle inside their range") {
  const FeatureGrid ge = solid_cube(8, 60.0f);
  AttentionMapSet set;
  set.role = AttentionRole::kEdit;
  const CameraPose front = orbit_pose(Vec3::Zero(), 3.0, 0.0, 0.0, 0.8726646259971648, 12, 12);
  const CameraPose back = orbit_pose(Vec3::Zero(), 3.0, testing::kPi / 2, 0.0, 0.8726646259971648, 12, 12);
  set.poses = {front, back};
  // Each view on its own is consistent with the geometry; the two disagree on the shared voxels.
  const auto constant_map = [&](const CameraPose& pose, double value) {
    return render_attention(make_attention_grid(ge, static_cast<float>(std::log(value / (1 - value)))), pose,
                            RenderConfig{});
  };
  set.maps = {constant_map(front, 0.8), constant_map(back, 0.2)};
  LiftConfig cfg = small_lift(12, 300);
  const AttentionGrid a = lift_attention(ge, set, cfg);
  for (std::size_t v = 0; v < ge.voxel_count(); ++v) {
    if (ge.at(v, 0) <= 0.0f) continue;
    const double s = sigmoid(a.at(v, 1));
    // Margin: trilinear blending lets single-view voxels compensate a little for shared ones.
    CHECK(s >= 0.2 - 0.02);
    CHECK(s <= 0.8 + 0.02);
  }
}

TEST_CASE("attention maps save and load") {
  testing::TempDir dir("maps");
  std::mt19937_64 rng(4);
  const FeatureGrid ge = testing::random_positive_grid(rng, 4, 0.0, 3.0);
  const AttentionGrid truth = testing::random_grid<2>(rng, 4);
  for (auto role : {AttentionRole::kEdit, AttentionRole::kObject}) {
    AttentionMapSet set = maps_from(truth, role, 3, 5);
    for (auto& m : set.maps)
      for (double& v : m.data) v = static_cast<float>(v);
    save_attention_maps(dir.path(), set);
    CHECK(std::filesystem::exists(dir / attention_map_filename(role, 2)));
    const AttentionMapSet back = load_attention_maps(dir.path(), role);
    REQUIRE(back.maps.size() == 3u);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(back.maps[i] == set.maps[i]);
      CHECK(back.poses[i].camera_to_world.isApprox(set.poses[i].camera_to_world, 1e-12));
    }
  }
  CHECK(attention_map_filename(AttentionRole::kObject, 7) == "att_object_pose_0007.pfm");

  AttentionMapSet bad = maps_from(truth, AttentionRole::kEdit, 2, 5);
  bad.maps[1] = Image(4, 5, 1);
  CHECK_THROWS(lift_attention(ge, bad, small_lift(5, 4)));
}
